#include "pathsample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "pathsample/error.hpp"

namespace pathsample {

// ---------------------------------------------------------------------------
// ConditionalSampler

namespace {

CategoricalSampler make_top(const PathChain& chain) {
  const Vector& a = chain.prefix.back().values;
  return CategoricalSampler(std::vector<double>(a.data(), a.data() + a.size()));
}

}  // namespace

ConditionalSampler::ConditionalSampler(Network net, InputWeighting weighting)
    : net_(std::move(net)), weighting_(std::move(weighting)) {
  chain_ = build_chain(net_, weighting_);
  require(!chain_.degenerate, ErrorKind::degenerate, "path variation is zero; nothing to sample");
  top_ = make_top(chain_);
  for (std::size_t m = 1; m <= net_.depth(); ++m) {
    const std::size_t width = net_.dims()[m];
    auto slots = std::make_unique<RowSlot[]>(width);
    for (std::size_t i = 0; i < width; ++i) slots[i].store(nullptr, std::memory_order_relaxed);
    rows_.push_back(std::move(slots));
  }
}

ConditionalSampler::~ConditionalSampler() {
  for (std::size_t m = 0; m < rows_.size(); ++m) {
    if (!rows_[m]) continue;
    const std::size_t width = net_.dims()[m + 1];
    for (std::size_t i = 0; i < width; ++i) delete rows_[m][i].load(std::memory_order_acquire);
  }
}

ConditionalSampler::ConditionalSampler(ConditionalSampler&& other) noexcept
    : net_(std::move(other.net_)),
      weighting_(std::move(other.weighting_)),
      chain_(std::move(other.chain_)),
      top_(std::move(other.top_)),
      rows_(std::move(other.rows_)) {
  other.rows_.clear();
}

ConditionalSampler& ConditionalSampler::operator=(ConditionalSampler&& other) noexcept {
  if (this != &other) {
    this->~ConditionalSampler();
    new (this) ConditionalSampler(std::move(other));
  }
  return *this;
}

const CategoricalSampler& ConditionalSampler::row(std::size_t m, std::uint32_t target) const {
  require(m >= 1 && m <= net_.depth(), ErrorKind::precondition, "edge layer out of range");
  require(target < net_.dims()[m], ErrorKind::precondition, "target unit out of range");
  RowSlot& slot = rows_[m - 1][target];
  if (const CategoricalSampler* ready = slot.load(std::memory_order_acquire)) return *ready;

  const Matrix& w = net_.layer(m - 1);
  const Vector& a = chain_.prefix[m - 1].values;
  std::vector<double> weights(static_cast<std::size_t>(w.cols()));
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    weights[static_cast<std::size_t>(j)] = std::abs(w(target, j)) * a[j];
  }
  auto built = std::make_unique<CategoricalSampler>(weights);
  const CategoricalSampler* expected = nullptr;
  if (slot.compare_exchange_strong(expected, built.get(), std::memory_order_acq_rel,
                                   std::memory_order_acquire)) {
    return *built.release();
  }
  return *expected;
}

Vector ConditionalSampler::top_distribution() const {
  Vector p = Vector::Zero(static_cast<Eigen::Index>(net_.output_dim()));
  for (std::size_t i = 0; i < top_.support().size(); ++i) {
    p[top_.support()[i]] = top_.probabilities()[i];
  }
  return p;
}

Vector ConditionalSampler::conditional(std::size_t m, std::uint32_t target) const {
  const CategoricalSampler& r = row(m, target);
  Vector p = Vector::Zero(static_cast<Eigen::Index>(net_.dims()[m - 1]));
  for (std::size_t i = 0; i < r.support().size(); ++i) p[r.support()[i]] = r.probabilities()[i];
  return p;
}

std::size_t ConditionalSampler::materialized_rows() const {
  std::size_t count = 0;
  for (std::size_t m = 0; m < rows_.size(); ++m) {
    for (std::size_t i = 0; i < net_.dims()[m + 1]; ++i) {
      if (rows_[m][i].load(std::memory_order_acquire)) ++count;
    }
  }
  return count;
}

void ConditionalSampler::draw(Philox4x64& rng, std::span<std::uint32_t> path) const {
  const std::size_t depth = net_.depth();
  path[depth] = top_(rng);
  for (std::size_t m = depth; m >= 1; --m) path[m - 1] = row(m, path[m])(rng);
}

ConditionalSampler build_sampler(const Network& net, const Dataset& data, double q) {
  require(data.dim() == net.input_dim(), ErrorKind::dimension,
          "dataset dimension does not match network input");
  return ConditionalSampler(net, input_weights(data, q));
}

// ---------------------------------------------------------------------------
// PathCounts

void PathCounts::merge(const PathCounts& other) {
  require(dims == other.dims, ErrorKind::dimension, "cannot merge counts of different networks");
  draws += other.draws;
  for (std::size_t j = 0; j < top.size(); ++j) top[j] += other.top[j];
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    for (const auto& [key, count] : other.pairs[m]) pairs[m][key] += count;
  }
  if (paths && other.paths) {
    for (const auto& [path, count] : *other.paths) (*paths)[path] += count;
  }
}

PathCounts empty_counts(const Network& net, bool keep_paths) {
  PathCounts counts;
  counts.dims = net.dims();
  counts.top.assign(net.output_dim(), 0);
  counts.pairs.resize(net.depth());
  counts.rng_algorithm = std::string(Philox4x64::algorithm);
  if (keep_paths) counts.paths.emplace();
  return counts;
}

namespace {

/// Sign of the edge leaving node layer l of a path (output units: +1).
int leaving_sign(const Network& net, std::span<const std::uint32_t> path, std::size_t l) {
  if (l == net.depth()) return 1;
  return edge_sign(net.layer(l)(path[l + 1], path[l]));
}

/// Packed (source doubled, target doubled) key for the hot loop.
inline std::uint64_t pack(std::uint32_t source, std::uint32_t target) {
  return (static_cast<std::uint64_t>(source) << 32) | target;
}

PairKey unpack(std::uint64_t key, std::size_t source_width, std::size_t target_width,
               bool output_layer) {
  const auto source = static_cast<std::uint32_t>(key >> 32);
  const auto target = static_cast<std::uint32_t>(key & 0xffffffffULL);
  PairKey out;
  out.source = source % static_cast<std::uint32_t>(source_width);
  out.source_sign = source < source_width ? 1 : -1;
  if (output_layer) {
    out.target = target;
    out.target_sign = 1;
  } else {
    out.target = target % static_cast<std::uint32_t>(target_width);
    out.target_sign = target < target_width ? 1 : -1;
  }
  return out;
}

struct StreamTally {
  std::uint64_t draws = 0;
  std::vector<std::uint64_t> top;
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> pairs;
  std::map<std::vector<std::uint32_t>, std::uint64_t> paths;
};

void tally_path(const Network& net, std::span<const std::uint32_t> path, StreamTally& tally,
                bool keep_paths) {
  const std::size_t depth = net.depth();
  const auto& dims = net.dims();
  ++tally.draws;
  ++tally.top[path[depth]];
  int source_sign = leaving_sign(net, path, 0);
  std::uint32_t source = doubled_index(path[0], source_sign, dims[0]);
  std::vector<std::uint32_t> doubled;
  if (keep_paths) doubled.push_back(source);
  for (std::size_t m = 1; m <= depth; ++m) {
    const int target_sign = leaving_sign(net, path, m);
    const std::uint32_t target =
        m == depth ? path[m] : doubled_index(path[m], target_sign, dims[m]);
    ++tally.pairs[m - 1][pack(source, target)];
    if (keep_paths) doubled.push_back(target);
    source = target;
  }
  if (keep_paths) ++tally.paths[std::move(doubled)];
}

StreamTally make_tally(const Network& net) {
  StreamTally t;
  t.top.assign(net.output_dim(), 0);
  t.pairs.resize(net.depth());
  return t;
}

void fold_tally(const Network& net, const StreamTally& tally, PathCounts& counts) {
  const auto& dims = net.dims();
  counts.draws += tally.draws;
  for (std::size_t j = 0; j < counts.top.size(); ++j) counts.top[j] += tally.top[j];
  for (std::size_t m = 1; m <= net.depth(); ++m) {
    auto& layer = counts.pairs[m - 1];
    for (const auto& [key, count] : tally.pairs[m - 1]) {
      layer[unpack(key, dims[m - 1], dims[m], m == net.depth())] += count;
    }
  }
  if (counts.paths) {
    for (const auto& [path, count] : tally.paths) (*counts.paths)[path] += count;
  }
}

}  // namespace

void record_path(const Network& net, std::span<const std::uint32_t> path, PathCounts& counts) {
  require(path.size() == net.depth() + 1, ErrorKind::dimension, "path length must be L + 1");
  for (std::size_t l = 0; l < path.size(); ++l) {
    require(path[l] < net.dims()[l], ErrorKind::precondition, "path index out of range");
  }
  StreamTally tally = make_tally(net);
  tally_path(net, path, tally, counts.paths.has_value());
  fold_tally(net, tally, counts);
}

PathCounts sample_paths(const ConditionalSampler& sampler, std::uint64_t draws, std::uint64_t seed,
                        const SampleOptions& options) {
  require(draws >= 1, ErrorKind::precondition, "need at least one draw");
  require(options.streams >= 1, ErrorKind::precondition, "need at least one stream");
  const Network& net = sampler.network();
  const std::uint32_t streams = options.streams;

  std::vector<StreamTally> tallies;
  tallies.reserve(streams);
  for (std::uint32_t s = 0; s < streams; ++s) tallies.push_back(make_tally(net));

  auto run_stream = [&](std::uint32_t s) {
    const std::uint64_t share = draws / streams + (s < draws % streams ? 1 : 0);
    Philox4x64 rng(seed, options.stream_offset + s);
    std::vector<std::uint32_t> path(net.depth() + 1);
    StreamTally& tally = tallies[s];
    for (std::uint64_t i = 0; i < share; ++i) {
      sampler.draw(rng, path);
      tally_path(net, path, tally, options.keep_paths);
    }
  };

  const std::uint32_t workers = std::max<std::uint32_t>(1, std::min(options.threads, streams));
  if (workers == 1) {
    for (std::uint32_t s = 0; s < streams; ++s) run_stream(s);
  } else {
    std::vector<std::jthread> pool;
    for (std::uint32_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint32_t s = w; s < streams; s += workers) run_stream(s);
      });
    }
  }

  PathCounts counts = empty_counts(net, options.keep_paths);
  counts.seed = seed;
  counts.streams = streams;
  counts.stream_offset = options.stream_offset;
  for (const auto& tally : tallies) fold_tally(net, tally, counts);
  return counts;
}

// ---------------------------------------------------------------------------
// EmpiricalMarkov

EmpiricalMarkov::EmpiricalMarkov(const PathCounts& counts)
    : draws_(counts.draws), dims_(counts.dims) {
  const std::size_t depth = counts.depth();
  require(depth >= 1 && dims_.size() == depth + 1, ErrorKind::dimension, "malformed path counts");
  edges_.resize(depth);
  node_counts_.resize(depth + 1);
  for (std::size_t m = 1; m <= depth; ++m) {
    auto& entries = edges_[m - 1];
    for (const auto& [key, count] : counts.pairs[m - 1]) {
      if (count == 0) continue;
      Entry e;
      e.source = doubled_index(key.source, key.source_sign, dims_[m - 1]);
      e.target = m == depth ? key.target : doubled_index(key.target, key.target_sign, dims_[m]);
      e.count = count;
      entries.push_back(e);
      node_counts_[m][e.target] += count;
      if (m == 1) node_counts_[0][e.source] += count;
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
      return x.target != y.target ? x.target < y.target : x.source < y.source;
    });
  }
}

std::uint64_t EmpiricalMarkov::node_count(std::size_t l, std::uint32_t unit) const {
  const auto& counts = node_counts_.at(l);
  const auto it = counts.find(unit);
  return it == counts.end() ? 0 : it->second;
}

Ratio EmpiricalMarkov::probability(std::size_t m, std::uint32_t source, std::uint32_t target) const {
  const auto& entries = edges(m);
  const auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{target, source},
                                   [](const Entry& e, const std::pair<std::uint32_t, std::uint32_t>& k) {
                                     return e.target != k.first ? e.target < k.first
                                                                : e.source < k.second;
                                   });
  const std::uint64_t count =
      (it != entries.end() && it->target == target && it->source == source) ? it->count : 0;
  if (m == depth()) return {count, draws_};
  return {count, node_count(m, target)};
}

Ratio EmpiricalMarkov::top(std::uint32_t output) const {
  return {node_count(depth(), output), draws_};
}

std::size_t EmpiricalMarkov::nonzero() const noexcept {
  std::size_t total = 0;
  for (const auto& e : edges_) total += e.size();
  return total;
}

EmpiricalMarkov empirical_markov(const PathCounts& counts) { return EmpiricalMarkov(counts); }

// ---------------------------------------------------------------------------
// Reconstruction

Vector ReconstructedNetwork::evaluate(const Vector& x) const {
  return scale.to_double() * normalized.forward(x);
}

Matrix ReconstructedNetwork::evaluate_batch(const Matrix& inputs) const {
  return scale.to_double() * normalized.forward_batch(inputs);
}

Network ReconstructedNetwork::to_network() const {
  const double s = scale.to_double();
  require(std::isfinite(s), ErrorKind::numeric, "reconstruction scale exceeds double range");
  std::vector<Matrix> layers = normalized.layers();
  layers.back() *= s;
  return {std::move(layers), normalized.activation()};
}

ReconstructedNetwork reconstruct(const EmpiricalMarkov& em, const LogScaled& scale,
                                 const InputWeighting& weighting, const Activation& activation) {
  const auto& dims = em.dims();
  const std::size_t depth = em.depth();
  require(static_cast<std::size_t>(weighting.weights.size()) == dims.front(), ErrorKind::dimension,
          "input weighting does not match the sampled network");
  require(em.draws() >= 1, ErrorKind::precondition, "empirical distribution has no draws");

  // Compact index of every visited hidden unit.
  std::vector<std::vector<std::uint32_t>> kept(depth + 1);
  std::vector<std::unordered_map<std::uint32_t, Eigen::Index>> slot(depth + 1);
  for (std::size_t l = 1; l < depth; ++l) {
    for (const auto& [unit, count] : em.node_counts(l)) {
      slot[l][unit] = static_cast<Eigen::Index>(kept[l].size());
      kept[l].push_back(unit);
    }
  }
  const auto unit_sign = [&](std::size_t l, std::uint32_t unit) {
    return unit < dims[l] ? 1.0 : -1.0;
  };

  std::vector<Matrix> layers;
  for (std::size_t m = 1; m <= depth; ++m) {
    const Eigen::Index rows =
        m == depth ? static_cast<Eigen::Index>(dims[depth]) : static_cast<Eigen::Index>(kept[m].size());
    const Eigen::Index cols =
        m == 1 ? static_cast<Eigen::Index>(dims[0]) : static_cast<Eigen::Index>(kept[m - 1].size());
    Matrix w = Matrix::Zero(rows, cols);
    for (const auto& e : em.edges(m)) {
      const double p = em.probability(m, e.source, e.target).value();
      const Eigen::Index row = m == depth ? static_cast<Eigen::Index>(e.target) : slot[m].at(e.target);
      if (m == 1) {
        const std::uint32_t j = e.source % static_cast<std::uint32_t>(dims[0]);
        const double wj = weighting.weights[j];
        if (wj > 0.0) w(row, j) += p * unit_sign(0, e.source) / wj;
      } else {
        w(row, slot[m - 1].at(e.source)) += p * unit_sign(m - 1, e.source);
      }
    }
    layers.push_back(std::move(w));
  }

  ReconstructedNetwork out{Network(std::move(layers), activation), scale, weighting.weights,
                           {}};
  out.kept_units.assign(kept.begin() + 1, kept.begin() + static_cast<std::ptrdiff_t>(depth));
  return out;
}

ReconstructedNetwork compress(const ConditionalSampler& sampler, std::uint64_t draws,
                              std::uint64_t seed, const SampleOptions& options) {
  const PathCounts counts = sample_paths(sampler, draws, seed, options);
  return reconstruct(EmpiricalMarkov(counts), sampler.variation(), sampler.weighting(),
                     sampler.network().activation());
}

CompressionStats compression_stats(const EmpiricalMarkov& em, std::uint64_t draws) {
  CompressionStats stats;
  stats.nonzero = em.nonzero();
  stats.bound = static_cast<std::uint64_t>(em.depth()) * draws;
  for (std::size_t l = 0; l <= em.depth(); ++l) stats.visited.push_back(em.node_counts(l).size());
  stats.precision_digits = std::log10(static_cast<double>(draws));
  return stats;
}

}  // namespace pathsample

#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathsample/categorical.hpp"
#include "pathsample/measures.hpp"
#include "pathsample/net.hpp"

namespace pathsample {

/// Draws paths j_L -> j_{L-1} -> ... -> j_0 from the path distribution of a
/// network under an input weighting. The top unit is drawn with probability
/// prefix[L][j] / V, then each step draws j_{m-1} given j_m with probability
/// proportional to |W_m[j_m, j_{m-1}]| * prefix[m-1][j_{m-1}].
///
/// Conditional rows are built on first use and cached; concurrent callers may
/// race to build a row, exactly one result is published.
class ConditionalSampler {
 public:
  ConditionalSampler(Network net, InputWeighting weighting);
  ~ConditionalSampler();
  ConditionalSampler(ConditionalSampler&&) noexcept;
  ConditionalSampler& operator=(ConditionalSampler&&) noexcept;
  ConditionalSampler(const ConditionalSampler&) = delete;
  ConditionalSampler& operator=(const ConditionalSampler&) = delete;

  const Network& network() const noexcept { return net_; }
  const InputWeighting& weighting() const noexcept { return weighting_; }
  const PathChain& chain() const noexcept { return chain_; }
  LogScaled variation() const noexcept { return chain_.variation; }

  const CategoricalSampler& top() const noexcept { return top_; }
  /// Row sampler for p(j_{m-1} | j_m), edge layer 1 <= m <= L.
  const CategoricalSampler& row(std::size_t m, std::uint32_t target) const;

  /// Dense p(j_L), length k.
  Vector top_distribution() const;
  /// Dense p(j_{m-1} | j_m = target), length d_{m-1}.
  Vector conditional(std::size_t m, std::uint32_t target) const;
  std::size_t materialized_rows() const;

  /// Fills path[0..L] with one draw.
  void draw(Philox4x64& rng, std::span<std::uint32_t> path) const;

 private:
  using RowSlot = std::atomic<const CategoricalSampler*>;

  Network net_;
  InputWeighting weighting_;
  PathChain chain_;
  CategoricalSampler top_;
  std::vector<std::unique_ptr<RowSlot[]>> rows_;  // index m-1
};

ConditionalSampler build_sampler(const Network& net, const Dataset& data, double q);

/// Edge between node layers m-1 and m. Signs follow the sign of the sampled
/// edge leaving each node; output units are always tagged +1.
struct PairKey {
  std::uint32_t source = 0;
  std::int8_t source_sign = 1;
  std::uint32_t target = 0;
  std::int8_t target_sign = 1;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct PathCounts {
  std::uint64_t draws = 0;
  std::vector<std::size_t> dims;                 // [d_0, ..., d_L]
  std::vector<std::uint64_t> top;                // per output unit
  std::vector<std::map<PairKey, std::uint64_t>> pairs;  // edge layer m at index m-1
  std::uint64_t seed = 0;
  std::uint32_t streams = 1;
  std::uint64_t stream_offset = 0;
  std::string rng_algorithm;
  /// Full path multiset over sign-split indices (j_L plain), recorded on request.
  std::optional<std::map<std::vector<std::uint32_t>, std::uint64_t>> paths;

  std::size_t depth() const noexcept { return pairs.size(); }
  void merge(const PathCounts& other);
  friend bool operator==(const PathCounts&, const PathCounts&) = default;
};

PathCounts empty_counts(const Network& net, bool keep_paths = false);
/// Adds one path (j_0, ..., j_L) of `net` to `counts`.
void record_path(const Network& net, std::span<const std::uint32_t> path, PathCounts& counts);

struct SampleOptions {
  std::uint32_t streams = 1;    // partition plan: M is split across this many RNG streams
  std::uint32_t threads = 1;    // workers; results do not depend on this
  std::uint64_t stream_offset = 0;
  bool keep_paths = false;
};

/// M independent draws. Deterministic in (seed, streams, stream_offset).
PathCounts sample_paths(const ConditionalSampler& sampler, std::uint64_t draws, std::uint64_t seed,
                        const SampleOptions& options = {});

/// Doubled index of unit j with sign s in a layer of undoubled width d.
inline std::uint32_t doubled_index(std::uint32_t j, int sign, std::size_t d) noexcept {
  return sign > 0 ? j : static_cast<std::uint32_t>(d) + j;
}

/// Exact ratio; 0/0 reads as 0.
struct Ratio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
  double value() const noexcept {
    return denominator == 0 ? 0.0
                            : static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

/// Empirical Markov distribution over sign-split units. Edge layer m < L stores
/// conditionals p~((j_{m-1},s) | (j_m,t)) = K_pair / K_(j_m,t); edge layer L
/// stores the joint p~(j_L, (j_{L-1},s)) = K_pair / M.
class EmpiricalMarkov {
 public:
  struct Entry {
    std::uint32_t source = 0;  // doubled index at node layer m-1
    std::uint32_t target = 0;  // doubled index at node layer m (plain for m = L)
    std::uint64_t count = 0;
  };

  explicit EmpiricalMarkov(const PathCounts& counts);

  std::uint64_t draws() const noexcept { return draws_; }
  std::size_t depth() const noexcept { return edges_.size(); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  /// Entries of edge layer m, sorted by (target, source).
  const std::vector<Entry>& edges(std::size_t m) const { return edges_.at(m - 1); }
  /// Visit counts of node layer l (doubled indices for l < L).
  const std::map<std::uint32_t, std::uint64_t>& node_counts(std::size_t l) const {
    return node_counts_.at(l);
  }
  std::uint64_t node_count(std::size_t l, std::uint32_t unit) const;

  /// Stored probability of an entry as an exact ratio.
  Ratio probability(std::size_t m, std::uint32_t source, std::uint32_t target) const;
  /// Top-layer marginal K_{j_L} / M.
  Ratio top(std::uint32_t output) const;

  std::size_t nonzero() const noexcept;

 private:
  std::uint64_t draws_ = 0;
  std::vector<std::size_t> dims_;
  std::vector<std::vector<Entry>> edges_;
  std::vector<std::map<std::uint32_t, std::uint64_t>> node_counts_;
};

EmpiricalMarkov empirical_markov(const PathCounts& counts);

/// Sparse approximant. `normalized` computes f(x; p~) with the input change of
/// variables x_j / w_j and unit signs folded into its weights; hidden layers
/// are compacted to visited sign-split units.
struct ReconstructedNetwork {
  Network normalized;
  LogScaled scale;
  Vector input_weights;
  std::vector<std::vector<std::uint32_t>> kept_units;  // per hidden layer, doubled indices

  Vector evaluate(const Vector& x) const;
  Matrix evaluate_batch(const Matrix& inputs) const;
  /// Network with the scale folded into its last layer.
  Network to_network() const;
};

ReconstructedNetwork reconstruct(const EmpiricalMarkov& em, const LogScaled& scale,
                                 const InputWeighting& weighting, const Activation& activation);
/// Samples M paths of the sampler's network and reconstructs them.
ReconstructedNetwork compress(const ConditionalSampler& sampler, std::uint64_t draws,
                              std::uint64_t seed, const SampleOptions& options = {});

struct CompressionStats {
  std::size_t nonzero = 0;
  std::uint64_t bound = 0;  // L * M
  std::vector<std::size_t> visited;  // per node layer
  double precision_digits = 0.0;     // log10(M)
  bool within_bound() const noexcept { return nonzero <= bound; }
};

CompressionStats compression_stats(const EmpiricalMarkov& em, std::uint64_t draws);

}  // namespace pathsample

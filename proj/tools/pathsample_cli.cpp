// pathsample: compress positive homogeneous networks by path sampling and
// evaluate their path-based capacity measures.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "pathsample/analysis.hpp"
#include "pathsample/error.hpp"
#include "pathsample/io.hpp"
#include "pathsample/measures.hpp"
#include "pathsample/theory.hpp"
#include "pathsample/verify.hpp"

namespace ps = pathsample;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kFormat = 3, kNumeric = 4 };

struct Globals {
  std::string model;
  std::string data;
  std::string out;
  std::string format = "json";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = 0;
  bool timings = false;
};

struct Context {
  Globals g;
  std::string command;
  json outputs = json::object();
  std::string csv;  // payload when --format csv
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

ps::Network need_model(const Globals& g) {
  ps::require(!g.model.empty(), ps::ErrorKind::precondition, "--model is required");
  return ps::io::load_model(g.model);
}

ps::Dataset need_data(const Globals& g, std::optional<std::size_t> classes = std::nullopt) {
  ps::require(!g.data.empty(), ps::ErrorKind::precondition, "--data is required");
  return ps::io::load_dataset(g.data, classes);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

ps::SampleOptions sample_options(const Globals& g, unsigned streams) {
  ps::SampleOptions o;
  o.streams = streams;
  o.threads = g.threads;
  return o;
}

json input_digest(const Globals& g) {
  json d = json::object();
  if (!g.model.empty()) d["model"] = ps::io::digest(ps::io::model_files(g.model));
  if (!g.data.empty()) d["data"] = ps::io::digest({g.data});
  return d;
}

void emit(const Context& ctx) {
  std::string text;
  if (ctx.g.format == "csv" && !ctx.csv.empty()) {
    text = ctx.csv;
  } else {
    json report;
    report["command"] = ctx.command;
    report["seed"] = ctx.g.seed;
    report["rng_algorithm"] = std::string(ps::Philox4x64::algorithm);
    report["inputs"] = input_digest(ctx.g);
    report["outputs"] = ctx.outputs;
    if (ctx.g.timings) {
      report["timings"] = {{"seconds", std::chrono::duration<double>(
                                           std::chrono::steady_clock::now() - ctx.start)
                                           .count()}};
    }
    text = report.dump(2) + "\n";
  }
  if (ctx.g.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(ctx.g.out, std::ios::trunc);
    ps::require(static_cast<bool>(f), ps::ErrorKind::io, "cannot write " + ctx.g.out);
    f << text;
  }
}

// ---------------------------------------------------------------------------

void cmd_inspect(Context& ctx) {
  const ps::Network net = need_model(ctx.g);
  std::size_t params = 0;
  for (const auto& w : net.layers()) params += static_cast<std::size_t>(w.size());
  ctx.outputs = {{"dims", net.dims()},
                 {"depth", net.depth()},
                 {"activation", net.activation().name()},
                 {"path_count", net.path_count()},
                 {"parameters", params}};
  if (net.activation().kind == ps::Activation::Kind::leaky_relu) {
    ctx.outputs["alpha"] = net.activation().alpha;
  }
}

void cmd_measures(Context& ctx, double q, const std::vector<double>& ps_list) {
  const ps::Network net = need_model(ctx.g);
  std::optional<ps::Dataset> data;
  if (!ctx.g.data.empty()) data = need_data(ctx.g);
  const ps::InputWeighting w =
      data ? ps::input_weights(*data, q) : ps::unit_weights(net.input_dim());

  const ps::PathChain chain = ps::build_chain(net, w);
  json out;
  out["q"] = q;
  out["weighting"] = data ? "data" : "unit";
  out["variation"] = ps::io::to_json(chain.variation);
  if (!chain.degenerate) {
    out["zeta"] = {{"doubled", ps::path_complexity(net, w, ps::MarginalMode::doubled)},
                   {"collapsed", ps::path_complexity(net, w, ps::MarginalMode::collapsed)}};
  }
  json phi = json::object();
  for (double p : ps_list) phi[fmt(p)] = ps::io::to_json(ps::path_norm_phi(net, p).total);
  out["phi"] = phi;

  std::string csv = "measure,value,log10_value\n";
  auto row = [&](const std::string& name, const ps::LogScaled& v) {
    csv += name + "," + fmt(v.to_double()) + "," + fmt(v.log10()) + "\n";
  };
  row("V_q", chain.variation);
  json norms = json::object();
  if (data) {
    const ps::CapacityReport cap = ps::competing_capacities(net, *data);
    for (const auto& e : cap.entries) {
      norms[e.name] = ps::io::to_json(e.value);
      row(e.name, e.value);
    }
    out["variation2_over_phi2"] = cap.variation2_over_phi2;
    if (q == 1.0 || q == 2.0) {
      const auto [a, b] = ps::variation_bounds(net, *data, q);
      out["variation_bounds"] = {a, b};
    }
  } else {
    double spectral = 1.0, frob = 1.0, inf = 1.0;
    for (const auto& m : net.layers()) {
      spectral *= ps::spectral_norm(m).value;
      frob *= m.norm();
      inf *= ps::induced_norm(m, std::numeric_limits<double>::infinity());
    }
    norms["prod_spectral"] = spectral;
    norms["prod_frobenius"] = frob;
    norms["prod_l1_inf"] = inf;
    row("prod_spectral", ps::LogScaled::from_double(spectral));
    row("prod_frobenius", ps::LogScaled::from_double(frob));
    row("prod_l1_inf", ps::LogScaled::from_double(inf));
  }
  out["norms"] = norms;
  ctx.outputs = out;
  ctx.csv = csv;
}

void cmd_sample(Context& ctx, double q, std::uint64_t m, unsigned streams,
                const std::string& out_model, const std::string& counts_path) {
  const ps::Network net = need_model(ctx.g);
  const ps::ConditionalSampler sampler =
      ctx.g.data.empty() ? ps::ConditionalSampler(net, ps::unit_weights(net.input_dim()))
                         : ps::build_sampler(net, need_data(ctx.g), q);
  const ps::PathCounts counts = ps::sample_paths(sampler, m, ctx.g.seed, sample_options(ctx.g, streams));
  const ps::EmpiricalMarkov em(counts);
  const ps::CompressionStats stats = ps::compression_stats(em, m);
  std::ostringstream csv;
  ps::io::write_path_counts(counts, csv);
  if (!counts_path.empty()) ps::io::save_path_counts(counts, counts_path);
  if (!out_model.empty()) {
    const ps::ReconstructedNetwork rec =
        ps::reconstruct(em, sampler.variation(), sampler.weighting(), net.activation());
    ps::io::save_model(rec.to_network(), out_model,
                       {{"source", "path-sampling"}, {"M", m}, {"seed", ctx.g.seed}, {"q", q}});
  }
  ctx.outputs = {{"M", m},
                 {"q", q},
                 {"streams", streams},
                 {"variation", ps::io::to_json(sampler.variation())},
                 {"nonzero", stats.nonzero},
                 {"bound", stats.bound},
                 {"visited", stats.visited},
                 {"precision_digits", stats.precision_digits},
                 {"materialized_rows", sampler.materialized_rows()}};
  ctx.csv = csv.str();
}

void cmd_reconstruct_eval(Context& ctx, double q, std::uint64_t m, unsigned streams) {
  const ps::Network net = need_model(ctx.g);
  const ps::Dataset data = need_data(ctx.g, net.output_dim());
  const ps::ConditionalSampler sampler = ps::build_sampler(net, data, q);
  const ps::PathCounts counts = ps::sample_paths(sampler, m, ctx.g.seed, sample_options(ctx.g, streams));
  const ps::EmpiricalMarkov em(counts);
  const ps::ReconstructedNetwork rec =
      ps::reconstruct(em, sampler.variation(), sampler.weighting(), net.activation());
  const ps::Matrix truth = net.forward_batch(data.inputs);
  const ps::Matrix approx = rec.evaluate_batch(data.inputs);
  const double n = static_cast<double>(data.size());
  const double mse = (approx - truth).squaredNorm() / n;
  const ps::PathMeasures pm = ps::path_measures(net, sampler.weighting(), ps::MarginalMode::doubled);
  json out = {{"M", m},
              {"q", q},
              {"mse", mse},
              {"error_upper_bound", ps::error_upper_bound(pm.variation.to_double(), pm.complexity,
                                                net.depth(), m)},
              {"nonzero", em.nonzero()},
              {"bound", net.depth() * m}};
  std::string csv = "M,mse,nonzero";
  std::string row = std::to_string(m) + "," + fmt(mse) + "," + std::to_string(em.nonzero());
  if (data.has_labels() && net.output_dim() >= 2) {
    const double acc = ps::accuracy(approx, *data.labels);
    const double base = ps::accuracy(truth, *data.labels);
    out["accuracy"] = acc;
    out["original_accuracy"] = base;
    csv += ",accuracy";
    row += "," + fmt(acc);
  }
  ctx.outputs = out;
  ctx.csv = csv + "\n" + row + "\n";
}

void cmd_sweep(Context& ctx, double q, const std::vector<std::uint64_t>& ms, int rounds,
               unsigned streams) {
  const ps::Network net = need_model(ctx.g);
  const ps::Dataset data = need_data(ctx.g, net.output_dim());
  const auto rows =
      ps::sweep_accuracy_vs_M(net, data, q, ms, rounds, ctx.g.seed, sample_options(ctx.g, streams));
  std::string csv = "M,mean_acc,min_acc,max_acc,std_acc,mse\n";
  json arr = json::array();
  for (const auto& r : rows) {
    csv += std::to_string(r.draws) + "," + fmt(r.mean_acc) + "," + fmt(r.min_acc) + "," +
           fmt(r.max_acc) + "," + fmt(r.std_acc) + "," + fmt(r.mse) + "\n";
    arr.push_back({{"M", r.draws},
                   {"mean_acc", r.mean_acc},
                   {"min_acc", r.min_acc},
                   {"max_acc", r.max_acc},
                   {"std_acc", r.std_acc},
                   {"mse", r.mse}});
  }
  ctx.outputs = {{"q", q}, {"rounds", rounds}, {"rows", arr}};
  ctx.csv = csv;
}

void cmd_margins(Context& ctx, std::size_t bins) {
  const ps::Network net = need_model(ctx.g);
  const ps::Dataset data = need_data(ctx.g, net.output_dim());
  const ps::MarginStats s = ps::normalized_margins(net, data, bins);
  std::string csv = "bin_lo,bin_hi,count\n";
  json hist = json::array();
  for (std::size_t b = 0; b < s.counts.size(); ++b) {
    csv += fmt(s.edges[b]) + "," + fmt(s.edges[b + 1]) + "," + std::to_string(s.counts[b]) + "\n";
    hist.push_back({{"bin_lo", s.edges[b]}, {"bin_hi", s.edges[b + 1]}, {"count", s.counts[b]}});
  }
  std::vector<double> sorted = s.normalized;
  std::sort(sorted.begin(), sorted.end());
  ctx.outputs = {{"n", data.size()},
                 {"variation", ps::io::to_json(s.variation)},
                 {"range", {s.lo, s.hi}},
                 {"median_normalized", sorted[sorted.size() / 2]},
                 {"raw", s.raw},
                 {"normalized", s.normalized},
                 {"histogram", hist}};
  ctx.csv = csv;
}

void cmd_bound(Context& ctx, std::optional<double> gamma, double delta, double q,
               const std::string& mode) {
  const ps::Network net = need_model(ctx.g);
  const ps::Dataset data = need_data(ctx.g, net.output_dim());
  const std::vector<double> raw = ps::margins(net, data);
  const double g = gamma ? *gamma : ps::default_gamma(raw);
  const ps::Losses loss = ps::losses(raw, g);
  const ps::InputWeighting w = ps::input_weights(data, q);
  const ps::PathMeasures pm = ps::path_measures(net, w, ps::MarginalMode::doubled);

  ps::BoundInputs b;
  b.variation = pm.variation.to_double();
  b.zeta = pm.complexity;
  b.depth = net.depth();
  b.dim = net.input_dim();
  b.samples = data.size();
  b.classes = net.output_dim();
  b.gamma = g;
  b.delta = delta;
  b.margin_loss = loss.margin_loss;

  json out = {{"gamma", g},
              {"gamma_default", !gamma.has_value()},
              {"delta", delta},
              {"q", q},
              {"variation", ps::io::to_json(pm.variation)},
              {"zeta", pm.complexity},
              {"losses",
               {{"zero_one", loss.zero_one}, {"margin", loss.margin_loss}, {"ramp", loss.ramp_mean}}}};
  std::string csv = "mode,value,vacuous\n";
  for (const char* name : {"apriori", "posthoc"}) {
    if (mode != "both" && mode != name) continue;
    const ps::BoundResult r = ps::generalization_bound(
        b, std::string(name) == "apriori" ? ps::BoundMode::apriori : ps::BoundMode::posthoc);
    json entry = {{"value", r.value}, {"vacuous", r.vacuous}};
    if (r.mode == ps::BoundMode::posthoc) entry["grid"] = {r.j1, r.j2, r.j3};
    out[name] = entry;
    csv += std::string(name) + "," + fmt(r.value) + "," + (r.vacuous ? "true" : "false") + "\n";
  }
  ctx.outputs = out;
  ctx.csv = csv;
}

int cmd_verify(Context& ctx, const std::string& suite, bool quick) {
  ps::VerifyOptions o;
  o.seed = ctx.g.seed;
  if (quick) {
    o.networks = 4;
    o.resamples = 50;
    o.lower_resamples = 100;
    o.rate_resamples = 30;
    o.mle_trials = 5;
    o.mle_candidates = 100;
    o.cardinality_networks = 2;
    o.partition_max = 20;
    o.variation_networks = 20;
  }
  const auto reports = ps::run_suites(suite, o);
  json arr = json::array();
  std::string csv = "suite,check,passed,observed,bound,seed\n";
  bool ok = true;
  for (const auto& r : reports) {
    json checks = json::array();
    for (const auto& c : r.checks) {
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"observed", c.observed},
                        {"bound", c.bound},
                        {"seed", c.seed},
                        {"details", c.details}});
      csv += r.suite + "," + c.name + "," + (c.passed ? "true" : "false") + "," + fmt(c.observed) +
             "," + fmt(c.bound) + "," + std::to_string(c.seed) + "\n";
      if (!c.passed) std::cerr << "check failed: " << r.suite << "/" << c.name << "\n";
    }
    ok = ok && r.passed();
    arr.push_back({{"suite", r.suite}, {"passed", r.passed()}, {"checks", checks}});
  }
  ctx.outputs = {{"passed", ok}, {"suites", arr}};
  ctx.csv = csv;
  return ok ? kOk : kNumeric;
}

int exit_code(ps::ErrorKind kind) {
  switch (kind) {
    case ps::ErrorKind::precondition: return kUsage;
    case ps::ErrorKind::format:
    case ps::ErrorKind::io:
    case ps::ErrorKind::dimension: return kFormat;
    default: return kNumeric;
  }
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    if constexpr (std::is_integral_v<T>) {
      const double v = std::stod(item, &used);
      if (v != std::floor(v) || v < 1) throw CLI::ValidationError("list", "expected positive integers");
      out.push_back(static_cast<T>(v));
    } else {
      out.push_back(static_cast<T>(std::stod(item, &used)));
    }
    if (used != item.size()) throw CLI::ValidationError("list", "bad list entry " + item);
  }
  if (out.empty()) throw CLI::ValidationError("list", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-sampling compression and capacity measures for positive homogeneous networks"};
  app.require_subcommand(1);
  Context ctx;
  Globals& g = ctx.g;
  app.add_option("--model", g.model, "Model directory or manifest.json");
  app.add_option("--data", g.data, "Dataset CSV");
  app.add_option("--out", g.out, "Write output here instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "RNG seed");
  app.add_flag("--timings", g.timings, "Include wall-clock timings in reports");

  double q = 1.0;
  std::uint64_t m = 1000;
  unsigned streams = 1;

  auto* inspect = app.add_subcommand("inspect", "Dimensions, activation and path count");

  auto* measures = app.add_subcommand("measures", "Path variation, complexity, path norms, norm table");
  std::string phis = "1,2";
  measures->add_option("--q", q, "Path variation exponent")->check(CLI::Range(1.0, 1e300));
  measures->add_option("--p", phis, "Comma-separated path norm exponents");

  auto* sample = app.add_subcommand("sample", "Sample paths and emit sparse counts");
  std::string out_model, counts_path;
  sample->add_option("--q", q)->check(CLI::Range(1.0, 1e300));
  sample->add_option("--M", m, "Number of path draws")->check(CLI::PositiveNumber);
  sample->add_option("--streams", streams, "RNG streams in the partition plan")->check(CLI::PositiveNumber);
  sample->add_option("--out-model", out_model, "Write the reconstructed model here");
  sample->add_option("--counts", counts_path, "Write path counts CSV here");

  auto* recon = app.add_subcommand("reconstruct-eval", "Compress once and evaluate on data");
  recon->add_option("--q", q)->check(CLI::Range(1.0, 1e300));
  recon->add_option("--M", m)->check(CLI::PositiveNumber);
  recon->add_option("--streams", streams)->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Accuracy of compressed models against M");
  std::string ms_text = "100,1000,10000";
  int rounds = 10;
  sweep->add_option("--q", q)->check(CLI::Range(1.0, 1e300));
  sweep->add_option("--Ms", ms_text, "Comma-separated sample sizes");
  sweep->add_option("--rounds", rounds, "Compression rounds per M")->check(CLI::PositiveNumber);
  sweep->add_option("--streams", streams)->check(CLI::PositiveNumber);

  auto* margins = app.add_subcommand("margins", "Path-normalized margin distribution");
  std::size_t bins = 64;
  margins->add_option("--bins", bins)->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("bound", "Generalization bound");
  std::optional<double> gamma;
  double delta = 0.05;
  std::string mode = "both";
  bound->add_option("--gamma", gamma, "Margin (default: median positive margin)");
  bound->add_option("--delta", delta, "Confidence parameter");
  bound->add_option("--q", q)->check(CLI::Range(1.0, 1e300));
  bound->add_option("--mode", mode)->check(CLI::IsMember({"apriori", "posthoc", "both"}));

  auto* verify = app.add_subcommand("verify", "Empirical checks of the approximation and counting bounds");
  std::string suite = "all";
  bool quick = false;
  verify->add_option("--suite", suite)
      ->check(CLI::IsMember({"upperbound", "lowerbound", "mle", "cardinality", "variation", "all"}));
  verify->add_flag("--quick", quick, "Smaller instance counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  int rc = kOk;
  try {
    if (*inspect) {
      ctx.command = "inspect";
      cmd_inspect(ctx);
    } else if (*measures) {
      ctx.command = "measures";
      cmd_measures(ctx, q, parse_list<double>(phis));
    } else if (*sample) {
      ctx.command = "sample";
      cmd_sample(ctx, q, m, streams, out_model, counts_path);
    } else if (*recon) {
      ctx.command = "reconstruct-eval";
      cmd_reconstruct_eval(ctx, q, m, streams);
    } else if (*sweep) {
      ctx.command = "sweep";
      cmd_sweep(ctx, q, parse_list<std::uint64_t>(ms_text), rounds, streams);
    } else if (*margins) {
      ctx.command = "margins";
      cmd_margins(ctx, bins);
    } else if (*bound) {
      ctx.command = "bound";
      cmd_bound(ctx, gamma, delta, q, mode);
    } else if (*verify) {
      ctx.command = "verify";
      rc = cmd_verify(ctx, suite, quick);
    }
    emit(ctx);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ps::Error& e) {
    std::cerr << "error [" << ps::to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return rc;
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pathsample/analysis.hpp"
#include "pathsample/error.hpp"
#include "pathsample/io.hpp"
#include "pathsample/measures.hpp"
#include "pathsample/sampler.hpp"
#include "pathsample/theory.hpp"
#include "pathsample/verify.hpp"

namespace py = pybind11;
using namespace pathsample;

namespace {

Dataset make_dataset(const Matrix& x, std::optional<std::vector<int>> labels) {
  return Dataset(x, std::move(labels));
}

py::dict log_scaled(const LogScaled& v) {
  py::dict d;
  d["value"] = v.to_double();
  d["log10"] = v.log10();
  return d;
}

py::dict counts_dict(const PathCounts& c) {
  py::list pairs;
  for (std::size_t m = 0; m < c.pairs.size(); ++m) {
    for (const auto& [k, n] : c.pairs[m]) {
      pairs.append(py::make_tuple(m + 1, k.source, static_cast<int>(k.source_sign), k.target,
                                  static_cast<int>(k.target_sign), n));
    }
  }
  py::dict d;
  d["draws"] = c.draws;
  d["dims"] = c.dims;
  d["top"] = c.top;
  d["pairs"] = pairs;
  d["seed"] = c.seed;
  d["streams"] = c.streams;
  d["stream_offset"] = c.stream_offset;
  d["rng_algorithm"] = c.rng_algorithm;
  return d;
}

SampleOptions options(std::uint32_t streams, std::uint32_t threads, std::uint64_t offset) {
  SampleOptions o;
  o.streams = streams;
  o.threads = threads;
  o.stream_offset = offset;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Path sampling, path measures and margin bounds for positive homogeneous networks.";

  static py::exception<Error> error(m, "PathSampleError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<Network>(m, "Network")
      .def(py::init([](std::vector<Matrix> layers, const std::string& activation,
                       std::optional<double> alpha) {
             return Network(std::move(layers), Activation::parse(activation, alpha));
           }),
           py::arg("layers"), py::arg("activation") = "relu", py::arg("alpha") = py::none())
      .def_property_readonly("dims", &Network::dims)
      .def_property_readonly("depth", &Network::depth)
      .def_property_readonly("activation", [](const Network& n) { return n.activation().name(); })
      .def_property_readonly("layers", &Network::layers)
      .def("forward", &Network::forward_batch, py::arg("inputs"))
      .def("__repr__", [](const Network& n) {
        std::string s = "Network(dims=[";
        for (std::size_t i = 0; i < n.dims().size(); ++i) s += (i ? ", " : "") + std::to_string(n.dims()[i]);
        return s + "], activation=" + n.activation().name() + ")";
      });

  m.def("reference_network", &reference_network);
  m.def("reference_inputs", [] { return reference_dataset().inputs; });

  m.def("load_model", [](const std::filesystem::path& p) { return io::load_model(p); });
  m.def("save_model", [](const Network& n, const std::filesystem::path& p) { io::save_model(n, p); });
  m.def(
      "load_dataset",
      [](const std::filesystem::path& p) {
        const Dataset d = io::load_dataset(p);
        return py::make_tuple(d.inputs, d.labels);
      },
      "Returns (inputs, zero-based labels or None).");

  m.def(
      "variation",
      [](const Network& n, const Matrix& x, double q) { return log_scaled(variation(n, Dataset(x), q)); },
      py::arg("net"), py::arg("inputs"), py::arg("q") = 1.0);
  m.def(
      "path_complexity",
      [](const Network& n, const Matrix& x, double q, bool doubled) {
        return path_complexity(n, Dataset(x), q, doubled ? MarginalMode::doubled : MarginalMode::collapsed);
      },
      py::arg("net"), py::arg("inputs"), py::arg("q") = 1.0, py::arg("doubled") = true);
  m.def(
      "variation_bounds",
      [](const Network& n, const Matrix& x, double q) { return variation_bounds(n, Dataset(x), q); },
      py::arg("net"), py::arg("inputs"), py::arg("q") = 1.0);
  m.def(
      "path_norm", [](const Network& n, double p) { return log_scaled(path_norm_phi(n, p).total); },
      py::arg("net"), py::arg("p") = 2.0);

  m.def(
      "sample_paths",
      [](const Network& n, const Matrix& x, double q, std::uint64_t draws, std::uint64_t seed,
         std::uint32_t streams, std::uint32_t threads, std::uint64_t offset) {
        const ConditionalSampler s = build_sampler(n, Dataset(x), q);
        return counts_dict(sample_paths(s, draws, seed, options(streams, threads, offset)));
      },
      py::arg("net"), py::arg("inputs"), py::arg("q") = 1.0, py::arg("draws") = 1000,
      py::arg("seed") = 0, py::arg("streams") = 1, py::arg("threads") = 1, py::arg("stream_offset") = 0);
  m.def(
      "compress",
      [](const Network& n, const Matrix& x, double q, std::uint64_t draws, std::uint64_t seed,
         std::uint32_t streams, std::uint32_t threads) {
        const ConditionalSampler s = build_sampler(n, Dataset(x), q);
        return compress(s, draws, seed, options(streams, threads, 0)).to_network();
      },
      "Samples M paths and returns the reconstructed network.", py::arg("net"), py::arg("inputs"),
      py::arg("q") = 1.0, py::arg("draws") = 1000, py::arg("seed") = 0, py::arg("streams") = 1,
      py::arg("threads") = 1);
  m.def(
      "mc_error",
      [](const Network& n, const Matrix& x, double q, std::uint64_t draws, int resamples,
         std::uint64_t seed, std::uint32_t threads) {
        const MCEstimate e = mc_error(n, Dataset(x), q, draws, resamples, seed, options(1, threads, 0));
        py::dict d;
        d["mean"] = e.mean;
        d["std"] = e.std;
        d["se"] = e.se();
        d["ci"] = py::make_tuple(e.ci_lo, e.ci_hi);
        d["resamples"] = e.resamples;
        return d;
      },
      py::arg("net"), py::arg("inputs"), py::arg("q") = 1.0, py::arg("draws") = 1000,
      py::arg("resamples") = 100, py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("error_bound", &error_upper_bound, "(V zeta L / sqrt(M))^2.", py::arg("variation"), py::arg("zeta"),
        py::arg("depth"), py::arg("draws"));

  m.def(
      "margins",
      [](const Network& n, const Matrix& x, std::vector<int> y) { return margins(n, make_dataset(x, y)); },
      py::arg("net"), py::arg("inputs"), py::arg("labels"));
  m.def(
      "normalized_margins",
      [](const Network& n, const Matrix& x, std::vector<int> y, std::size_t bins) {
        const MarginStats s = normalized_margins(n, make_dataset(x, y), bins);
        py::dict d;
        d["raw"] = s.raw;
        d["normalized"] = s.normalized;
        d["variation"] = log_scaled(s.variation);
        d["edges"] = s.edges;
        d["counts"] = s.counts;
        return d;
      },
      py::arg("net"), py::arg("inputs"), py::arg("labels"), py::arg("bins") = 64);
  m.def(
      "generalization_bound",
      [](double v, double zeta, std::size_t depth, std::size_t dim, std::uint64_t n, double gamma,
         double delta, double margin_loss, const std::string& mode) {
        BoundInputs b;
        b.variation = v;
        b.zeta = zeta;
        b.depth = depth;
        b.dim = dim;
        b.samples = n;
        b.gamma = gamma;
        b.delta = delta;
        b.margin_loss = margin_loss;
        require(mode == "apriori" || mode == "posthoc", ErrorKind::precondition,
                "mode must be apriori or posthoc");
        const BoundResult r =
            generalization_bound(b, mode == "apriori" ? BoundMode::apriori : BoundMode::posthoc);
        py::dict d;
        d["value"] = r.value;
        d["vacuous"] = r.vacuous;
        if (mode == "posthoc") d["j"] = py::make_tuple(r.j1, r.j2, r.j3);
        return d;
      },
      py::arg("variation"), py::arg("zeta"), py::arg("depth"), py::arg("dim"), py::arg("samples"),
      py::arg("gamma"), py::arg("delta") = 0.05, py::arg("margin_loss") = 0.0,
      py::arg("mode") = "apriori");
  m.def(
      "capacities",
      [](const Network& n, const Matrix& x) {
        const CapacityReport r = competing_capacities(n, Dataset(x));
        py::dict d;
        for (const auto& e : r.entries) d[py::str(e.name)] = log_scaled(e.value);
        return d;
      },
      py::arg("net"), py::arg("inputs"));
  m.def(
      "sweep",
      [](const Network& n, const Matrix& x, std::vector<int> y, double q, std::vector<std::uint64_t> ms,
         int rounds, std::uint64_t seed, std::uint32_t threads) {
        py::list rows;
        for (const auto& r :
             sweep_accuracy_vs_M(n, make_dataset(x, y), q, ms, rounds, seed, options(1, threads, 0))) {
          py::dict d;
          d["M"] = r.draws;
          d["mean_acc"] = r.mean_acc;
          d["min_acc"] = r.min_acc;
          d["max_acc"] = r.max_acc;
          d["std_acc"] = r.std_acc;
          d["mse"] = r.mse;
          rows.append(d);
        }
        return rows;
      },
      py::arg("net"), py::arg("inputs"), py::arg("labels"), py::arg("q") = 1.0,
      py::arg("draws") = std::vector<std::uint64_t>{100, 1000, 10000}, py::arg("rounds") = 5,
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "verify",
      [](const std::string& suite, std::uint64_t seed) {
        VerifyOptions o;
        o.seed = seed;
        py::dict out;
        for (const auto& r : run_suites(suite, o)) {
          py::dict d;
          d["passed"] = r.passed();
          d["checks"] = r.checks.size();
          d["failures"] = r.failures();
          out[py::str(r.suite)] = d;
        }
        return out;
      },
      py::arg("suite") = "all", py::arg("seed") = 7);
}

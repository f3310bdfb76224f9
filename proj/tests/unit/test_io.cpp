#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "pathsample/error.hpp"
#include "pathsample/io.hpp"
#include "pathsample/verify.hpp"

using namespace pathsample;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("pathsample_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::precondition;
}

}  // namespace

TEST_CASE("model round trip") {
  TempDir tmp;
  Philox4x64 rng(60, 0);
  const Network net = random_network({3, 4, 2}, rng, Activation::leaky_relu(0.125));
  io::save_model(net, tmp.path, {{"note", "x"}});
  CHECK(fs::exists(tmp.path / "manifest.json"));
  CHECK(fs::file_size(tmp.path / "layer_1.bin") == 4 * 3 * 8);
  const Network back = io::load_model(tmp.path);
  CHECK(back.dims() == net.dims());
  CHECK(back.layer(0) == net.layer(0));
  CHECK(back.layer(1) == net.layer(1));
  CHECK(back.activation().kind == Activation::Kind::leaky_relu);
  CHECK(back.activation().alpha == 0.125);
  CHECK(io::load_model(tmp.path / "manifest.json").layer(1) == net.layer(1));
  const auto files = io::model_files(tmp.path);
  CHECK(files.size() == 3);
  const std::string h = io::digest(files);
  CHECK(h.size() == 64);
  CHECK(h == io::digest(files));
}

TEST_CASE("string activations and little-endian blobs") {
  TempDir tmp;
  // W1 = [[1, -2], [-3, 4]], W2 = [[1, 1]].
  const double w1[] = {1, -2, -3, 4};
  const double w2[] = {1, 1};
  std::ofstream(tmp.path / "a.bin", std::ios::binary).write(reinterpret_cast<const char*>(w1), 32);
  std::ofstream(tmp.path / "b.bin", std::ios::binary).write(reinterpret_cast<const char*>(w2), 16);
  write_json(tmp.path / "manifest.json", {{"version", 1},
                                          {"dims", {2, 2, 1}},
                                          {"activation", "relu"},
                                          {"layer_files", {"a.bin", "b.bin"}}});
  const Network net = io::load_model(tmp.path);
  CHECK(net.forward(fixtures::vec({0, 1}))[0] == 4.0);
  CHECK(net.layer(0)(1, 0) == -3.0);
}

TEST_CASE("malformed models are rejected") {
  TempDir tmp;
  io::save_model(reference_network(), tmp.path);
  const json good = read_json(tmp.path / "manifest.json");

  SUBCASE("truncated blob") {
    fs::resize_file(tmp.path / "layer_1.bin", 24);
    CHECK(kind_of([&] { io::load_model(tmp.path); }) == ErrorKind::dimension);
  }
  SUBCASE("unsupported activation") {
    json j = good;
    j["activation"] = "sigmoid";
    write_json(tmp.path / "manifest.json", j);
    CHECK_THROWS_AS(io::load_model(tmp.path), Error);
  }
  SUBCASE("bias terms") {
    json j = good;
    j["biases"] = {"bias_1.bin"};
    write_json(tmp.path / "manifest.json", j);
    CHECK(kind_of([&] { io::load_model(tmp.path); }) == ErrorKind::format);
  }
  SUBCASE("version") {
    json j = good;
    j["version"] = 2;
    write_json(tmp.path / "manifest.json", j);
    CHECK(kind_of([&] { io::load_model(tmp.path); }) == ErrorKind::format);
  }
  SUBCASE("not json") {
    write_text(tmp.path / "manifest.json", "{");
    CHECK(kind_of([&] { io::load_model(tmp.path); }) == ErrorKind::format);
  }
  SUBCASE("missing file") {
    fs::remove(tmp.path / "layer_2.bin");
    CHECK(kind_of([&] { io::load_model(tmp.path); }) == ErrorKind::io);
  }
  SUBCASE("non-finite weight") {
    const double bad[] = {1, NAN, 3, 4};
    std::ofstream(tmp.path / "layer_1.bin", std::ios::binary)
        .write(reinterpret_cast<const char*>(bad), 32);
    CHECK_THROWS_AS(io::load_model(tmp.path), Error);
  }
}

TEST_CASE("dataset parsing") {
  TempDir tmp;
  write_text(tmp.path / "d.csv", "f0,f1,label\n1,0,1\n0,-1,2\n-1.5e0,1,1\n");
  const Dataset d = io::load_dataset(tmp.path / "d.csv", 2);
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.inputs(2, 0) == -1.5);
  CHECK(*d.labels == std::vector<int>{0, 1, 0});

  write_text(tmp.path / "u.csv", "f0,f1\n1,0\n0,1\n");
  CHECK_FALSE(io::load_dataset(tmp.path / "u.csv").has_labels());

  write_text(tmp.path / "zero.csv", "f0,label\n1,0\n");
  CHECK(kind_of([&] { io::load_dataset(tmp.path / "zero.csv"); }) == ErrorKind::format);
  write_text(tmp.path / "ragged.csv", "f0,f1\n1,0\n1\n");
  CHECK(kind_of([&] { io::load_dataset(tmp.path / "ragged.csv"); }) == ErrorKind::format);
  write_text(tmp.path / "text.csv", "f0\nabc\n");
  CHECK(kind_of([&] { io::load_dataset(tmp.path / "text.csv"); }) == ErrorKind::format);
  write_text(tmp.path / "header.csv", "x,y\n1,2\n");
  CHECK(kind_of([&] { io::load_dataset(tmp.path / "header.csv"); }) == ErrorKind::format);
  CHECK_THROWS_AS(io::load_dataset(tmp.path / "d.csv", 1), Error);
  CHECK(kind_of([&] { io::load_dataset(tmp.path / "missing.csv"); }) == ErrorKind::io);
}

TEST_CASE("dataset round trip is exact") {
  TempDir tmp;
  Philox4x64 rng(61, 0);
  Matrix x(7, 3);
  for (auto& v : x.reshaped()) v = rng.normal() * 1e-3;
  const Dataset d(x, std::vector<int>{0, 1, 2, 0, 1, 2, 0});
  io::save_dataset(d, tmp.path / "d.csv");
  const Dataset back = io::load_dataset(tmp.path / "d.csv");
  CHECK(back.inputs == d.inputs);
  CHECK(*back.labels == *d.labels);
}

TEST_CASE("path counts round trip") {
  Philox4x64 rng(62, 0);
  const Network net = random_network({3, 5, 4, 2}, rng);
  const ConditionalSampler s(net, unit_weights(3));
  SampleOptions o;
  o.streams = 3;
  o.stream_offset = 6;
  const PathCounts c = sample_paths(s, 500, 17, o);
  std::stringstream buf;
  io::write_path_counts(c, buf);
  CHECK(buf.str().rfind("# draws=500", 0) == 0);
  CHECK(buf.str().find("layer,source,source_sign,target,target_sign,count") != std::string::npos);
  const PathCounts back = io::read_path_counts(buf);
  CHECK(back.draws == c.draws);
  CHECK(back.dims == c.dims);
  CHECK(back.pairs == c.pairs);
  CHECK(back.top == c.top);
  CHECK(back.seed == 17);
  CHECK(back.streams == 3);
  CHECK(back.stream_offset == 6);
  CHECK(back.rng_algorithm == c.rng_algorithm);
}

TEST_CASE("path counts with inconsistent totals are rejected") {
  std::stringstream in(
      "# draws=5\n# dims=1 1 1\nlayer,source,source_sign,target,target_sign,count\n"
      "1,0,1,0,1,5\n2,0,1,0,1,4\n");
  CHECK(kind_of([&] { io::read_path_counts(in); }) == ErrorKind::format);
  std::stringstream bad_sign(
      "# draws=1\n# dims=1 1 1\nlayer,source,source_sign,target,target_sign,count\n"
      "1,0,2,0,1,1\n2,0,1,0,1,1\n");
  CHECK_THROWS_AS(io::read_path_counts(bad_sign), Error);
}

TEST_CASE("log-scaled values serialize with a log10 fallback") {
  const json a = io::to_json(LogScaled::from_double(100.0));
  CHECK(a["value"].get<double>() == doctest::Approx(100.0));
  CHECK(a["log10"].get<double>() == doctest::Approx(2.0));
  LogScaled big = LogScaled::from_double(1.0);
  for (int i = 0; i < 400; ++i) big *= LogScaled::from_double(10.0);
  const json b = io::to_json(big);
  CHECK(b["value"].is_null());
  CHECK(b["log10"].get<double>() == doctest::Approx(400.0));
}

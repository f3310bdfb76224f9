#include "pathsample/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "pathsample/error.hpp"

namespace pathsample::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t swap_bytes(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xff);
  return out;
}

double read_le_double(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
  return std::bit_cast<double>(bits);
}

void write_le_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
  char raw[8];
  std::memcpy(raw, &bits, 8);
  out.write(raw, 8);
}

template <class T>
T field(const json& j, const char* key) {
  require(j.contains(key), ErrorKind::format, std::string("manifest is missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::format, std::string("manifest field \"") + key + "\" has the wrong type");
  }
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Models

Network load_model(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  const fs::path dir = manifest_path.parent_path();
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::format, "manifest is not valid JSON: " + std::string(e.what()));
  }
  require(manifest.is_object(), ErrorKind::format, "manifest must be a JSON object");
  const int version = field<int>(manifest, "version");
  require(version == kManifestVersion, ErrorKind::format,
          "unsupported manifest version " + std::to_string(version));
  for (const char* key : {"biases", "bias_files", "bias"}) {
    require(!manifest.contains(key) || manifest[key].is_null() ||
                (manifest[key].is_array() && manifest[key].empty()),
            ErrorKind::format, "models with bias terms are not supported");
  }

  const json activation = field<json>(manifest, "activation");
  std::optional<double> alpha;
  std::string kind;
  if (activation.is_string()) {
    kind = activation.get<std::string>();
  } else {
    kind = field<std::string>(activation, "kind");
    if (activation.contains("alpha") && !activation["alpha"].is_null()) {
      alpha = field<double>(activation, "alpha");
    }
  }
  const Activation act = Activation::parse(kind, alpha);

  const auto dims = field<std::vector<std::size_t>>(manifest, "dims");
  const auto files = field<std::vector<std::string>>(manifest, "layer_files");
  require(dims.size() >= 3, ErrorKind::format, "manifest needs at least two layers");
  require(files.size() + 1 == dims.size(), ErrorKind::format,
          "layer_files and dims disagree on the number of layers");

  std::vector<Matrix> layers;
  for (std::size_t l = 0; l < files.size(); ++l) {
    const std::string blob = read_file(dir / files[l]);
    const std::size_t rows = dims[l + 1];
    const std::size_t cols = dims[l];
    require(blob.size() == rows * cols * 8, ErrorKind::dimension,
            "shape mismatch in " + files[l] + ": " + std::to_string(blob.size()) +
                " bytes, expected " + std::to_string(rows * cols * 8));
    Matrix w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) w.data()[i] = read_le_double(blob.data() + 8 * i);
    require(w.allFinite(), ErrorKind::non_finite, files[l] + " has non-finite entries");
    layers.push_back(std::move(w));
  }
  return {std::move(layers), act};
}

void save_model(const Network& net, const fs::path& dir, const json& metadata) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = kManifestVersion;
  json act = {{"kind", net.activation().name()}};
  if (net.activation().kind == Activation::Kind::leaky_relu) act["alpha"] = net.activation().alpha;
  manifest["activation"] = act;
  manifest["dims"] = net.dims();
  json files = json::array();
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const std::string name = "layer_" + std::to_string(l + 1) + ".bin";
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + (dir / name).string());
    const Matrix& w = net.layer(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) write_le_double(out, w.data()[i]);
    files.push_back(name);
  }
  manifest["layer_files"] = files;
  manifest["rng_algorithm"] = std::string(Philox4x64::algorithm);
  manifest["metadata"] = metadata;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write manifest");
  out << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Datasets

Dataset load_dataset(const fs::path& path, std::optional<std::size_t> classes) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::format, "dataset is empty");
  const auto header = split(line, ',');
  std::size_t dim = 0;
  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = trim(header[c]);
    if (name == "label") {
      require(!label_col, ErrorKind::format, "duplicate label column");
      label_col = c;
    } else {
      require(name == "f" + std::to_string(dim), ErrorKind::format,
              "unexpected column \"" + std::string(name) + "\", expected f" + std::to_string(dim));
      ++dim;
    }
  }
  require(dim >= 1, ErrorKind::format, "dataset has no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == header.size(), ErrorKind::format,
            "ragged row at line " + std::to_string(line_no));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      require(parse_double(cells[c], v), ErrorKind::format,
              "bad number at line " + std::to_string(line_no));
      if (label_col && c == *label_col) {
        require(v == std::floor(v) && v >= 1.0, ErrorKind::format,
                "labels are 1-based integers (line " + std::to_string(line_no) + ")");
        labels.push_back(static_cast<int>(v) - 1);
      } else {
        values.push_back(v);
      }
    }
    ++rows;
  }
  require(rows >= 1, ErrorKind::format, "dataset has no rows");
  Matrix x = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(rows),
                                static_cast<Eigen::Index>(dim));
  Dataset data(std::move(x), label_col ? std::optional(std::move(labels)) : std::nullopt);
  if (classes && data.has_labels()) data.check_labels(*classes);
  return data;
}

void save_dataset(const Dataset& data, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? "," : "") << 'f' << j;
  if (data.has_labels()) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      out << (j ? "," : "")
          << format_double(data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    if (data.has_labels()) out << ',' << (*data.labels)[i] + 1;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Path counts

void write_path_counts(const PathCounts& counts, std::ostream& out) {
  out << "# draws=" << counts.draws << '\n';
  out << "# dims=";
  for (std::size_t l = 0; l < counts.dims.size(); ++l) out << (l ? " " : "") << counts.dims[l];
  out << '\n';
  out << "# seed=" << counts.seed << '\n';
  out << "# streams=" << counts.streams << '\n';
  out << "# stream_offset=" << counts.stream_offset << '\n';
  out << "# rng_algorithm=" << counts.rng_algorithm << '\n';
  out << "layer,source,source_sign,target,target_sign,count\n";
  for (std::size_t m = 0; m < counts.pairs.size(); ++m) {
    for (const auto& [key, count] : counts.pairs[m]) {
      out << m + 1 << ',' << key.source << ',' << int(key.source_sign) << ',' << key.target << ','
          << int(key.target_sign) << ',' << count << '\n';
    }
  }
}

void save_path_counts(const PathCounts& counts, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  write_path_counts(counts, out);
}

PathCounts read_path_counts(std::istream& in) {
  PathCounts counts;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  auto to_u64 = [&](std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::format,
            "bad integer at line " + std::to_string(line_no));
    return v;
  };
  auto to_sign = [&](std::string_view s) {
    s = trim(s);
    require(s == "1" || s == "-1" || s == "+1", ErrorKind::format,
            "sign must be +1 or -1 at line " + std::to_string(line_no));
    return static_cast<std::int8_t>(s == "-1" ? -1 : 1);
  };
  std::optional<std::uint64_t> declared;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const std::string_view body = trim(text.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view value = trim(body.substr(eq + 1));
      if (key == "draws") declared = to_u64(value);
      else if (key == "seed") counts.seed = to_u64(value);
      else if (key == "streams") counts.streams = static_cast<std::uint32_t>(to_u64(value));
      else if (key == "stream_offset") counts.stream_offset = to_u64(value);
      else if (key == "rng_algorithm") counts.rng_algorithm = std::string(value);
      else if (key == "dims") {
        for (auto part : split(value, ' ')) {
          if (!trim(part).empty()) counts.dims.push_back(to_u64(part));
        }
      }
      continue;
    }
    if (!header_seen) {
      require(text == "layer,source,source_sign,target,target_sign,count", ErrorKind::format,
              "unexpected path counts header");
      header_seen = true;
      require(counts.dims.size() >= 3, ErrorKind::format, "path counts need a dims line");
      counts.pairs.resize(counts.dims.size() - 1);
      counts.top.assign(counts.dims.back(), 0);
      continue;
    }
    const auto cells = split(text, ',');
    require(cells.size() == 6, ErrorKind::format, "ragged row at line " + std::to_string(line_no));
    const std::uint64_t layer = to_u64(cells[0]);
    require(layer >= 1 && layer <= counts.pairs.size(), ErrorKind::format,
            "layer out of range at line " + std::to_string(line_no));
    PairKey key;
    key.source = static_cast<std::uint32_t>(to_u64(cells[1]));
    key.source_sign = to_sign(cells[2]);
    key.target = static_cast<std::uint32_t>(to_u64(cells[3]));
    key.target_sign = to_sign(cells[4]);
    require(key.source < counts.dims[layer - 1] && key.target < counts.dims[layer],
            ErrorKind::format, "unit index out of range at line " + std::to_string(line_no));
    const std::uint64_t count = to_u64(cells[5]);
    counts.pairs[layer - 1][key] += count;
    if (layer == counts.pairs.size()) counts.top[key.target] += count;
  }
  require(header_seen, ErrorKind::format, "path counts have no header");
  for (std::uint64_t k : counts.top) counts.draws += k;
  for (const auto& layer : counts.pairs) {
    std::uint64_t total = 0;
    for (const auto& [key, count] : layer) total += count;
    require(total == counts.draws, ErrorKind::format, "layer totals disagree");
  }
  require(!declared || *declared == counts.draws, ErrorKind::format,
          "declared draws do not match the counts");
  return counts;
}

PathCounts load_path_counts(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  return read_path_counts(in);
}

// ---------------------------------------------------------------------------

std::vector<fs::path> model_files(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  std::vector<fs::path> out{manifest_path};
  const json manifest = json::parse(read_file(manifest_path), nullptr, false);
  if (manifest.is_object() && manifest.contains("layer_files") && manifest["layer_files"].is_array()) {
    for (const auto& f : manifest["layer_files"]) {
      if (f.is_string()) out.push_back(manifest_path.parent_path() / f.get<std::string>());
    }
  }
  return out;
}

std::string digest(const std::vector<fs::path>& files) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, ErrorKind::io, "cannot allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& f : files) {
    const std::string bytes = read_file(f);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

json to_json(const LogScaled& v) {
  const double d = v.to_double();
  json out;
  out["value"] = std::isfinite(d) ? json(d) : json(nullptr);
  out["log10"] = v.is_zero() ? json(nullptr) : json(v.log10());
  return out;
}

}  // namespace pathsample::io

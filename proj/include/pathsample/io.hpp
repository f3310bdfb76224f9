#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathsample/sampler.hpp"

namespace pathsample::io {

inline constexpr int kManifestVersion = 1;

/// Loads manifest.json plus raw little-endian float64 blobs (row-major,
/// d_l x d_{l-1}). `path` is the model directory or the manifest file.
Network load_model(const std::filesystem::path& path);

/// Writes manifest.json and layer_<l>.bin into `dir`, creating it if needed.
void save_model(const Network& net, const std::filesystem::path& dir,
                const nlohmann::json& metadata = nlohmann::json::object());

/// CSV with header f0,...,f{d-1}[,label]; labels are 1-based in the file.
Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<std::size_t> classes = std::nullopt);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Sparse counts CSV: "# key=value" metadata lines, then
/// layer,source,source_sign,target,target_sign,count with layer = 1..L.
void write_path_counts(const PathCounts& counts, std::ostream& out);
void save_path_counts(const PathCounts& counts, const std::filesystem::path& path);
PathCounts read_path_counts(std::istream& in);
PathCounts load_path_counts(const std::filesystem::path& path);

/// Manifest followed by its layer blobs.
std::vector<std::filesystem::path> model_files(const std::filesystem::path& path);

/// Hex SHA-256 of the bytes of each file, chained in order.
std::string digest(const std::vector<std::filesystem::path>& files);

/// {"value": double (null if out of range), "log10": double}.
nlohmann::json to_json(const LogScaled& v);

}  // namespace pathsample::io

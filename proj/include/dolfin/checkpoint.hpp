#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dolfin/model.hpp"
#include "json.hpp"

namespace dolfin {

/// Everything a checkpoint records besides the parameter values.
struct CheckpointInfo {
  ModelConfig model;
  std::string dataset;
  std::vector<std::string> categories;
  std::uint64_t vocab_hash = 0;
  std::size_t vocab_size = 0;
  /// "f32" or "f64": element type of the parameter blocks.
  std::string dtype = "f32";
  /// Free-form run settings (seed, optimizer settings, ...).
  nlohmann::json run = nlohmann::json::object();
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// File layout:
///   bytes 0..7   magic "DOLFIN1\n"
///   bytes 8..15  header length L, unsigned 64-bit little-endian
///   next L bytes JSON header: info fields, parameter names and shapes in
///                declaration order, and an FNV-1a checksum of the payload
///   payload      every parameter's values, row-major, little-endian, in
///                header order, as f32 or f64 per the header's dtype
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const TextClassifier<T>& model,
                     CheckpointInfo info);

/// Reads and validates the header only.
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

/// Rebuilds the model and verifies structure and checksum. Throws DataError on
/// any malformed, truncated or corrupted file.
template <typename T>
TextClassifier<T> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace dolfin

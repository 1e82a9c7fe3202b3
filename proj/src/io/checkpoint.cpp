#include "dolfin/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dolfin/error.hpp"

namespace dolfin {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blocks are written in host order, which must be little-endian");

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[8] = {'D', 'O', 'L', 'F', 'I', 'N', '1', '\n'};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
std::string dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename Stored, typename T>
void append_block(std::string& out, const Tensor<T>& t) {
  for (T v : t.data()) {
    const auto s = static_cast<Stored>(v);
    char buf[sizeof(Stored)];
    std::memcpy(buf, &s, sizeof s);
    out.append(buf, sizeof s);
  }
}

template <typename Stored, typename T>
void read_block(const std::string& payload, std::size_t& offset, Tensor<T>& t) {
  for (T& v : t.data()) {
    Stored s;
    std::memcpy(&s, payload.data() + offset, sizeof s);
    offset += sizeof s;
    v = static_cast<T>(s);
  }
}

struct RawCheckpoint {
  json header;
  std::string payload;
};

RawCheckpoint read_raw(const fs::path& path, bool with_payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t length = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(path.string() + ": not a checkpoint (bad magic)");
  }
  if (!in.read(reinterpret_cast<char*>(&length), 8) || length > (1ULL << 30)) {
    throw DataError(path.string() + ": corrupt checkpoint header length");
  }
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw DataError(path.string() + ": truncated checkpoint header");
  }
  RawCheckpoint raw;
  try {
    raw.header = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": corrupt checkpoint header: " + e.what());
  }
  if (with_payload) {
    std::ostringstream rest;
    rest << in.rdbuf();
    raw.payload = rest.str();
  }
  return raw;
}

CheckpointInfo info_from_header(const json& h, const fs::path& path) {
  try {
    CheckpointInfo info;
    info.model = model_config_from_json(h.at("model"));
    info.dataset = h.at("dataset").get<std::string>();
    info.categories = h.at("categories").get<std::vector<std::string>>();
    info.vocab_hash = std::stoull(h.at("vocab_hash").get<std::string>(), nullptr, 16);
    info.vocab_size = h.at("vocab_size").get<std::size_t>();
    info.dtype = h.at("dtype").get<std::string>();
    info.run = h.value("run", json::object());
    if (info.dtype != "f32" && info.dtype != "f64") throw DataError("unknown dtype " + info.dtype);
    info.model.validate();
    return info;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": incomplete checkpoint header: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": invalid model in checkpoint header: " + e.what());
  }
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return {{"architecture", to_string(cfg.architecture)},
          {"vocab_size", cfg.vocab_size},
          {"embedding_dim", cfg.embedding_dim},
          {"filter_sizes", cfg.encoder.filter_sizes},
          {"filters_per_size", cfg.encoder.filters_per_size},
          {"lstm_hidden", cfg.encoder.lstm_hidden},
          {"latent_features", cfg.latent_features},
          {"text_dim", cfg.text_dim},
          {"categories", cfg.categories},
          {"dropout", cfg.dropout}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.architecture = parse_architecture(j.at("architecture").get<std::string>());
  cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
  cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  cfg.encoder.kind = encoder_kind(cfg.architecture);
  cfg.encoder.filter_sizes = j.at("filter_sizes").get<std::vector<std::size_t>>();
  cfg.encoder.filters_per_size = j.at("filters_per_size").get<std::size_t>();
  cfg.encoder.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  cfg.latent_features = j.at("latent_features").get<std::size_t>();
  cfg.text_dim = j.at("text_dim").get<std::size_t>();
  cfg.categories = j.at("categories").get<std::size_t>();
  cfg.dropout = j.at("dropout").get<double>();
  return cfg;
}

template <typename T>
void save_checkpoint(const fs::path& path, const TextClassifier<T>& model, CheckpointInfo info) {
  info.model = model.config();
  info.dtype = dtype_name<T>();
  const ParameterList<T> params = model.parameters();
  std::string payload;
  json shapes = json::array();
  for (const auto& p : params) {
    shapes.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
    append_block<T>(payload, p.tensor);
  }
  std::ostringstream hash;
  hash << std::hex << info.vocab_hash;
  std::ostringstream checksum;
  checksum << std::hex << fnv1a(payload);
  const json header = {{"format", "dolfin-checkpoint"},
                       {"model", model_config_to_json(info.model)},
                       {"dataset", info.dataset},
                       {"categories", info.categories},
                       {"vocab_hash", hash.str()},
                       {"vocab_size", info.vocab_size},
                       {"dtype", info.dtype},
                       {"run", info.run},
                       {"parameters", shapes},
                       {"payload_bytes", payload.size()},
                       {"checksum", checksum.str()}};
  const std::string text = header.dump();
  const std::uint64_t length = text.size();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&length), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

CheckpointInfo read_checkpoint_info(const fs::path& path) {
  return info_from_header(read_raw(path, false).header, path);
}

template <typename T>
TextClassifier<T> load_checkpoint(const fs::path& path, CheckpointInfo* info_out) {
  const RawCheckpoint raw = read_raw(path, true);
  CheckpointInfo info = info_from_header(raw.header, path);
  const std::size_t width = info.dtype == "f32" ? 4 : 8;

  std::ostringstream checksum;
  checksum << std::hex << fnv1a(raw.payload);
  if (raw.header.value("checksum", std::string{}) != checksum.str()) {
    throw DataError(path.string() + ": checkpoint payload is corrupted (checksum mismatch)");
  }

  Rng unused(0);
  TextClassifier<T> model(info.model, unused);
  ParameterList<T> params = model.parameters();
  const json& listed = raw.header.at("parameters");
  if (listed.size() != params.size()) {
    throw DataError(path.string() + ": checkpoint lists " + std::to_string(listed.size()) +
                    " parameters, model has " + std::to_string(params.size()));
  }
  std::size_t expected = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto name = listed[k].at("name").get<std::string>();
    const auto shape = listed[k].at("shape").get<Shape>();
    if (name != params[k].name || shape != params[k].tensor.shape()) {
      throw DataError(path.string() + ": parameter " + std::to_string(k) + " is " + name + " " +
                      shape_string(shape) + ", model expects " + params[k].name + " " +
                      shape_string(params[k].tensor.shape()));
    }
    expected += params[k].tensor.numel() * width;
  }
  if (raw.payload.size() != expected) {
    throw DataError(path.string() + ": checkpoint payload has " + std::to_string(raw.payload.size()) +
                    " bytes, expected " + std::to_string(expected));
  }
  std::size_t offset = 0;
  for (auto& p : params) {
    if (width == 4) {
      read_block<float>(raw.payload, offset, p.tensor);
    } else {
      read_block<double>(raw.payload, offset, p.tensor);
    }
  }
  if (info_out) *info_out = std::move(info);
  return model;
}

template void save_checkpoint(const fs::path&, const TextClassifier<float>&, CheckpointInfo);
template void save_checkpoint(const fs::path&, const TextClassifier<double>&, CheckpointInfo);
template TextClassifier<float> load_checkpoint(const fs::path&, CheckpointInfo*);
template TextClassifier<double> load_checkpoint(const fs::path&, CheckpointInfo*);

}  // namespace dolfin

#include "permnet/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>

#include "permnet/error.hpp"

namespace permnet {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'N', 'N', 'C'};

template <typename T>
T required(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::InvalidConfig, std::string("layer field \"") + key + "\" missing");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("layer field \"") + key + "\": " + e.what());
  }
}

template <typename T>
T optional(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : required<T>(j, key);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw Error(Errc::InvalidFormat, "checkpoint truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

json layer_to_json(const LayerSpec& spec) {
  json j;
  const auto kind = layer_kind(spec);
  j["kind"] = layer_kind_name(kind);
  j["code"] = static_cast<int>(kind);
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec>) {
          j["in_dim"] = s.in_dim;
          j["out_dim"] = s.out_dim;
          j["activation"] = activation_name(s.activation);
          j["l2_weight"] = s.l2_weight;
          j["dropout_rate"] = s.dropout_rate;
        } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
          j["in_channels"] = s.in_channels;
          j["filters"] = s.filters;
          j["kernel_size"] = s.kernel_size;
          j["padding"] = "same";
          j["l2_weight"] = s.l2_weight;
        } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
          j["pool_size"] = s.pool_size;
        } else if constexpr (std::is_same_v<T, GruSpec>) {
          j["units"] = s.units;
          j["dropout_rate"] = s.dropout_rate;
          j["l2_weight"] = s.l2_weight;
        }
      },
      spec);
  return j;
}

LayerSpec layer_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "layer entry is not an object");
  std::string kind;
  if (j.contains("code")) {
    const int code = required<int>(j, "code");
    if (code < 1 || code > 7) throw Error(Errc::UnsupportedLayer, "unknown layer code " + std::to_string(code));
    kind = layer_kind_name(static_cast<LayerKind>(code));
  } else {
    kind = required<std::string>(j, "kind");
  }

  if (kind == "dense") {
    DenseSpec s;
    s.in_dim = required<std::size_t>(j, "in_dim");
    s.out_dim = required<std::size_t>(j, "out_dim");
    s.activation = activation_from_name(optional<std::string>(j, "activation", "relu"));
    s.l2_weight = optional<double>(j, "l2_weight", 0.0);
    s.dropout_rate = optional<double>(j, "dropout_rate", 0.0);
    return s;
  }
  if (kind == "conv1d") {
    if (optional<std::string>(j, "padding", "same") != "same") {
      throw Error(Errc::InvalidConfig, "conv1d supports only same padding");
    }
    Conv1DSpec s;
    s.in_channels = required<std::size_t>(j, "in_channels");
    s.filters = required<std::size_t>(j, "filters");
    s.kernel_size = required<std::size_t>(j, "kernel_size");
    s.l2_weight = optional<double>(j, "l2_weight", 0.0);
    return s;
  }
  if (kind == "maxpool1d") return MaxPool1DSpec{required<std::size_t>(j, "pool_size")};
  if (kind == "gru") {
    GruSpec s;
    s.units = required<std::size_t>(j, "units");
    s.dropout_rate = optional<double>(j, "dropout_rate", 0.0);
    s.l2_weight = optional<double>(j, "l2_weight", 0.0);
    return s;
  }
  if (kind == "flatten") return FlattenSpec{};
  if (kind == "lstm" || kind == "parallel") {
    throw Error(Errc::UnsupportedLayer, "layer kind \"" + kind + "\" is reserved but not implemented");
  }
  throw Error(Errc::UnsupportedLayer, "unknown layer kind \"" + kind + "\"");
}

json model_config_to_json(const ModelConfig& config) {
  json j;
  j["input_dim"] = config.input_dim;
  j["seed"] = config.seed;
  j["layers"] = json::array();
  for (const auto& l : config.layers) j["layers"].push_back(layer_to_json(l));
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
    throw Error(Errc::InvalidConfig, "model config needs a \"layers\" array");
  }
  ModelConfig c;
  c.input_dim = required<std::size_t>(j, "input_dim");
  c.seed = optional<std::uint64_t>(j, "seed", 0);
  for (const auto& l : j["layers"]) c.layers.push_back(layer_from_json(l));
  return c;
}

void write_checkpoint(std::ostream& out, const ModelConfig& config, const Parameters& params) {
  const auto shapes = parameter_shapes(config);
  json header = model_config_to_json(config);
  header["tensors"] = json::array();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (params.layers.size() != shapes.size() || params.layers[l].size() != shapes[l].size()) {
      throw Error(Errc::ShapeMismatch, "checkpoint: parameters do not match config");
    }
    for (std::size_t t = 0; t < shapes[l].size(); ++t) {
      if (params.layers[l][t].shape != shapes[l][t]) {
        throw Error(Errc::ShapeMismatch, "checkpoint: tensor shape mismatch in layer " + std::to_string(l));
      }
      header["tensors"].push_back({{"layer", l}, {"shape", shapes[l][t]}});
    }
  }
  const std::string text = header.dump();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& layer : params.layers) {
    for (const auto& t : layer) {
      for (double v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw Error(Errc::Io, "checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(Errc::InvalidFormat, "not a PNNC checkpoint");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(Errc::InvalidFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = get_le<std::uint64_t>(in);
  if (len > (1ULL << 30)) throw Error(Errc::InvalidFormat, "checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(Errc::InvalidFormat, "checkpoint truncated in header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidFormat, std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ck;
  ck.config = model_config_from_json(header);
  const auto shapes = parameter_shapes(ck.config);
  for (const auto& layer_shapes : shapes) {
    auto& layer = ck.params.layers.emplace_back();
    for (const auto& s : layer_shapes) {
      Tensor t(s);
      for (auto& v : t.values) v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
      layer.push_back(std::move(t));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::InvalidFormat, "trailing bytes after checkpoint tensors");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const Parameters& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  write_checkpoint(out, config, params);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace permnet

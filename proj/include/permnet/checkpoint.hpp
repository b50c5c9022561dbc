#pragma once

// PNNC checkpoints: "PNNC" magic, u32 LE version, u64 LE header length, UTF-8
// JSON header (input_dim, seed, layer list), then every parameter tensor as
// little-endian float32 in declaration order.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "permnet/model.hpp"

namespace permnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json layer_to_json(const LayerSpec& spec);
/// Rejects the reserved LSTM / parallel codes with UnsupportedLayer.
LayerSpec layer_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelConfig config;
  Parameters params;
};

void write_checkpoint(std::ostream& out, const ModelConfig& config, const Parameters& params);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const Parameters& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace permnet

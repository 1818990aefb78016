#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sgdqn/ad/parameters.hpp"
#include "sgdqn/net/network.hpp"

namespace sgdqn::rl {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ad::ParameterSet params;
  nlohmann::json metadata;  // format_version, kind, episodes, config, network
  std::string hash;         // hex FNV-1a of the file bytes
};

// `config` is stored verbatim under "config". `kind` tells Q-networks and
// crowd predictors apart.
void save_checkpoint(const std::filesystem::path& path, const ad::ParameterSet& params,
                     const nlohmann::json& config, std::size_t episodes,
                     const std::string& kind = "q_network");

// Loads into a network of shape `dims`. Corrupt files raise FormatError;
// wrong parameter shapes raise ShapeError naming the parameter; a different
// `kind` raises InvalidArgument.
Checkpoint load_checkpoint(const std::filesystem::path& path, const net::NetworkDims& dims = {},
                           const std::string& kind = "q_network");

// Loads just the raw parameters plus metadata without shape checks.
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string file_hash(const std::filesystem::path& path);

nlohmann::json dims_to_json(const net::NetworkDims& dims);

}  // namespace sgdqn::rl

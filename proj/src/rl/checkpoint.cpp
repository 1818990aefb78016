#include "sgdqn/rl/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "sgdqn/ad/serialize.hpp"
#include "sgdqn/errors.hpp"

namespace sgdqn::rl {

nlohmann::json dims_to_json(const net::NetworkDims& dims) {
  return {{"robot_input", dims.robot_input},       {"pedestrian_input", dims.pedestrian_input},
          {"embed_hidden", dims.embed_hidden},     {"feature", dims.feature},
          {"graph_layers", dims.graph_layers},     {"common_hidden", dims.common_hidden},
          {"num_actions", dims.num_actions}};
}

void save_checkpoint(const std::filesystem::path& path, const ad::ParameterSet& params,
                     const nlohmann::json& config, std::size_t episodes, const std::string& kind) {
  nlohmann::json meta;
  meta["format_version"] = kCheckpointFormatVersion;
  meta["kind"] = kind;
  meta["episodes"] = episodes;
  meta["config"] = config;
  meta["parameter_fingerprint"] = params.fingerprint();
  ad::save_parameters(path, params, meta.dump());
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(ad::fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  ad::ParameterFile file = ad::load_parameters(path);
  Checkpoint cp;
  try {
    cp.metadata = nlohmann::json::parse(file.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": checkpoint metadata is not valid JSON (" + e.what() + ")");
  }
  if (!cp.metadata.is_object() || cp.metadata.value("format_version", -1) != kCheckpointFormatVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint metadata version");
  }
  cp.params = std::move(file.params);
  cp.hash = file_hash(path);
  return cp;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const net::NetworkDims& dims,
                           const std::string& kind) {
  Checkpoint raw = read_checkpoint(path);
  const std::string found = raw.metadata.value("kind", "");
  if (found != kind) {
    throw InvalidArgument(path.string() + ": checkpoint holds a '" + found + "', expected a '" + kind + "'");
  }
  Checkpoint cp;
  cp.metadata = std::move(raw.metadata);
  cp.hash = std::move(raw.hash);
  cp.params = net::make_network_parameters(0, dims);
  try {
    ad::assign_by_name(cp.params, raw.params);
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  }
  return cp;
}

}  // namespace sgdqn::rl

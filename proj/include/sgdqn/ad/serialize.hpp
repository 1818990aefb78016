#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sgdqn/ad/parameters.hpp"

namespace sgdqn::ad {

// Parameter container, all integers little-endian:
//
//   8 bytes  magic "SGDQNPRM"
//   u32      format version (kParameterFormatVersion)
//   u32      metadata length L, then L bytes of UTF-8 metadata (JSON)
//   u32      parameter count P, then P records of
//              u32 name length, name bytes,
//              u32 rank (2), rank x u64 dimensions,
//              prod(dims) x f64 values (IEEE-754 binary64, little-endian)
//   u64      FNV-1a 64 of every preceding byte
inline constexpr std::uint32_t kParameterFormatVersion = 1;

struct ParameterFile {
  ParameterSet params;
  std::string metadata;
};

std::string encode_parameters(const ParameterSet& params, const std::string& metadata);
// Throws FormatError on bad magic, version, truncation or checksum.
ParameterFile decode_parameters(const std::string& bytes);

void save_parameters(const std::filesystem::path& path, const ParameterSet& params,
                     const std::string& metadata);
ParameterFile load_parameters(const std::filesystem::path& path);

// Copies `loaded` into `target` by name; every parameter of `target` must be
// present with an identical shape, otherwise a ShapeError names it.
void assign_by_name(ParameterSet& target, const ParameterSet& loaded);

std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace sgdqn::ad

#include "sgdqn/ad/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sgdqn/errors.hpp"

namespace sgdqn::ad {
namespace {

constexpr char kMagic[8] = {'S', 'G', 'D', 'Q', 'N', 'P', 'R', 'M'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint64_t uint(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (end_ - pos_ < n) {
      throw FormatError(std::string("parameter file truncated while reading ") + what);
    }
  }

  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string encode_parameters(const ParameterSet& params, const std::string& metadata) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kParameterFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(metadata.size()));
  out += metadata;
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_u32(out, 2);
    put_u64(out, e.tensor.rows());
    put_u64(out, e.tensor.cols());
    for (double v : e.tensor.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

ParameterFile decode_parameters(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a parameter file (bad magic)");
  }
  const std::size_t body = bytes.size() - 8;
  Reader checksum_reader(bytes, bytes.size());
  checksum_reader.text(body, "body");
  const std::uint64_t stored = checksum_reader.uint(8, "checksum");

  Reader r(bytes, body);
  r.text(sizeof(kMagic), "magic");
  const auto version = static_cast<std::uint32_t>(r.uint(4, "version"));
  if (version != kParameterFormatVersion) {
    throw FormatError("unsupported parameter format version " + std::to_string(version) +
                      " (expected " + std::to_string(kParameterFormatVersion) + ")");
  }
  if (stored != fnv1a64(bytes.data(), body)) {
    throw FormatError("parameter file checksum mismatch (corrupt or truncated)");
  }
  ParameterFile file;
  file.metadata = r.text(r.uint(4, "metadata length"), "metadata");
  const auto count = r.uint(4, "parameter count");
  for (std::uint64_t p = 0; p < count; ++p) {
    std::string name = r.text(r.uint(4, "name length"), "name");
    const auto rank = r.uint(4, "rank");
    if (rank != 2) throw FormatError("parameter '" + name + "' has unsupported rank " + std::to_string(rank));
    const auto rows = r.uint(8, "rows");
    const auto cols = r.uint(8, "cols");
    if (rows != 0 && cols > (body - r.position()) / 8 / rows) {
      throw FormatError("parameter file truncated while reading values of '" + name + "'");
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) v = std::bit_cast<double>(r.uint(8, "values"));
    file.params.add(std::move(name), Tensor(rows, cols, std::move(values)));
  }
  if (r.position() != body) throw FormatError("trailing bytes after parameter records");
  return file;
}

void save_parameters(const std::filesystem::path& path, const ParameterSet& params,
                     const std::string& metadata) {
  const std::string bytes = encode_parameters(params, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ParameterFile load_parameters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_parameters(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void assign_by_name(ParameterSet& target, const ParameterSet& loaded) {
  for (auto& e : target.entries()) {
    const Tensor* src = loaded.find(e.name);
    if (src == nullptr) throw ShapeError("checkpoint is missing parameter '" + e.name + "'");
    if (!(src->shape() == e.tensor.shape())) {
      throw ShapeError("shape mismatch for parameter '" + e.name + "': checkpoint has " +
                       src->shape().str() + ", network expects " + e.tensor.shape().str());
    }
    std::copy(src->values().begin(), src->values().end(), e.tensor.values().begin());
  }
  if (loaded.size() != target.size()) {
    for (const auto& e : loaded.entries()) {
      if (target.find(e.name) == nullptr) {
        throw ShapeError("checkpoint has unexpected parameter '" + e.name + "'");
      }
    }
  }
}

}  // namespace sgdqn::ad

#include "ace/activation_cache.hpp"

#include "ace/errors.hpp"
#include "ace/fileio.hpp"

#include <bit>
#include <cstring>

namespace ace {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'E', 'A'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(std::uint8_t(in[offset + std::size_t(i)])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_activations(const ActivationMatrix& activations) {
  std::string out;
  const auto count = std::uint64_t(activations.rows());
  const auto dim = std::uint64_t(activations.cols());
  out.reserve(kHeaderBytes + count * dim * 4);
  out.append(kMagic, 4);
  put_le(out, kActivationCacheVersion, 4);
  put_le(out, dim, 4);
  put_le(out, count, 8);
  for (Eigen::Index r = 0; r < activations.rows(); ++r)
    for (Eigen::Index c = 0; c < activations.cols(); ++c) put_le(out, std::bit_cast<std::uint32_t>(activations(r, c)), 4);
  return out;
}

ActivationMatrix decode_activations(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorKind::io, "activation cache: bad magic");
  const auto version = get_le(bytes, 4, 4);
  if (version != kActivationCacheVersion)
    fail(ErrorKind::io, "activation cache: unsupported version " + std::to_string(version));
  const auto dim = get_le(bytes, 8, 4);
  const auto count = get_le(bytes, 12, 8);
  if (bytes.size() != kHeaderBytes + count * dim * 4)
    fail(ErrorKind::io, "activation cache: size does not match header");
  ActivationMatrix a{static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim)};
  std::size_t offset = kHeaderBytes;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c, offset += 4)
      a(r, c) = std::bit_cast<float>(std::uint32_t(get_le(bytes, offset, 4)));
  return a;
}

std::filesystem::path sidecar_path(const std::filesystem::path& cache_file) {
  auto p = cache_file;
  p.replace_extension(".json");
  return p;
}

void write_activation_cache(const std::filesystem::path& path, const ActivationMatrix& activations,
                            const nlohmann::json& rows) {
  require(rows.is_array() && rows.size() == std::size_t(activations.rows()),
          "write_activation_cache: one sidecar record per row required");
  nlohmann::json sidecar = {{"format", "ACEA"},
                            {"version", kActivationCacheVersion},
                            {"dim", activations.cols()},
                            {"count", activations.rows()},
                            {"rows", rows}};
  atomic_write(path, encode_activations(activations));
  atomic_write(sidecar_path(path), sidecar.dump(1) + "\n");
}

ActivationMatrix read_activation_cache(const std::filesystem::path& path) {
  return decode_activations(read_file(path));
}

nlohmann::json read_activation_sidecar(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(sidecar_path(path))).at("rows");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "activation cache sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
}

}  // namespace ace

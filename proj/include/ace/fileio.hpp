#ifndef ACE_FILEIO_HPP
#define ACE_FILEIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ace {

/// Writes `contents` to a sibling temp file, then renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a; stable across platforms, used for cache keys.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);

}  // namespace ace

#endif  // ACE_FILEIO_HPP

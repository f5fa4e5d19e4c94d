#ifndef ACE_ACTIVATION_CACHE_HPP
#define ACE_ACTIVATION_CACHE_HPP

#include "ace/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace ace {

/// Binary activation cache layout (all integers and floats little-endian):
///   "ACEA" | u32 version | u32 dim | u64 count | count*dim f32, row-major.
inline constexpr std::uint32_t kActivationCacheVersion = 1;

std::string encode_activations(const ActivationMatrix& activations);
ActivationMatrix decode_activations(std::string_view bytes);

/// Path of the JSON sidecar that maps row index to provenance.
std::filesystem::path sidecar_path(const std::filesystem::path& cache_file);

/// Writes the binary file and its sidecar atomically. `rows` must be a JSON
/// array with one provenance record per activation row.
void write_activation_cache(const std::filesystem::path& path, const ActivationMatrix& activations,
                            const nlohmann::json& rows);
ActivationMatrix read_activation_cache(const std::filesystem::path& path);
nlohmann::json read_activation_sidecar(const std::filesystem::path& path);

}  // namespace ace

#endif  // ACE_ACTIVATION_CACHE_HPP

#ifndef MOFLP_UTIL_HPP
#define MOFLP_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace moflp {

/// Shortest decimal form that round-trips to the same double.
std::string fmt_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// FNV-1a over bytes; stable across runs and platforms.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace moflp

#endif  // MOFLP_UTIL_HPP

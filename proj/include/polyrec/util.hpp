#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace polyrec {

// CRC-32 (zlib polynomial) helpers used for file and payload checksums.
std::uint32_t crc32_bytes(std::span<const std::byte> data, std::uint32_t seed = 0);
std::uint32_t crc32_file(const std::filesystem::path& path);

// Sum with pairwise recursion; order is fixed by the input order, so the
// result is identical no matter how the values were produced.
double pairwise_sum(std::span<const double> values);

// Shortest round-trip decimal text for a double, locale-independent.
std::string format_double(double value);

// splitmix64 mixer; used to derive per-stream RNG seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Number of threads to use; 0 means hardware concurrency. Also applies the
// setting to OpenMP/Eigen when `apply` is true.
int resolve_threads(int requested, bool apply = true);

// "model name" from /proc/cpuinfo, or "unknown" when unavailable.
std::string cpu_model();

}  // namespace polyrec

#include "polyrec/util.hpp"

#include <zlib.h>

#include <array>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "polyrec/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polyrec {

std::uint32_t crc32_bytes(std::span<const std::byte> data, std::uint32_t seed) {
    uLong crc = seed == 0 ? crc32(0L, Z_NULL, 0) : seed;
    const auto* p = reinterpret_cast<const Bytef*>(data.data());
    std::size_t remaining = data.size();
    while (remaining > 0) {
        const auto chunk = static_cast<uInt>(
            std::min<std::size_t>(remaining, std::numeric_limits<uInt>::max()));
        crc = crc32(crc, p, chunk);
        p += chunk;
        remaining -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file for checksum: " + path.string());
    }
    std::array<char, 1 << 16> buf;
    std::uint32_t crc = 0;
    while (in) {
        in.read(buf.data(), buf.size());
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got > 0) {
            crc = crc32_bytes({reinterpret_cast<const std::byte*>(buf.data()), got}, crc);
        }
    }
    return crc;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::string format_double(double value) {
    std::array<char, 64> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return {buf.data(), end};
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

int resolve_threads(int requested, bool apply) {
    int n = requested;
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
    }
    if (apply) {
#ifdef _OPENMP
        omp_set_num_threads(n);
#endif
        Eigen::setNbThreads(n);
    }
    return n;
}

std::string cpu_model() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                auto name = line.substr(colon + 1);
                const auto start = name.find_first_not_of(" \t");
                return start == std::string::npos ? name : name.substr(start);
            }
        }
    }
    return "unknown";
}

}  // namespace polyrec

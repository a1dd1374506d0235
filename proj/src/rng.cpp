#include "loyalty/rng.hpp"

namespace loyalty {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed),
      stream_(stream),
      key_(splitmix64_finalize(splitmix64_finalize(seed + kGoldenGamma) ^ (stream * kGoldenGamma + 1))) {}

std::uint64_t CounterRng::bits_at(std::uint64_t counter) const {
    return splitmix64_finalize(key_ + (counter + 1) * kGoldenGamma);
}

double CounterRng::uniform_at(std::uint64_t counter) const {
    return static_cast<double>(bits_at(counter) >> 11) * 0x1.0p-53;
}

}  // namespace loyalty

#include "cocycle/random.hpp"

#include <cmath>
#include <numbers>

namespace cocycle {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kLaneMul = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kDeriveSalt = 0x8CB92BA72F3D8DD7ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t root, std::uint64_t tag) noexcept {
    return mix64(mix64(root ^ kDeriveSalt) + tag * kGolden);
}

std::uint64_t CounterRng::bits(std::uint64_t index, std::uint64_t lane) const noexcept {
    std::uint64_t x = mix64(key_ + (index + 1) * kGolden);
    x = mix64(x ^ ((lane + 1) * kLaneMul));
    return mix64(x + key_);
}

double CounterRng::uniform(std::uint64_t index, std::uint64_t lane) const noexcept {
    // 53 random mantissa bits, shifted by half an ulp so 0 and 1 are never returned.
    return (static_cast<double>(bits(index, lane) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index, std::uint64_t lane) const noexcept {
    const double u1 = uniform(index, 2 * lane);
    const double u2 = uniform(index, 2 * lane + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cocycle

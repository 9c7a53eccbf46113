#pragma once

#include <cstdint>

namespace cocycle {

/// Counter-based generator: every draw is a pure function of (key, index, lane),
/// so any element of a stream can be produced without replaying its prefix.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }

    std::uint64_t bits(std::uint64_t index, std::uint64_t lane = 0) const noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t index, std::uint64_t lane = 0) const noexcept;

    /// Standard normal via Box-Muller on two lanes derived from `lane`.
    double normal(std::uint64_t index, std::uint64_t lane = 0) const noexcept;

private:
    std::uint64_t key_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child key for an independent sub-stream (ensemble member, grid node, ...).
std::uint64_t derive_key(std::uint64_t root, std::uint64_t tag) noexcept;

}  // namespace cocycle

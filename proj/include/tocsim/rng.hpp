#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tocsim {

/// Purposes that get their own stream inside one run.
enum class StreamTag : std::uint64_t { layout = 1, schedule = 2, channel = 3 };

/// splitmix64 finaliser; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of run `run_index` under master seed `master`.
constexpr std::uint64_t run_seed(std::uint64_t master, std::uint64_t run_index) noexcept {
    return mix64(mix64(master) ^ mix64(run_index + 0x632be59bd9b4e019ULL));
}

/// Deterministic generator for one purpose of one run. Uniform draws are
/// built from the raw 64-bit output so they do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    Rng(std::uint64_t seed, StreamTag tag) : engine_(mix64(seed ^ mix64(static_cast<std::uint64_t>(tag)))) {}

    /// Uniform in [0, 1).
    double uniform01() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi]; returns lo when the interval is degenerate.
    double uniform(double lo, double hi) noexcept { return hi > lo ? lo + (hi - lo) * uniform01() : lo; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept { return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace tocsim

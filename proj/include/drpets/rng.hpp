#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace drpets {

/// Stateless 64-bit finalizer (splitmix64). Used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a hash of a purpose label such as "reset" or "planner".
std::uint64_t purpose_id(std::string_view label) noexcept;

/**
 * Counter-based seed derivation: the result depends only on the master seed
 * and the path of identifiers, never on how much randomness any other
 * consumer has drawn. Paths are e.g. {purpose_id("sweep"), value_bits, seed_index}.
 */
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) noexcept;

/// Bit pattern of a double, for keying streams on parameter values.
std::uint64_t value_key(double v) noexcept;

/// A single-consumer random stream. Never share one between consumers; split instead.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    /// Child stream keyed on this stream's seed, independent of draws so far.
    RngStream split(std::uint64_t id) const { return RngStream(derive_seed(seed_, {id})); }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace drpets

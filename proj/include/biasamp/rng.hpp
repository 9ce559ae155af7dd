#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace biasamp {

/// 64-bit FNV-1a over a byte sequence.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Stable stream seed derived from (base seed, name, purpose). Streams for
/// distinct (name, purpose) pairs are independent, so per-occupation work can
/// run in any order without changing results.
std::uint64_t derive_seed(std::uint64_t base, std::string_view name, std::string_view purpose);

/// mt19937_64 with hand-rolled bounded/real draws. Draw sequences depend only
/// on the seed, not on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound); bound must be positive. Rejection
    /// sampling keeps the distribution exactly uniform.
    std::size_t index(std::size_t bound);

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace biasamp

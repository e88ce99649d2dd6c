#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace plap {

/// Deterministic random source. The engine is std::mt19937_64 seeded through
/// std::seed_seq{seed_lo, seed_hi, stream_lo, stream_hi}; both are fully
/// specified by the C++ standard. Uniform and normal variates are derived
/// here rather than through <random> distributions, whose output is
/// implementation-defined, so streams replay across toolchains.
class Rng {
public:
    static constexpr std::string_view algorithm =
        "mt19937_64/seed_seq(seed,stream); u=(x>>11)*2^-53; normal=Box-Muller";

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);      // [lo, hi)
    double normal();                           // standard normal
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace plap

#ifndef CHAPLYGIN_RNG_HPP
#define CHAPLYGIN_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace chaplygin {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output block is a
// pure function of (counter, key), which is what makes per-path streams
// reproducible under any scheduling order.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Uniform double in (0, 1] from 64 random bits.
double uniform_open_closed(std::uint32_t hi, std::uint32_t lo);
/// Uniform double in [0, 1) from 64 random bits.
double uniform_closed_open(std::uint32_t hi, std::uint32_t lo);

/// Fills `out` with standard normal variates for (seed, stream, step). The
/// i-th variate depends only on (seed, stream, step, i).
void gaussian_block(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
                    std::span<double> out);

/// Sequential counter-based generator. Satisfies UniformRandomBitGenerator
/// and adds platform-stable uniform/normal draws (no std distributions,
/// whose output is implementation-defined).
class StreamRng {
public:
    using result_type = std::uint32_t;

    explicit StreamRng(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();
    double uniform();
    double normal();

    /// Independent child stream, keyed by this generator's seed.
    StreamRng split(std::uint64_t child) const;

    std::uint64_t seed() const { return seed_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxCounter buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace chaplygin

#endif  // CHAPLYGIN_RNG_HPP

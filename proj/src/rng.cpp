#include "chaplygin/rng.hpp"

#include <cmath>
#include <numbers>

namespace chaplygin {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline PhiloxCounter round(const PhiloxCounter& c, const PhiloxKey& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline PhiloxKey key_of(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        ctr = round(ctr, key);
    }
    return ctr;
}

double uniform_open_closed(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * kTwoPow53Inv;
}

double uniform_closed_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * kTwoPow53Inv;
}

void gaussian_block(std::uint64_t seed, std::uint64_t stream, std::uint32_t step,
                    std::span<double> out) {
    const PhiloxKey key = key_of(seed);
    const std::size_t count = out.size();
    for (std::size_t i = 0, block = 0; i < count; i += 2, ++block) {
        const PhiloxCounter ctr{static_cast<std::uint32_t>(block), step,
                                static_cast<std::uint32_t>(stream),
                                static_cast<std::uint32_t>(stream >> 32)};
        const PhiloxCounter r = philox4x32_10(ctr, key);
        // Box-Muller on one 128-bit block: two normals.
        const double u1 = uniform_open_closed(r[0], r[1]);
        const double u2 = uniform_closed_open(r[2], r[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        out[i] = rad * std::cos(ang);
        if (i + 1 < count) out[i + 1] = rad * std::sin(ang);
    }
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void StreamRng::refill() {
    const PhiloxCounter ctr{static_cast<std::uint32_t>(block_),
                            static_cast<std::uint32_t>(block_ >> 32),
                            static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(stream_ >> 32)};
    // Distinct key lane from gaussian_block so the two never share outputs.
    buf_ = philox4x32_10(ctr, key_of(mix64(seed_ ^ 0xA5A5A5A5A5A5A5A5ull)));
    ++block_;
    pos_ = 0;
}

StreamRng::result_type StreamRng::operator()() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

double StreamRng::uniform() {
    const std::uint32_t hi = (*this)();
    const std::uint32_t lo = (*this)();
    return uniform_closed_open(hi, lo);
}

double StreamRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const std::uint32_t a = (*this)(), b = (*this)(), c = (*this)(), d = (*this)();
    const double rad = std::sqrt(-2.0 * std::log(uniform_open_closed(a, b)));
    const double ang = 2.0 * std::numbers::pi * uniform_closed_open(c, d);
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

StreamRng StreamRng::split(std::uint64_t child) const {
    return StreamRng(mix64(seed_ + mix64(stream_ + 1)), child);
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace chaplygin

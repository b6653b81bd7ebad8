// Counter-based random number generator for reproducible Monte-Carlo streams.
#pragma once

#include <cmath>
#include <cstdint>

namespace polarnn {

// 64-bit finalizer of the splitmix64 generator (Steele/Lea/Flood 2014).
inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Counter-based stream generator. Output i of stream (seed, stream_id) is
//
//   mix64(key + (i + 1) * 0x9e3779b97f4a7c15)   with
//   key = mix64(seed ^ mix64(stream_id ^ 0xda3e39cb94b95bdbULL))
//
// so two streams are independent functions of the counter and any
// (seed, stream_id, i) triple can be reproduced in another language from
// this formula alone. Gaussian variates use the Box-Muller transform on
// consecutive counter outputs.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(mix64(seed ^ mix64(stream_id ^ 0xda3e39cb94b95bdbULL))) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform in (0, 1]: 53-bit mantissa, never zero (safe under log()).
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform in [0, 1).
    double next_unit_co() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool next_bit() { return (next_u64() >> 63) != 0; }

    // Standard normal via Box-Muller; the paired variate is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit_co();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stream-id namespaces so that independent parts of a run never collide.
namespace stream {
inline constexpr std::uint64_t make(std::uint64_t kind, std::uint64_t index) {
    return (kind << 56) | index;
}
inline constexpr std::uint64_t kTrain = 1;
inline constexpr std::uint64_t kTest = 2;
inline constexpr std::uint64_t kValidation = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kSweep = 5;
inline constexpr std::uint64_t kInstance = 6;
}  // namespace stream

}  // namespace polarnn

// Closed-form operation and memory accounting per decoder configuration.
//
// Counts cover the message-update arithmetic of one decoded frame:
// 2 additions per butterfly per pass (2TN log N total), one scaling
// multiply per weighted update (2TN log N), and q-1 extra additions per
// scaling when the multiply is realized by shift-add. Memory is the
// weight storage: 32-bit floats, or c-bit codebook indices when
// quantized (the 2^c * q-bit codebook table is excluded here and
// reported by memory_footprint separately).
#pragma once

#include <cstdint>
#include <stdexcept>

#include "polarnn/polar_code.hpp"
#include "polarnn/weights.hpp"

namespace polarnn {

struct ComplexityReport {
    std::uint64_t additions = 0;
    std::uint64_t multiplications = 0;
    std::uint64_t memory_bits = 0;
};

inline ComplexityReport complexity_report(WeightMode mode, bool quantized, int T, int N, int q = 0,
                                          int c = 0) {
    if (T < 1) throw std::invalid_argument("complexity_report: T must be >= 1");
    const auto logN = static_cast<std::uint64_t>(log2_exact(N));
    const std::uint64_t base = 2ull * T * N * logN;

    ComplexityReport rep;
    switch (mode) {
        case WeightMode::unweighted:
            rep.additions = base;
            return rep;
        case WeightMode::per_iteration:
            if (quantized) {
                if (q < 1 || c < 1) throw std::invalid_argument("quantized report needs q and c");
                rep.additions = base * q;
                rep.memory_bits = 2ull * c * T * N * logN;
            } else {
                rep.additions = base;
                rep.multiplications = base;
                rep.memory_bits = 64ull * T * N * logN;
            }
            return rep;
        case WeightMode::shared:
            if (quantized) {
                if (q < 1 || c < 1) throw std::invalid_argument("quantized report needs q and c");
                rep.additions = base * q;
                rep.memory_bits = 2ull * c * N * logN;
            } else {
                rep.additions = base;
                rep.multiplications = base;
                rep.memory_bits = 64ull * N * logN;
            }
            return rep;
    }
    throw std::logic_error("bad WeightMode");
}

}  // namespace polarnn

// Two-stage weight quantization: q-bit fixed point (1 integer bit,
// q-1 fractional bits, unsigned) followed by a frequency codebook of
// 2^c values, plus the multiplier-free shift-add product.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarnn/weights.hpp"

namespace polarnn {

struct QuantConfig {
    int q = 4;
    int c = 3;

    void validate() const {
        if (q < 2 || q > 16) throw std::invalid_argument("quantization bits q must lie in [2, 16]");
        if (c < 1 || c > q) throw std::invalid_argument("codebook bits c must lie in [1, q]");
    }
};

struct Codebook {
    std::vector<double> values;  // distinct, sorted ascending, on the q-bit grid
    int q = 0;
};

inline double quant_step(int q) { return std::ldexp(1.0, 1 - q); }
inline double quant_max(int q) { return 2.0 - quant_step(q); }

// Round w to the nearest multiple of 2^-(q-1) (half-to-even), clipped to
// the unsigned grid [0, 2 - 2^-(q-1)].
inline double quantize_fixed(double w, int q) {
    if (q < 2) throw std::invalid_argument("quantize_fixed requires q >= 2");
    if (!std::isfinite(w)) throw std::invalid_argument("quantize_fixed requires a finite weight");
    const double step = quant_step(q);
    const double kmax = std::ldexp(1.0, q) - 1.0;
    const double r = w / step;  // exact: step is a power of two
    if (r <= 0.0) return 0.0;
    if (r >= kmax) return kmax * step;
    double k = std::floor(r);
    const double frac = r - k;
    if (frac > 0.5 || (frac == 0.5 && std::fmod(k, 2.0) != 0.0)) k += 1.0;
    return k * step;
}

// The 2^c most frequent distinct grid values; frequency ties prefer the
// smaller value. Fewer distinct inputs than 2^c yields a smaller book.
inline Codebook build_codebook(std::span<const double> quantized_weights, int c, int q) {
    if (quantized_weights.empty()) throw std::invalid_argument("build_codebook: empty input");
    if (c < 1) throw std::invalid_argument("build_codebook: c must be >= 1");
    const double step = quant_step(q);
    std::map<std::int64_t, std::size_t> freq;
    for (double w : quantized_weights) {
        const double r = w / step;
        const double k = std::floor(r);
        if (k != r || k < 0.0 || k > std::ldexp(1.0, q) - 1.0) {
            throw std::invalid_argument("build_codebook: weight off the q-bit grid");
        }
        ++freq[static_cast<std::int64_t>(k)];
    }
    std::vector<std::pair<std::int64_t, std::size_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t size = std::min<std::size_t>(entries.size(), std::size_t{1} << c);
    Codebook book;
    book.q = q;
    book.values.reserve(size);
    for (std::size_t i = 0; i < size; ++i) book.values.push_back(entries[i].first * step);
    std::sort(book.values.begin(), book.values.end());
    return book;
}

// Nearest codebook value; equidistant ties pick the smaller value.
inline std::size_t nearest_codebook_index(const Codebook& book, double w) {
    const auto& v = book.values;
    const auto it = std::lower_bound(v.begin(), v.end(), w);
    if (it == v.begin()) return 0;
    if (it == v.end()) return v.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - v.begin());
    const std::size_t lo = hi - 1;
    const double d_lo = w - v[lo];
    const double d_hi = v[hi] - w;
    return d_hi < d_lo ? hi : lo;
}

struct CodebookApplication {
    std::vector<std::uint16_t> indices;
    std::vector<double> values;
};

inline CodebookApplication apply_codebook(std::span<const double> weights, const Codebook& book) {
    if (book.values.empty()) throw std::invalid_argument("apply_codebook: empty codebook");
    CodebookApplication out;
    out.indices.reserve(weights.size());
    out.values.reserve(weights.size());
    for (double w : weights) {
        const std::size_t idx = nearest_codebook_index(book, w);
        out.indices.push_back(static_cast<std::uint16_t>(idx));
        out.values.push_back(book.values[idx]);
    }
    return out;
}

// llr * weight evaluated as a sum of binary-shifted copies of llr, one per
// set bit of the weight's q-bit integer representation. The accumulation
// runs on the integer mantissa, so the result is bit-identical to the
// direct product with the dequantized weight. Reports the number of
// additions performed (popcount - 1) through `additions` when non-null.
inline double shift_add_multiply(double llr, double weight, int q, std::uint64_t* additions = nullptr) {
    if (q < 2 || q > 16) throw std::invalid_argument("shift_add_multiply: q out of range");
    const double r = weight * std::ldexp(1.0, q - 1);
    const double kd = std::floor(r);
    if (kd != r || kd < 0.0 || kd > std::ldexp(1.0, q) - 1.0) {
        throw std::invalid_argument("shift_add_multiply: weight off the q-bit grid");
    }
    const auto k = static_cast<std::uint32_t>(kd);
    if (k == 0) return llr * 0.0;

    int exp = 0;
    const double m = std::frexp(std::fabs(llr), &exp);       // |llr| = m * 2^exp, m in [0.5, 1)
    const auto mant = static_cast<std::uint64_t>(std::ldexp(m, 53));  // exact 53-bit integer

    unsigned __int128 acc = 0;
    std::uint64_t adds = 0;
    bool first = true;
    for (int b = 0; b < q; ++b) {
        if ((k >> b) & 1u) {
            acc += static_cast<unsigned __int128>(mant) << b;
            if (!first) ++adds;
            first = false;
        }
    }
    if (additions) *additions += adds;
    const double magnitude = std::ldexp(static_cast<double>(acc), exp - 53 - (q - 1));
    return std::signbit(llr) ? -magnitude : magnitude;
}

inline std::uint64_t shift_add_count(double weight, int q) {
    const auto k = static_cast<std::uint32_t>(weight * std::ldexp(1.0, q - 1));
    const int pc = std::popcount(k);
    return pc > 1 ? static_cast<std::uint64_t>(pc - 1) : 0;
}

// Full pipeline over a weight set: q-bit rounding of every weight, one
// codebook over the pooled alpha+beta population, then codebook mapping.
inline WeightSet quantize_weights(const WeightSet& ws, const QuantConfig& qc) {
    qc.validate();
    if (ws.mode == WeightMode::unweighted) {
        throw std::invalid_argument("quantize_weights: unweighted set has no weights");
    }
    WeightSet out = ws;
    for (double& w : out.alpha) w = quantize_fixed(w, qc.q);
    for (double& w : out.beta) w = quantize_fixed(w, qc.q);

    std::vector<double> pooled;
    pooled.reserve(out.alpha.size() + out.beta.size());
    pooled.insert(pooled.end(), out.alpha.begin(), out.alpha.end());
    pooled.insert(pooled.end(), out.beta.begin(), out.beta.end());
    const Codebook book = build_codebook(pooled, qc.c, qc.q);

    CodebookApplication a = apply_codebook(out.alpha, book);
    CodebookApplication b = apply_codebook(out.beta, book);
    out.alpha = std::move(a.values);
    out.alpha_idx = std::move(a.indices);
    out.beta = std::move(b.values);
    out.beta_idx = std::move(b.indices);
    out.codebook = book.values;
    out.quantized = true;
    out.q = qc.q;
    out.c = qc.c;
    return out;
}

struct MemoryFootprint {
    std::uint64_t weight_bits = 0;
    std::uint64_t codebook_bits = 0;  // 2^c entries of q bits, reported separately
};

inline MemoryFootprint memory_footprint(const WeightSet& ws) {
    MemoryFootprint fp;
    if (ws.mode == WeightMode::unweighted) return fp;
    const std::uint64_t count = ws.alpha.size() + ws.beta.size();
    if (!ws.quantized) {
        fp.weight_bits = 32 * count;
    } else if (!ws.codebook.empty()) {
        fp.weight_bits = static_cast<std::uint64_t>(ws.c) * count;
        fp.codebook_bits = (std::uint64_t{1} << ws.c) * ws.q;
    } else {
        fp.weight_bits = static_cast<std::uint64_t>(ws.q) * count;
    }
    return fp;
}

}  // namespace polarnn

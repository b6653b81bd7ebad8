// BPSK modulation, AWGN, and channel LLRs.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarnn/rng.hpp"

namespace polarnn {

using LlrVector = std::vector<double>;

struct ChannelConfig {
    double snr_db = 0.0;
    double rate = 0.5;        // used for the Eb/N0 -> sigma conversion
    std::uint64_t seed = 1;
    bool snr_is_esn0 = false; // drop the rate factor (Es/N0 interpretation)

    double sigma() const;
};

// Noise standard deviation per real dimension for BPSK at Eb/N0 = snr_db:
// sigma = sqrt(1 / (2 * rate * 10^(snr_db/10))).
inline double sigma_from_snr(double snr_db, double rate) {
    if (!(rate > 0.0) || rate > 1.0) {
        throw std::invalid_argument("rate must lie in (0, 1]");
    }
    return std::sqrt(1.0 / (2.0 * rate * std::pow(10.0, snr_db / 10.0)));
}

inline double ChannelConfig::sigma() const {
    return sigma_from_snr(snr_db, snr_is_esn0 ? 1.0 : rate);
}

// bit 0 -> +1.0, bit 1 -> -1.0
inline std::vector<double> modulate_bpsk(std::span<const std::uint8_t> codeword) {
    std::vector<double> symbols(codeword.size());
    for (std::size_t i = 0; i < codeword.size(); ++i) {
        symbols[i] = codeword[i] ? -1.0 : 1.0;
    }
    return symbols;
}

inline void awgn_inplace(std::span<double> symbols, double sigma, CounterRng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    if (sigma == 0.0) return;
    for (double& s : symbols) {
        s += sigma * rng.next_gaussian();
    }
}

inline std::vector<double> awgn(std::span<const double> symbols, double sigma, CounterRng& rng) {
    std::vector<double> out(symbols.begin(), symbols.end());
    awgn_inplace(out, sigma, rng);
    return out;
}

// LLR_j = 2*y_j/sigma^2; positive favors bit 0.
inline LlrVector channel_llr(std::span<const double> received, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("channel_llr requires sigma > 0");
    }
    const double scale = 2.0 / (sigma * sigma);
    LlrVector llr(received.size());
    for (std::size_t i = 0; i < received.size(); ++i) {
        llr[i] = scale * received[i];
    }
    return llr;
}

}  // namespace polarnn

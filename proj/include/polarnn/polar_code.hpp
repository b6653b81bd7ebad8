// Polar code construction and encoding.
//
// Conventions used throughout the library:
//   * u-domain: the N encoder-input positions (information + frozen bits).
//   * v = u * F^{(x)n} is produced by the butterfly network with pitches
//     N/2, N/4, ..., 1; the transmitted codeword is x_j = v_{bitrev(j)},
//     i.e. x = u * F^{(x)n} * B_N.
//   * info_set / frozen_set index the u-domain and are kept sorted.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace polarnn {

using BitVector = std::vector<std::uint8_t>;

struct PolarCode {
    int n = 0;  // log2(N)
    int N = 0;
    int K = 0;
    std::vector<int> info_set;    // sorted, |info_set| = K
    std::vector<int> frozen_set;  // sorted, |frozen_set| = N - K
    std::vector<std::uint8_t> is_frozen;  // N-entry lookup table

    double rate() const { return static_cast<double>(K) / N; }
};

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

inline int log2_exact(int N) {
    if (!is_power_of_two(N)) {
        throw std::invalid_argument("block length must be a power of two, got " + std::to_string(N));
    }
    int n = 0;
    while ((1 << n) < N) ++n;
    return n;
}

// Permutation sending j to the integer whose n-bit representation is
// j's reversed. An involution.
inline std::vector<int> bit_reversal_permutation(int N) {
    const int n = log2_exact(N);
    std::vector<int> perm(N);
    for (int j = 0; j < N; ++j) {
        int r = 0;
        for (int b = 0; b < n; ++b) {
            r = (r << 1) | ((j >> b) & 1);
        }
        perm[j] = r;
    }
    return perm;
}

// Bhattacharyya reliability construction for BPSK/AWGN at design_snr_db.
// z0 = exp(-1/sigma^2) with sigma from the Eb/N0 convention at rate K/N;
// the recursion z -> {2z - z^2, z^2} follows the index bits MSB-first.
// The N-K indices with the largest parameter are frozen, ties broken by
// freezing the smaller index first.
inline PolarCode construct_code(int N, int K, double design_snr_db = 0.0) {
    const int n = log2_exact(N);
    if (K < 1 || K > N) {
        throw std::invalid_argument("information length K must satisfy 1 <= K <= N");
    }
    const double rate = static_cast<double>(K) / N;
    const double sigma_sq = 1.0 / (2.0 * rate * std::pow(10.0, design_snr_db / 10.0));
    const double z0 = std::exp(-1.0 / sigma_sq);

    std::vector<double> z{z0};
    z.reserve(N);
    for (int level = 0; level < n; ++level) {
        std::vector<double> next(z.size() * 2);
        for (std::size_t i = 0; i < z.size(); ++i) {
            next[2 * i] = 2.0 * z[i] - z[i] * z[i];
            next[2 * i + 1] = z[i] * z[i];
        }
        z = std::move(next);
    }

    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (z[a] != z[b]) return z[a] > z[b];
        return a < b;
    });

    PolarCode code;
    code.n = n;
    code.N = N;
    code.K = K;
    code.frozen_set.assign(order.begin(), order.begin() + (N - K));
    code.info_set.assign(order.begin() + (N - K), order.end());
    std::sort(code.frozen_set.begin(), code.frozen_set.end());
    std::sort(code.info_set.begin(), code.info_set.end());
    code.is_frozen.assign(N, 0);
    for (int f : code.frozen_set) code.is_frozen[f] = 1;
    return code;
}

// Scatter a K-bit message into the u-domain (zeros on frozen positions).
inline BitVector expand_message(const PolarCode& code, std::span<const std::uint8_t> message) {
    if (static_cast<int>(message.size()) != code.K) {
        throw std::invalid_argument("message length must equal K");
    }
    BitVector u(code.N, 0);
    for (int i = 0; i < code.K; ++i) {
        u[code.info_set[i]] = message[i] & 1;
    }
    return u;
}

// In-place butterfly transform v = u * F^{(x)n}.
inline void polar_transform_inplace(BitVector& u) {
    const int N = static_cast<int>(u.size());
    for (int h = N / 2; h >= 1; h /= 2) {
        for (int base = 0; base < N; base += 2 * h) {
            for (int j = base; j < base + h; ++j) {
                u[j] ^= u[j + h];
            }
        }
    }
}

// x = u * F^{(x)n} * B_N via the O(N log N) butterfly network.
inline BitVector encode(const PolarCode& code, std::span<const std::uint8_t> message) {
    BitVector v = expand_message(code, message);
    polar_transform_inplace(v);
    const std::vector<int> rev = bit_reversal_permutation(code.N);
    BitVector x(code.N);
    for (int j = 0; j < code.N; ++j) x[j] = v[rev[j]];
    return x;
}

// Dense G_N = F^{(x)n} B_N, built by Kronecker powers (independent of the
// butterfly encoder; kept as the algebraic reference).
inline std::vector<BitVector> generator_matrix(int N) {
    const int n = log2_exact(N);
    std::vector<BitVector> f{{1}};
    for (int level = 0; level < n; ++level) {
        const int m = 1 << level;
        std::vector<BitVector> next(2 * m, BitVector(2 * m, 0));
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                if (!f[r][c]) continue;
                next[r][c] = 1;          // F[0][0]
                next[r + m][c] = 1;      // F[1][0]
                next[r + m][c + m] = 1;  // F[1][1]
            }
        }
        f = std::move(next);
    }
    const std::vector<int> rev = bit_reversal_permutation(N);
    std::vector<BitVector> g(N, BitVector(N, 0));
    for (int r = 0; r < N; ++r) {
        for (int j = 0; j < N; ++j) {
            g[r][j] = f[r][rev[j]];
        }
    }
    return g;
}

inline nlohmann::json code_to_json(const PolarCode& code) {
    return nlohmann::json{{"n", code.n}, {"N", code.N}, {"K", code.K}, {"frozen_set", code.frozen_set}};
}

inline PolarCode code_from_json(const nlohmann::json& j) {
    const int N = j.at("N").get<int>();
    const int K = j.at("K").get<int>();
    PolarCode code;
    code.n = log2_exact(N);
    if (j.contains("n") && j.at("n").get<int>() != code.n) {
        throw std::invalid_argument("code JSON: field n inconsistent with N");
    }
    code.N = N;
    code.K = K;
    code.frozen_set = j.at("frozen_set").get<std::vector<int>>();
    std::sort(code.frozen_set.begin(), code.frozen_set.end());
    if (static_cast<int>(code.frozen_set.size()) != N - K) {
        throw std::invalid_argument("code JSON: |frozen_set| must equal N - K");
    }
    code.is_frozen.assign(N, 0);
    for (int f : code.frozen_set) {
        if (f < 0 || f >= N) throw std::invalid_argument("code JSON: frozen index out of range");
        if (code.is_frozen[f]) throw std::invalid_argument("code JSON: duplicate frozen index");
        code.is_frozen[f] = 1;
    }
    for (int i = 0; i < N; ++i) {
        if (!code.is_frozen[i]) code.info_set.push_back(i);
    }
    return code;
}

}  // namespace polarnn

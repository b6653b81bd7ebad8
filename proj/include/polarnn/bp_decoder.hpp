// Belief-propagation decoding over the polar factor graph.
//
// The message grid has n+1 rows of N nodes. Row 0 is the encoder-input
// (u-domain) side, row n faces the channel and is kept in butterfly
// ("graph") order: graph node j carries v_j = x_{bitrev(j)}. Stage s
// (0-based, s = 0..n-1) connects rows s and s+1 with butterflies pairing
// node j with node j + N/2^(s+1) inside blocks of size N/2^s.
//
// One iteration is a round trip: an R-pass sweeping stages left to right,
// then an L-pass sweeping right to left. With h = N >> (s+1) and weights
// w = 1 this is plain min-sum:
//
//   R-pass:  R[s+1][j]   = clamp( wb[j]  * g(R[s][j], L[s+1][j+h] + R[s][j+h]) )
//            R[s+1][j+h] = clamp( wb[j+h]* g(R[s][j], L[s+1][j]) + R[s][j+h] )
//   L-pass:  L[s][j]     = clamp( wa[j]  * g(L[s+1][j], L[s+1][j+h] + R[s][j+h]) )
//            L[s][j+h]   = clamp( wa[j+h]* g(R[s][j], L[s+1][j]) + L[s+1][j+h] )
//
// The weight scales only the g term of each update. The decision statistic
// for node j is L[0][j] + R[0][j] (the prior R[0][j] is zero on information
// positions, +frozen_llr on frozen ones).
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarnn/polar_code.hpp"
#include "polarnn/quantize.hpp"
#include "polarnn/weights.hpp"

namespace polarnn {

struct DecoderConfig {
    int T = 5;
    double llr_clamp = 30.0;
    double frozen_llr = 30.0;

    void validate() const {
        if (T < 1) throw std::invalid_argument("iteration count T must be >= 1");
        if (!(llr_clamp > 0.0)) throw std::invalid_argument("llr_clamp must be positive");
        if (!(frozen_llr > 0.0) || frozen_llr > llr_clamp) {
            throw std::invalid_argument("frozen_llr must satisfy 0 < frozen_llr <= llr_clamp");
        }
    }
};

struct MessageGrid {
    int n = 0;
    int N = 0;
    std::vector<double> L;  // (n+1) x N, row-major
    std::vector<double> R;

    double* L_row(int row) { return L.data() + static_cast<std::size_t>(row) * N; }
    double* R_row(int row) { return R.data() + static_cast<std::size_t>(row) * N; }
    const double* L_row(int row) const { return L.data() + static_cast<std::size_t>(row) * N; }
    const double* R_row(int row) const { return R.data() + static_cast<std::size_t>(row) * N; }
};

struct OpCounters {
    std::uint64_t additions = 0;
    std::uint64_t multiplications = 0;
};

// Min-sum check update with sign(0) = 0, so g(x, y) = 0 whenever an
// argument is zero.
inline double g_minsum(double x, double y) {
    const double sx = (x > 0.0) - (x < 0.0);
    const double sy = (y > 0.0) - (y < 0.0);
    return sx * sy * std::min(std::fabs(x), std::fabs(y));
}

inline double clamp_mag(double v, double m) {
    if (v > m) return m;
    if (v < -m) return -m;
    return v;
}

// Channel LLRs must already be in graph order (see decode for the
// codeword-order entry point).
inline MessageGrid init_messages(std::span<const double> channel_llrs, const PolarCode& code,
                                 const DecoderConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(channel_llrs.size()) != code.N) {
        throw std::invalid_argument("channel LLR vector length must equal N");
    }
    MessageGrid grid;
    grid.n = code.n;
    grid.N = code.N;
    grid.L.assign(static_cast<std::size_t>(code.n + 1) * code.N, 0.0);
    grid.R.assign(static_cast<std::size_t>(code.n + 1) * code.N, 0.0);
    double* prior = grid.R_row(0);
    for (int f : code.frozen_set) prior[f] = cfg.frozen_llr;
    double* chan = grid.L_row(code.n);
    for (int j = 0; j < code.N; ++j) chan[j] = clamp_mag(channel_llrs[j], cfg.llr_clamp);
    return grid;
}

namespace detail {

// R-pass: stages left to right. L rows still hold the previous
// iteration's values; R rows are rewritten in stage order.
template <bool Weighted, bool Quantized>
void r_pass_impl(MessageGrid& grid, const WeightSet& ws, const DecoderConfig& cfg, int t,
                 OpCounters* ops) {
    const int n = grid.n;
    const int N = grid.N;
    const double clamp = cfg.llr_clamp;
    std::uint64_t* addc = ops ? &ops->additions : nullptr;

    for (int s = 0; s < n; ++s) {
        const double* wb = Weighted ? ws.beta_row(t, s) : nullptr;
        const double* Ls1 = grid.L_row(s + 1);
        const double* Rs = grid.R_row(s);
        double* Rs1 = grid.R_row(s + 1);
        const int h = N >> (s + 1);
        for (int base = 0; base < N; base += 2 * h) {
            for (int j = base; j < base + h; ++j) {
                const int jh = j + h;
                const double g1 = g_minsum(Rs[j], Ls1[jh] + Rs[jh]);
                const double g2 = g_minsum(Rs[j], Ls1[j]);
                double o1, o2;
                if constexpr (Quantized) {
                    o1 = shift_add_multiply(g1, wb[j], ws.q, addc);
                    o2 = shift_add_multiply(g2, wb[jh], ws.q, addc) + Rs[jh];
                } else if constexpr (Weighted) {
                    o1 = wb[j] * g1;
                    o2 = wb[jh] * g2 + Rs[jh];
                } else {
                    o1 = g1;
                    o2 = g2 + Rs[jh];
                }
                Rs1[j] = clamp_mag(o1, clamp);
                Rs1[jh] = clamp_mag(o2, clamp);
            }
        }
        if (ops) {
            ops->additions += static_cast<std::uint64_t>(N);  // 2 adds per butterfly
            if (Weighted && !Quantized) ops->multiplications += static_cast<std::uint64_t>(N);
        }
    }
}

// L-pass: stages right to left, consuming this iteration's R rows.
template <bool Weighted, bool Quantized>
void l_pass_impl(MessageGrid& grid, const WeightSet& ws, const DecoderConfig& cfg, int t,
                 OpCounters* ops) {
    const int n = grid.n;
    const int N = grid.N;
    const double clamp = cfg.llr_clamp;
    std::uint64_t* addc = ops ? &ops->additions : nullptr;

    for (int s = n - 1; s >= 0; --s) {
        const double* wa = Weighted ? ws.alpha_row(t, s) : nullptr;
        const double* Ls1 = grid.L_row(s + 1);
        double* Ls = grid.L_row(s);
        const double* Rs = grid.R_row(s);
        const int h = N >> (s + 1);
        for (int base = 0; base < N; base += 2 * h) {
            for (int j = base; j < base + h; ++j) {
                const int jh = j + h;
                const double g1 = g_minsum(Ls1[j], Ls1[jh] + Rs[jh]);
                const double g2 = g_minsum(Rs[j], Ls1[j]);
                double o1, o2;
                if constexpr (Quantized) {
                    o1 = shift_add_multiply(g1, wa[j], ws.q, addc);
                    o2 = shift_add_multiply(g2, wa[jh], ws.q, addc) + Ls1[jh];
                } else if constexpr (Weighted) {
                    o1 = wa[j] * g1;
                    o2 = wa[jh] * g2 + Ls1[jh];
                } else {
                    o1 = g1;
                    o2 = g2 + Ls1[jh];
                }
                Ls[j] = clamp_mag(o1, clamp);
                Ls[jh] = clamp_mag(o2, clamp);
            }
        }
        if (ops) {
            ops->additions += static_cast<std::uint64_t>(N);
            if (Weighted && !Quantized) ops->multiplications += static_cast<std::uint64_t>(N);
        }
    }
}

template <bool Weighted, bool Quantized>
void bp_iteration_impl(MessageGrid& grid, const WeightSet& ws, const DecoderConfig& cfg, int t,
                       OpCounters* ops) {
    r_pass_impl<Weighted, Quantized>(grid, ws, cfg, t, ops);
    l_pass_impl<Weighted, Quantized>(grid, ws, cfg, t, ops);
}

// Runtime-dispatched single passes (used by the training forward, which
// snapshots the grid between passes).
inline void r_pass(MessageGrid& grid, const WeightSet& ws, const DecoderConfig& cfg, int t) {
    if (ws.mode == WeightMode::unweighted) r_pass_impl<false, false>(grid, ws, cfg, t, nullptr);
    else r_pass_impl<true, false>(grid, ws, cfg, t, nullptr);
}
inline void l_pass(MessageGrid& grid, const WeightSet& ws, const DecoderConfig& cfg, int t) {
    if (ws.mode == WeightMode::unweighted) l_pass_impl<false, false>(grid, ws, cfg, t, nullptr);
    else l_pass_impl<true, false>(grid, ws, cfg, t, nullptr);
}

}  // namespace detail

// One full round-trip update; t is the 1-based iteration index (selects
// the weight slab in per_iteration mode).
inline void bp_iteration(MessageGrid& grid, const WeightSet& ws, const DecoderConfig& cfg, int t,
                         OpCounters* ops = nullptr) {
    if (ws.mode == WeightMode::per_iteration && (t < 1 || t > ws.T)) {
        throw std::out_of_range("iteration index out of range for per_iteration weights");
    }
    if (ws.mode == WeightMode::unweighted) {
        detail::bp_iteration_impl<false, false>(grid, ws, cfg, t, ops);
    } else if (ws.quantized) {
        detail::bp_iteration_impl<true, true>(grid, ws, cfg, t, ops);
    } else {
        detail::bp_iteration_impl<true, false>(grid, ws, cfg, t, ops);
    }
}

// Channel LLRs arrive in codeword order; the graph's channel row wants
// v-order, i.e. graph[j] = llr[bitrev(j)].
inline std::vector<double> to_graph_order(std::span<const double> llrs, int N) {
    const std::vector<int> rev = bit_reversal_permutation(N);
    std::vector<double> graph(N);
    for (int j = 0; j < N; ++j) graph[j] = llrs[rev[j]];
    return graph;
}

inline MessageGrid run_bp(std::span<const double> channel_llrs, const PolarCode& code,
                          const WeightSet& ws, const DecoderConfig& cfg, OpCounters* ops = nullptr) {
    cfg.validate();
    ws.validate_for(code.N, cfg.T);
    if (static_cast<int>(channel_llrs.size()) != code.N) {
        throw std::invalid_argument("channel LLR vector length must equal N");
    }
    const std::vector<double> graph_llrs = to_graph_order(channel_llrs, code.N);
    MessageGrid grid = init_messages(graph_llrs, code, cfg);
    for (int t = 1; t <= cfg.T; ++t) {
        bp_iteration(grid, ws, cfg, t, ops);
    }
    return grid;
}

inline double decision_llr(const MessageGrid& grid, int j) {
    return grid.L_row(0)[j] + grid.R_row(0)[j];
}

// Hard decisions over all N u-domain positions.
inline BitVector hard_decisions(const MessageGrid& grid) {
    BitVector u(grid.N);
    for (int j = 0; j < grid.N; ++j) u[j] = decision_llr(grid, j) >= 0.0 ? 0 : 1;
    return u;
}

// o_j = sigmoid(-(L[0][j] + R[0][j])): o -> 1 means the bit decides 1.
inline std::vector<double> soft_output(const MessageGrid& grid) {
    std::vector<double> o(grid.N);
    for (int j = 0; j < grid.N; ++j) o[j] = 1.0 / (1.0 + std::exp(decision_llr(grid, j)));
    return o;
}

inline BitVector decode(std::span<const double> channel_llrs, const PolarCode& code,
                        const WeightSet& ws, const DecoderConfig& cfg, OpCounters* ops = nullptr) {
    const MessageGrid grid = run_bp(channel_llrs, code, ws, cfg, ops);
    const BitVector u = hard_decisions(grid);
    BitVector message(code.K);
    for (int i = 0; i < code.K; ++i) message[i] = u[code.info_set[i]];
    return message;
}

}  // namespace polarnn

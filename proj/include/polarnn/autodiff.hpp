// Reverse-mode differentiation through the unrolled decoder.
//
// The forward pass snapshots the R grid after each R-pass and the L grid
// after each L-pass; because the sweeps only ever read (a) rows already
// finalized within the current pass, (b) the opposite direction's rows
// from the current iteration, or (c) L rows from the previous iteration,
// these per-pass snapshots reconstruct every operand the backward sweep
// needs.
//
// Local rules: for out = clamp(w * g(x, y) [+ z]),
//   d out / d w = g(x, y)             (gated by the clamp),
//   d g / d x   = sign(y) * 1{|x| <= |y|}   (ties route to x),
//   d g / d y   = sign(x) * 1{|y| <  |x|},
//   clamp gate  = 1{|out| < llr_clamp}.
#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarnn/bp_decoder.hpp"

namespace polarnn {

inline constexpr double kLossEpsilon = 1e-12;

// Mean binary cross entropy over all N positions, with the soft values
// floored/capped to [eps, 1 - eps] before the logs.
inline double cross_entropy_loss(std::span<const std::uint8_t> targets, std::span<const double> soft) {
    if (targets.size() != soft.size()) {
        throw std::invalid_argument("cross_entropy_loss: length mismatch");
    }
    const std::size_t N = targets.size();
    double sum = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        double o = soft[j];
        if (o < kLossEpsilon) o = kLossEpsilon;
        if (o > 1.0 - kLossEpsilon) o = 1.0 - kLossEpsilon;
        sum += targets[j] ? std::log(o) : std::log(1.0 - o);
    }
    return -sum / static_cast<double>(N);
}

struct ForwardTrace {
    int T = 0;
    int n = 0;
    int N = 0;
    std::vector<double> L_init;  // grid after init (row n = clamped channel LLRs)
    std::vector<double> R_prior; // row 0 prior (constant through decoding)
    std::vector<double> L_hist;  // T snapshots of the L grid, one per L-pass
    std::vector<double> R_hist;  // T snapshots of the R grid, one per R-pass
    std::vector<double> soft;    // sigmoid outputs of the final iteration

    std::size_t grid_size() const { return static_cast<std::size_t>(n + 1) * N; }
    const double* L_at(int t) const { return L_hist.data() + static_cast<std::size_t>(t - 1) * grid_size(); }
    const double* R_at(int t) const { return R_hist.data() + static_cast<std::size_t>(t - 1) * grid_size(); }

    void ensure(int T_, int n_, int N_) {
        T = T_;
        n = n_;
        N = N_;
        L_init.resize(grid_size());
        R_prior.resize(N);
        L_hist.resize(grid_size() * T);
        R_hist.resize(grid_size() * T);
        soft.resize(N);
    }
};

// Forward decode recording the pass-by-pass history. Channel LLRs arrive
// in codeword order, as in decode().
inline void decode_with_trace(std::span<const double> channel_llrs, const PolarCode& code,
                              const WeightSet& ws, const DecoderConfig& cfg, ForwardTrace& trace) {
    cfg.validate();
    ws.validate_for(code.N, cfg.T);
    if (static_cast<int>(channel_llrs.size()) != code.N) {
        throw std::invalid_argument("channel LLR vector length must equal N");
    }
    trace.ensure(cfg.T, code.n, code.N);

    const std::vector<double> graph_llrs = to_graph_order(channel_llrs, code.N);
    MessageGrid grid = init_messages(graph_llrs, code, cfg);
    const std::size_t gs = trace.grid_size();
    std::memcpy(trace.L_init.data(), grid.L.data(), gs * sizeof(double));
    std::memcpy(trace.R_prior.data(), grid.R_row(0), code.N * sizeof(double));

    for (int t = 1; t <= cfg.T; ++t) {
        detail::r_pass(grid, ws, cfg, t);
        std::memcpy(trace.R_hist.data() + (t - 1) * gs, grid.R.data(), gs * sizeof(double));
        detail::l_pass(grid, ws, cfg, t);
        std::memcpy(trace.L_hist.data() + (t - 1) * gs, grid.L.data(), gs * sizeof(double));
    }
    const auto o = soft_output(grid);
    std::memcpy(trace.soft.data(), o.data(), code.N * sizeof(double));
}

// Forward-only loss evaluation (the finite-difference target).
inline double decode_loss(std::span<const double> channel_llrs, const PolarCode& code,
                          const WeightSet& ws, const DecoderConfig& cfg,
                          std::span<const std::uint8_t> targets_u) {
    const MessageGrid grid = run_bp(channel_llrs, code, ws, cfg);
    return cross_entropy_loss(targets_u, soft_output(grid));
}

struct GradientSet {
    std::vector<double> d_alpha;
    std::vector<double> d_beta;

    void ensure_like(const WeightSet& ws) {
        d_alpha.assign(ws.alpha.size(), 0.0);
        d_beta.assign(ws.beta.size(), 0.0);
    }
};

namespace detail {

inline void g_partials(double x, double y, double& dgdx, double& dgdy) {
    const double ax = std::fabs(x);
    const double ay = std::fabs(y);
    if (ax <= ay) {
        dgdx = (y > 0.0) - (y < 0.0);
        dgdy = 0.0;
    } else {
        dgdx = 0.0;
        dgdy = (x > 0.0) - (x < 0.0);
    }
}

}  // namespace detail

struct BackwardWorkspace {
    std::vector<double> aL;
    std::vector<double> aR;
};

// Accumulates d loss / d alpha and d loss / d beta into `grads` (shared
// mode sums over all T uses of each weight). Returns the frame loss.
inline double backward_accumulate(const ForwardTrace& trace, const WeightSet& ws,
                                  const DecoderConfig& cfg, std::span<const std::uint8_t> targets_u,
                                  GradientSet& grads, BackwardWorkspace& wk) {
    if (ws.mode == WeightMode::unweighted) {
        throw std::invalid_argument("backward: unweighted decoder has no trainable weights");
    }
    const int n = trace.n;
    const int N = trace.N;
    const int T = trace.T;
    if (static_cast<int>(targets_u.size()) != N) {
        throw std::invalid_argument("backward: target vector must have length N");
    }
    if (trace.L_hist.empty() || trace.R_hist.empty()) {
        throw std::invalid_argument("backward: forward trace is empty");
    }
    if (grads.d_alpha.size() != ws.alpha.size() || grads.d_beta.size() != ws.beta.size()) {
        throw std::invalid_argument("backward: gradient shape mismatch");
    }
    const double clamp = cfg.llr_clamp;
    const std::size_t gs = trace.grid_size();
    wk.aL.assign(gs, 0.0);
    wk.aR.assign(gs, 0.0);
    double* aL = wk.aL.data();
    double* aR = wk.aR.data();

    // Seed: decision statistic d_j = L_final[0][j] + prior_j, o = sigmoid(-d),
    // d loss / d d_j = (u_j - o_j) / N.
    const double inv_n = 1.0 / static_cast<double>(N);
    for (int j = 0; j < N; ++j) {
        aL[j] = (static_cast<double>(targets_u[j]) - trace.soft[j]) * inv_n;
    }
    const double loss = cross_entropy_loss(targets_u, trace.soft);

    // Weight gradient slots for (t, s): shared mode collapses the t axis.
    const auto slot = [&](int t, int s) -> std::size_t {
        const std::size_t base = static_cast<std::size_t>(s) * N;
        return ws.mode == WeightMode::per_iteration
                   ? (static_cast<std::size_t>(t - 1) * n) * N + base
                   : base;
    };

    for (int t = T; t >= 1; --t) {
        const double* Lt = trace.L_at(t);
        const double* Rt = trace.R_at(t);
        const double* Lprev = (t > 1) ? trace.L_at(t - 1) : trace.L_init.data();

        // Reverse of the L-pass (forward swept s = n-1 .. 0).
        for (int s = 0; s < n; ++s) {
            const double* wa = ws.alpha_row(t, s);
            double* ga = grads.d_alpha.data() + slot(t, s);
            const double* Ls = Lt + static_cast<std::size_t>(s) * N;
            const double* Ls1 = Lt + static_cast<std::size_t>(s + 1) * N;
            const double* Rs = Rt + static_cast<std::size_t>(s) * N;
            double* aLs = aL + static_cast<std::size_t>(s) * N;
            double* aLs1 = aL + static_cast<std::size_t>(s + 1) * N;
            double* aRs = aR + static_cast<std::size_t>(s) * N;
            const int h = N >> (s + 1);
            for (int base = 0; base < N; base += 2 * h) {
                for (int j = base; j < base + h; ++j) {
                    const int jh = j + h;
                    // out1 = clamp(wa[j] * g(Ls1[j], Ls1[jh] + Rs[jh]))
                    double a1 = aLs[j];
                    aLs[j] = 0.0;
                    if (a1 != 0.0 && std::fabs(Ls[j]) < clamp) {
                        const double x = Ls1[j];
                        const double y = Ls1[jh] + Rs[jh];
                        ga[j] += g_minsum(x, y) * a1;
                        const double gg = wa[j] * a1;
                        double dgdx, dgdy;
                        detail::g_partials(x, y, dgdx, dgdy);
                        aLs1[j] += dgdx * gg;
                        aLs1[jh] += dgdy * gg;
                        aRs[jh] += dgdy * gg;
                    }
                    // out2 = clamp(wa[jh] * g(Rs[j], Ls1[j]) + Ls1[jh])
                    double a2 = aLs[jh];
                    aLs[jh] = 0.0;
                    if (a2 != 0.0 && std::fabs(Ls[jh]) < clamp) {
                        const double x = Rs[j];
                        const double y = Ls1[j];
                        ga[jh] += g_minsum(x, y) * a2;
                        const double gg = wa[jh] * a2;
                        double dgdx, dgdy;
                        detail::g_partials(x, y, dgdx, dgdy);
                        aRs[j] += dgdx * gg;
                        aLs1[j] += dgdy * gg;
                        aLs1[jh] += a2;
                    }
                }
            }
        }

        // Reverse of the R-pass (forward swept s = 0 .. n-1). Adjoints
        // accumulated into aL rows now refer to iteration t-1 values.
        for (int s = n - 1; s >= 0; --s) {
            const double* wb = ws.beta_row(t, s);
            double* gb = grads.d_beta.data() + slot(t, s);
            const double* Rs = Rt + static_cast<std::size_t>(s) * N;
            const double* Rs1 = Rt + static_cast<std::size_t>(s + 1) * N;
            const double* Lp1 = Lprev + static_cast<std::size_t>(s + 1) * N;
            double* aRs = aR + static_cast<std::size_t>(s) * N;
            double* aRs1 = aR + static_cast<std::size_t>(s + 1) * N;
            double* aLp1 = aL + static_cast<std::size_t>(s + 1) * N;
            const int h = N >> (s + 1);
            for (int base = 0; base < N; base += 2 * h) {
                for (int j = base; j < base + h; ++j) {
                    const int jh = j + h;
                    // out1 = clamp(wb[j] * g(Rs[j], Lp1[jh] + Rs[jh]))
                    double a1 = aRs1[j];
                    aRs1[j] = 0.0;
                    if (a1 != 0.0 && std::fabs(Rs1[j]) < clamp) {
                        const double x = Rs[j];
                        const double y = Lp1[jh] + Rs[jh];
                        gb[j] += g_minsum(x, y) * a1;
                        const double gg = wb[j] * a1;
                        double dgdx, dgdy;
                        detail::g_partials(x, y, dgdx, dgdy);
                        aRs[j] += dgdx * gg;
                        aLp1[jh] += dgdy * gg;
                        aRs[jh] += dgdy * gg;
                    }
                    // out2 = clamp(wb[jh] * g(Rs[j], Lp1[j]) + Rs[jh])
                    double a2 = aRs1[jh];
                    aRs1[jh] = 0.0;
                    if (a2 != 0.0 && std::fabs(Rs1[jh]) < clamp) {
                        const double x = Rs[j];
                        const double y = Lp1[j];
                        gb[jh] += g_minsum(x, y) * a2;
                        const double gg = wb[jh] * a2;
                        double dgdx, dgdy;
                        detail::g_partials(x, y, dgdx, dgdy);
                        aRs[j] += dgdx * gg;
                        aLp1[j] += dgdy * gg;
                        aRs[jh] += a2;
                    }
                }
            }
        }
    }
    return loss;
}

// One-shot convenience wrapper.
inline GradientSet backward(const ForwardTrace& trace, const WeightSet& ws, const DecoderConfig& cfg,
                            std::span<const std::uint8_t> targets_u) {
    GradientSet grads;
    grads.ensure_like(ws);
    BackwardWorkspace wk;
    backward_accumulate(trace, ws, cfg, targets_u, grads, wk);
    return grads;
}

}  // namespace polarnn

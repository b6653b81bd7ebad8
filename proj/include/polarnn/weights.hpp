// Scaling-weight container for the belief-propagation decoder and its
// versioned JSON serialization.
//
// Layout: alpha holds the weights of the two L-updates, beta those of the
// two R-updates, each indexed by the update's output node. Arrays are
// stage-major, node-minor; per_iteration mode prepends an iteration-major
// axis, so alpha[(t*n + s)*N + j] is the weight of iteration t+1, stage
// s+1, node j. shared mode drops the iteration axis.
#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarnn/polar_code.hpp"

namespace polarnn {

enum class WeightMode { unweighted, per_iteration, shared };

inline std::string to_string(WeightMode mode) {
    switch (mode) {
        case WeightMode::unweighted: return "unweighted";
        case WeightMode::per_iteration: return "per_iteration";
        case WeightMode::shared: return "shared";
    }
    throw std::logic_error("bad WeightMode");
}

inline WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "unweighted" || s == "bp") return WeightMode::unweighted;
    if (s == "per_iteration" || s == "dnn") return WeightMode::per_iteration;
    if (s == "shared" || s == "rnn") return WeightMode::shared;
    throw std::invalid_argument("unknown weight mode: " + s);
}

struct WeightSet {
    WeightMode mode = WeightMode::unweighted;
    int N = 0;
    int n = 0;
    int T = 0;  // per_iteration only; 0 otherwise

    std::vector<double> alpha;
    std::vector<double> beta;

    // Quantized representation: alpha/beta hold the dequantized values,
    // the index arrays point into the codebook.
    bool quantized = false;
    int q = 0;
    int c = 0;
    std::vector<double> codebook;
    std::vector<std::uint16_t> alpha_idx;
    std::vector<std::uint16_t> beta_idx;

    std::size_t per_direction_count() const {
        const std::size_t base = static_cast<std::size_t>(n) * N;
        return mode == WeightMode::per_iteration ? base * T : base;
    }

    // Row of N weights for (iteration t, stage s), both 1-based t / 0-based s.
    const double* alpha_row(int t, int s) const {
        return row(alpha, t, s);
    }
    const double* beta_row(int t, int s) const {
        return row(beta, t, s);
    }

    void validate_for(int code_N, int decoder_T) const {
        if (mode == WeightMode::unweighted) return;
        if (N != code_N) {
            throw std::invalid_argument("weight set is for N=" + std::to_string(N) +
                                        ", code has N=" + std::to_string(code_N));
        }
        if (mode == WeightMode::per_iteration && T != decoder_T) {
            throw std::invalid_argument("per-iteration weight set has T=" + std::to_string(T) +
                                        ", decoder runs T=" + std::to_string(decoder_T));
        }
        if (alpha.size() != per_direction_count() || beta.size() != per_direction_count()) {
            throw std::invalid_argument("weight array sizes inconsistent with mode");
        }
    }

private:
    const double* row(const std::vector<double>& arr, int t, int s) const {
        const std::size_t base = static_cast<std::size_t>(n) * N;
        if (mode == WeightMode::per_iteration) {
            if (t < 1 || t > T) throw std::out_of_range("iteration index out of range for per_iteration weights");
            return arr.data() + (static_cast<std::size_t>(t - 1) * n + s) * N;
        }
        return arr.data() + static_cast<std::size_t>(s) * N;
    }
};

inline WeightSet make_unweighted() { return WeightSet{}; }

// All-ones initialization: behaves exactly like plain min-sum.
inline WeightSet make_ones(WeightMode mode, int N, int T = 0) {
    WeightSet ws;
    ws.mode = mode;
    if (mode == WeightMode::unweighted) return ws;
    ws.N = N;
    ws.n = log2_exact(N);
    if (mode == WeightMode::per_iteration) {
        if (T < 1) throw std::invalid_argument("per_iteration weights need T >= 1");
        ws.T = T;
    }
    ws.alpha.assign(ws.per_direction_count(), 1.0);
    ws.beta.assign(ws.per_direction_count(), 1.0);
    return ws;
}

inline constexpr int kWeightFileVersion = 1;

inline nlohmann::json weights_to_json(const WeightSet& ws) {
    nlohmann::json j{
        {"version", kWeightFileVersion},
        {"mode", to_string(ws.mode)},
        {"N", ws.N},
        {"alpha", ws.alpha},
        {"beta", ws.beta},
    };
    if (ws.mode == WeightMode::per_iteration) j["T"] = ws.T;
    if (ws.quantized) {
        j["q"] = ws.q;
        j["c"] = ws.c;
        j["codebook"] = ws.codebook;
        j["alpha_idx"] = ws.alpha_idx;
        j["beta_idx"] = ws.beta_idx;
    }
    return j;
}

inline WeightSet weights_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kWeightFileVersion) {
        throw std::invalid_argument("unsupported weight file version");
    }
    WeightSet ws;
    ws.mode = weight_mode_from_string(j.at("mode").get<std::string>());
    if (ws.mode == WeightMode::unweighted) return ws;
    ws.N = j.at("N").get<int>();
    ws.n = log2_exact(ws.N);
    if (ws.mode == WeightMode::per_iteration) ws.T = j.at("T").get<int>();
    ws.alpha = j.at("alpha").get<std::vector<double>>();
    ws.beta = j.at("beta").get<std::vector<double>>();
    if (ws.alpha.size() != ws.per_direction_count() || ws.beta.size() != ws.per_direction_count()) {
        throw std::invalid_argument("weight file: array sizes inconsistent with mode/N/T");
    }
    if (j.contains("codebook")) {
        ws.quantized = true;
        ws.q = j.at("q").get<int>();
        ws.c = j.at("c").get<int>();
        ws.codebook = j.at("codebook").get<std::vector<double>>();
        ws.alpha_idx = j.at("alpha_idx").get<std::vector<std::uint16_t>>();
        ws.beta_idx = j.at("beta_idx").get<std::vector<std::uint16_t>>();
        if (ws.alpha_idx.size() != ws.alpha.size() || ws.beta_idx.size() != ws.beta.size()) {
            throw std::invalid_argument("weight file: index arrays inconsistent with weight arrays");
        }
        for (std::size_t i = 0; i < ws.alpha_idx.size(); ++i) {
            if (ws.alpha_idx[i] >= ws.codebook.size() || ws.alpha[i] != ws.codebook[ws.alpha_idx[i]]) {
                throw std::invalid_argument("weight file: alpha values disagree with codebook indices");
            }
        }
        for (std::size_t i = 0; i < ws.beta_idx.size(); ++i) {
            if (ws.beta_idx[i] >= ws.codebook.size() || ws.beta[i] != ws.codebook[ws.beta_idx[i]]) {
                throw std::invalid_argument("weight file: beta values disagree with codebook indices");
            }
        }
    }
    return ws;
}

inline void save_weights(const WeightSet& ws, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open weight file for writing: " + path);
    out << weights_to_json(ws).dump(2) << '\n';
}

inline WeightSet load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open weight file: " + path);
    nlohmann::json j;
    in >> j;
    return weights_from_json(j);
}

}  // namespace polarnn

// Weight training: dataset generation, RMSProp, and the epoch loop with
// optional quantize-after-epoch.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "polarnn/autodiff.hpp"
#include "polarnn/bp_decoder.hpp"
#include "polarnn/channel.hpp"
#include "polarnn/parallel.hpp"
#include "polarnn/quantize.hpp"
#include "polarnn/rng.hpp"

namespace polarnn {

struct TrainConfig {
    std::vector<double> snr_grid_db{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    int frames_per_snr_train = 40000;
    int frames_per_snr_test = 100800;
    int batch_size = 2400;
    int epochs = 20;
    double learning_rate = 1e-3;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
    std::uint64_t seed = 1;
    std::optional<double> grad_clip = 10.0;  // global-norm cap
    bool snr_is_esn0 = false;
    int val_frames_per_snr = 1000;
    int workers = 0;  // 0 -> hardware concurrency

    void validate() const {
        if (snr_grid_db.empty()) throw std::invalid_argument("train config: empty SNR grid");
        if (frames_per_snr_train < 1 || batch_size < 1) {
            throw std::invalid_argument("train config: positive frame and batch counts required");
        }
        if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning rate must be positive");
        if (!(rms_decay > 0.0) || rms_decay >= 1.0) {
            throw std::invalid_argument("train config: rms_decay must lie in (0, 1)");
        }
        if (!(rms_epsilon > 0.0)) throw std::invalid_argument("train config: rms_epsilon must be positive");
        if (grad_clip && !(*grad_clip > 0.0)) {
            throw std::invalid_argument("train config: grad_clip must be positive when set");
        }
    }
};

struct RmsState {
    std::vector<double> s_alpha;
    std::vector<double> s_beta;

    void ensure_like(const WeightSet& ws) {
        if (s_alpha.size() != ws.alpha.size()) s_alpha.assign(ws.alpha.size(), 0.0);
        if (s_beta.size() != ws.beta.size()) s_beta.assign(ws.beta.size(), 0.0);
    }
};

// s <- rho*s + (1-rho)*g^2 ; w <- w - lr*g/(sqrt(s) + eps), with optional
// global-norm clipping of g over both arrays first.
inline void rmsprop_step(WeightSet& ws, const GradientSet& grads, RmsState& state,
                         const TrainConfig& cfg) {
    if (grads.d_alpha.size() != ws.alpha.size() || grads.d_beta.size() != ws.beta.size()) {
        throw std::invalid_argument("rmsprop_step: gradient shape mismatch");
    }
    state.ensure_like(ws);

    double scale = 1.0;
    if (cfg.grad_clip) {
        double sq = 0.0;
        for (double g : grads.d_alpha) sq += g * g;
        for (double g : grads.d_beta) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > *cfg.grad_clip) scale = *cfg.grad_clip / norm;
    }

    const double rho = cfg.rms_decay;
    const double lr = cfg.learning_rate;
    const double eps = cfg.rms_epsilon;
    for (std::size_t i = 0; i < ws.alpha.size(); ++i) {
        const double g = grads.d_alpha[i] * scale;
        state.s_alpha[i] = rho * state.s_alpha[i] + (1.0 - rho) * g * g;
        ws.alpha[i] -= lr * g / (std::sqrt(state.s_alpha[i]) + eps);
    }
    for (std::size_t i = 0; i < ws.beta.size(); ++i) {
        const double g = grads.d_beta[i] * scale;
        state.s_beta[i] = rho * state.s_beta[i] + (1.0 - rho) * g * g;
        ws.beta[i] -= lr * g / (std::sqrt(state.s_beta[i]) + eps);
    }
}

enum class Split { train, test };

struct DatasetRecord {
    BitVector message;
    BitVector codeword;
    std::vector<double> llr;
    double snr_db = 0.0;
    int snr_index = 0;
};

// Lazily regenerated dataset: record g of a split is a pure function of
// (seed, split, g), so only the shuffle permutation is stored.
class DatasetStream {
public:
    DatasetStream(const PolarCode& code, const TrainConfig& cfg, Split split)
        : code_(&code), cfg_(cfg), split_(split) {
        cfg.validate();
        frames_per_snr_ = split == Split::train ? cfg.frames_per_snr_train : cfg.frames_per_snr_test;
        order_.resize(size());
        std::iota(order_.begin(), order_.end(), 0u);
        reshuffle(0);
    }

    std::size_t size() const {
        return static_cast<std::size_t>(frames_per_snr_) * cfg_.snr_grid_db.size();
    }

    std::size_t batches_per_epoch() const {
        return (size() + cfg_.batch_size - 1) / cfg_.batch_size;
    }

    // Deterministic Fisher-Yates reshuffle for the given epoch.
    void reshuffle(int epoch) {
        const std::uint64_t kind = split_ == Split::train ? stream::kTrain : stream::kTest;
        CounterRng rng(cfg_.seed, stream::make(stream::kShuffle, (kind << 32) | static_cast<std::uint32_t>(epoch)));
        std::iota(order_.begin(), order_.end(), 0u);
        for (std::size_t i = order_.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
            std::swap(order_[i - 1], order_[j]);
        }
    }

    DatasetRecord record(std::size_t shuffled_position) const {
        return raw_record(order_.at(shuffled_position));
    }

    DatasetRecord raw_record(std::size_t global_index) const {
        if (global_index >= size()) throw std::out_of_range("dataset record index out of range");
        DatasetRecord rec;
        rec.snr_index = static_cast<int>(global_index / frames_per_snr_);
        rec.snr_db = cfg_.snr_grid_db[rec.snr_index];
        const std::uint64_t kind = split_ == Split::train ? stream::kTrain : stream::kTest;
        CounterRng rng(cfg_.seed, stream::make(kind, global_index));
        rec.message = BitVector(code_->K);
        for (auto& b : rec.message) b = rng.next_bit() ? 1 : 0;
        rec.codeword = encode(*code_, rec.message);
        auto symbols = modulate_bpsk(rec.codeword);
        const double sigma = sigma_from_snr(rec.snr_db, cfg_.snr_is_esn0 ? 1.0 : code_->rate());
        awgn_inplace(symbols, sigma, rng);
        rec.llr = channel_llr(symbols, sigma);
        return rec;
    }

private:
    const PolarCode* code_;
    TrainConfig cfg_;
    Split split_;
    int frames_per_snr_ = 0;
    std::vector<std::uint32_t> order_;
};

inline DatasetStream generate_dataset(const PolarCode& code, const TrainConfig& cfg, Split split) {
    return DatasetStream(code, cfg, split);
}

struct EpochMetrics {
    int epoch = 0;
    double mean_loss = 0.0;
    std::vector<double> val_ber;  // one entry per SNR grid point
};

struct TrainResult {
    WeightSet weights;
    std::vector<EpochMetrics> history;
};

// Paired validation BER on the kValidation streams; frame f at SNR index
// si is a pure function of (seed, si, f), so different decoders see the
// same noise.
inline std::vector<double> validation_ber(const PolarCode& code, const WeightSet& ws,
                                          const DecoderConfig& dec, const TrainConfig& cfg) {
    std::vector<double> bers(cfg.snr_grid_db.size(), 0.0);
    const int frames = cfg.val_frames_per_snr;
    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si) {
        const double sigma = sigma_from_snr(cfg.snr_grid_db[si], cfg.snr_is_esn0 ? 1.0 : code.rate());
        std::uint64_t bit_errors = 0;
        for (int f = 0; f < frames; ++f) {
            CounterRng rng(cfg.seed, stream::make(stream::kValidation, (si << 32) | static_cast<std::uint32_t>(f)));
            BitVector msg(code.K);
            for (auto& b : msg) b = rng.next_bit() ? 1 : 0;
            auto symbols = modulate_bpsk(encode(code, msg));
            awgn_inplace(symbols, sigma, rng);
            const auto llr = channel_llr(symbols, sigma);
            const BitVector est = decode(llr, code, ws, dec);
            for (int i = 0; i < code.K; ++i) bit_errors += est[i] != msg[i];
        }
        bers[si] = static_cast<double>(bit_errors) / (static_cast<double>(frames) * code.K);
    }
    return bers;
}

namespace detail {

struct FrameScratch {
    ForwardTrace trace;
    BackwardWorkspace wk;
    GradientSet grads;
    double loss_sum = 0.0;
};

}  // namespace detail

// Weight training per the simulation protocol: all-ones initialization,
// shuffled mixed-SNR batches, mean-loss gradients, RMSProp updates, and
// (when quant is given) re-quantization of the weights after every epoch.
inline TrainResult train(const PolarCode& code, const DecoderConfig& dec, const TrainConfig& cfg,
                         WeightMode mode, std::optional<QuantConfig> quant = std::nullopt) {
    cfg.validate();
    dec.validate();
    if (mode == WeightMode::unweighted) {
        throw std::invalid_argument("train: mode must be per_iteration or shared");
    }
    if (quant) quant->validate();

    TrainResult result;
    result.weights = make_ones(mode, code.N, mode == WeightMode::per_iteration ? dec.T : 0);
    if (cfg.epochs == 0) return result;

    DatasetStream dataset(code, cfg, Split::train);
    const std::size_t total = dataset.size();
    const std::size_t chunk = 64;

    RmsState rms;
    GradientSet batch_grads;
    batch_grads.ensure_like(result.weights);

    const int workers = resolve_workers(cfg.workers);
    std::vector<detail::FrameScratch> scratch;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        dataset.reshuffle(epoch);
        double epoch_loss_sum = 0.0;

        for (std::size_t begin = 0; begin < total; begin += cfg.batch_size) {
            const std::size_t end = std::min(total, begin + cfg.batch_size);
            const std::size_t frames = end - begin;
            const std::size_t n_chunks = chunk_count(frames, chunk);

            scratch.resize(n_chunks);
            parallel_chunks(frames, chunk, workers, [&](std::size_t ci, std::size_t lo, std::size_t hi) {
                detail::FrameScratch& sc = scratch[ci];
                sc.grads.ensure_like(result.weights);
                sc.loss_sum = 0.0;
                for (std::size_t f = lo; f < hi; ++f) {
                    const DatasetRecord rec = dataset.record(begin + f);
                    const BitVector targets = expand_message(code, rec.message);
                    decode_with_trace(rec.llr, code, result.weights, dec, sc.trace);
                    sc.loss_sum += backward_accumulate(sc.trace, result.weights, dec, targets,
                                                       sc.grads, sc.wk);
                }
            });

            // Deterministic reduction in chunk order.
            std::fill(batch_grads.d_alpha.begin(), batch_grads.d_alpha.end(), 0.0);
            std::fill(batch_grads.d_beta.begin(), batch_grads.d_beta.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t ci = 0; ci < n_chunks; ++ci) {
                for (std::size_t i = 0; i < batch_grads.d_alpha.size(); ++i) {
                    batch_grads.d_alpha[i] += scratch[ci].grads.d_alpha[i];
                }
                for (std::size_t i = 0; i < batch_grads.d_beta.size(); ++i) {
                    batch_grads.d_beta[i] += scratch[ci].grads.d_beta[i];
                }
                batch_loss += scratch[ci].loss_sum;
            }
            const double inv_frames = 1.0 / static_cast<double>(frames);
            for (auto& g : batch_grads.d_alpha) g *= inv_frames;
            for (auto& g : batch_grads.d_beta) g *= inv_frames;
            epoch_loss_sum += batch_loss;

            rmsprop_step(result.weights, batch_grads, rms, cfg);
        }

        if (quant) {
            result.weights = quantize_weights(result.weights, *quant);
        }

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.mean_loss = epoch_loss_sum / static_cast<double>(total);
        metrics.val_ber = validation_ber(code, result.weights, dec, cfg);
        result.history.push_back(std::move(metrics));
    }
    return result;
}

}  // namespace polarnn

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "polarnn/train.hpp"
#include "test_helpers.hpp"

using namespace polarnn;

namespace {

TrainConfig tiny_train_config() {
    TrainConfig cfg;
    cfg.snr_grid_db = {1.0, 3.0};
    cfg.frames_per_snr_train = 150;
    cfg.frames_per_snr_test = 60;
    cfg.batch_size = 60;
    cfg.epochs = 2;
    cfg.seed = 31337;
    cfg.val_frames_per_snr = 100;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("rmsprop_step: zero gradient leaves weights unchanged") {
    WeightSet ws = make_ones(WeightMode::shared, 2);
    const WeightSet before = ws;
    GradientSet grads;
    grads.ensure_like(ws);
    RmsState state;
    TrainConfig cfg;
    rmsprop_step(ws, grads, state, cfg);
    CHECK(ws.alpha == before.alpha);
    CHECK(ws.beta == before.beta);
}

TEST_CASE("rmsprop_step: single-step closed form") {
    WeightSet ws = make_ones(WeightMode::shared, 2);
    GradientSet grads;
    grads.ensure_like(ws);
    grads.d_alpha[0] = 1.0;
    RmsState state;
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.rms_decay = 0.9;
    cfg.rms_epsilon = 1e-8;
    cfg.grad_clip.reset();
    rmsprop_step(ws, grads, state, cfg);
    CHECK(state.s_alpha[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(1.0 - ws.alpha[0] == doctest::Approx(1e-3 / (std::sqrt(0.1) + 1e-8)).epsilon(1e-9));

    // a second identical step moves the weight by less
    const double first_delta = 1.0 - ws.alpha[0];
    const double w_before = ws.alpha[0];
    rmsprop_step(ws, grads, state, cfg);
    CHECK(w_before - ws.alpha[0] < first_delta);
}

TEST_CASE("rmsprop_step: global-norm clipping rescales large gradients") {
    WeightSet ws = make_ones(WeightMode::shared, 2);
    GradientSet grads;
    grads.ensure_like(ws);
    for (auto& g : grads.d_alpha) g = 100.0;
    for (auto& g : grads.d_beta) g = 100.0;
    RmsState state;
    TrainConfig cfg;
    cfg.grad_clip = 1.0;
    rmsprop_step(ws, grads, state, cfg);
    // after clipping to unit norm, each coordinate is 100/norm = 0.5
    CHECK(state.s_alpha[0] == doctest::Approx(0.1 * 0.25).epsilon(1e-12));

    GradientSet bad;
    bad.ensure_like(make_ones(WeightMode::shared, 4));
    CHECK_THROWS_AS(rmsprop_step(ws, bad, state, cfg), std::invalid_argument);
}

TEST_CASE("dataset: sizes, batches and record structure") {
    const PolarCode code = construct_code(16, 8, 0.0);
    TrainConfig cfg = tiny_train_config();
    DatasetStream train_ds = generate_dataset(code, cfg, Split::train);
    CHECK(train_ds.size() == 300);
    CHECK(train_ds.batches_per_epoch() == 5);
    DatasetStream test_ds = generate_dataset(code, cfg, Split::test);
    CHECK(test_ds.size() == 120);

    const DatasetRecord rec = train_ds.record(0);
    CHECK(rec.message.size() == 8);
    CHECK(rec.codeword.size() == 16);
    CHECK(rec.llr.size() == 16);
    CHECK((rec.snr_db == 1.0 || rec.snr_db == 3.0));
    CHECK(rec.codeword == encode(code, rec.message));
    CHECK_THROWS_AS(train_ds.raw_record(300), std::out_of_range);
}

TEST_CASE("dataset: default-profile counts") {
    TrainConfig cfg;
    const PolarCode code = construct_code(64, 32, 0.0);
    DatasetStream ds = generate_dataset(code, cfg, Split::train);
    CHECK(ds.size() == 240000);                 // 6 SNRs x 40000
    CHECK(ds.batches_per_epoch() == 100);       // 240000 / 2400
    DatasetStream test_ds = generate_dataset(code, cfg, Split::test);
    CHECK(test_ds.size() == 604800);            // 6 SNRs x 100800
}

TEST_CASE("dataset: reproducible from the seed, shuffle permutes only") {
    const PolarCode code = construct_code(16, 8, 0.0);
    TrainConfig cfg = tiny_train_config();
    DatasetStream a = generate_dataset(code, cfg, Split::train);
    DatasetStream b = generate_dataset(code, cfg, Split::train);
    for (std::size_t i = 0; i < 20; ++i) {
        const DatasetRecord ra = a.record(i);
        const DatasetRecord rb = b.record(i);
        CHECK(ra.message == rb.message);
        CHECK(ra.llr == rb.llr);
    }

    // reshuffling reorders but keeps the record multiset (spot check on
    // per-SNR counts)
    a.reshuffle(3);
    std::vector<int> counts(2, 0);
    for (std::size_t i = 0; i < a.size(); ++i) ++counts[a.record(i).snr_index];
    CHECK(counts[0] == 150);
    CHECK(counts[1] == 150);
}

TEST_CASE("train: epochs = 0 returns the all-one initialization") {
    const PolarCode code = construct_code(16, 8, 0.0);
    DecoderConfig dec;
    dec.T = 2;
    TrainConfig cfg = tiny_train_config();
    cfg.epochs = 0;
    const TrainResult res = train(code, dec, cfg, WeightMode::shared);
    CHECK(res.history.empty());
    CHECK(std::all_of(res.weights.alpha.begin(), res.weights.alpha.end(),
                      [](double w) { return w == 1.0; }));

    CHECK_THROWS_AS(train(code, dec, cfg, WeightMode::unweighted), std::invalid_argument);
}

TEST_CASE("initialization neutrality: all-one weights score exactly like min-sum") {
    const PolarCode code = construct_code(16, 8, 0.0);
    DecoderConfig dec;
    dec.T = 3;
    TrainConfig cfg = tiny_train_config();
    const auto weighted = validation_ber(code, make_ones(WeightMode::shared, 16), dec, cfg);
    const auto plain = validation_ber(code, make_unweighted(), dec, cfg);
    CHECK(weighted == plain);
}

TEST_CASE("train: loss improves on a tiny run and is bit-reproducible") {
    const PolarCode code = construct_code(16, 8, 0.0);
    DecoderConfig dec;
    dec.T = 2;
    TrainConfig cfg = tiny_train_config();

    const TrainResult run1 = train(code, dec, cfg, WeightMode::shared);
    REQUIRE(run1.history.size() == 2);
    CHECK(run1.history.back().mean_loss < run1.history.front().mean_loss);

    // identical seeds, different worker count -> identical weights
    TrainConfig cfg2 = cfg;
    cfg2.workers = 1;
    const TrainResult run2 = train(code, dec, cfg2, WeightMode::shared);
    CHECK(run1.weights.alpha == run2.weights.alpha);
    CHECK(run1.weights.beta == run2.weights.beta);
    for (std::size_t e = 0; e < run1.history.size(); ++e) {
        CHECK(run1.history[e].mean_loss == run2.history[e].mean_loss);
        CHECK(run1.history[e].val_ber == run2.history[e].val_ber);
    }
}

TEST_CASE("train: weights move away from the initialization") {
    const PolarCode code = construct_code(16, 8, 0.0);
    DecoderConfig dec;
    dec.T = 2;
    TrainConfig cfg = tiny_train_config();
    cfg.epochs = 1;
    const TrainResult res = train(code, dec, cfg, WeightMode::shared);
    CHECK(std::any_of(res.weights.alpha.begin(), res.weights.alpha.end(),
                      [](double w) { return w != 1.0; }));
}

TEST_CASE("quantize-after-epoch training returns codebook weights") {
    const PolarCode code = construct_code(16, 8, 0.0);
    DecoderConfig dec;
    dec.T = 2;
    TrainConfig cfg = tiny_train_config();
    cfg.epochs = 2;
    const QuantConfig qc{4, 2};
    const TrainResult res = train(code, dec, cfg, WeightMode::shared, qc);
    CHECK(res.weights.quantized);
    CHECK(res.weights.q == 4);
    CHECK(res.weights.c == 2);
    CHECK(res.weights.codebook.size() <= 4);
    for (std::size_t i = 0; i < res.weights.alpha.size(); ++i) {
        CHECK(res.weights.alpha[i] == res.weights.codebook[res.weights.alpha_idx[i]]);
    }
}

TEST_CASE("per-iteration training stores T times the shared parameters") {
    const PolarCode code = construct_code(16, 8, 0.0);
    DecoderConfig dec;
    dec.T = 3;
    TrainConfig cfg = tiny_train_config();
    cfg.epochs = 1;
    const TrainResult shared = train(code, dec, cfg, WeightMode::shared);
    const TrainResult periter = train(code, dec, cfg, WeightMode::per_iteration);
    CHECK(periter.weights.alpha.size() == 3 * shared.weights.alpha.size());
    CHECK(periter.weights.beta.size() == 3 * shared.weights.beta.size());
}

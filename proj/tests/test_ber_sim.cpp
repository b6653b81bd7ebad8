#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "polarnn/ber_sim.hpp"
#include "polarnn/complexity.hpp"
#include "polarnn/quantize.hpp"
#include "test_helpers.hpp"

using namespace polarnn;

namespace {

RunConfig quick_config() {
    RunConfig cfg;
    cfg.N = 64;
    cfg.K = 32;
    cfg.snr_grid_db = {1.0, 3.0};
    cfg.frames_per_snr = 400;
    cfg.decoder.T = 5;
    cfg.seed = 77;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("near-noiseless SNR yields zero errors") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    cfg.snr_grid_db = {25.0};
    cfg.frames_per_snr = 200;
    const BerReport rep = run_ber_sweep(code, make_unweighted(), cfg);
    CHECK(rep.per_snr[0].bit_errors == 0);
    CHECK(rep.per_snr[0].frame_errors == 0);
    CHECK(rep.per_snr[0].ber == 0.0);
}

TEST_CASE("BER decreases with SNR and stats are self-consistent") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    cfg.snr_grid_db = {0.0, 2.0, 4.0};
    cfg.frames_per_snr = 600;
    const BerReport rep = run_ber_sweep(code, make_unweighted(), cfg);
    REQUIRE(rep.per_snr.size() == 3);
    CHECK(rep.per_snr[0].ber >= rep.per_snr[1].ber);
    CHECK(rep.per_snr[1].ber >= rep.per_snr[2].ber);
    for (const auto& r : rep.per_snr) {
        CHECK(r.frames == 600);
        CHECK(r.ber == doctest::Approx(static_cast<double>(r.bit_errors) / (600.0 * 32)));
        CHECK(r.fer == doctest::Approx(static_cast<double>(r.frame_errors) / 600.0));
        CHECK(r.ci_low <= r.ber);
        CHECK(r.ber <= r.ci_high);
        CHECK(r.frame_errors <= r.bit_errors);
    }
}

TEST_CASE("worker count does not change the tallies") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg1 = quick_config();
    cfg1.workers = 1;
    RunConfig cfg3 = quick_config();
    cfg3.workers = 3;
    const BerReport r1 = run_ber_sweep(code, make_unweighted(), cfg1);
    const BerReport r3 = run_ber_sweep(code, make_unweighted(), cfg3);
    REQUIRE(r1.per_snr.size() == r3.per_snr.size());
    for (std::size_t i = 0; i < r1.per_snr.size(); ++i) {
        CHECK(r1.per_snr[i].bit_errors == r3.per_snr[i].bit_errors);
        CHECK(r1.per_snr[i].frame_errors == r3.per_snr[i].frame_errors);
        CHECK(r1.per_snr[i].frames == r3.per_snr[i].frames);
    }
    CHECK(csv_string(std::vector<BerReport>{r1}) == csv_string(std::vector<BerReport>{r3}));
}

TEST_CASE("early-stop rule halts after enough frame errors") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    cfg.snr_grid_db = {0.0};
    cfg.frames_per_snr = 1000000;
    cfg.min_frame_errors = 100;
    const BerReport rep = run_ber_sweep(code, make_unweighted(), cfg);
    CHECK(rep.per_snr[0].frame_errors >= 100);
    CHECK(rep.per_snr[0].frames < 1000000);  // stopped long before the budget
}

TEST_CASE("weight/code mismatch fails before simulating") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    const WeightSet wrong = make_ones(WeightMode::shared, 16);
    CHECK_THROWS_AS(run_ber_sweep(code, wrong, cfg), std::invalid_argument);

    RunConfig bad_dims = quick_config();
    bad_dims.N = 32;
    CHECK_THROWS_AS(run_ber_sweep(code, make_unweighted(), bad_dims), std::invalid_argument);
}

TEST_CASE("measured counters agree with the closed-form complexity") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    cfg.snr_grid_db = {2.0};
    cfg.frames_per_snr = 8;

    const BerReport plain = run_ber_sweep(code, make_unweighted(), cfg);
    const auto bp_form = complexity_report(WeightMode::unweighted, false, cfg.decoder.T, 64);
    CHECK(plain.additions_per_frame == bp_form.additions);
    CHECK(plain.multiplications_per_frame == bp_form.multiplications);

    const BerReport dnn = run_ber_sweep(code, make_ones(WeightMode::per_iteration, 64, 5), cfg);
    const auto dnn_form = complexity_report(WeightMode::per_iteration, false, cfg.decoder.T, 64);
    CHECK(dnn.additions_per_frame == dnn_form.additions);
    CHECK(dnn.multiplications_per_frame == dnn_form.multiplications);

    // Quantized: multiplications vanish; additions are bounded by the
    // closed form and reach it exactly when every weight bit is set.
    WeightSet rnn = make_ones(WeightMode::shared, 64);
    const WeightSet qws = quantize_weights(rnn, QuantConfig{4, 3});
    const BerReport quant = run_ber_sweep(code, qws, cfg);
    const auto q_form = complexity_report(WeightMode::shared, true, cfg.decoder.T, 64, 4, 3);
    CHECK(quant.multiplications_per_frame == 0);
    CHECK(quant.additions_per_frame <= q_form.additions);

    WeightSet all_bits = make_ones(WeightMode::shared, 64);
    for (auto& w : all_bits.alpha) w = quant_max(4);  // 1.875 = 1111b
    for (auto& w : all_bits.beta) w = quant_max(4);
    const WeightSet qall = quantize_weights(all_bits, QuantConfig{4, 3});
    const BerReport saturated = run_ber_sweep(code, qall, cfg);
    CHECK(saturated.additions_per_frame == q_form.additions);
}

TEST_CASE("same seeds give different decoders identical noise") {
    // Paired evaluation contract: the unweighted and all-one-weighted
    // decoders are the same function, so their sweeps must agree bitwise.
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    const BerReport a = run_ber_sweep(code, make_unweighted(), cfg);
    const BerReport b = run_ber_sweep(code, make_ones(WeightMode::shared, 64), cfg);
    for (std::size_t i = 0; i < a.per_snr.size(); ++i) {
        CHECK(a.per_snr[i].bit_errors == b.per_snr[i].bit_errors);
        CHECK(a.per_snr[i].frame_errors == b.per_snr[i].frame_errors);
    }
}

TEST_CASE("CSV shape: header, schema version, one row per (decoder, snr)") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    cfg.frames_per_snr = 50;
    cfg.label = "bp_T5";
    const BerReport rep = run_ber_sweep(code, make_unweighted(), cfg);
    const std::string csv = csv_string(std::vector<BerReport>{rep});

    std::istringstream iss(csv);
    std::string line;
    std::getline(iss, line);
    CHECK(line.find("schema_version") == 0);
    CHECK(line.find("ci_low") != std::string::npos);
    int rows = 0;
    while (std::getline(iss, line)) {
        CHECK(line.find("1,bp_T5,unweighted") == 0);
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("wilson interval sanity") {
    const auto [lo_zero, hi_zero] = wilson_interval(0, 1000);
    CHECK(lo_zero == 0.0);
    CHECK(hi_zero > 0.0);
    CHECK(hi_zero < 0.01);
    const auto [lo, hi] = wilson_interval(100, 1000);
    CHECK(lo > 0.08);
    CHECK(hi < 0.13);
    CHECK(lo < 0.1);
    CHECK(hi > 0.1);
}

TEST_CASE("SVG contains a polyline per report and axis labels") {
    const PolarCode code = construct_code(64, 32, 0.0);
    RunConfig cfg = quick_config();
    cfg.frames_per_snr = 50;
    cfg.label = "curve_a";
    const BerReport a = run_ber_sweep(code, make_unweighted(), cfg);
    RunConfig cfg2 = cfg;
    cfg2.label = "curve_b";
    cfg2.decoder.T = 2;
    const BerReport b = run_ber_sweep(code, make_unweighted(), cfg2);

    std::ostringstream oss;
    write_svg(oss, std::vector<BerReport>{a, b});
    const std::string svg = oss.str();
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("curve_a") != std::string::npos);
    CHECK(svg.find("curve_b") != std::string::npos);
    std::size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        pos += 9;
    }
    CHECK(polylines == 2);
    CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>

#include "polarnn/complexity.hpp"
#include "polarnn/quantize.hpp"
#include "polarnn/rng.hpp"

using namespace polarnn;

TEST_CASE("quantize_fixed: examples and clipping") {
    CHECK(quantize_fixed(1.0, 2) == 1.0);
    CHECK(quantize_fixed(1.0, 8) == 1.0);
    CHECK(quantize_fixed(0.87, 3) == 0.75);
    CHECK(quantize_fixed(2.4, 4) == 1.875);
    CHECK(quantize_fixed(-0.3, 4) == 0.0);
    CHECK(quantize_fixed(0.0, 4) == 0.0);
    CHECK_THROWS_AS(quantize_fixed(0.5, 1), std::invalid_argument);
}

TEST_CASE("quantize_fixed: round-half-to-even on exact midpoints") {
    // q = 3, step 0.25: midpoints at odd multiples of 0.125.
    CHECK(quantize_fixed(0.125, 3) == 0.0);   // between 0 (even k=0) and 0.25
    CHECK(quantize_fixed(0.375, 3) == 0.5);   // between 0.25 (k=1) and 0.5 (k=2)
    CHECK(quantize_fixed(0.625, 3) == 0.5);   // between 0.5 (k=2) and 0.75
    CHECK(quantize_fixed(0.875, 3) == 1.0);   // between 0.75 (k=3) and 1.0 (k=4)
}

TEST_CASE("quantize_fixed properties over random weights") {
    CounterRng rng(808, 0);
    for (int q : {2, 3, 4, 6, 8}) {
        const double step = quant_step(q);
        double prev_in = -1e9, prev_out = 0.0;
        bool have_prev = false;
        for (int i = 0; i < 20000; ++i) {
            const double w = -0.5 + 3.0 * rng.next_unit_co();
            const double v = quantize_fixed(w, q);
            // on-grid
            const double k = v / step;
            CHECK(k == std::floor(k));
            CHECK(v >= 0.0);
            CHECK(v <= quant_max(q));
            // error bound inside the representable range
            if (w >= 0.0 && w <= quant_max(q)) {
                CHECK(std::fabs(w - v) <= std::ldexp(1.0, -q) + 1e-15);
            }
            // monotonicity against the previous draw
            if (have_prev) {
                if (w >= prev_in) CHECK(v >= prev_out);
                else CHECK(v <= prev_out);
            }
            prev_in = w;
            prev_out = v;
            have_prev = true;
        }
    }
}

TEST_CASE("build_codebook: frequency selection and ties") {
    // {0.75 x5, 1.0 x3, 1.25 x2}, c = 1 -> top-2 = {0.75, 1.0}
    std::vector<double> w;
    w.insert(w.end(), 5, 0.75);
    w.insert(w.end(), 3, 1.0);
    w.insert(w.end(), 2, 1.25);
    const Codebook book = build_codebook(w, 1, 3);
    CHECK(book.values == std::vector<double>{0.75, 1.0});

    // all identical -> singleton regardless of c
    const Codebook single = build_codebook(std::vector<double>{0.5, 0.5, 0.5}, 3, 3);
    CHECK(single.values == std::vector<double>{0.5});

    // fewer distinct values than 2^c -> exactly the distinct set
    const Codebook small = build_codebook(std::vector<double>{0.25, 1.0}, 3, 3);
    CHECK(small.values == std::vector<double>{0.25, 1.0});

    // frequency tie -> smaller value enters first
    const Codebook tie = build_codebook(std::vector<double>{1.25, 1.25, 0.25, 0.25, 0.5}, 1, 3);
    CHECK(tie.values == std::vector<double>{0.25, 1.25});

    CHECK_THROWS_AS(build_codebook(std::vector<double>{}, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_codebook(std::vector<double>{0.3}, 1, 3), std::invalid_argument);
}

TEST_CASE("apply_codebook: nearest value, ties to the smaller") {
    const Codebook book{{0.75, 1.25}, 4};
    const auto res = apply_codebook(std::vector<double>{1.0, 0.75, 2.0, 0.0}, book);
    CHECK(res.values == std::vector<double>{0.75, 0.75, 1.25, 0.75});
    CHECK(res.indices == std::vector<std::uint16_t>{0, 0, 1, 0});

    const Codebook one{{1.0}, 4};
    const auto all_zero = apply_codebook(std::vector<double>{0.1, 1.9}, one);
    CHECK(all_zero.indices == std::vector<std::uint16_t>{0, 0});
}

TEST_CASE("apply_codebook is idempotent") {
    CounterRng rng(303, 1);
    std::vector<double> w(500);
    for (auto& x : w) x = quantize_fixed(2.0 * rng.next_unit_co(), 4);
    const Codebook book = build_codebook(w, 2, 4);
    const auto once = apply_codebook(w, book);
    const auto twice = apply_codebook(once.values, book);
    CHECK(once.values == twice.values);
    CHECK(once.indices == twice.indices);
}

TEST_CASE("codebook optimality: no outside value is more frequent") {
    CounterRng rng(909, 2);
    for (int trial = 0; trial < 20; ++trial) {
        const int q = 4;
        std::vector<double> w(400);
        for (auto& x : w) x = quantize_fixed(2.0 * rng.next_unit_co(), q);
        const int c = 2;
        const Codebook book = build_codebook(w, c, q);
        std::map<double, int> freq;
        for (double x : w) ++freq[x];
        int min_inside = 1 << 30;
        for (double v : book.values) min_inside = std::min(min_inside, freq[v]);
        for (const auto& [v, f] : freq) {
            const bool inside = std::find(book.values.begin(), book.values.end(), v) != book.values.end();
            if (!inside) CHECK(f <= min_inside);
        }
    }
}

TEST_CASE("shift_add_multiply: examples") {
    std::uint64_t adds = 0;
    CHECK(shift_add_multiply(3.0, 1.25, 4, &adds) == 3.75);
    CHECK(adds == 1);  // bits 1.010 -> two terms, one addition
    CHECK(shift_add_multiply(-7.0, 1.0, 4) == -7.0);
    CHECK(shift_add_multiply(5.5, 0.0, 4) == 0.0);
    CHECK(shift_add_multiply(0.0, 1.5, 4) == 0.0);
    CHECK_THROWS_AS(shift_add_multiply(1.0, 0.3, 4), std::invalid_argument);   // off grid
    CHECK_THROWS_AS(shift_add_multiply(1.0, -0.25, 4), std::invalid_argument); // negative
}

TEST_CASE("shift_add_multiply is bit-exact against direct multiplication") {
    CounterRng rng(5150, 3);
    for (int q = 2; q <= 6; ++q) {
        const double step = quant_step(q);
        for (int k = 0; k < (1 << q); ++k) {
            const double w = k * step;
            for (int i = 0; i < 1000; ++i) {
                const double llr = (rng.next_unit_co() - 0.5) * 60.0;
                const double via_shift = shift_add_multiply(llr, w, q);
                const double direct = llr * w;
                CHECK(std::memcmp(&via_shift, &direct, sizeof(double)) == 0);
            }
        }
    }
}

TEST_CASE("shift_add_count matches popcount - 1") {
    CHECK(shift_add_count(1.0, 4) == 0);      // 1000
    CHECK(shift_add_count(1.875, 4) == 3);    // 1111
    CHECK(shift_add_count(0.0, 4) == 0);
    CHECK(shift_add_count(1.25, 4) == 1);     // 1010
}

TEST_CASE("quantize_weights: full pipeline") {
    WeightSet ws = make_ones(WeightMode::shared, 8);
    // spread some values so the codebook has work to do
    ws.alpha = {1.02, 0.98, 1.24, 0.77, 1.02, 0.98, 1.02, 1.02, 0.5, 0.5, 1.7, 1.02,
                0.98, 0.98, 1.02, 1.02, 1.3, 0.2, 0.77, 1.02, 0.98, 1.02, 0.98, 1.02};
    ws.beta = ws.alpha;
    const WeightSet qws = quantize_weights(ws, QuantConfig{4, 2});
    CHECK(qws.quantized);
    CHECK(qws.q == 4);
    CHECK(qws.c == 2);
    CHECK(qws.codebook.size() <= 4);
    for (std::size_t i = 0; i < qws.alpha.size(); ++i) {
        CHECK(qws.alpha[i] == qws.codebook[qws.alpha_idx[i]]);
    }
    // every stored value is a codebook member on the q-bit grid
    for (double v : qws.codebook) {
        const double k = v / quant_step(4);
        CHECK(k == std::floor(k));
    }
    CHECK_THROWS_AS(quantize_weights(make_unweighted(), QuantConfig{4, 2}), std::invalid_argument);
    CHECK_THROWS_AS(quantize_weights(ws, QuantConfig{1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(quantize_weights(ws, QuantConfig{4, 5}), std::invalid_argument);
}

TEST_CASE("memory footprint: reference configurations") {
    const WeightSet dnn = make_ones(WeightMode::per_iteration, 64, 5);
    CHECK(memory_footprint(dnn).weight_bits == 122880);

    WeightSet rnn = make_ones(WeightMode::shared, 64);
    for (std::size_t i = 0; i < rnn.alpha.size(); ++i) rnn.alpha[i] = 0.75 + 0.25 * (i % 3);
    const WeightSet qrnn = quantize_weights(rnn, QuantConfig{4, 3});
    const auto fp = memory_footprint(qrnn);
    CHECK(fp.weight_bits == 2304);
    CHECK(fp.codebook_bits == 8u * 4);

    CHECK(memory_footprint(make_unweighted()).weight_bits == 0);
    CHECK(memory_footprint(make_ones(WeightMode::shared, 64)).weight_bits == 64u * 64 * 6);
}

TEST_CASE("complexity_report: reference configuration values") {
    const auto bp = complexity_report(WeightMode::unweighted, false, 40, 64);
    CHECK(bp.additions == 30720);
    CHECK(bp.multiplications == 0);
    CHECK(bp.memory_bits == 0);

    const auto dnn = complexity_report(WeightMode::per_iteration, false, 5, 64);
    CHECK(dnn.additions == 3840);
    CHECK(dnn.multiplications == 3840);
    CHECK(dnn.memory_bits == 122880);

    const auto rnn = complexity_report(WeightMode::shared, true, 5, 64, 4, 3);
    CHECK(rnn.additions == 15360);
    CHECK(rnn.multiplications == 0);
    CHECK(rnn.memory_bits == 2304);

    CHECK_THROWS_AS(complexity_report(WeightMode::shared, true, 5, 64), std::invalid_argument);
}

// Command-line front end: construct / train / quantize / simulate /
// complexity / selftest.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polarnn/autodiff.hpp"
#include "polarnn/ber_sim.hpp"
#include "polarnn/bp_decoder.hpp"
#include "polarnn/channel.hpp"
#include "polarnn/complexity.hpp"
#include "polarnn/polar_code.hpp"
#include "polarnn/quantize.hpp"
#include "polarnn/train.hpp"
#include "polarnn/weights.hpp"

namespace polarnn {

namespace cli_detail {

inline nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

inline void require_writable(const std::string& path, bool force) {
    if (path.empty()) return;
    if (!force && std::filesystem::exists(path)) {
        throw std::runtime_error("output exists, pass --force to overwrite: " + path);
    }
}

inline int default_workers() {
    if (const char* env = std::getenv("POLARNN_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0;  // resolve to hardware concurrency later
}

inline PolarCode code_from_config(const nlohmann::json& j) {
    const auto& c = j.at("code");
    return construct_code(c.at("N").get<int>(), c.at("K").get<int>(),
                          c.value("design_snr_db", 0.0));
}

inline DecoderConfig decoder_from_config(const nlohmann::json& j) {
    DecoderConfig dec;
    if (j.contains("decoder")) {
        const auto& d = j.at("decoder");
        dec.T = d.value("T", dec.T);
        dec.llr_clamp = d.value("llr_clamp", dec.llr_clamp);
        dec.frozen_llr = d.value("frozen_llr", dec.frozen_llr);
    }
    dec.validate();
    return dec;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.snr_grid_db = j.value("snr_grid_db", cfg.snr_grid_db);
    cfg.frames_per_snr_train = j.value("frames_per_snr_train", cfg.frames_per_snr_train);
    cfg.frames_per_snr_test = j.value("frames_per_snr_test", cfg.frames_per_snr_test);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.rms_decay = j.value("rms_decay", cfg.rms_decay);
    cfg.rms_epsilon = j.value("rms_epsilon", cfg.rms_epsilon);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("grad_clip")) {
        if (j.at("grad_clip").is_null()) cfg.grad_clip.reset();
        else cfg.grad_clip = j.at("grad_clip").get<double>();
    }
    cfg.snr_is_esn0 = j.value("snr_is_esn0", cfg.snr_is_esn0);
    cfg.val_frames_per_snr = j.value("val_frames_per_snr", cfg.val_frames_per_snr);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.validate();
    return cfg;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    const auto& c = j.at("code");
    cfg.N = c.at("N").get<int>();
    cfg.K = c.at("K").get<int>();
    cfg.design_snr_db = c.value("design_snr_db", 0.0);
    cfg.snr_grid_db = j.value("snr_grid_db", cfg.snr_grid_db);
    cfg.frames_per_snr = j.value("frames_per_snr", cfg.frames_per_snr);
    cfg.min_frame_errors = j.value("min_frame_errors", cfg.min_frame_errors);
    cfg.decoder = decoder_from_config(j);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.snr_is_esn0 = j.value("snr_is_esn0", cfg.snr_is_esn0);
    cfg.label = j.value("label", cfg.label);
    cfg.validate();
    return cfg;
}

inline void write_metrics_csv(const std::string& path, const TrainResult& result,
                              const std::vector<double>& snr_grid) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open metrics output: " + path);
    out << "epoch,mean_loss";
    for (double snr : snr_grid) out << ",val_ber_" << format_double(snr) << "db";
    out << '\n';
    for (const auto& m : result.history) {
        out << m.epoch << ',' << format_double(m.mean_loss);
        for (double b : m.val_ber) out << ',' << format_double(b);
        out << '\n';
    }
}

int run_selftest(bool quick, std::ostream& out);

}  // namespace cli_detail

inline int cli_dispatch(std::vector<std::string> args) {
    CLI::App app{"polar belief-propagation decoder toolkit"};
    app.require_subcommand(1);

    // --- construct ---
    auto* construct = app.add_subcommand("construct", "emit a code description JSON");
    int c_N = 64, c_K = 32;
    double c_snr = 0.0;
    std::string c_out;
    bool c_force = false;
    construct->add_option("--N", c_N, "block length (power of two)")->required();
    construct->add_option("--K", c_K, "information length")->required();
    construct->add_option("--design-snr", c_snr, "construction design SNR in dB");
    construct->add_option("--out", c_out, "output path (default: stdout)");
    construct->add_flag("--force", c_force, "overwrite existing outputs");

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train decoder weights");
    std::string t_config, t_out, t_metrics, t_mode = "shared";
    std::optional<std::uint64_t> t_seed;
    std::optional<int> t_workers, t_epochs;
    bool t_force = false;
    train_cmd->add_option("--config", t_config, "training config JSON")->required();
    train_cmd->add_option("--out", t_out, "weight file to write")->required();
    train_cmd->add_option("--metrics", t_metrics, "per-epoch metrics CSV");
    train_cmd->add_option("--mode", t_mode, "shared | per_iteration (overrides config)");
    train_cmd->add_option("--seed", t_seed, "override config seed");
    train_cmd->add_option("--workers", t_workers, "override worker count");
    train_cmd->add_option("--epochs", t_epochs, "override epoch count");
    train_cmd->add_flag("--force", t_force, "overwrite existing outputs");

    // --- quantize ---
    auto* quant_cmd = app.add_subcommand("quantize", "quantize a float weight file");
    std::string q_in, q_out;
    int q_q = 4, q_c = 3;
    bool q_force = false;
    quant_cmd->add_option("--weights", q_in, "float weight file")->required();
    quant_cmd->add_option("--q", q_q, "fixed-point bits");
    quant_cmd->add_option("--c", q_c, "codebook index bits");
    quant_cmd->add_option("--out", q_out, "quantized weight file")->required();
    quant_cmd->add_flag("--force", q_force, "overwrite existing outputs");

    // --- simulate ---
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo BER/FER sweep");
    std::string s_config, s_weights, s_out, s_svg;
    std::optional<std::uint64_t> s_seed;
    std::optional<int> s_workers;
    bool s_force = false;
    sim_cmd->add_option("--config", s_config, "run config JSON")->required();
    sim_cmd->add_option("--weights", s_weights, "weight file (omit for unweighted min-sum)");
    sim_cmd->add_option("--out", s_out, "results CSV path (default: stdout)");
    sim_cmd->add_option("--svg", s_svg, "also write an SVG plot");
    sim_cmd->add_option("--seed", s_seed, "override config seed");
    sim_cmd->add_option("--workers", s_workers, "override worker count");
    sim_cmd->add_flag("--force", s_force, "overwrite existing outputs");

    // --- complexity ---
    auto* cx_cmd = app.add_subcommand("complexity", "closed-form operation/memory counts");
    std::string x_mode = "bp";
    int x_T = 5, x_N = 64, x_q = 0, x_c = 0;
    bool x_quant = false;
    cx_cmd->add_option("--mode", x_mode, "bp | dnn | rnn (aliases of unweighted/per_iteration/shared)");
    cx_cmd->add_option("--T", x_T, "iterations");
    cx_cmd->add_option("--N", x_N, "block length");
    cx_cmd->add_option("--q", x_q, "fixed-point bits (quantized)");
    cx_cmd->add_option("--c", x_c, "codebook bits (quantized)");
    cx_cmd->add_flag("--quantized", x_quant, "quantized weight representation");

    // --- selftest ---
    auto* self_cmd = app.add_subcommand("selftest", "run the built-in invariant suite");
    bool quick = false;
    self_cmd->add_flag("--quick", quick, "reduced trial counts");

    try {
        std::vector<const char*> argv;
        argv.push_back("polarnn");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*construct) {
            const PolarCode code = construct_code(c_N, c_K, c_snr);
            const std::string text = code_to_json(code).dump(2) + "\n";
            if (c_out.empty()) {
                std::cout << text;
            } else {
                cli_detail::require_writable(c_out, c_force);
                std::ofstream out(c_out);
                if (!out) throw std::runtime_error("cannot open output: " + c_out);
                out << text;
            }
            return 0;
        }

        if (*train_cmd) {
            const nlohmann::json j = cli_detail::load_config(t_config);
            const PolarCode code = cli_detail::code_from_config(j);
            const DecoderConfig dec = cli_detail::decoder_from_config(j);
            TrainConfig cfg = cli_detail::train_config_from_json(j);
            if (t_seed) cfg.seed = *t_seed;
            if (t_epochs) cfg.epochs = *t_epochs;
            cfg.workers = t_workers ? *t_workers : (cfg.workers ? cfg.workers : cli_detail::default_workers());

            const WeightMode mode = weight_mode_from_string(j.value("mode", t_mode));
            std::optional<QuantConfig> quant;
            if (j.contains("quantize") && !j.at("quantize").is_null()) {
                quant = QuantConfig{j.at("quantize").at("q").get<int>(),
                                    j.at("quantize").at("c").get<int>()};
            }
            cli_detail::require_writable(t_out, t_force);
            cli_detail::require_writable(t_metrics, t_force);

            const TrainResult result = train(code, dec, cfg, mode, quant);
            save_weights(result.weights, t_out);
            if (!t_metrics.empty()) cli_detail::write_metrics_csv(t_metrics, result, cfg.snr_grid_db);
            if (!result.history.empty()) {
                std::cout << "final mean loss " << format_double(result.history.back().mean_loss)
                          << " after " << result.history.size() << " epochs\n";
            }
            return 0;
        }

        if (*quant_cmd) {
            const WeightSet ws = load_weights(q_in);
            cli_detail::require_writable(q_out, q_force);
            save_weights(quantize_weights(ws, QuantConfig{q_q, q_c}), q_out);
            return 0;
        }

        if (*sim_cmd) {
            const nlohmann::json j = cli_detail::load_config(s_config);
            RunConfig cfg = cli_detail::run_config_from_json(j);
            if (s_seed) cfg.seed = *s_seed;
            cfg.workers = s_workers ? *s_workers : (cfg.workers ? cfg.workers : cli_detail::default_workers());
            const PolarCode code = construct_code(cfg.N, cfg.K, cfg.design_snr_db);
            const WeightSet ws = s_weights.empty() ? make_unweighted() : load_weights(s_weights);

            cli_detail::require_writable(s_out, s_force);
            cli_detail::require_writable(s_svg, s_force);
            const BerReport report = run_ber_sweep(code, ws, cfg);
            const std::vector<BerReport> reports{report};
            if (s_out.empty()) write_csv(std::cout, reports);
            else write_csv_file(s_out, reports);
            if (!s_svg.empty()) write_svg_file(s_svg, reports);
            return 0;
        }

        if (*cx_cmd) {
            const WeightMode mode = weight_mode_from_string(x_mode);
            const bool quantized = x_quant || x_q > 0 || x_c > 0;
            const ComplexityReport rep =
                complexity_report(mode, mode != WeightMode::unweighted && quantized, x_T, x_N, x_q, x_c);
            std::cout << "additions " << rep.additions << "\n"
                      << "multiplications " << rep.multiplications << "\n"
                      << "memory_bits " << rep.memory_bits << "\n";
            return 0;
        }

        if (*self_cmd) {
            return cli_detail::run_selftest(quick, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

namespace cli_detail {

inline int run_selftest(bool quick, std::ostream& out) {
    int failures = 0;
    const auto check = [&](const std::string& name, bool ok) {
        out << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    };

    // bit-reversal involution
    {
        bool ok = true;
        for (int N = 2; N <= (quick ? 64 : 1024); N *= 2) {
            const auto perm = bit_reversal_permutation(N);
            for (int j = 0; j < N; ++j) ok &= perm[perm[j]] == j;
        }
        check("bit-reversal involution", ok);
    }

    // encoder vs dense generator matrix
    {
        bool ok = true;
        CounterRng rng(1, 100);
        for (int N : {8, 64}) {
            const PolarCode code = construct_code(N, N, 0.0);
            const auto g = generator_matrix(N);
            for (int trial = 0; trial < (quick ? 5 : 25); ++trial) {
                BitVector u(N);
                for (auto& b : u) b = rng.next_bit() ? 1 : 0;
                BitVector x(N, 0);
                for (int r = 0; r < N; ++r) {
                    if (!u[r]) continue;
                    for (int c2 = 0; c2 < N; ++c2) x[c2] ^= g[r][c2];
                }
                ok &= encode(code, u) == x;
            }
        }
        check("butterfly encoder equals generator-matrix product", ok);
    }

    // noiseless decode recovery
    {
        bool ok = true;
        DecoderConfig cfg;
        CounterRng rng(2, 101);
        for (auto [N, K] : {std::pair{8, 4}, std::pair{64, 32}}) {
            const PolarCode code = construct_code(N, K, 0.0);
            for (int trial = 0; trial < (quick ? 10 : 100); ++trial) {
                BitVector msg(K);
                for (auto& b : msg) b = rng.next_bit() ? 1 : 0;
                const BitVector x = encode(code, msg);
                std::vector<double> llr(N);
                for (int j = 0; j < N; ++j) llr[j] = x[j] ? -cfg.llr_clamp : cfg.llr_clamp;
                ok &= decode(llr, code, make_unweighted(), cfg) == msg;
            }
        }
        check("noiseless recovery", ok);
    }

    // all-one weights == unweighted min-sum, bit for bit
    {
        bool ok = true;
        const PolarCode code = construct_code(64, 32, 0.0);
        DecoderConfig cfg;
        CounterRng rng(3, 102);
        const WeightSet ones = make_ones(WeightMode::shared, 64);
        for (int trial = 0; trial < (quick ? 5 : 50); ++trial) {
            BitVector msg(32);
            for (auto& b : msg) b = rng.next_bit() ? 1 : 0;
            auto symbols = modulate_bpsk(encode(code, msg));
            const double sigma = sigma_from_snr(2.0, 0.5);
            awgn_inplace(symbols, sigma, rng);
            const auto llr = channel_llr(symbols, sigma);
            const MessageGrid a = run_bp(llr, code, make_unweighted(), cfg);
            const MessageGrid b = run_bp(llr, code, ones, cfg);
            ok &= a.L == b.L && a.R == b.R;
        }
        check("all-one weights reproduce min-sum", ok);
    }

    // shift-add exactness
    {
        bool ok = true;
        CounterRng rng(4, 103);
        for (int q = 2; q <= 6; ++q) {
            for (int k = 0; k < (1 << q); ++k) {
                const double w = k * quant_step(q);
                for (int i = 0; i < (quick ? 20 : 200); ++i) {
                    const double llr = (rng.next_unit_co() - 0.5) * 60.0;
                    ok &= shift_add_multiply(llr, w, q) == llr * w;
                }
            }
        }
        check("shift-add product is bit-exact", ok);
    }

    // quantizer grid membership and error bound
    {
        bool ok = true;
        CounterRng rng(5, 104);
        for (int i = 0; i < (quick ? 2000 : 20000); ++i) {
            const int q = 2 + static_cast<int>(rng.next_u64() % 5);
            const double w = 2.5 * rng.next_unit_co();
            const double v = quantize_fixed(w, q);
            const double k = v / quant_step(q);
            ok &= k == std::floor(k) && v >= 0.0 && v <= quant_max(q);
            if (w <= quant_max(q)) ok &= std::fabs(w - v) <= std::ldexp(1.0, -q) + 1e-15;
        }
        check("fixed-point quantizer grid and error bound", ok);
    }

    // measured counters match the closed form
    {
        const PolarCode code = construct_code(64, 32, 0.0);
        DecoderConfig cfg;
        cfg.T = 40;
        OpCounters ops;
        std::vector<double> llr(64, 0.5);
        decode(llr, code, make_unweighted(), cfg, &ops);
        const auto form = complexity_report(WeightMode::unweighted, false, 40, 64);
        check("decode counters match closed-form complexity", ops.additions == form.additions &&
                                                                  ops.multiplications == 0);
    }

    // gradient vs finite difference on one small instance
    {
        const PolarCode code = construct_code(8, 4, 0.0);
        DecoderConfig cfg;
        cfg.T = 2;
        cfg.llr_clamp = 25.0;
        cfg.frozen_llr = 4.0;
        WeightSet ws = make_ones(WeightMode::shared, 8);
        CounterRng rng(6, 105);
        for (auto& w : ws.alpha) w = 0.8 + 0.4 * rng.next_unit_co();
        for (auto& w : ws.beta) w = 0.8 + 0.4 * rng.next_unit_co();
        BitVector msg{1, 0, 1, 1};
        const BitVector x = encode(code, msg);
        std::vector<double> llr(8);
        for (int j = 0; j < 8; ++j) llr[j] = (x[j] ? -1.0 : 1.0) * (0.6 + 1.2 * rng.next_unit_co());
        const BitVector targets = expand_message(code, msg);

        ForwardTrace trace;
        decode_with_trace(llr, code, ws, cfg, trace);
        const GradientSet grads = backward(trace, ws, cfg, targets);
        bool ok = true;
        const double h = 1e-4;
        for (std::size_t i = 0; i < ws.alpha.size(); ++i) {
            WeightSet plus = ws, minus = ws;
            plus.alpha[i] += h;
            minus.alpha[i] -= h;
            const double fd = (decode_loss(llr, code, plus, cfg, targets) -
                               decode_loss(llr, code, minus, cfg, targets)) / (2.0 * h);
            ok &= std::fabs(grads.d_alpha[i] - fd) <=
                  1e-3 * std::max(std::fabs(grads.d_alpha[i]), std::fabs(fd)) + 1e-6;
        }
        check("analytic gradients track finite differences", ok);
    }

    out << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace cli_detail

}  // namespace polarnn

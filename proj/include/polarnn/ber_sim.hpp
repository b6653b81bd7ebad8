// Monte-Carlo BER/FER sweeps with per-frame random streams (results are
// independent of the worker count), binomial confidence intervals, and
// CSV/SVG emission.
#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "polarnn/bp_decoder.hpp"
#include "polarnn/channel.hpp"
#include "polarnn/parallel.hpp"
#include "polarnn/rng.hpp"

namespace polarnn {

struct SnrResult {
    double snr_db = 0.0;
    std::uint64_t frames = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t frame_errors = 0;
    double ber = 0.0;
    double fer = 0.0;
    double ci_low = 0.0;   // 95% Wilson interval on the BER
    double ci_high = 0.0;
};

struct BerReport {
    std::string label;
    WeightMode mode = WeightMode::unweighted;
    bool quantized = false;
    int T = 0;
    int q = 0;
    int c = 0;
    std::uint64_t seed = 0;
    std::vector<SnrResult> per_snr;
    std::uint64_t additions_per_frame = 0;
    std::uint64_t multiplications_per_frame = 0;
    double wall_seconds = 0.0;
};

struct RunConfig {
    int N = 64;
    int K = 32;
    double design_snr_db = 0.0;
    std::vector<double> snr_grid_db{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    std::uint64_t frames_per_snr = 100800;
    // 0: fixed frame budget. >0: stop once this many frame errors have
    // accumulated, or at the frame budget, whichever comes first.
    std::uint64_t min_frame_errors = 0;
    DecoderConfig decoder;
    std::uint64_t seed = 1;
    int workers = 0;
    bool snr_is_esn0 = false;
    std::string label;

    void validate() const {
        if (frames_per_snr < 1) throw std::invalid_argument("run config: frames_per_snr must be >= 1");
        if (snr_grid_db.empty()) throw std::invalid_argument("run config: empty SNR grid");
        decoder.validate();
    }
};

// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

namespace detail {

struct Tally {
    std::uint64_t bit_errors = 0;
    std::uint64_t frame_errors = 0;
};

}  // namespace detail

// Frame f of SNR index si is a pure function of (seed, si, f): decoders
// evaluated with the same seed see identical noise realizations.
inline BerReport run_ber_sweep(const PolarCode& code, const WeightSet& ws, const RunConfig& cfg) {
    cfg.validate();
    ws.validate_for(code.N, cfg.decoder.T);
    if (code.N != cfg.N || code.K != cfg.K) {
        throw std::invalid_argument("run config dimensions disagree with the code");
    }
    const auto start = std::chrono::steady_clock::now();

    BerReport report;
    report.label = cfg.label.empty() ? to_string(ws.mode) : cfg.label;
    report.mode = ws.mode;
    report.quantized = ws.quantized;
    report.T = cfg.decoder.T;
    report.q = ws.q;
    report.c = ws.c;
    report.seed = cfg.seed;

    const double rate_for_sigma = cfg.snr_is_esn0 ? 1.0 : code.rate();
    constexpr std::uint64_t kBlock = 4096;   // early-stop review granularity
    constexpr std::size_t kChunk = 256;      // parallel work unit

    bool counters_measured = false;
    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si) {
        const double snr_db = cfg.snr_grid_db[si];
        const double sigma = sigma_from_snr(snr_db, rate_for_sigma);

        detail::Tally total;
        std::uint64_t frames_done = 0;
        while (frames_done < cfg.frames_per_snr) {
            const std::uint64_t block = std::min(kBlock, cfg.frames_per_snr - frames_done);
            const std::size_t n_chunks = chunk_count(block, kChunk);
            std::vector<detail::Tally> chunk_tallies(n_chunks);

            parallel_chunks(block, kChunk, cfg.workers, [&](std::size_t ci, std::size_t lo, std::size_t hi) {
                detail::Tally local;
                for (std::size_t f = lo; f < hi; ++f) {
                    const std::uint64_t frame_index = frames_done + f;
                    CounterRng rng(cfg.seed, stream::make(stream::kSweep,
                                                          (static_cast<std::uint64_t>(si) << 40) | frame_index));
                    BitVector msg(code.K);
                    for (auto& b : msg) b = rng.next_bit() ? 1 : 0;
                    auto symbols = modulate_bpsk(encode(code, msg));
                    awgn_inplace(symbols, sigma, rng);
                    const auto llr = channel_llr(symbols, sigma);
                    const BitVector est = decode(llr, code, ws, cfg.decoder);
                    std::uint64_t errs = 0;
                    for (int i = 0; i < code.K; ++i) errs += est[i] != msg[i];
                    local.bit_errors += errs;
                    local.frame_errors += errs != 0;
                }
                chunk_tallies[ci] = local;
            });
            for (const auto& t : chunk_tallies) {
                total.bit_errors += t.bit_errors;
                total.frame_errors += t.frame_errors;
            }
            frames_done += block;
            if (cfg.min_frame_errors > 0 && total.frame_errors >= cfg.min_frame_errors) break;
        }

        if (!counters_measured) {
            // Per-frame operation counts do not depend on the data; one
            // instrumented decode measures them.
            CounterRng rng(cfg.seed, stream::make(stream::kSweep, static_cast<std::uint64_t>(si) << 40));
            BitVector msg(code.K);
            for (auto& b : msg) b = rng.next_bit() ? 1 : 0;
            auto symbols = modulate_bpsk(encode(code, msg));
            awgn_inplace(symbols, sigma, rng);
            OpCounters ops;
            decode(channel_llr(symbols, sigma), code, ws, cfg.decoder, &ops);
            report.additions_per_frame = ops.additions;
            report.multiplications_per_frame = ops.multiplications;
            counters_measured = true;
        }

        SnrResult res;
        res.snr_db = snr_db;
        res.frames = frames_done;
        res.bit_errors = total.bit_errors;
        res.frame_errors = total.frame_errors;
        const std::uint64_t bits = frames_done * static_cast<std::uint64_t>(code.K);
        res.ber = static_cast<double>(total.bit_errors) / static_cast<double>(bits);
        res.fer = static_cast<double>(total.frame_errors) / static_cast<double>(frames_done);
        std::tie(res.ci_low, res.ci_high) = wilson_interval(total.bit_errors, bits);
        report.per_snr.push_back(res);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// Shortest round-trip decimal formatting, reproducible byte for byte.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline constexpr int kCsvSchemaVersion = 1;

// One row per (decoder, SNR). wall_seconds is deliberately excluded so
// identical (config, seed, workers) runs produce byte-identical files.
inline void write_csv(std::ostream& out, std::span<const BerReport> reports) {
    out << "schema_version,label,mode,quantized,T,q,c,snr_db,frames,bit_errors,frame_errors,"
           "ber,fer,ci_low,ci_high,additions_per_frame,multiplications_per_frame,seed\n";
    for (const auto& rep : reports) {
        for (const auto& r : rep.per_snr) {
            out << kCsvSchemaVersion << ',' << rep.label << ',' << to_string(rep.mode) << ','
                << (rep.quantized ? 1 : 0) << ',' << rep.T << ',' << rep.q << ',' << rep.c << ','
                << format_double(r.snr_db) << ',' << r.frames << ',' << r.bit_errors << ','
                << r.frame_errors << ',' << format_double(r.ber) << ',' << format_double(r.fer)
                << ',' << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ','
                << rep.additions_per_frame << ',' << rep.multiplications_per_frame << ','
                << rep.seed << '\n';
        }
    }
}

inline std::string csv_string(std::span<const BerReport> reports) {
    std::ostringstream oss;
    write_csv(oss, reports);
    return oss.str();
}

// Static BER-vs-SNR plot, log10 y axis, one polyline per report.
inline void write_svg(std::ostream& out, std::span<const BerReport> reports) {
    const double width = 720, height = 520;
    const double ml = 70, mr = 170, mt = 30, mb = 50;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;

    double snr_min = 1e300, snr_max = -1e300;
    for (const auto& rep : reports) {
        for (const auto& r : rep.per_snr) {
            snr_min = std::min(snr_min, r.snr_db);
            snr_max = std::max(snr_max, r.snr_db);
        }
    }
    if (snr_min >= snr_max) {
        snr_min -= 0.5;
        snr_max += 0.5;
    }
    const double ber_floor = 1e-7;
    const double log_lo = std::log10(ber_floor), log_hi = 0.0;

    const auto x_of = [&](double snr) { return ml + (snr - snr_min) / (snr_max - snr_min) * plot_w; };
    const auto y_of = [&](double ber) {
        const double lv = std::log10(std::max(ber, ber_floor));
        return mt + (log_hi - lv) / (log_hi - log_lo) * plot_h;
    };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    for (int e = 0; e >= -7; --e) {
        const double y = y_of(std::pow(10.0, e));
        out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + plot_w << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e
            << "</text>\n";
    }
    const int snr_ticks = 6;
    for (int i = 0; i <= snr_ticks; ++i) {
        const double snr = snr_min + (snr_max - snr_min) * i / snr_ticks;
        const double x = x_of(snr);
        out << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\"" << mt + plot_h
            << "\" stroke=\"#eeeeee\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << mt + plot_h + 18 << "\" text-anchor=\"middle\">"
            << format_double(snr) << "</text>\n";
    }
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\">SNR (dB)</text>\n";
    out << "<text x=\"18\" y=\"" << mt + plot_h / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + plot_h / 2
        << ")\">BER</text>\n";

    int color_idx = 0;
    for (const auto& rep : reports) {
        const char* color = kColors[color_idx % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : rep.per_snr) out << x_of(r.snr_db) << ',' << y_of(r.ber) << ' ';
        out << "\"/>\n";
        for (const auto& r : rep.per_snr) {
            out << "<circle cx=\"" << x_of(r.snr_db) << "\" cy=\"" << y_of(r.ber)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = mt + 16 + 18 * color_idx;
        out << "<line x1=\"" << ml + plot_w + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + plot_w + 34
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << ml + plot_w + 40 << "\" y=\"" << ly + 4 << "\">" << rep.label
            << "</text>\n";
        ++color_idx;
    }
    out << "</svg>\n";
}

inline void write_csv_file(const std::string& path, std::span<const BerReport> reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open CSV output: " + path);
    write_csv(out, reports);
}

inline void write_svg_file(const std::string& path, std::span<const BerReport> reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open SVG output: " + path);
    write_svg(out, reports);
}

}  // namespace polarnn

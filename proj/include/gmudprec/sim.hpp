// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo SNR sweeps: per (SNR point, trial) draw channels, build the
// configured precoder, push blocks through the link and aggregate BER/SER
// and SINR statistics. Trials are independent work units; every random
// stream is derived from (seed, snr_index, trial, ...) counters and the
// reduction runs in fixed trial order, so the output is byte-identical for
// any worker count. SNR is 1/sigma^2 with unit transmit power and unit total
// average channel gain.

#ifndef GMUDPREC_SIM_HPP
#define GMUDPREC_SIM_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmudprec/channel.hpp"
#include "gmudprec/link.hpp"
#include "gmudprec/numkit.hpp"
#include "gmudprec/precoder.hpp"
#include "gmudprec/rng.hpp"

namespace gmudprec::sim {

using numkit::CMatrix;

enum class PrecoderKind { gmud, svd };
enum class ChannelMode { siso_multipath, mimo_flat };

/// Configuration or input errors; the CLI maps these to exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// File output failures; the CLI maps these to exit code 3.
class io_error : public std::runtime_error {
  public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

struct SimConfig {
    int users = 2;
    int paths = 2;
    link::ModulationKind modulation = link::ModulationKind::qpsk;
    PrecoderKind precoder = PrecoderKind::gmud;
    ChannelMode mode = ChannelMode::siso_multipath;
    double snr_db_min = 0.0;
    double snr_db_max = 24.0;
    double snr_db_step = 2.0;
    int trials = 2000;
    int blocks_per_trial = 50;
    std::uint64_t seed = 1;
    precoder::OptimizerConfig optimizer;
    precoder::Objective objective = precoder::Objective::sum_inv_sinr;
    int workers = 1;
    std::string out_path = "ber.csv";
};

struct BerPoint {
    double snr_db = 0.0;
    double ber = 0.0;
    double ser = 0.0;
    double mean_inv_sinr_pred = 0.0; // mean over trials and users
    double mean_sinr_meas = 0.0;     // per-user pooled SINR, averaged over users
    std::int64_t bits = 0;
    int trials = 0;
};

// ---------------------------------------------------------------------------
// Enum <-> string maps shared by the config file parser and the CLI.

inline link::ModulationKind parse_modulation(const std::string& s) {
    if (s == "qpsk") return link::ModulationKind::qpsk;
    if (s == "qam16") return link::ModulationKind::qam16;
    throw config_error("invalid modulation '" + s + "' (allowed: qpsk, qam16)");
}

inline PrecoderKind parse_precoder(const std::string& s) {
    if (s == "gmud") return PrecoderKind::gmud;
    if (s == "svd") return PrecoderKind::svd;
    throw config_error("invalid precoder '" + s + "' (allowed: gmud, svd)");
}

inline ChannelMode parse_mode(const std::string& s) {
    if (s == "siso-multipath" || s == "siso_multipath") return ChannelMode::siso_multipath;
    if (s == "mimo-flat" || s == "mimo_flat") return ChannelMode::mimo_flat;
    throw config_error("invalid mode '" + s + "' (allowed: siso-multipath, mimo-flat)");
}

inline precoder::Objective parse_objective(const std::string& s) {
    if (s == "sum-inv-sinr" || s == "sum_inv_sinr") return precoder::Objective::sum_inv_sinr;
    if (s == "max-min-sinr" || s == "max_min_sinr") return precoder::Objective::max_min_sinr;
    if (s == "sum-sinr" || s == "sum_sinr") return precoder::Objective::sum_sinr;
    throw config_error("invalid objective '" + s +
                       "' (allowed: sum-inv-sinr, max-min-sinr, sum-sinr)");
}

inline const char* to_string(link::ModulationKind m) {
    return m == link::ModulationKind::qpsk ? "qpsk" : "qam16";
}
inline const char* to_string(PrecoderKind p) { return p == PrecoderKind::gmud ? "gmud" : "svd"; }
inline const char* to_string(ChannelMode m) {
    return m == ChannelMode::siso_multipath ? "siso-multipath" : "mimo-flat";
}
inline const char* to_string(precoder::Objective o) {
    switch (o) {
        case precoder::Objective::sum_inv_sinr: return "sum-inv-sinr";
        case precoder::Objective::max_min_sinr: return "max-min-sinr";
        case precoder::Objective::sum_sinr: return "sum-sinr";
    }
    return "sum-inv-sinr";
}

// ---------------------------------------------------------------------------
// Config file parsing: flat key=value lines, '#' comments, UTF-8.

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw config_error("invalid value for '" + key + "': '" + v + "'");
    }
    if (pos != v.size()) throw config_error("invalid value for '" + key + "': '" + v + "'");
    return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long i = 0;
    try {
        i = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw config_error("invalid value for '" + key + "': '" + v + "'");
    }
    if (pos != v.size()) throw config_error("invalid value for '" + key + "': '" + v + "'");
    return i;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long i = 0;
    try {
        i = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw config_error("invalid value for '" + key + "': '" + v + "'");
    }
    if (pos != v.size()) throw config_error("invalid value for '" + key + "': '" + v + "'");
    return i;
}

inline void apply_key(SimConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "users") cfg.users = static_cast<int>(parse_int(key, value));
    else if (key == "paths") cfg.paths = static_cast<int>(parse_int(key, value));
    else if (key == "modulation") cfg.modulation = parse_modulation(value);
    else if (key == "precoder") cfg.precoder = parse_precoder(value);
    else if (key == "mode") cfg.mode = parse_mode(value);
    else if (key == "snr_db_min") cfg.snr_db_min = parse_double(key, value);
    else if (key == "snr_db_max") cfg.snr_db_max = parse_double(key, value);
    else if (key == "snr_db_step") cfg.snr_db_step = parse_double(key, value);
    else if (key == "trials") cfg.trials = static_cast<int>(parse_int(key, value));
    else if (key == "blocks_per_trial") cfg.blocks_per_trial = static_cast<int>(parse_int(key, value));
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "objective") cfg.objective = parse_objective(value);
    else if (key == "workers") cfg.workers = static_cast<int>(parse_int(key, value));
    else if (key == "out") cfg.out_path = value;
    else if (key == "opt_n_r") cfg.optimizer.n_r = static_cast<int>(parse_int(key, value));
    else if (key == "opt_n_theta") cfg.optimizer.n_theta = static_cast<int>(parse_int(key, value));
    else if (key == "opt_n_power") cfg.optimizer.n_power = static_cast<int>(parse_int(key, value));
    else if (key == "opt_refine_iters") cfg.optimizer.refine_iters = static_cast<int>(parse_int(key, value));
    else if (key == "opt_refine_shrink") cfg.optimizer.refine_shrink = parse_double(key, value);
    else throw config_error("unknown key '" + key + "'");
}

} // namespace detail

/// Applies key=value lines from text on top of the given defaults.
inline SimConfig parse_config_text(const std::string& text, SimConfig cfg = {}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            detail::apply_key(cfg, key, value);
        } catch (const config_error& e) {
            throw config_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline SimConfig parse_config_file(const std::string& path, SimConfig cfg = {}) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), cfg);
}

inline void validate(const SimConfig& cfg) {
    if (cfg.users < 1 || cfg.users > 8) throw config_error("users must be in [1, 8]");
    if (cfg.paths < 1 || cfg.paths > 8) throw config_error("paths must be in [1, 8]");
    if (cfg.mode == ChannelMode::siso_multipath && cfg.paths < cfg.users)
        throw config_error("siso-multipath requires paths >= users (M >= K)");
    if (cfg.mode == ChannelMode::mimo_flat && cfg.users > 2)
        throw config_error("mimo-flat mode uses 2x2 channels and supports at most 2 users");
    if (!(cfg.snr_db_min <= cfg.snr_db_max))
        throw config_error("snr_db_min must be <= snr_db_max");
    if (!(cfg.snr_db_step > 0.0)) throw config_error("snr_db_step must be > 0");
    if (cfg.trials < 1) throw config_error("trials must be >= 1");
    if (cfg.blocks_per_trial < 1) throw config_error("blocks_per_trial must be >= 1");
    if (cfg.workers < 1) throw config_error("workers must be >= 1");
    if (cfg.optimizer.n_r < 2 || cfg.optimizer.n_theta < 2 || cfg.optimizer.n_power < 2)
        throw config_error("optimizer grid counts must be >= 2");
    if (cfg.optimizer.refine_iters < 0) throw config_error("opt_refine_iters must be >= 0");
    if (!(cfg.optimizer.refine_shrink > 0.0) || !(cfg.optimizer.refine_shrink < 1.0))
        throw config_error("opt_refine_shrink must be in (0, 1)");
}

/// Canonical key=value rendering; also the input of the config hash.
inline std::string serialize(const SimConfig& cfg) {
    char buf[64];
    const auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string s;
    s += "users=" + std::to_string(cfg.users) + "\n";
    s += "paths=" + std::to_string(cfg.paths) + "\n";
    s += std::string("modulation=") + to_string(cfg.modulation) + "\n";
    s += std::string("precoder=") + to_string(cfg.precoder) + "\n";
    s += std::string("mode=") + to_string(cfg.mode) + "\n";
    s += "snr_db_min=" + fmt(cfg.snr_db_min) + "\n";
    s += "snr_db_max=" + fmt(cfg.snr_db_max) + "\n";
    s += "snr_db_step=" + fmt(cfg.snr_db_step) + "\n";
    s += "trials=" + std::to_string(cfg.trials) + "\n";
    s += "blocks_per_trial=" + std::to_string(cfg.blocks_per_trial) + "\n";
    s += "seed=" + std::to_string(cfg.seed) + "\n";
    s += std::string("objective=") + to_string(cfg.objective) + "\n";
    s += "opt_n_r=" + std::to_string(cfg.optimizer.n_r) + "\n";
    s += "opt_n_theta=" + std::to_string(cfg.optimizer.n_theta) + "\n";
    s += "opt_n_power=" + std::to_string(cfg.optimizer.n_power) + "\n";
    s += "opt_refine_iters=" + std::to_string(cfg.optimizer.refine_iters) + "\n";
    s += "opt_refine_shrink=" + fmt(cfg.optimizer.refine_shrink) + "\n";
    return s;
}

inline std::uint64_t config_hash(const SimConfig& cfg) {
    const std::string s = serialize(cfg);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Sweep execution.

namespace detail {

struct TrialResult {
    std::int64_t bit_errors = 0;
    std::int64_t bits = 0;
    std::int64_t symbol_errors = 0;
    std::int64_t symbols = 0;
    std::vector<double> direct_power;   // per user
    std::vector<double> residual_power; // per user
    double pred_inv_sinr_sum = 0.0;     // summed over users
};

inline std::vector<CMatrix> draw_channels(const SimConfig& cfg, std::uint64_t trial) {
    if (cfg.mode == ChannelMode::siso_multipath) {
        channel::ChannelEnsembleSpec spec;
        spec.kind = channel::EnsembleKind::siso_multipath;
        spec.users = cfg.users;
        spec.paths = cfg.paths;
        spec.seed = cfg.seed;
        std::vector<CMatrix> out;
        out.reserve(static_cast<std::size_t>(cfg.users));
        for (const channel::MultipathChannel& ch : channel::draw_siso_multipath(spec, trial))
            out.push_back(channel::toeplitz(ch));
        return out;
    }
    channel::ChannelEnsembleSpec spec;
    spec.kind = channel::EnsembleKind::mimo_flat;
    spec.users = cfg.users;
    spec.n_tx = 2;
    spec.n_rx = 2;
    spec.seed = cfg.seed;
    std::vector<CMatrix> out = channel::draw_mimo_flat(spec, trial);
    // Scale the unit-variance draw to unit total average channel gain,
    // matching the multipath ensemble's normalization so both modes see the
    // same received energy at a given SNR.
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n_tx * spec.n_rx));
    for (CMatrix& h : out) h = numkit::cplx{scale, 0.0} * h;
    return out;
}

inline TrialResult run_trial(const SimConfig& cfg, std::size_t snr_idx, double snr_db,
                             std::uint64_t trial) {
    const double sigma2 = std::pow(10.0, -snr_db / 10.0);
    const std::vector<CMatrix> channels = draw_channels(cfg, trial);
    const link::Constellation cst = (cfg.modulation == link::ModulationKind::qpsk)
                                        ? link::Constellation::qpsk()
                                        : link::Constellation::qam16();
    const precoder::PrecoderSolution sol =
        (cfg.precoder == PrecoderKind::gmud)
            ? precoder::optimize(channels, sigma2, cfg.optimizer, cfg.objective)
            : precoder::svd_baseline(channels, sigma2);

    TrialResult res;
    res.direct_power.assign(static_cast<std::size_t>(cfg.users), 0.0);
    res.residual_power.assign(static_cast<std::size_t>(cfg.users), 0.0);
    for (double v : sol.predicted_inv_sinr) res.pred_inv_sinr_sum += v;

    for (int b = 0; b < cfg.blocks_per_trial; ++b) {
        auto stream = rng::Stream::derive(
            cfg.seed, rng::kTagLinkBlock,
            {static_cast<std::uint64_t>(snr_idx), trial, static_cast<std::uint64_t>(b)});
        const link::BlockObservation obs =
            link::simulate_block(channels, sol.G, cst, sigma2, stream);
        for (int k = 0; k < cfg.users; ++k) {
            res.bit_errors += obs.bit_errors[static_cast<std::size_t>(k)];
            res.symbol_errors += obs.symbol_errors[static_cast<std::size_t>(k)];
            res.direct_power[static_cast<std::size_t>(k)] +=
                obs.direct_power[static_cast<std::size_t>(k)];
            res.residual_power[static_cast<std::size_t>(k)] +=
                obs.residual_power[static_cast<std::size_t>(k)];
        }
        res.bits += static_cast<std::int64_t>(cfg.users) * cst.bits_per_symbol;
        res.symbols += cfg.users;
    }
    return res;
}

} // namespace detail

inline std::vector<double> snr_grid(const SimConfig& cfg) {
    std::vector<double> snr;
    for (double s = cfg.snr_db_min; s <= cfg.snr_db_max + 1e-9; s += cfg.snr_db_step)
        snr.push_back(s);
    return snr;
}

/// Runs the full sweep. Work units are (snr_index, trial) pairs pulled from an
/// atomic counter by cfg.workers threads; per-point reduction always folds
/// trials in ascending order, so the result does not depend on the worker
/// count.
inline std::vector<BerPoint> run_sweep(const SimConfig& cfg) {
    validate(cfg);
    const std::vector<double> snr = snr_grid(cfg);
    const std::size_t n_points = snr.size();
    const std::size_t total = n_points * static_cast<std::size_t>(cfg.trials);

    std::vector<detail::TrialResult> results(total);
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error) return;
            }
            const std::size_t snr_idx = i / static_cast<std::size_t>(cfg.trials);
            const std::uint64_t trial = i % static_cast<std::size_t>(cfg.trials);
            try {
                results[i] = detail::run_trial(cfg, snr_idx, snr[snr_idx], trial);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (cfg.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(cfg.workers));
        for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<BerPoint> points(n_points);
    for (std::size_t s = 0; s < n_points; ++s) {
        BerPoint& p = points[s];
        p.snr_db = snr[s];
        p.trials = cfg.trials;
        std::int64_t bit_errors = 0, symbol_errors = 0, symbols = 0;
        std::vector<double> sig(static_cast<std::size_t>(cfg.users), 0.0);
        std::vector<double> resid(static_cast<std::size_t>(cfg.users), 0.0);
        double pred = 0.0;
        for (int t = 0; t < cfg.trials; ++t) {
            const detail::TrialResult& r =
                results[s * static_cast<std::size_t>(cfg.trials) + static_cast<std::size_t>(t)];
            bit_errors += r.bit_errors;
            p.bits += r.bits;
            symbol_errors += r.symbol_errors;
            symbols += r.symbols;
            pred += r.pred_inv_sinr_sum;
            for (int k = 0; k < cfg.users; ++k) {
                sig[static_cast<std::size_t>(k)] += r.direct_power[static_cast<std::size_t>(k)];
                resid[static_cast<std::size_t>(k)] +=
                    r.residual_power[static_cast<std::size_t>(k)];
            }
        }
        p.ber = static_cast<double>(bit_errors) / static_cast<double>(p.bits);
        p.ser = static_cast<double>(symbol_errors) / static_cast<double>(symbols);
        p.mean_inv_sinr_pred = pred / (static_cast<double>(cfg.trials) * cfg.users);
        double mean_sinr = 0.0;
        for (int k = 0; k < cfg.users; ++k)
            mean_sinr += sig[static_cast<std::size_t>(k)] / resid[static_cast<std::size_t>(k)];
        p.mean_sinr_meas = mean_sinr / cfg.users;
    }
    return points;
}

// ---------------------------------------------------------------------------
// Output.

inline std::string render_csv(const std::vector<BerPoint>& points, const SimConfig& cfg) {
    if (points.empty()) throw std::invalid_argument("render_csv: no points");
    std::vector<BerPoint> sorted = points;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const BerPoint& a, const BerPoint& b) { return a.snr_db < b.snr_db; });
    std::string out = "snr_db,ber,ser,mean_inv_sinr_pred,mean_sinr_meas,bits,trials,"
                      "precoder,mode,modulation\n";
    char buf[512];
    for (const BerPoint& p : sorted) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%d,%s,%s,%s\n",
                      p.snr_db, p.ber, p.ser, p.mean_inv_sinr_pred, p.mean_sinr_meas,
                      static_cast<long long>(p.bits), p.trials, to_string(cfg.precoder),
                      to_string(cfg.mode), to_string(cfg.modulation));
        out += buf;
    }
    return out;
}

inline void write_csv(const std::vector<BerPoint>& points, const SimConfig& cfg,
                      const std::string& path) {
    const std::string body = render_csv(points, cfg);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot write CSV to '" + path + "'");
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    f.flush();
    if (!f) throw io_error("write failed for '" + path + "'");
}

inline void emit_summary(const std::vector<BerPoint>& points, const SimConfig& cfg,
                         double elapsed_seconds, std::ostream& os) {
    std::int64_t bits = 0;
    for (const BerPoint& p : points) bits += p.bits;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    os << "config_hash=" << hash << " points=" << points.size() << " total_bits=" << bits
       << " elapsed_s=" << elapsed_seconds << "\n";
}

} // namespace gmudprec::sim

#endif // GMUDPREC_SIM_HPP

// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gmudprec/sim.hpp"

using namespace gmudprec;
using sim::SimConfig;

namespace {

SimConfig tiny_config() {
    SimConfig cfg;
    cfg.users = 2;
    cfg.paths = 2;
    cfg.snr_db_min = 0.0;
    cfg.snr_db_max = 8.0;
    cfg.snr_db_step = 4.0;
    cfg.trials = 6;
    cfg.blocks_per_trial = 3;
    cfg.seed = 5;
    cfg.optimizer.n_r = 3;
    cfg.optimizer.n_theta = 4;
    cfg.optimizer.n_power = 3;
    cfg.optimizer.refine_iters = 1;
    return cfg;
}

} // namespace

TEST_CASE("config parsing") {
    SECTION("empty text keeps defaults and validates") {
        const SimConfig cfg = sim::parse_config_text("");
        CHECK(cfg.users == 2);
        CHECK(cfg.paths == 2);
        CHECK(cfg.trials == 2000);
        CHECK(cfg.blocks_per_trial == 50);
        CHECK(cfg.snr_db_max == 24.0);
        CHECK_NOTHROW(sim::validate(cfg));
    }
    SECTION("comments, blank lines and whitespace are tolerated") {
        const SimConfig cfg = sim::parse_config_text(
            "# experiment\n\n  users = 2 \npaths=3  # wide\nseed=42\n");
        CHECK(cfg.paths == 3);
        CHECK(cfg.seed == 42);
    }
    SECTION("fewer paths than users is rejected with the M >= K rule") {
        const SimConfig cfg = sim::parse_config_text("paths=1\nusers=2\n");
        try {
            sim::validate(cfg);
            FAIL("expected config_error");
        } catch (const sim::config_error& e) {
            CHECK(std::string(e.what()).find("M >= K") != std::string::npos);
        }
    }
    SECTION("bad enum values list the alternatives") {
        try {
            sim::parse_config_text("modulation=qam64\n");
            FAIL("expected config_error");
        } catch (const sim::config_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("qpsk") != std::string::npos);
            CHECK(msg.find("qam16") != std::string::npos);
            CHECK(msg.find("line 1") != std::string::npos);
        }
    }
    SECTION("unknown keys are rejected with their line") {
        try {
            sim::parse_config_text("users=2\nbogus=3\n");
            FAIL("expected config_error");
        } catch (const sim::config_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("bogus") != std::string::npos);
            CHECK(msg.find("line 2") != std::string::npos);
        }
    }
    SECTION("malformed numbers name the key") {
        try {
            sim::parse_config_text("trials=abc\n");
            FAIL("expected config_error");
        } catch (const sim::config_error& e) {
            CHECK(std::string(e.what()).find("trials") != std::string::npos);
        }
    }
    SECTION("later assignments override earlier ones") {
        SimConfig base = sim::parse_config_text("users=1\n");
        const SimConfig cfg = sim::parse_config_text("users=2\n", base);
        CHECK(cfg.users == 2);
    }
}

TEST_CASE("sweep output is deterministic") {
    const SimConfig cfg = tiny_config();
    const auto p1 = sim::run_sweep(cfg);
    const auto p2 = sim::run_sweep(cfg);
    const std::string csv1 = sim::render_csv(p1, cfg);
    const std::string csv2 = sim::render_csv(p2, cfg);
    REQUIRE(csv1 == csv2);

    SECTION("independent of the worker count") {
        for (int workers : {2, 8}) {
            SimConfig multi = cfg;
            multi.workers = workers;
            const auto p = sim::run_sweep(multi);
            REQUIRE(sim::render_csv(p, multi) == csv1);
        }
    }
}

TEST_CASE("sweep bookkeeping") {
    const SimConfig cfg = tiny_config();
    const auto points = sim::run_sweep(cfg);
    REQUIRE(points.size() == 3);
    for (const auto& p : points) {
        CHECK(p.bits == static_cast<std::int64_t>(cfg.trials) * cfg.blocks_per_trial *
                            cfg.users * 2);
        CHECK(p.trials == cfg.trials);
        CHECK(p.ber >= 0.0);
        CHECK(p.ber <= 0.5 + 1e-9);
        CHECK(p.mean_sinr_meas > 0.0);
        CHECK(p.mean_inv_sinr_pred > 0.0);
    }
    CHECK(points[0].snr_db == 0.0);
    CHECK(points[2].snr_db == 8.0);
}

TEST_CASE("csv rendering") {
    const SimConfig cfg = tiny_config();
    const auto points = sim::run_sweep(cfg);
    const std::string csv = sim::render_csv(points, cfg);

    SECTION("header is byte exact") {
        const std::string header = csv.substr(0, csv.find('\n'));
        CHECK(header ==
              "snr_db,ber,ser,mean_inv_sinr_pred,mean_sinr_meas,bits,trials,precoder,mode,"
              "modulation");
    }
    SECTION("one line per point plus the header, ascending snr") {
        int lines = 0;
        for (char c : csv)
            if (c == '\n') ++lines;
        CHECK(lines == static_cast<int>(points.size()) + 1);
        CHECK(csv.find("\n0,") != std::string::npos);
    }
    SECTION("floats round-trip at 17 significant digits") {
        const std::size_t row_start = csv.find('\n') + 1;
        const std::string row = csv.substr(row_start, csv.find('\n', row_start) - row_start);
        double snr = 0, ber = 0;
        REQUIRE(std::sscanf(row.c_str(), "%lf,%lf", &snr, &ber) == 2);
        CHECK(snr == points[0].snr_db);
        CHECK(ber == points[0].ber);
    }
    SECTION("config strings appear in every row") {
        CHECK(csv.find(",gmud,siso-multipath,qpsk") != std::string::npos);
    }
}

TEST_CASE("write_csv reports unwritable paths") {
    const SimConfig cfg = tiny_config();
    std::vector<sim::BerPoint> pts(1);
    pts[0].snr_db = 0.0;
    pts[0].bits = 1;
    CHECK_THROWS_AS(sim::write_csv(pts, cfg, "/nonexistent-dir/out.csv"), sim::io_error);
}

TEST_CASE("config hash is stable and sensitive") {
    const SimConfig a = tiny_config();
    SimConfig b = a;
    CHECK(sim::config_hash(a) == sim::config_hash(b));
    b.seed = a.seed + 1;
    CHECK(sim::config_hash(a) != sim::config_hash(b));
}

TEST_CASE("single-user svd sweep matches the analytic fading bound at 10 dB") {
    SimConfig cfg;
    cfg.users = 1;
    cfg.paths = 2;
    cfg.precoder = sim::PrecoderKind::svd;
    cfg.snr_db_min = cfg.snr_db_max = 10.0;
    cfg.snr_db_step = 2.0;
    cfg.trials = 3000;
    cfg.blocks_per_trial = 30;
    cfg.seed = 8;
    const auto points = sim::run_sweep(cfg);
    REQUIRE(points.size() == 1);

    auto os = rng::Stream::derive(60, 1, {0});
    double oracle = 0.0;
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
        const auto h1 = os.cgauss(0.5), h2 = os.cgauss(0.5);
        const double l1sq = std::norm(h1) + std::norm(h2) + std::abs(h1 * h2);
        oracle += 0.5 * std::erfc(std::sqrt(l1sq / 0.1) / std::sqrt(2.0));
    }
    oracle /= draws;
    INFO("measured " << points[0].ber << " analytic " << oracle);
    CHECK(points[0].ber > oracle / 3.0);
    CHECK(points[0].ber < oracle * 3.0);
}

TEST_CASE("BER is monotone along the sweep up to Monte Carlo noise") {
    SimConfig cfg = tiny_config();
    cfg.trials = 150;
    cfg.blocks_per_trial = 12;
    cfg.snr_db_min = 0.0;
    cfg.snr_db_max = 12.0;
    cfg.snr_db_step = 4.0;
    const auto points = sim::run_sweep(cfg);
    int inversions = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].ber > points[i - 1].ber) {
            const double p = points[i - 1].ber;
            const double sd = std::sqrt(std::max(p * (1 - p), 1e-12) / points[i].bits);
            if (points[i].ber - points[i - 1].ber > 2 * sd) ++inversions;
        }
    }
    CHECK(inversions <= 1);
}

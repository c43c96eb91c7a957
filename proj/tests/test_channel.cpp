// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "gmudprec/channel.hpp"
#include "gmudprec/gmud.hpp"
#include "gmudprec/numkit.hpp"

using namespace gmudprec;
using numkit::CMatrix;
using numkit::cplx;

TEST_CASE("toeplitz structure") {
    SECTION("two taps") {
        const channel::MultipathChannel ch{{cplx{1, 0}, cplx{0, 1}}, 0};
        const CMatrix h = channel::toeplitz(ch);
        REQUIRE(h.rows() == 3);
        REQUIRE(h.cols() == 2);
        CHECK(h(0, 0) == cplx{1, 0});
        CHECK(h(0, 1) == cplx{});
        CHECK(h(1, 0) == cplx{0, 1});
        CHECK(h(1, 1) == cplx{1, 0});
        CHECK(h(2, 0) == cplx{});
        CHECK(h(2, 1) == cplx{0, 1});
    }
    SECTION("single tap degenerates to 1x1") {
        const channel::MultipathChannel ch{{cplx{0.3, -0.4}}, 0};
        const CMatrix h = channel::toeplitz(ch);
        REQUIRE(h.rows() == 1);
        REQUIRE(h.cols() == 1);
        CHECK(h(0, 0) == cplx{0.3, -0.4});
    }
    SECTION("no taps rejected") {
        CHECK_THROWS_AS(channel::toeplitz(channel::MultipathChannel{{}, 0}),
                        std::invalid_argument);
    }
}

TEST_CASE("toeplitz product equals direct convolution") {
    auto s = rng::Stream::derive(31, 0, {0});
    for (int t = 0; t < 1000; ++t) {
        const std::size_t m = 1 + (t % 4);
        channel::MultipathChannel ch;
        ch.taps.resize(m);
        for (cplx& v : ch.taps) v = s.cgauss(1.0);
        CMatrix x(m, 1);
        for (std::size_t i = 0; i < m; ++i) x(i, 0) = s.cgauss(1.0);

        const CMatrix y = numkit::matmul(channel::toeplitz(ch), x);
        for (std::size_t n = 0; n < 2 * m - 1; ++n) {
            cplx conv{};
            for (std::size_t k = 0; k < m; ++k)
                if (n >= k && n - k < m) conv += ch.taps[n - k] * x(k, 0);
            REQUIRE(std::abs(y(n, 0) - conv) < 1e-12);
        }
    }
}

TEST_CASE("toeplitz columns are shifted copies with equal norm") {
    auto s = rng::Stream::derive(32, 0, {0});
    channel::MultipathChannel ch;
    ch.taps = {s.cgauss(1.0), s.cgauss(1.0), s.cgauss(1.0)};
    double tapnorm = 0.0;
    for (cplx v : ch.taps) tapnorm += std::norm(v);
    tapnorm = std::sqrt(tapnorm);
    const CMatrix h = channel::toeplitz(ch);
    for (std::size_t j = 0; j < h.cols(); ++j)
        CHECK(numkit::norm2(h.col(j)) == Catch::Approx(tapnorm).margin(1e-14));
}

TEST_CASE("siso draws are deterministic and correctly scaled") {
    channel::ChannelEnsembleSpec spec;
    spec.kind = channel::EnsembleKind::siso_multipath;
    spec.users = 2;
    spec.paths = 2;
    spec.seed = 77;

    SECTION("repeatability is bitwise") {
        const auto a = channel::draw_siso_multipath(spec, 123);
        const auto b = channel::draw_siso_multipath(spec, 123);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k)
            CHECK(std::memcmp(a[k].taps.data(), b[k].taps.data(),
                              a[k].taps.size() * sizeof(cplx)) == 0);
        const auto c = channel::draw_siso_multipath(spec, 124);
        CHECK(std::memcmp(a[0].taps.data(), c[0].taps.data(),
                          a[0].taps.size() * sizeof(cplx)) != 0);
    }

    SECTION("per-tap variance is 1/M") {
        double acc = 0.0;
        const int n = 100000;
        for (int t = 0; t < n; ++t) {
            const auto chans = channel::draw_siso_multipath(spec, static_cast<std::uint64_t>(t));
            acc += std::norm(chans[0].taps[0]);
        }
        CHECK(acc / n == Catch::Approx(0.5).margin(0.01));
    }

    SECTION("taps of distinct users are uncorrelated") {
        cplx acc{};
        const int n = 100000;
        for (int t = 0; t < n; ++t) {
            const auto chans = channel::draw_siso_multipath(spec, static_cast<std::uint64_t>(t));
            acc += chans[0].taps[0] * std::conj(chans[1].taps[0]);
        }
        CHECK(std::abs(acc) / n < 0.01);
    }

    SECTION("paths < users rejected") {
        channel::ChannelEnsembleSpec bad = spec;
        bad.paths = 1;
        CHECK_THROWS_AS(channel::draw_siso_multipath(bad, 0), std::invalid_argument);
    }
}

TEST_CASE("mimo draws are deterministic, unit variance, decomposable") {
    channel::ChannelEnsembleSpec spec;
    spec.kind = channel::EnsembleKind::mimo_flat;
    spec.users = 2;
    spec.n_tx = 2;
    spec.n_rx = 2;
    spec.seed = 78;

    SECTION("repeatability is bitwise") {
        const auto a = channel::draw_mimo_flat(spec, 5);
        const auto b = channel::draw_mimo_flat(spec, 5);
        CHECK(std::memcmp(a[0].entries().data(), b[0].entries().data(),
                          a[0].entries().size() * sizeof(cplx)) == 0);
    }

    SECTION("entry variance is 1") {
        double acc = 0.0;
        const int n = 100000;
        for (int t = 0; t < n; ++t)
            acc += std::norm(channel::draw_mimo_flat(spec, static_cast<std::uint64_t>(t))[0](0, 0));
        CHECK(acc / n == Catch::Approx(1.0).margin(0.02));
    }

    SECTION("a 2x2 draw feeds the decomposition") {
        const auto h = channel::draw_mimo_flat(spec, 9)[0];
        const auto sv = numkit::svd(h);
        const double r = 0.5 * (sv.singular_values[0] + sv.singular_values[1]);
        const auto f = gmud::gmud_2x2(h, gmud::GmudParams(r, 1.0));
        const CMatrix rec = numkit::matmul(numkit::matmul(f.P, f.R), numkit::adjoint(f.Q));
        CHECK(numkit::frobenius_norm(rec - h) < 1e-9 * numkit::frobenius_norm(h));
    }
}

TEST_CASE("condition statistics") {
    channel::ChannelEnsembleSpec siso;
    siso.kind = channel::EnsembleKind::siso_multipath;
    siso.users = 1;
    siso.paths = 2;
    siso.seed = 99;

    channel::ChannelEnsembleSpec mimo;
    mimo.kind = channel::EnsembleKind::mimo_flat;
    mimo.users = 1;
    mimo.n_tx = 2;
    mimo.n_rx = 2;
    mimo.seed = 99;

    SECTION("single trial is reproducible") {
        const auto a = channel::condition_stats(siso, 1);
        const auto b = channel::condition_stats(siso, 1);
        CHECK(a.median == b.median);
        CHECK(a.mean == b.mean);
    }

    SECTION("two-tap Toeplitz ensembles are better conditioned than 2x2 Gaussian") {
        const auto st = channel::condition_stats(siso, 10000);
        const auto mt = channel::condition_stats(mimo, 10000);
        INFO("toeplitz median " << st.median << ", gaussian median " << mt.median);
        CHECK(st.median < mt.median);
        // two equal-power taps bound the Toeplitz condition number by sqrt(3)
        CHECK(st.median <= std::sqrt(3.0) + 1e-12);
    }

    SECTION("near single tap approaches condition number 1") {
        channel::MultipathChannel ch{{cplx{1, 0}, cplx{1e-9, 0}}, 0};
        CHECK(numkit::condition_number(channel::toeplitz(ch)) == Catch::Approx(1.0).margin(1e-6));
    }
}

// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstring>
#include <limits>

#include "gmudprec/numkit.hpp"
#include "gmudprec/rng.hpp"

using namespace gmudprec;
using numkit::CMatrix;
using numkit::cplx;

namespace {

CMatrix random_matrix(std::size_t rows, std::size_t cols, rng::Stream& s) {
    CMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = s.cgauss(1.0);
    return m;
}

double reconstruction_error(const numkit::SvdResult& r, const CMatrix& a) {
    const CMatrix s = CMatrix::diag_embed(r.singular_values, a.rows(), a.cols());
    const CMatrix rec = numkit::matmul(numkit::matmul(r.U, s), numkit::adjoint(r.V));
    return numkit::frobenius_norm(rec - a);
}

double unitarity_error(const CMatrix& u) {
    const CMatrix g = numkit::matmul(numkit::adjoint(u), u);
    return numkit::frobenius_norm(g - CMatrix::identity(u.rows()));
}

// Independent oracle: singular values of a 2-column matrix from the
// characteristic polynomial of its 2x2 Gramian.
std::pair<double, double> gramian_singular_values(const CMatrix& a) {
    const CMatrix g = numkit::matmul(numkit::adjoint(a), a);
    REQUIRE(g.rows() == 2);
    const double tr = g(0, 0).real() + g(1, 1).real();
    const double det = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)).real();
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return {std::sqrt((tr + disc) / 2.0), std::sqrt(std::max(0.0, (tr - disc) / 2.0))};
}

} // namespace

TEST_CASE("CMatrix construction enforces invariants") {
    CHECK_THROWS_AS(CMatrix(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(CMatrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(CMatrix(1, 2, {cplx{1.0, 0.0}, cplx{inf, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(CMatrix(1, 1, {cplx{std::nan(""), 0.0}}), std::invalid_argument);
}

TEST_CASE("basic operations") {
    auto s = rng::Stream::derive(7, 0, {0});
    const CMatrix a = random_matrix(3, 2, s);

    SECTION("adjoint is an involution") {
        const CMatrix aa = numkit::adjoint(numkit::adjoint(a));
        CHECK(numkit::frobenius_norm(aa - a) == 0.0);
    }
    SECTION("matmul with identity") {
        const CMatrix ai = numkit::matmul(a, CMatrix::identity(2));
        CHECK(numkit::frobenius_norm(ai - a) == 0.0);
        CHECK_THROWS_AS(numkit::matmul(a, CMatrix::identity(3)), std::invalid_argument);
    }
    SECTION("frobenius norm of identity") {
        CHECK(numkit::frobenius_norm(CMatrix::identity(2)) == Catch::Approx(std::sqrt(2.0)));
    }
    SECTION("diag_embed places values on the main diagonal") {
        const CMatrix d = CMatrix::diag_embed({2.0, 1.0}, 3, 2);
        CHECK(d(0, 0) == cplx{2.0, 0.0});
        CHECK(d(1, 1) == cplx{1.0, 0.0});
        CHECK(d(2, 0) == cplx{});
        CHECK_THROWS_AS(CMatrix::diag_embed({1.0, 1.0, 1.0}, 3, 2), std::invalid_argument);
    }
}

TEST_CASE("svd handles the documented special cases") {
    SECTION("identity") {
        const auto r = numkit::svd(CMatrix::identity(2));
        CHECK(r.singular_values[0] == Catch::Approx(1.0));
        CHECK(r.singular_values[1] == Catch::Approx(1.0));
        CHECK(numkit::frobenius_norm(r.U - CMatrix::identity(2)) < 1e-14);
        CHECK(numkit::frobenius_norm(r.V - CMatrix::identity(2)) < 1e-14);
    }
    SECTION("diagonal with a zero") {
        const auto r = numkit::svd(CMatrix::diag_embed({3.0, 0.0}, 2, 2));
        CHECK(r.singular_values[0] == Catch::Approx(3.0));
        CHECK(r.singular_values[1] == 0.0);
        CHECK(unitarity_error(r.U) < 1e-12);
    }
    SECTION("Toeplitz of h = [1, j] has singular values sqrt(3) and 1") {
        const CMatrix a(3, 2,
                        {cplx{1, 0}, cplx{0, 0}, cplx{0, 1}, cplx{1, 0}, cplx{0, 0}, cplx{0, 1}});
        const auto r = numkit::svd(a);
        const auto [s1, s2] = gramian_singular_values(a);
        CHECK(s1 == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
        CHECK(s2 == Catch::Approx(1.0).margin(1e-12));
        CHECK(r.singular_values[0] == Catch::Approx(s1).margin(1e-9));
        CHECK(r.singular_values[1] == Catch::Approx(s2).margin(1e-9));
        CHECK(reconstruction_error(r, a) < 1e-9 * numkit::frobenius_norm(a));
    }
    SECTION("non-finite input is rejected") {
        CMatrix a = CMatrix::identity(2);
        a(0, 0) = cplx{std::numeric_limits<double>::infinity(), 0.0};
        CHECK_THROWS_AS(numkit::svd(a), std::invalid_argument);
    }
    SECTION("wide input goes through the transposed path") {
        auto s = rng::Stream::derive(11, 0, {0});
        const CMatrix a = random_matrix(2, 3, s);
        const auto r = numkit::svd(a);
        CHECK(r.U.rows() == 2);
        CHECK(r.V.rows() == 3);
        CHECK(reconstruction_error(r, a) < 1e-9 * numkit::frobenius_norm(a));
    }
}

TEST_CASE("svd properties on random ensembles") {
    auto s = rng::Stream::derive(42, 1, {0});
    double worst_rec = 0.0, worst_unit = 0.0, worst_sv = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t rows = (trial % 2 == 0) ? 3 : 2;
        const CMatrix a = random_matrix(rows, 2, s);
        const auto r = numkit::svd(a);
        worst_rec = std::max(worst_rec, reconstruction_error(r, a) / numkit::frobenius_norm(a));
        worst_unit = std::max(worst_unit, unitarity_error(r.U));
        worst_unit = std::max(worst_unit, unitarity_error(r.V));
        const auto [s1, s2] = gramian_singular_values(a);
        worst_sv = std::max(worst_sv, std::abs(r.singular_values[0] - s1));
        worst_sv = std::max(worst_sv, std::abs(r.singular_values[1] - s2));
        REQUIRE(r.singular_values[0] >= r.singular_values[1]);
    }
    CHECK(worst_rec < 1e-9);
    CHECK(worst_unit < 1e-10);
    CHECK(worst_sv < 1e-9);
}

TEST_CASE("svd is deterministic and phase-fixed") {
    auto s = rng::Stream::derive(3, 2, {5});
    const CMatrix a = random_matrix(3, 2, s);
    const auto r1 = numkit::svd(a);
    const auto r2 = numkit::svd(a);
    CHECK(std::memcmp(r1.U.entries().data(), r2.U.entries().data(),
                      r1.U.entries().size() * sizeof(cplx)) == 0);
    CHECK(std::memcmp(r1.V.entries().data(), r2.V.entries().data(),
                      r1.V.entries().size() * sizeof(cplx)) == 0);
    for (std::size_t j = 0; j < 2; ++j) {
        cplx first{};
        for (std::size_t i = 0; i < 2; ++i)
            if (std::abs(r1.V(i, j)) > 1e-9) {
                first = r1.V(i, j);
                break;
            }
        CHECK(first.imag() == Catch::Approx(0.0).margin(1e-14));
        CHECK(first.real() >= 0.0);
    }
}

TEST_CASE("hermitian_solve") {
    SECTION("identity and scaled identity") {
        const CMatrix b(2, 1, {cplx{2, 0}, cplx{4, 0}});
        const CMatrix x1 = numkit::hermitian_solve(CMatrix::identity(2), b);
        CHECK(numkit::frobenius_norm(x1 - b) < 1e-15);
        const CMatrix x2 = numkit::hermitian_solve(cplx{2, 0} * CMatrix::identity(2), b);
        CHECK(x2(0, 0).real() == Catch::Approx(1.0));
        CHECK(x2(1, 0).real() == Catch::Approx(2.0));
    }
    SECTION("residual on random regularized normal equations") {
        auto s = rng::Stream::derive(9, 3, {0});
        for (int t = 0; t < 200; ++t) {
            const CMatrix h = random_matrix(3, 2, s);
            CMatrix a = numkit::matmul(numkit::adjoint(h), h);
            for (std::size_t i = 0; i < 2; ++i) a(i, i) += 0.1;
            const CMatrix b = random_matrix(2, 1, s);
            const CMatrix x = numkit::hermitian_solve(a, b);
            const double res = numkit::frobenius_norm(numkit::matmul(a, x) - b);
            REQUIRE(res <= 1e-9 * numkit::norm2(b));
        }
    }
    SECTION("non positive definite input is detected") {
        const CMatrix a(2, 2, {cplx{1, 0}, cplx{1, 0}, cplx{1, 0}, cplx{1, 0}});
        const CMatrix b(2, 1, {cplx{1, 0}, cplx{1, 0}});
        CHECK_THROWS_AS(numkit::hermitian_solve(a, b), numkit::numerical_error);
    }
}

TEST_CASE("condition_number") {
    CHECK(numkit::condition_number(CMatrix::identity(3)) == Catch::Approx(1.0));
    CHECK(numkit::condition_number(CMatrix::diag_embed({2.0, 1.0}, 2, 2)) == Catch::Approx(2.0));

    const CMatrix rank1(2, 2, {cplx{1, 0}, cplx{1, 0}, cplx{1, 0}, cplx{1, 0}});
    CHECK(std::isinf(numkit::condition_number(rank1)));

    CHECK_THROWS_AS(numkit::condition_number(CMatrix(2, 2)), std::invalid_argument);

    auto s = rng::Stream::derive(5, 4, {0});
    for (int t = 0; t < 50; ++t) {
        const CMatrix a = random_matrix(3, 2, s);
        const double c1 = numkit::condition_number(a);
        const double c2 = numkit::condition_number(cplx{std::exp(1.0), 0.0} * a);
        REQUIRE(c1 == Catch::Approx(c2).epsilon(1e-12));
    }
}

// SPDX-License-Identifier: Apache-2.0
//
// Generalized multi-unitary decomposition H = P R Q^H. For a prescribed
// leading gain r between the smallest and largest singular value, a Givens
// rotation pair (W, X) reshapes the singular value matrix into a lower
// triangular block whose (0,0) entry is r, and a one-parameter family of
// diagonal phase matrices produces infinitely many unitary pairs (P, Q)
// sharing that single R. The first column of Q serves as a transmission
// beam; sweeping (r, theta) sweeps the beam over a disc of directions
// centered at the principal right singular vector.

#ifndef GMUDPREC_GMUD_HPP
#define GMUDPREC_GMUD_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmudprec/numkit.hpp"

namespace gmudprec::gmud {

using numkit::CMatrix;
using numkit::cplx;

/// Two singular values closer than this are treated as equal; the rotation
/// coefficient system degenerates there and the identity rotation is used.
inline constexpr double kDegenerateGap = 1e-12;

struct GmudParams {
    double r = 1.0;     // prescribed (0,0) gain of R
    double theta = 0.0; // phase-rotation direction, normalized into [0, 2*pi)

    GmudParams() = default;
    GmudParams(double r_in, double theta_in) : r(r_in) {
        if (!(r_in > 0.0) || !std::isfinite(r_in))
            throw std::invalid_argument("GmudParams: r must be positive and finite");
        if (!std::isfinite(theta_in))
            throw std::invalid_argument("GmudParams: theta must be finite");
        const double two_pi = 2.0 * std::numbers::pi;
        theta = std::fmod(theta_in, two_pi);
        if (theta < 0.0) theta += two_pi;
    }
};

/// Givens coefficients (a, b) for the left rotation and (c, s) for the right
/// one, all on the principal (non-negative) branch.
struct RotationCoeffs {
    double a = 1.0, b = 0.0, c = 1.0, s = 0.0;
};

struct GmudFactors {
    CMatrix P;
    CMatrix R;
    CMatrix Q;
    GmudParams params;
};

/// Solves  a*c*l1 + b*s*l2 = r,  a*s*l1 - b*c*l2 = 0  under a^2 + b^2 = 1,
/// c^2 + s^2 = 1. Requires l2 <= r <= l1. Closed form:
///   a = sqrt((r^2 - l2^2) / (l1^2 - l2^2)),  b = sqrt(1 - a^2),
///   c = (l1 / r) * a,                        s = (l2 / r) * b.
/// Equal singular values force r = l1 and the identity rotation.
inline RotationCoeffs rotation_coeffs(double lambda1, double lambda2, double r) {
    if (!(lambda1 > 0.0))
        throw std::invalid_argument("rotation_coeffs: lambda1 must be positive");
    if (lambda2 < 0.0 || lambda2 > lambda1)
        throw std::invalid_argument("rotation_coeffs: need 0 <= lambda2 <= lambda1");

    if (lambda1 - lambda2 <= kDegenerateGap) {
        if (std::abs(r - lambda1) > 1e-9 * std::max(1.0, lambda1))
            throw std::invalid_argument(
                "rotation_coeffs: equal singular values admit only r = lambda1");
        return RotationCoeffs{1.0, 0.0, 1.0, 0.0};
    }

    const double slack = 1e-12 * (1.0 + lambda1);
    if (r < lambda2 - slack || r > lambda1 + slack)
        throw std::invalid_argument("rotation_coeffs: r outside [lambda2, lambda1]");
    const double rc = std::min(std::max(r, lambda2), lambda1);

    const double denom = lambda1 * lambda1 - lambda2 * lambda2;
    const double a = std::sqrt(std::max(0.0, (rc * rc - lambda2 * lambda2) / denom));
    const double b = std::sqrt(std::max(0.0, (lambda1 * lambda1 - rc * rc) / denom));
    return RotationCoeffs{a, b, (lambda1 / rc) * a, (lambda2 / rc) * b};
}

/// Remaining entries of the 2x2 lower-triangular block:
///   z1 = b*c*l1 - a*s*l2,  z2 = b*s*l1 + a*c*l2.
/// They satisfy r*z2 = l1*l2 and r^2 + z1^2 + z2^2 = l1^2 + l2^2.
inline std::pair<double, double> r_elements(const RotationCoeffs& k, double lambda1,
                                            double lambda2) {
    return {k.b * k.c * lambda1 - k.a * k.s * lambda2,
            k.b * k.s * lambda1 + k.a * k.c * lambda2};
}

namespace detail {

inline CMatrix phase_diag(std::size_t n, double theta) {
    CMatrix m = CMatrix::identity(n);
    m(0, 0) = std::polar(1.0, theta);
    return m;
}

// Left/right Givens acting on coordinates {0, last} with identity elsewhere.
inline CMatrix givens_left(std::size_t n, std::size_t last, double a, double b) {
    CMatrix w = CMatrix::identity(n);
    w(0, 0) = a;
    w(0, last) = b;
    w(last, 0) = -b;
    w(last, last) = a;
    return w;
}

} // namespace detail

/// GMUD of a tall matrix with two columns. P = U * M1(theta) * W and
/// Q = V * M2(theta) * X share the theta-independent
/// R = [[r, 0], [z1, z2], [0, 0], ...].
inline GmudFactors gmud_2x2(const CMatrix& H, const GmudParams& params) {
    if (H.cols() != 2 || H.rows() < 2)
        throw std::invalid_argument("gmud_2x2: H must be P x 2 with P >= 2");
    const std::size_t p = H.rows();

    const numkit::SvdResult sv = numkit::svd(H);
    const double l1 = sv.singular_values[0];
    const double l2 = sv.singular_values[1];

    const RotationCoeffs k = rotation_coeffs(l1, l2, params.r);
    const auto [z1, z2] = r_elements(k, l1, l2);

    const CMatrix W = detail::givens_left(p, 1, k.a, k.b);
    const CMatrix X = detail::givens_left(2, 1, k.c, k.s);

    CMatrix R(p, 2);
    R(0, 0) = params.r;
    R(1, 0) = z1;
    R(1, 1) = z2;

    CMatrix P = numkit::matmul(numkit::matmul(sv.U, detail::phase_diag(p, params.theta)), W);
    CMatrix Q = numkit::matmul(numkit::matmul(sv.V, detail::phase_diag(2, params.theta)), X);
    return GmudFactors{std::move(P), std::move(R), std::move(Q), params};
}

/// First column of Q for a cached decomposition: q = c * e^{j theta} * v_1 -
/// s * v_min, where the rotation pairs the largest and smallest singular
/// values. Used directly by the precoder so the SVD is computed once per
/// channel rather than once per candidate beam.
inline CMatrix beam_from_svd(const numkit::SvdResult& sv, double r, double theta) {
    const std::size_t m = sv.V.rows();
    const double l1 = sv.singular_values.front();
    const double lmin = (m == 1) ? l1 : sv.singular_values.back();
    const RotationCoeffs k =
        (m == 1) ? RotationCoeffs{1.0, 0.0, 1.0, 0.0} : rotation_coeffs(l1, lmin, r);
    const cplx phase = std::polar(1.0, theta);
    CMatrix q(m, 1);
    for (std::size_t i = 0; i < m; ++i) {
        q(i, 0) = k.c * phase * sv.V(i, 0);
        if (m > 1) q(i, 0) -= k.s * sv.V(i, m - 1);
    }
    return q;
}

/// Per-user transmission beam: the first column of Q_{r,theta}. Unit norm.
inline CMatrix beam(const CMatrix& H, const GmudParams& params) {
    if (H.rows() < H.cols()) throw std::invalid_argument("beam: H must be tall");
    return beam_from_svd(numkit::svd(H), params.r, params.theta);
}

/// General-K lower-triangular GMUD with prescribed diagonal. Recursive
/// deflation: the two-singular-value step pins diag_targets[t] at position
/// (t, t), then the trailing block is re-decomposed with a fresh SVD and the
/// procedure repeats. diag_targets must be multiplicatively majorized by the
/// singular values (prefix products no larger, total product equal); thetas
/// supplies one phase parameter per step.
inline GmudFactors gmud_general(const CMatrix& H, const std::vector<double>& diag_targets,
                                const std::vector<double>& thetas) {
    const std::size_t p = H.rows();
    const std::size_t m = H.cols();
    const std::size_t K = diag_targets.size();
    if (m > p) throw std::invalid_argument("gmud_general: H must be tall (K = M <= P)");
    if (K != m) throw std::invalid_argument("gmud_general: diag_targets length must equal cols");
    if (thetas.size() != K)
        throw std::invalid_argument("gmud_general: thetas length must equal cols");
    for (double t : diag_targets)
        if (!(t > 0.0) || !std::isfinite(t))
            throw std::invalid_argument("gmud_general: diagonal targets must be positive");

    // Multiplicative majorization precheck against the singular values.
    {
        const numkit::SvdResult sv = numkit::svd(H);
        double pr = 1.0, pl = 1.0;
        for (std::size_t n = 0; n < K; ++n) {
            pr *= diag_targets[n];
            pl *= sv.singular_values[n];
            const bool last = (n + 1 == K);
            const double tol = 1e-8 * std::max(pl, 1e-300);
            if ((!last && pr > pl + tol) || (last && std::abs(pr - pl) > tol))
                throw std::invalid_argument(
                    "gmud_general: diagonal targets violate majorization at prefix " +
                    std::to_string(n + 1));
        }
    }

    CMatrix C = H;
    CMatrix P_acc = CMatrix::identity(p);
    CMatrix Q_acc = CMatrix::identity(m);

    for (std::size_t t = 0; t < K; ++t) {
        const std::size_t pr = p - t, mr = m - t;
        const CMatrix B = C.block(t, t, pr, mr);
        const numkit::SvdResult sv = numkit::svd(B);
        const double lmax = sv.singular_values.front();
        const double lmin = sv.singular_values[mr - 1];

        const double slack = 1e-9 * (1.0 + lmax);
        if (diag_targets[t] < lmin - slack || diag_targets[t] > lmax + slack)
            throw std::invalid_argument(
                "gmud_general: target outside the running singular-value interval at prefix " +
                std::to_string(t + 1));
        const double rt = std::min(std::max(diag_targets[t], lmin), lmax);

        CMatrix P_step(pr, pr);
        CMatrix Q_step(mr, mr);
        CMatrix R_block(pr, mr);

        const CMatrix M1 = detail::phase_diag(pr, thetas[t]);
        const CMatrix M2 = detail::phase_diag(mr, thetas[t]);

        if (mr == 1) {
            P_step = numkit::matmul(sv.U, M1);
            Q_step = numkit::matmul(sv.V, M2);
            R_block(0, 0) = lmax;
        } else {
            const RotationCoeffs k = rotation_coeffs(lmax, lmin, rt);
            const auto [z1, z2] = r_elements(k, lmax, lmin);
            const std::size_t last = mr - 1;
            P_step = numkit::matmul(numkit::matmul(sv.U, M1),
                                    detail::givens_left(pr, last, k.a, k.b));
            Q_step = numkit::matmul(numkit::matmul(sv.V, M2),
                                    detail::givens_left(mr, last, k.c, k.s));
            R_block(0, 0) = rt;
            R_block(last, 0) = z1;
            R_block(last, last) = z2;
            for (std::size_t i = 1; i + 1 < mr; ++i) R_block(i, i) = sv.singular_values[i];
        }

        C.set_block(t, t, R_block);
        if (t > 0) {
            const CMatrix E = C.block(t, 0, pr, t);
            C.set_block(t, 0, numkit::matmul(numkit::adjoint(P_step), E));
        }

        CMatrix P_embed = CMatrix::identity(p);
        P_embed.set_block(t, t, P_step);
        CMatrix Q_embed = CMatrix::identity(m);
        Q_embed.set_block(t, t, Q_step);
        P_acc = numkit::matmul(P_acc, P_embed);
        Q_acc = numkit::matmul(Q_acc, Q_embed);
    }

    return GmudFactors{std::move(P_acc), std::move(C), std::move(Q_acc),
                       GmudParams(diag_targets[0], thetas[0])};
}

} // namespace gmudprec::gmud

#endif // GMUDPREC_GMUD_HPP

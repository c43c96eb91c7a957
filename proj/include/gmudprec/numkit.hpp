// SPDX-License-Identifier: Apache-2.0
//
// Dense complex matrix arithmetic for small matrices: SVD, Hermitian solves,
// condition numbers. Everything here targets dimensions of at most a few
// rows/columns, so algorithms are chosen for robustness and determinism
// rather than asymptotic speed.

#ifndef GMUDPREC_NUMKIT_HPP
#define GMUDPREC_NUMKIT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmudprec::numkit {

using cplx = std::complex<double>;

/// Thrown when a factorization or solve detects numerical degeneracy
/// (e.g. a non-positive-definite normal-equations matrix).
class numerical_error : public std::runtime_error {
  public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

/// Row-major dense complex matrix. Column vectors are rows x 1 matrices.
/// Construction from explicit entries rejects non-finite values.
class CMatrix {
  public:
    CMatrix() = default;

    CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("CMatrix: dimensions must be positive");
    }

    CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
        : rows_(rows), cols_(cols), a_(std::move(entries)) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("CMatrix: dimensions must be positive");
        if (a_.size() != rows * cols)
            throw std::invalid_argument("CMatrix: entry count does not match dimensions");
        for (const cplx& v : a_)
            if (!is_finite(v))
                throw std::invalid_argument("CMatrix: non-finite entry");
    }

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Places a real sequence on the main diagonal of a rows x cols zero matrix.
    static CMatrix diag_embed(const std::vector<double>& d, std::size_t rows, std::size_t cols) {
        if (d.size() > std::min(rows, cols))
            throw std::invalid_argument("diag_embed: diagonal longer than min(rows, cols)");
        CMatrix m(rows, cols);
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static CMatrix column(const std::vector<cplx>& v) { return CMatrix(v.size(), 1, v); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const std::vector<cplx>& entries() const { return a_; }

    CMatrix col(std::size_t j) const {
        CMatrix c(rows_, 1);
        for (std::size_t i = 0; i < rows_; ++i) c(i, 0) = (*this)(i, j);
        return c;
    }

    CMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_)
            throw std::invalid_argument("block: out of range");
        CMatrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const CMatrix& b) {
        if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
            throw std::invalid_argument("set_block: out of range");
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> a_;
};

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree");
    CMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline CMatrix adjoint(const CMatrix& a) {
    CMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = std::conj(a(i, j));
    return t;
}

inline CMatrix operator+(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("operator+: dimension mismatch");
    CMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
    return c;
}

inline CMatrix operator-(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("operator-: dimension mismatch");
    CMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
}

inline CMatrix operator*(cplx s, const CMatrix& a) {
    CMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
    return c;
}

inline double frobenius_norm(const CMatrix& a) {
    double s = 0.0;
    for (const cplx& v : a.entries()) s += std::norm(v);
    return std::sqrt(s);
}

/// x^H y for column vectors.
inline cplx inner(const CMatrix& x, const CMatrix& y) {
    if (x.cols() != 1 || y.cols() != 1 || x.rows() != y.rows())
        throw std::invalid_argument("inner: needs equal-length column vectors");
    cplx s{};
    for (std::size_t i = 0; i < x.rows(); ++i) s += std::conj(x(i, 0)) * y(i, 0);
    return s;
}

inline double norm2(const CMatrix& x) {
    if (x.cols() != 1) throw std::invalid_argument("norm2: needs a column vector");
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += std::norm(x(i, 0));
    return std::sqrt(s);
}

/// Full singular value decomposition A = U * diag_embed(s, P x M) * V^H with
/// U (P x P) and V (M x M) unitary and s sorted descending.
struct SvdResult {
    CMatrix U;
    std::vector<double> singular_values;
    CMatrix V;
};

namespace detail {

// Extends the orthonormal set held in the first `have` columns of U to a full
// basis. Candidates are the canonical basis vectors taken in index order, so
// the completion is deterministic.
inline void complete_basis(CMatrix& U, std::vector<std::size_t> holes) {
    const std::size_t m = U.rows();
    std::vector<std::size_t> filled;
    for (std::size_t j = 0; j < U.cols(); ++j)
        if (std::find(holes.begin(), holes.end(), j) == holes.end()) filled.push_back(j);

    std::size_t cand = 0;
    for (std::size_t hole : holes) {
        for (; cand < m; ++cand) {
            std::vector<cplx> w(m);
            w[cand] = 1.0;
            // Two passes of modified Gram-Schmidt against everything placed so far.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t j : filled) {
                    cplx p{};
                    for (std::size_t i = 0; i < m; ++i) p += std::conj(U(i, j)) * w[i];
                    for (std::size_t i = 0; i < m; ++i) w[i] -= p * U(i, j);
                }
            }
            double nw = 0.0;
            for (const cplx& v : w) nw += std::norm(v);
            nw = std::sqrt(nw);
            if (nw > 0.3) {
                for (std::size_t i = 0; i < m; ++i) U(i, hole) = w[i] / nw;
                filled.push_back(hole);
                ++cand;
                break;
            }
        }
    }
}

// One-sided Jacobi on the columns of B (m >= n). On return the columns of B
// are mutually orthogonal and V accumulates the right rotations.
inline void jacobi_sweep_columns(CMatrix& B, CMatrix& V) {
    const std::size_t m = B.rows();
    const std::size_t n = B.cols();
    const int max_sweeps = 60;
    const double tol = 1e-15;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        // Fixed cyclic order (p, q) ascending; this is also the tie-break rule
        // for repeated singular values.
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0;
                cplx apq{};
                for (std::size_t i = 0; i < m; ++i) {
                    app += std::norm(B(i, p));
                    aqq += std::norm(B(i, q));
                    apq += std::conj(B(i, p)) * B(i, q);
                }
                const double absg = std::abs(apq);
                if (absg <= tol * std::sqrt(app * aqq) || absg == 0.0) continue;
                rotated = true;

                const cplx w = apq / absg;
                const double tau = (aqq - app) / (2.0 * absg);
                const double t = (tau >= 0.0) ? -1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * cs;

                for (std::size_t i = 0; i < m; ++i) {
                    const cplx bp = B(i, p), bq = B(i, q);
                    B(i, p) = cs * bp + sn * std::conj(w) * bq;
                    B(i, q) = -sn * w * bp + cs * bq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx vp = V(i, p), vq = V(i, q);
                    V(i, p) = cs * vp + sn * std::conj(w) * vq;
                    V(i, q) = -sn * w * vp + cs * vq;
                }
            }
        }
        if (!rotated) break;
    }
}

inline SvdResult svd_tall(const CMatrix& A) {
    const std::size_t m = A.rows();
    const std::size_t n = A.cols();
    CMatrix B = A;
    CMatrix V = CMatrix::identity(n);
    jacobi_sweep_columns(B, V);

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += std::norm(B(i, j));
        sigma[j] = std::sqrt(s);
    }

    // Sort descending, stable in the original column order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    const double smax = sigma.empty() ? 0.0 : sigma[order[0]];
    const double rank_tol = smax * 1e-13;

    CMatrix U(m, m);
    CMatrix Vs(n, n);
    std::vector<double> s_sorted(n);
    std::vector<std::size_t> holes;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        s_sorted[j] = sigma[src];
        for (std::size_t i = 0; i < n; ++i) Vs(i, j) = V(i, src);
        if (sigma[src] > rank_tol && sigma[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) U(i, j) = B(i, src) / sigma[src];
        } else {
            holes.push_back(j);
        }
    }
    for (std::size_t j = n; j < m; ++j) holes.push_back(j);
    complete_basis(U, holes);

    // Phase convention: make the first entry of each V column with magnitude
    // above 1e-9 real and non-negative, compensating in U, so the overall
    // factorization is reproducible across runs.
    for (std::size_t j = 0; j < n; ++j) {
        cplx pivot{};
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(Vs(i, j)) > 1e-9) {
                pivot = Vs(i, j);
                break;
            }
        }
        if (pivot == cplx{}) continue;
        const cplx alpha = std::conj(pivot) / std::abs(pivot);
        for (std::size_t i = 0; i < n; ++i) Vs(i, j) *= alpha;
        for (std::size_t i = 0; i < m; ++i) U(i, j) *= alpha;
    }
    return SvdResult{std::move(U), std::move(s_sorted), std::move(Vs)};
}

} // namespace detail

/// One-sided Jacobi SVD, exact enough for the tiny matrices used here.
/// Deterministic for a fixed input, including the handling of repeated
/// singular values (cyclic sweep order) and per-column phases.
inline SvdResult svd(const CMatrix& A) {
    for (const cplx& v : A.entries())
        if (!is_finite(v)) throw std::invalid_argument("svd: non-finite input");
    if (A.rows() >= A.cols()) return detail::svd_tall(A);
    SvdResult r = detail::svd_tall(adjoint(A));
    return SvdResult{std::move(r.V), std::move(r.singular_values), std::move(r.U)};
}

/// Solves A x = b for Hermitian positive definite A via Cholesky.
/// b may have multiple right-hand-side columns.
inline CMatrix hermitian_solve(const CMatrix& A, const CMatrix& b) {
    const std::size_t n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("hermitian_solve: A must be square");
    if (b.rows() != n) throw std::invalid_argument("hermitian_solve: dimension mismatch");

    CMatrix L(n, n);
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, A(i, i).real());
    const double pivot_tol = 1e-14 * std::max(dmax, 1e-300);

    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(L(j, k));
        if (!(d > pivot_tol))
            throw numerical_error("hermitian_solve: matrix not positive definite");
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
            L(i, j) = s / L(j, j).real();
        }
    }

    CMatrix x = b;
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) { // L y = b
            cplx s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * x(k, c);
            x(i, c) = s / L(i, i).real();
        }
        for (std::size_t ii = n; ii-- > 0;) { // L^H x = y
            cplx s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(L(k, ii)) * x(k, c);
            x(ii, c) = s / L(ii, ii).real();
        }
    }
    return x;
}

/// Ratio of largest to smallest singular value; +infinity when the smallest
/// vanishes. A zero matrix has no condition number.
inline double condition_number(const CMatrix& A) {
    const SvdResult r = svd(A);
    const double smax = r.singular_values.front();
    const double smin = r.singular_values.back();
    if (smax == 0.0) throw std::invalid_argument("condition_number: zero matrix");
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

} // namespace gmudprec::numkit

#endif // GMUDPREC_NUMKIT_HPP

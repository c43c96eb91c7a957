// SPDX-License-Identifier: Apache-2.0
//
// Multi-user precoding on top of the decomposition beams. Each user k gets
// the first Q column of its channel's decomposition at (r_k, theta_k); the
// precoding matrix stacks those beams scaled by per-user power factors with
// sum alpha_k^2 = 1. The (r_k, theta_k, power) tuple is chosen by a
// deterministic grid search with local refinement on the sum of per-user
// inverse SINRs
//
//   inv_sinr_k = sum_{l != k} alpha_l^2 |q_k^H q_l|^2 / alpha_k^2
//              + sigma^2 * gamma_avg / (alpha_k^2 r_k^2),
//
// where gamma_avg = sum alpha_i^2 is the expected transmit normalization for
// unit-energy symbols.

#ifndef GMUDPREC_PRECODER_HPP
#define GMUDPREC_PRECODER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gmudprec/gmud.hpp"
#include "gmudprec/numkit.hpp"

namespace gmudprec::precoder {

using numkit::CMatrix;
using numkit::cplx;

enum class Objective { sum_inv_sinr, max_min_sinr, sum_sinr };

struct UserParams {
    double r = 1.0;
    double theta = 0.0;
    double power = 1.0; // amplitude alpha_k; sum of alpha_k^2 over users is 1
};

struct PrecoderSolution {
    CMatrix G; // M x K, column k = power_k * beam_k
    std::vector<UserParams> per_user;
    double gamma_avg = 1.0; // E||G u||^2 for i.i.d. unit-energy symbols
    std::vector<double> predicted_inv_sinr;
};

struct OptimizerConfig {
    int n_r = 8;
    int n_theta = 16;
    int n_power = 9;
    int refine_iters = 2;
    double refine_shrink = 0.25;
};

namespace detail {

inline constexpr double kMinWeight = 1e-6;

struct Decomp {
    numkit::SvdResult sv;
    double l1 = 0.0;
    double lmin = 0.0;
    std::size_t m = 0;
};

inline Decomp decompose(const CMatrix& H) {
    if (H.rows() < H.cols()) throw std::invalid_argument("precoder: channels must be tall");
    Decomp d;
    d.sv = numkit::svd(H);
    d.m = H.cols();
    d.l1 = d.sv.singular_values.front();
    d.lmin = d.sv.singular_values.back();
    if (!(d.l1 > 0.0)) throw std::invalid_argument("precoder: zero channel");
    return d;
}

inline std::vector<cplx> beam_vec(const Decomp& d, double r, double theta) {
    const CMatrix q = gmud::beam_from_svd(d.sv, r, theta);
    std::vector<cplx> v(d.m);
    for (std::size_t i = 0; i < d.m; ++i) v[i] = q(i, 0);
    return v;
}

inline double xcorr2(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return std::norm(s);
}

// Per-user inverse SINRs for unit-norm beams, weights w = alpha^2 and leading
// gains r.
inline std::vector<double> inv_sinr_each(const std::vector<std::vector<cplx>>& beams,
                                         const std::vector<double>& w,
                                         const std::vector<double>& r, double sigma2) {
    const std::size_t K = beams.size();
    double gamma_avg = 0.0;
    for (double wk : w) gamma_avg += wk;
    std::vector<double> inv(K);
    for (std::size_t k = 0; k < K; ++k) {
        double interf = 0.0;
        for (std::size_t l = 0; l < K; ++l)
            if (l != k) interf += w[l] * xcorr2(beams[k], beams[l]);
        inv[k] = interf / w[k] + sigma2 * gamma_avg / (w[k] * r[k] * r[k]);
    }
    return inv;
}

inline double apply_objective(const std::vector<double>& inv, Objective obj) {
    switch (obj) {
        case Objective::sum_inv_sinr: {
            double s = 0.0;
            for (double v : inv) s += v;
            return s;
        }
        case Objective::max_min_sinr:
            return *std::max_element(inv.begin(), inv.end());
        case Objective::sum_sinr: {
            double s = 0.0;
            for (double v : inv) s += 1.0 / v;
            return -s;
        }
    }
    return 0.0;
}

// All positive integer compositions (i_1, ..., i_K) with sum n_power + K - 1,
// in lexicographic order; weights are i_k / sum. For K = 2 this is the
// interior grid {1/S, ..., (S-1)/S} with S = n_power + 1.
inline std::vector<std::vector<double>> power_grid(std::size_t K, int n_power) {
    const int S = n_power + static_cast<int>(K) - 1;
    std::vector<std::vector<double>> out;
    std::vector<int> comp(K, 1);
    const auto emit = [&](const std::vector<int>& c) {
        std::vector<double> w(K);
        for (std::size_t k = 0; k < K; ++k) w[k] = static_cast<double>(c[k]) / S;
        out.push_back(std::move(w));
    };
    // Odometer over the first K-1 parts; the last part absorbs the remainder.
    std::vector<int> head(K - 1, 1);
    if (K == 1) {
        out.push_back({1.0});
        return out;
    }
    while (true) {
        int used = 0;
        for (int h : head) used += h;
        if (S - used >= 1) {
            for (std::size_t k = 0; k + 1 < K; ++k) comp[k] = head[k];
            comp[K - 1] = S - used;
            emit(comp);
        }
        // lexicographic increment with carry
        std::size_t pos = K - 2;
        while (true) {
            ++head[pos];
            int partial = 0;
            for (std::size_t k = 0; k <= pos; ++k) partial += head[k];
            if (partial + static_cast<int>(K - 1 - pos - 1) + 1 <= S) break;
            head[pos] = 1;
            if (pos == 0) return out;
            --pos;
        }
    }
}

} // namespace detail

/// Sum over users of the inverse SINR under the given per-user parameters.
/// Rebuilds each user's beam from its channel.
inline double inv_sinr_sum(const std::vector<CMatrix>& channels,
                           const std::vector<UserParams>& params, double sigma2) {
    const std::size_t K = channels.size();
    if (K == 0 || params.size() != K)
        throw std::invalid_argument("inv_sinr_sum: need one parameter set per channel");
    if (sigma2 < 0.0) throw std::invalid_argument("inv_sinr_sum: sigma2 must be >= 0");
    std::vector<std::vector<cplx>> beams(K);
    std::vector<double> w(K), r(K);
    for (std::size_t k = 0; k < K; ++k) {
        if (!(params[k].r > 0.0) || !(params[k].power > 0.0))
            throw std::invalid_argument("inv_sinr_sum: r and power must be positive");
        const detail::Decomp d = detail::decompose(channels[k]);
        beams[k] = detail::beam_vec(d, params[k].r, params[k].theta);
        w[k] = params[k].power * params[k].power;
        r[k] = params[k].r;
    }
    const std::vector<double> inv = detail::inv_sinr_each(beams, w, r, sigma2);
    double s = 0.0;
    for (double v : inv) s += v;
    return s;
}

/// SVD precoding baseline: each user's principal right singular vector with
/// equal power.
inline PrecoderSolution svd_baseline(const std::vector<CMatrix>& channels, double sigma2) {
    const std::size_t K = channels.size();
    if (K == 0) throw std::invalid_argument("svd_baseline: no channels");
    const std::size_t m = channels[0].cols();
    PrecoderSolution sol;
    sol.G = CMatrix(m, K);
    std::vector<std::vector<cplx>> beams(K);
    std::vector<double> w(K), r(K);
    const double alpha = 1.0 / std::sqrt(static_cast<double>(K));
    for (std::size_t k = 0; k < K; ++k) {
        if (channels[k].cols() != m)
            throw std::invalid_argument("svd_baseline: users must share the beam dimension");
        const detail::Decomp d = detail::decompose(channels[k]);
        beams[k].resize(m);
        for (std::size_t i = 0; i < m; ++i) beams[k][i] = d.sv.V(i, 0);
        w[k] = alpha * alpha;
        r[k] = d.l1;
        sol.per_user.push_back(UserParams{d.l1, 0.0, alpha});
        for (std::size_t i = 0; i < m; ++i) sol.G(i, k) = alpha * beams[k][i];
    }
    sol.gamma_avg = 0.0;
    for (double wk : w) sol.gamma_avg += wk;
    sol.predicted_inv_sinr = detail::inv_sinr_each(beams, w, r, sigma2);
    return sol;
}

/// Grid search over per-user r in [lambda_min, lambda_1], theta in [0, 2*pi)
/// and the power split, followed by passes of per-coordinate local grid
/// refinement. Candidates are scanned in lexicographic order (power split,
/// then user 0's (r, theta), then user 1's, ...) after first evaluating the
/// SVD baseline point, and only a strictly smaller cost replaces the
/// incumbent, so the search is deterministic and never returns a point worse
/// than the baseline.
inline PrecoderSolution optimize(const std::vector<CMatrix>& channels, double sigma2,
                                 const OptimizerConfig& cfg = {},
                                 Objective objective = Objective::sum_inv_sinr) {
    const std::size_t K = channels.size();
    if (K == 0) throw std::invalid_argument("optimize: no channels");
    if (cfg.n_r < 2 || cfg.n_theta < 2 || cfg.n_power < 2)
        throw std::invalid_argument("optimize: grid counts must be >= 2");
    if (cfg.refine_iters < 0 || !(cfg.refine_shrink > 0.0) || !(cfg.refine_shrink < 1.0))
        throw std::invalid_argument("optimize: bad refinement parameters");
    const std::size_t m = channels[0].cols();
    for (const CMatrix& h : channels)
        if (h.cols() != m)
            throw std::invalid_argument("optimize: users must share the beam dimension");

    std::vector<detail::Decomp> dec;
    dec.reserve(K);
    for (const CMatrix& h : channels) dec.push_back(detail::decompose(h));

    // Per-user candidate tables over the (r, theta) grid.
    const std::size_t nb = static_cast<std::size_t>(cfg.n_r) * cfg.n_theta;
    std::vector<std::vector<double>> r_grid(K);
    std::vector<double> theta_grid(cfg.n_theta);
    for (int j = 0; j < cfg.n_theta; ++j)
        theta_grid[j] = 2.0 * std::numbers::pi * j / cfg.n_theta;
    std::vector<std::vector<std::vector<cplx>>> beams(K);
    std::vector<std::vector<double>> rinv2(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double lo = std::max(dec[k].lmin, dec[k].l1 * 1e-12);
        const double hi = dec[k].l1;
        r_grid[k].resize(cfg.n_r);
        for (int i = 0; i < cfg.n_r; ++i) {
            const double r = lo + (hi - lo) * i / (cfg.n_r - 1);
            r_grid[k][i] = std::min(std::max(r, lo), hi);
        }
        beams[k].resize(nb);
        rinv2[k].resize(nb);
        for (int i = 0; i < cfg.n_r; ++i)
            for (int j = 0; j < cfg.n_theta; ++j) {
                const std::size_t b = static_cast<std::size_t>(i) * cfg.n_theta + j;
                beams[k][b] = detail::beam_vec(dec[k], r_grid[k][i], theta_grid[j]);
                rinv2[k][b] = 1.0 / (r_grid[k][i] * r_grid[k][i]);
            }
    }

    // Pairwise |q_k^H q_l|^2 tables.
    std::vector<std::vector<std::vector<double>>> xc(K, std::vector<std::vector<double>>(K));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = k + 1; l < K; ++l) {
            xc[k][l].resize(nb * nb);
            for (std::size_t a = 0; a < nb; ++a)
                for (std::size_t b = 0; b < nb; ++b)
                    xc[k][l][a * nb + b] = detail::xcorr2(beams[k][a], beams[l][b]);
        }

    const std::vector<std::vector<double>> wgrid = detail::power_grid(K, cfg.n_power);

    std::vector<double> scratch_inv(K);
    const auto grid_cost = [&](const std::vector<double>& w, const std::vector<std::size_t>& bi,
                               double gamma_avg) {
        for (std::size_t k = 0; k < K; ++k) {
            double interf = 0.0;
            for (std::size_t l = 0; l < K; ++l) {
                if (l == k) continue;
                const double t = (k < l) ? xc[k][l][bi[k] * nb + bi[l]]
                                         : xc[l][k][bi[l] * nb + bi[k]];
                interf += w[l] * t;
            }
            scratch_inv[k] = interf / w[k] + sigma2 * gamma_avg * rinv2[k][bi[k]] / w[k];
        }
        return detail::apply_objective(scratch_inv, objective);
    };

    // Incumbent: the SVD baseline point (r = lambda_1, theta = 0, equal power).
    std::vector<std::size_t> best_bi(K, static_cast<std::size_t>(cfg.n_r - 1) * cfg.n_theta);
    std::vector<double> best_w(K, 1.0 / static_cast<double>(K));
    double best_gamma = 0.0;
    for (double wk : best_w) best_gamma += wk;
    double best_cost = grid_cost(best_w, best_bi, best_gamma);

    std::vector<std::size_t> bi(K, 0);
    for (const std::vector<double>& w : wgrid) {
        double gamma_avg = 0.0;
        for (double wk : w) gamma_avg += wk;
        std::fill(bi.begin(), bi.end(), 0);
        while (true) {
            const double cost = grid_cost(w, bi, gamma_avg);
            if (cost < best_cost) {
                best_cost = cost;
                best_bi = bi;
                best_w = w;
                best_gamma = gamma_avg;
            }
            // odometer: user K-1's index moves fastest
            std::size_t pos = K;
            while (pos-- > 0) {
                if (++bi[pos] < nb) break;
                bi[pos] = 0;
                if (pos == 0) goto grid_done;
            }
        }
    grid_done:;
    }

    // Materialize the incumbent as continuous parameters.
    std::vector<double> cur_r(K), cur_theta(K), cur_w = best_w;
    std::vector<std::vector<cplx>> cur_beams(K);
    for (std::size_t k = 0; k < K; ++k) {
        cur_r[k] = r_grid[k][best_bi[k] / cfg.n_theta];
        cur_theta[k] = theta_grid[best_bi[k] % cfg.n_theta];
        cur_beams[k] = beams[k][best_bi[k]];
    }
    double cur_cost = best_cost;

    const auto full_cost = [&]() {
        const std::vector<double> inv =
            detail::inv_sinr_each(cur_beams, cur_w, cur_r, sigma2);
        return detail::apply_objective(inv, objective);
    };

    const double two_pi = 2.0 * std::numbers::pi;
    for (int pass = 1; pass <= cfg.refine_iters; ++pass) {
        const double scale = std::pow(cfg.refine_shrink, pass);
        for (std::size_t k = 0; k < K; ++k) {
            const double lo = std::max(dec[k].lmin, dec[k].l1 * 1e-12);
            const double hi = dec[k].l1;
            // r coordinate
            const double wr = (hi - lo) * scale;
            for (int i = 0; i < cfg.n_r; ++i) {
                const double cand =
                    std::min(hi, std::max(lo, cur_r[k] - wr / 2 + wr * i / (cfg.n_r - 1)));
                const double keep = cur_r[k];
                const std::vector<cplx> keep_beam = cur_beams[k];
                cur_r[k] = cand;
                cur_beams[k] = detail::beam_vec(dec[k], cand, cur_theta[k]);
                const double cost = full_cost();
                if (cost < cur_cost) {
                    cur_cost = cost;
                } else {
                    cur_r[k] = keep;
                    cur_beams[k] = keep_beam;
                }
            }
            // theta coordinate (wraps)
            const double wt = two_pi * scale;
            for (int j = 0; j < cfg.n_theta; ++j) {
                double cand = cur_theta[k] - wt / 2 + wt * j / (cfg.n_theta - 1);
                cand = std::fmod(cand, two_pi);
                if (cand < 0.0) cand += two_pi;
                const double keep = cur_theta[k];
                const std::vector<cplx> keep_beam = cur_beams[k];
                cur_theta[k] = cand;
                cur_beams[k] = detail::beam_vec(dec[k], cur_r[k], cand);
                const double cost = full_cost();
                if (cost < cur_cost) {
                    cur_cost = cost;
                } else {
                    cur_theta[k] = keep;
                    cur_beams[k] = keep_beam;
                }
            }
        }
        // power split: redistribute between adjacent users
        for (std::size_t k = 0; K >= 2 && k + 1 < K; ++k) {
            const double c = cur_w[k] + cur_w[k + 1];
            const double ww = c * scale;
            for (int i = 0; i < cfg.n_power; ++i) {
                double cand = cur_w[k] - ww / 2 + ww * i / (cfg.n_power - 1);
                cand = std::min(c - detail::kMinWeight, std::max(detail::kMinWeight, cand));
                const double keep0 = cur_w[k], keep1 = cur_w[k + 1];
                cur_w[k] = cand;
                cur_w[k + 1] = c - cand;
                const double cost = full_cost();
                if (cost < cur_cost) {
                    cur_cost = cost;
                } else {
                    cur_w[k] = keep0;
                    cur_w[k + 1] = keep1;
                }
            }
        }
    }

    PrecoderSolution sol;
    sol.G = CMatrix(m, K);
    sol.gamma_avg = 0.0;
    for (double wk : cur_w) sol.gamma_avg += wk;
    std::vector<double> w(K), r(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double alpha = std::sqrt(cur_w[k]);
        sol.per_user.push_back(UserParams{cur_r[k], cur_theta[k], alpha});
        for (std::size_t i = 0; i < m; ++i) sol.G(i, k) = alpha * cur_beams[k][i];
        w[k] = cur_w[k];
        r[k] = cur_r[k];
    }
    sol.predicted_inv_sinr = detail::inv_sinr_each(cur_beams, w, r, sigma2);
    return sol;
}

/// x = G u / sqrt(gamma) with gamma = ||G u||^2; returns the unit-norm block
/// and the instantaneous normalization for the receiver's effective channel.
inline std::pair<CMatrix, double> normalize_and_transmit(const CMatrix& G, const CMatrix& u) {
    if (u.cols() != 1 || G.cols() != u.rows())
        throw std::invalid_argument("normalize_and_transmit: dimension mismatch");
    if (numkit::norm2(u) == 0.0)
        throw std::invalid_argument("normalize_and_transmit: u must be nonzero");
    CMatrix gu = numkit::matmul(G, u);
    const double n = numkit::norm2(gu);
    if (n == 0.0)
        throw numkit::numerical_error("normalize_and_transmit: zero transmit energy");
    const double gamma = n * n;
    CMatrix x = (cplx{1.0 / n, 0.0}) * gu;
    return {std::move(x), gamma};
}

} // namespace gmudprec::precoder

#endif // GMUDPREC_PRECODER_HPP

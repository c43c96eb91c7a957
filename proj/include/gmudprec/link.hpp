// SPDX-License-Identifier: Apache-2.0
//
// Modulation, precoded block transmission and MMSE estimation. One precoded
// block carries one symbol per user: u is K x 1, the transmitted vector x is
// M x 1 and each user observes its own (2M-1) x 1 (or n_rx x 1) output.

#ifndef GMUDPREC_LINK_HPP
#define GMUDPREC_LINK_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gmudprec/numkit.hpp"
#include "gmudprec/precoder.hpp"
#include "gmudprec/rng.hpp"

namespace gmudprec::link {

using numkit::CMatrix;
using numkit::cplx;

enum class ModulationKind { qpsk, qam16 };

/// Unit-average-energy Gray-labelled constellation. The symbol index is the
/// bit label read MSB first; QPSK maps bit 0 to the I sign and bit 1 to the
/// Q sign (00 -> (1+j)/sqrt(2)), 16QAM maps bits (0,1) to the I level and
/// bits (2,3) to the Q level through the reflected Gray code
/// 00, 01, 11, 10 -> -3, -1, +1, +3 scaled by 1/sqrt(10).
struct Constellation {
    ModulationKind kind = ModulationKind::qpsk;
    std::vector<cplx> points;
    int bits_per_symbol = 2;

    static Constellation qpsk() {
        Constellation c;
        c.kind = ModulationKind::qpsk;
        c.bits_per_symbol = 2;
        const double a = 1.0 / std::sqrt(2.0);
        c.points = {{a, a}, {a, -a}, {-a, a}, {-a, -a}};
        return c;
    }

    static Constellation qam16() {
        Constellation c;
        c.kind = ModulationKind::qam16;
        c.bits_per_symbol = 4;
        const double levels[4] = {-3.0, -1.0, 1.0, 3.0}; // Gray order 00, 01, 11, 10
        const int gray_level[4] = {0, 1, 3, 2};          // bit pair -> level index
        const double a = 1.0 / std::sqrt(10.0);
        c.points.resize(16);
        for (int idx = 0; idx < 16; ++idx) {
            const int ibits = (idx >> 2) & 3;
            const int qbits = idx & 3;
            c.points[idx] = {a * levels[gray_level[ibits]], a * levels[gray_level[qbits]]};
        }
        return c;
    }
};

inline std::vector<cplx> modulate(const std::vector<int>& bits, const Constellation& c) {
    if (bits.size() % static_cast<std::size_t>(c.bits_per_symbol) != 0)
        throw std::invalid_argument("modulate: bit count not divisible by bits per symbol");
    std::vector<cplx> out;
    out.reserve(bits.size() / c.bits_per_symbol);
    for (std::size_t i = 0; i < bits.size(); i += c.bits_per_symbol) {
        int idx = 0;
        for (int b = 0; b < c.bits_per_symbol; ++b) idx = (idx << 1) | (bits[i + b] & 1);
        out.push_back(c.points[idx]);
    }
    return out;
}

/// Minimum-distance symbol decision; ties resolve to the lowest index.
inline int nearest_symbol(cplx est, const Constellation& c) {
    int best = 0;
    double bd = std::norm(est - c.points[0]);
    for (int i = 1; i < static_cast<int>(c.points.size()); ++i) {
        const double d = std::norm(est - c.points[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

inline std::vector<int> demodulate(const std::vector<cplx>& estimates, const Constellation& c) {
    std::vector<int> bits;
    bits.reserve(estimates.size() * c.bits_per_symbol);
    for (cplx e : estimates) {
        const int idx = nearest_symbol(e, c);
        for (int b = c.bits_per_symbol - 1; b >= 0; --b) bits.push_back((idx >> b) & 1);
    }
    return bits;
}

struct TransmitResult {
    std::vector<CMatrix> received; // one vector per user
    CMatrix x;                     // unit-norm transmitted block
    double gamma = 1.0;            // instantaneous ||G u||^2
};

/// y_k = H_k (G u / sqrt(gamma)) + n_k with i.i.d. circular Gaussian noise of
/// per-component variance sigma2. Noise is drawn user by user, entry by
/// entry, from the supplied stream.
inline TransmitResult transmit_block(const std::vector<CMatrix>& channels, const CMatrix& G,
                                     const CMatrix& u, double sigma2, rng::Stream& stream) {
    if (sigma2 < 0.0) throw std::invalid_argument("transmit_block: sigma2 must be >= 0");
    auto [x, gamma] = precoder::normalize_and_transmit(G, u);
    TransmitResult res;
    res.gamma = gamma;
    res.received.reserve(channels.size());
    for (const CMatrix& h : channels) {
        CMatrix y = numkit::matmul(h, x);
        if (sigma2 > 0.0)
            for (std::size_t i = 0; i < y.rows(); ++i) y(i, 0) += stream.cgauss(sigma2);
        res.received.push_back(std::move(y));
    }
    res.x = std::move(x);
    return res;
}

namespace detail {

// Solves the MMSE normal equations once with a stacked right-hand side and
// returns both the symbol estimates and D = F * H_eff, whose diagonal is the
// direct-term coefficient used for SINR measurement.
struct MmseOutput {
    CMatrix estimates; // K x 1
    CMatrix direct;    // K x K
};

inline MmseOutput mmse_solve(const CMatrix& y, const CMatrix& H, const CMatrix& G,
                             double gamma, double sigma2) {
    if (!(gamma > 0.0)) throw std::invalid_argument("mmse: gamma must be positive");
    const std::size_t K = G.cols();
    const cplx inv_sqrt_gamma{1.0 / std::sqrt(gamma), 0.0};
    const CMatrix heff = inv_sqrt_gamma * numkit::matmul(H, G);
    const CMatrix hh = numkit::adjoint(heff);
    CMatrix A = numkit::matmul(hh, heff);
    for (std::size_t i = 0; i < K; ++i) A(i, i) += sigma2;
    CMatrix rhs(K, K + 1);
    rhs.set_block(0, 0, numkit::matmul(hh, y));
    rhs.set_block(0, 1, numkit::matmul(hh, heff));
    const CMatrix sol = numkit::hermitian_solve(A, rhs);
    return {sol.block(0, 0, K, 1), sol.block(0, 1, K, K)};
}

} // namespace detail

/// Wiener estimate u_hat = (H_eff^H H_eff + sigma2 I)^{-1} H_eff^H y with
/// H_eff = H G / sqrt(gamma); user k consumes component k.
inline CMatrix mmse_estimate(const CMatrix& y, const CMatrix& H, const CMatrix& G,
                             double gamma, double sigma2) {
    return detail::mmse_solve(y, H, G, gamma, sigma2).estimates;
}

/// Everything observed about one transmitted block.
struct BlockObservation {
    std::vector<std::int64_t> bit_errors;    // per user
    std::vector<std::int64_t> symbol_errors; // per user
    int bits_per_user = 0;
    std::vector<double> direct_power;   // |d_k u_k|^2 at the MMSE output
    std::vector<double> residual_power; // |u_hat_k - d_k u_k|^2
};

struct LinkResult {
    std::int64_t bit_errors = 0;
    std::int64_t bits_sent = 0;
    std::int64_t symbol_errors = 0;
    std::int64_t symbols_sent = 0;
    std::vector<double> measured_sinr_per_user; // pooled direct/residual ratio
};

/// Draws one symbol per user, transmits and estimates, and reports errors and
/// the per-user direct/residual powers at the MMSE output.
inline BlockObservation simulate_block(const std::vector<CMatrix>& channels, const CMatrix& G,
                                       const Constellation& cst, double sigma2,
                                       rng::Stream& stream) {
    const std::size_t K = channels.size();
    std::vector<int> bits(K * cst.bits_per_symbol);
    for (int& b : bits) b = stream.bit();
    const std::vector<cplx> symbols = modulate(bits, cst);
    CMatrix u(K, 1);
    for (std::size_t k = 0; k < K; ++k) u(k, 0) = symbols[k];

    const TransmitResult tx = transmit_block(channels, G, u, sigma2, stream);

    BlockObservation obs;
    obs.bits_per_user = cst.bits_per_symbol;
    obs.bit_errors.resize(K);
    obs.symbol_errors.resize(K);
    obs.direct_power.resize(K);
    obs.residual_power.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const detail::MmseOutput out =
            detail::mmse_solve(tx.received[k], channels[k], G, tx.gamma, sigma2);
        const cplx est = out.estimates(k, 0);
        const cplx d = out.direct(k, k);

        int sent_idx = 0;
        for (int b = 0; b < cst.bits_per_symbol; ++b)
            sent_idx = (sent_idx << 1) | bits[k * cst.bits_per_symbol + b];
        const int got_idx = nearest_symbol(est, cst);
        obs.symbol_errors[k] = (got_idx == sent_idx) ? 0 : 1;
        std::int64_t be = 0;
        for (int b = 0; b < cst.bits_per_symbol; ++b) {
            const int shift = cst.bits_per_symbol - 1 - b;
            if (((sent_idx >> shift) & 1) != ((got_idx >> shift) & 1)) ++be;
        }
        obs.bit_errors[k] = be;
        obs.direct_power[k] = std::norm(d * symbols[k]);
        obs.residual_power[k] = std::norm(est - d * symbols[k]);
    }
    return obs;
}

/// Aggregates block observations into totals and pooled per-user SINRs.
inline LinkResult measure(const std::vector<BlockObservation>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("measure: no blocks");
    const std::size_t K = blocks.front().bit_errors.size();
    LinkResult r;
    std::vector<double> sig(K, 0.0), resid(K, 0.0);
    for (const BlockObservation& b : blocks) {
        for (std::size_t k = 0; k < K; ++k) {
            r.bit_errors += b.bit_errors[k];
            r.symbol_errors += b.symbol_errors[k];
            sig[k] += b.direct_power[k];
            resid[k] += b.residual_power[k];
        }
        r.bits_sent += static_cast<std::int64_t>(K) * b.bits_per_user;
        r.symbols_sent += static_cast<std::int64_t>(K);
    }
    r.measured_sinr_per_user.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        r.measured_sinr_per_user[k] = sig[k] / resid[k];
    return r;
}

} // namespace gmudprec::link

#endif // GMUDPREC_LINK_HPP

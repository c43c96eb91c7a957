// SPDX-License-Identifier: Apache-2.0
//
// Frequency-selective SISO multipath channels and their block-Toeplitz
// convolution matrices, plus the flat-fading MIMO ensemble used for
// comparison runs. All draws are counter-seeded per (seed, trial, user), so
// any trial can be regenerated independently of evaluation order.

#ifndef GMUDPREC_CHANNEL_HPP
#define GMUDPREC_CHANNEL_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gmudprec/numkit.hpp"
#include "gmudprec/rng.hpp"

namespace gmudprec::channel {

using numkit::CMatrix;
using numkit::cplx;

/// M-tap impulse response of one user's channel. Taps average unit total
/// power over the ensemble (1/M per tap, "equal gain" paths).
struct MultipathChannel {
    std::vector<cplx> taps;
    int user_index = 0;
};

enum class EnsembleKind { siso_multipath, mimo_flat };

struct ChannelEnsembleSpec {
    EnsembleKind kind = EnsembleKind::siso_multipath;
    int users = 2;
    int paths = 2; // taps per user (siso)
    int n_tx = 2;  // antennas (mimo)
    int n_rx = 2;
    std::uint64_t seed = 1;
};

/// (2M-1) x M convolution matrix: column j is the impulse response delayed
/// by j samples, so toeplitz(h) * x is the full linear convolution h * x.
inline CMatrix toeplitz(const MultipathChannel& ch) {
    const std::size_t m = ch.taps.size();
    if (m == 0) throw std::invalid_argument("toeplitz: channel has no taps");
    for (cplx t : ch.taps)
        if (!numkit::is_finite(t)) throw std::invalid_argument("toeplitz: non-finite tap");
    CMatrix h(2 * m - 1, m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) h(i + j, j) = ch.taps[i];
    return h;
}

/// K independent per-user impulse responses for one trial, i.i.d. complex
/// circular Gaussian taps with variance 1/M each. Deterministic per
/// (seed, trial, user_index).
inline std::vector<MultipathChannel> draw_siso_multipath(const ChannelEnsembleSpec& spec,
                                                         std::uint64_t trial) {
    if (spec.kind != EnsembleKind::siso_multipath)
        throw std::invalid_argument("draw_siso_multipath: wrong ensemble kind");
    if (spec.paths < spec.users)
        throw std::invalid_argument("draw_siso_multipath: requires paths >= users");
    std::vector<MultipathChannel> out;
    out.reserve(static_cast<std::size_t>(spec.users));
    const double var = 1.0 / static_cast<double>(spec.paths);
    for (int u = 0; u < spec.users; ++u) {
        auto stream = rng::Stream::derive(spec.seed, rng::kTagSisoChannel,
                                          {trial, static_cast<std::uint64_t>(u)});
        MultipathChannel ch;
        ch.user_index = u;
        ch.taps.resize(static_cast<std::size_t>(spec.paths));
        for (cplx& t : ch.taps) t = stream.cgauss(var);
        out.push_back(std::move(ch));
    }
    return out;
}

/// K flat-fading MIMO matrices (n_rx x n_tx), i.i.d. unit-variance complex
/// circular Gaussian entries. Deterministic per (seed, trial, user_index).
inline std::vector<CMatrix> draw_mimo_flat(const ChannelEnsembleSpec& spec,
                                           std::uint64_t trial) {
    if (spec.kind != EnsembleKind::mimo_flat)
        throw std::invalid_argument("draw_mimo_flat: wrong ensemble kind");
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(spec.users));
    for (int u = 0; u < spec.users; ++u) {
        auto stream = rng::Stream::derive(spec.seed, rng::kTagMimoChannel,
                                          {trial, static_cast<std::uint64_t>(u)});
        CMatrix h(static_cast<std::size_t>(spec.n_rx), static_cast<std::size_t>(spec.n_tx));
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = stream.cgauss(1.0);
        out.push_back(std::move(h));
    }
    return out;
}

struct ConditionStats {
    double median = 0.0;
    double mean = 0.0;
};

/// Median/mean condition number of the per-trial channel matrix of user 0:
/// the Toeplitz matrix for siso_multipath, the raw matrix for mimo_flat.
/// Infinite samples (rank-deficient draws) are kept for the median and make
/// the mean infinite, which is faithful if blunt.
inline ConditionStats condition_stats(const ChannelEnsembleSpec& spec, int trials) {
    if (trials < 1) throw std::invalid_argument("condition_stats: trials must be >= 1");
    std::vector<double> cond;
    cond.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        CMatrix h = (spec.kind == EnsembleKind::siso_multipath)
                        ? toeplitz(draw_siso_multipath(spec, static_cast<std::uint64_t>(t))[0])
                        : draw_mimo_flat(spec, static_cast<std::uint64_t>(t))[0];
        cond.push_back(numkit::condition_number(h));
    }
    std::sort(cond.begin(), cond.end());
    ConditionStats st;
    const std::size_t n = cond.size();
    st.median = (n % 2 == 1) ? cond[n / 2] : 0.5 * (cond[n / 2 - 1] + cond[n / 2]);
    double acc = 0.0;
    for (double c : cond) acc += c;
    st.mean = acc / static_cast<double>(n);
    return st;
}

} // namespace gmudprec::channel

#endif // GMUDPREC_CHANNEL_HPP

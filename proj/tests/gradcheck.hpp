#pragma once

// Finite-difference gradient checks. The reference loss values are written
// out from their textbook definitions; the analytic gradients come from the
// library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "anchorforge/losses.hpp"
#include "anchorforge/random.hpp"
#include "oracles.hpp"

namespace gradcheck {

using anchorforge::LossKind;
using anchorforge::OffsetVector;

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-5;
// Denominator floor for the relative error; below it the error is absolute.
inline constexpr double kFloor = 1e-4;

struct Params {
    double alpha = 0.1, gamma = 2.0, beta = 1.0;
};

inline double naive_classification(LossKind kind, const std::vector<std::uint8_t>& y, const std::vector<double>& s,
                                   bool logits, const Params& p) {
    const double n = static_cast<double>(y.size());
    double pos = 0;
    for (auto v : y) pos += v;
    const double w_pos = (n - pos) / n, w_neg = 1.0 - w_pos;
    double total = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double prob = logits ? oracle::sigmoid(s[i]) : s[i];
        const double lp = logits ? -std::log1p(std::exp(-s[i])) : std::log(prob);
        const double lq = logits ? -std::log1p(std::exp(s[i])) : std::log(1 - prob);
        switch (kind) {
            case LossKind::bce: total += y[i] ? -lp : -lq; break;
            case LossKind::weighted_bce: total += y[i] ? -w_pos * lp : -w_neg * lq; break;
            case LossKind::focal:
                total += y[i] ? -p.alpha * std::pow(1 - prob, p.gamma) * lp : -(1 - p.alpha) * std::pow(prob, p.gamma) * lq;
                break;
            default: break;
        }
    }
    return total / n;
}

inline double naive_regression(LossKind kind, const std::vector<double>& pred, const std::vector<double>& target,
                               const Params& p) {
    double total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        if (kind == LossKind::mse) total += d * d;
        else total += std::abs(d) < p.beta ? 0.5 * d * d / p.beta : std::abs(d) - 0.5 * p.beta;
    }
    return total / static_cast<double>(pred.size());
}

inline std::vector<OffsetVector> to_offsets(const std::vector<double>& flat) {
    std::vector<OffsetVector> out;
    for (std::size_t i = 0; i + 3 < flat.size(); i += 4) out.push_back({flat[i], flat[i + 1], flat[i + 2], flat[i + 3]});
    return out;
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

struct Outcome {
    int points = 0;
    double worst = 0.0;
};

/// Checks `points` random inputs for one loss; returns the worst relative error.
inline Outcome run(LossKind kind, int points, std::uint64_t seed) {
    anchorforge::Rng rng(seed);
    Outcome out;
    const Params prm;
    anchorforge::LossParams lp;
    lp.alpha = prm.alpha;
    lp.gamma = prm.gamma;
    lp.beta = prm.beta;
    const bool regression = kind == LossKind::mse || kind == LossKind::smooth_l1;
    while (out.points < points) {
        const std::size_t n = 1 + anchorforge::uniform_below(rng, 8);
        if (regression) {
            std::vector<double> pred(4 * n), target(4 * n);
            bool near_kink = false;
            for (std::size_t i = 0; i < 4 * n; ++i) {
                pred[i] = anchorforge::uniform(rng, -3, 3);
                target[i] = anchorforge::uniform(rng, -3, 3);
                if (std::abs(std::abs(pred[i] - target[i]) - prm.beta) < 1e-3) near_kink = true;
            }
            if (kind == LossKind::smooth_l1 && near_kink) continue;
            const auto tv = to_offsets(target);
            const auto g = anchorforge::gradient(kind, to_offsets(pred), tv, lp);
            auto f = [&](const std::vector<double>& x) { return naive_regression(kind, x, target, prm); };
            for (std::size_t i = 0; i < pred.size(); ++i)
                out.worst = std::max(out.worst, relative_error(g[i], oracle::central_difference(f, pred, i, kStep)));
        } else {
            const bool logits = anchorforge::uniform_below(rng, 2) == 0;
            std::vector<std::uint8_t> y(n);
            std::vector<double> s(n);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = static_cast<std::uint8_t>(anchorforge::uniform_below(rng, 2));
                s[i] = logits ? anchorforge::uniform(rng, -6, 6) : anchorforge::uniform(rng, 0.02, 0.98);
            }
            const auto batch = logits ? anchorforge::ScoredBatch::from_logits(y, s)
                                      : anchorforge::ScoredBatch::from_probabilities(y, s);
            const auto g = anchorforge::gradient(kind, batch, lp);
            auto f = [&](const std::vector<double>& x) { return naive_classification(kind, y, x, logits, prm); };
            for (std::size_t i = 0; i < n; ++i)
                out.worst = std::max(out.worst, relative_error(g[i], oracle::central_difference(f, s, i, kStep)));
        }
        ++out.points;
    }
    return out;
}

}  // namespace gradcheck

#include "anchorforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anchorforge/errors.hpp"

namespace anchorforge {

ScoredBatch::ScoredBatch(Kind kind, std::vector<std::uint8_t> labels, std::vector<double> scores)
    : kind_(kind), labels_(std::move(labels)), scores_(std::move(scores)) {
    if (labels_.empty()) throw std::invalid_argument("scored batch: empty batch");
    if (labels_.size() != scores_.size())
        throw ShapeMismatch("scored batch: " + std::to_string(labels_.size()) + " labels vs " +
                            std::to_string(scores_.size()) + " scores");
    for (auto y : labels_)
        if (y > 1) throw std::invalid_argument("scored batch: labels must be 0 or 1");
    for (double s : scores_) {
        if (!std::isfinite(s)) throw std::invalid_argument("scored batch: non-finite score");
        if (kind_ == Kind::probabilities && (s < 0.0 || s > 1.0))
            throw std::invalid_argument("scored batch: probability outside [0, 1]");
    }
}

ScoredBatch ScoredBatch::from_logits(std::vector<std::uint8_t> labels, std::vector<double> logits) {
    return ScoredBatch(Kind::logits, std::move(labels), std::move(logits));
}

ScoredBatch ScoredBatch::from_probabilities(std::vector<std::uint8_t> labels, std::vector<double> probs) {
    return ScoredBatch(Kind::probabilities, std::move(labels), std::move(probs));
}

double ScoredBatch::probability(std::size_t i) const {
    if (kind_ == Kind::logits) return sigmoid(scores_[i]);
    return std::clamp(scores_[i], kProbEpsilon, 1.0 - kProbEpsilon);
}

std::size_t ScoredBatch::positives() const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

ClassWeights ClassWeights::from_labels(std::span<const std::uint8_t> labels) {
    if (labels.empty()) throw std::invalid_argument("class weights: empty label set");
    const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    const auto total = static_cast<double>(labels.size());
    const double w_pos = (total - pos) / total;
    return {w_pos, 1.0 - w_pos};
}

void ClassWeights::validate() const {
    if (!std::isfinite(w_pos) || !std::isfinite(w_neg) || w_pos < 0.0 || w_neg < 0.0)
        throw std::invalid_argument("class weights: weights must be finite and nonnegative");
    if (!(w_pos + w_neg > 0.0)) throw std::invalid_argument("class weights: w_pos + w_neg must be positive");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

namespace {

// Per-element quantities shared by the classification losses. For logits the
// negative log-likelihoods are softplus terms; for probabilities they are
// plain logs of the clamped value.
struct Element {
    double p;         // P(y = 1)
    double q;         // 1 - p, computed without cancellation for logits
    double nll_pos;   // -ln p
    double nll_neg;   // -ln(1 - p)
};

Element element(const ScoredBatch& b, std::size_t i) {
    const double s = b.scores()[i];
    if (b.kind() == ScoredBatch::Kind::logits) return {sigmoid(s), sigmoid(-s), softplus(-s), softplus(s)};
    const double p = std::clamp(s, kProbEpsilon, 1.0 - kProbEpsilon);
    return {p, 1.0 - p, -std::log(p), -std::log(1.0 - p)};
}

double scale_for(Reduction r, std::size_t n) {
    return r == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;
}

// Weighted cross entropy. d(loss_i)/d(input_i) is returned through `grad`.
// With unit weights this is plain BCE, term for term.
LossResult weighted_cross_entropy(const ScoredBatch& batch, double w_pos, double w_neg, Reduction reduction) {
    const std::size_t n = batch.size();
    const double scale = scale_for(reduction, n);
    const bool logits = batch.kind() == ScoredBatch::Kind::logits;
    std::vector<double> grad(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Element e = element(batch, i);
        double g;
        if (batch.labels()[i] == 1) {
            sum += w_pos * e.nll_pos;
            g = logits ? -w_pos * e.q : -w_pos / e.p;
        } else {
            sum += w_neg * e.nll_neg;
            g = logits ? w_neg * e.p : w_neg / e.q;
        }
        grad[i] = g * scale;
    }
    return {sum * scale, std::move(grad)};
}

void check_pairs(std::span<const OffsetVector> pred, std::span<const OffsetVector> target) {
    if (pred.empty() || target.empty()) throw std::invalid_argument("regression loss: empty input");
    if (pred.size() != target.size())
        throw ShapeMismatch("regression loss: " + std::to_string(pred.size()) + " predictions vs " +
                            std::to_string(target.size()) + " targets");
}

template <typename Fn>
LossResult componentwise(std::span<const OffsetVector> pred, std::span<const OffsetVector> target,
                         Reduction reduction, Fn&& term) {
    check_pairs(pred, target);
    const double scale = scale_for(reduction, 4 * pred.size());
    std::vector<double> grad(4 * pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d[4] = {pred[i].dx - target[i].dx, pred[i].dy - target[i].dy, pred[i].dw - target[i].dw,
                             pred[i].dh - target[i].dh};
        for (int k = 0; k < 4; ++k) {
            auto [v, g] = term(d[k]);
            sum += v;
            grad[4 * i + k] = g * scale;
        }
    }
    return {sum * scale, std::move(grad)};
}

}  // namespace

LossResult bce(const ScoredBatch& batch, Reduction reduction) {
    return weighted_cross_entropy(batch, 1.0, 1.0, reduction);
}

LossResult weighted_bce(const ScoredBatch& batch, std::optional<ClassWeights> weights, Reduction reduction) {
    const ClassWeights w = weights.value_or(ClassWeights::from_labels(batch.labels()));
    w.validate();
    return weighted_cross_entropy(batch, w.w_pos, w.w_neg, reduction);
}

LossResult focal_loss(const ScoredBatch& batch, double alpha, double gamma, Reduction reduction) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("focal loss: alpha must lie in [0, 1]");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("focal loss: gamma must be >= 0");
    const std::size_t n = batch.size();
    const double scale = scale_for(reduction, n);
    const bool logits = batch.kind() == ScoredBatch::Kind::logits;
    std::vector<double> grad(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Element e = element(batch, i);
        double g;
        if (batch.labels()[i] == 1) {
            // alpha (1-p)^gamma (-ln p)
            const double mod = std::pow(e.q, gamma);
            sum += alpha * mod * e.nll_pos;
            if (logits) {
                g = -alpha * mod * (gamma * e.p * e.nll_pos + e.q);
            } else {
                g = -alpha * (gamma * std::pow(e.q, gamma - 1.0) * e.nll_pos + mod / e.p);
            }
        } else {
            // (1-alpha) p^gamma (-ln(1-p))
            const double mod = std::pow(e.p, gamma);
            sum += (1.0 - alpha) * mod * e.nll_neg;
            if (logits) {
                g = (1.0 - alpha) * mod * (gamma * e.q * e.nll_neg + e.p);
            } else {
                g = (1.0 - alpha) * (gamma * std::pow(e.p, gamma - 1.0) * e.nll_neg + mod / e.q);
            }
        }
        grad[i] = g * scale;
    }
    return {sum * scale, std::move(grad)};
}

LossResult mse(std::span<const OffsetVector> pred, std::span<const OffsetVector> target, Reduction reduction) {
    return componentwise(pred, target, reduction, [](double d) { return std::pair{d * d, 2.0 * d}; });
}

LossResult smooth_l1(std::span<const OffsetVector> pred, std::span<const OffsetVector> target, double beta,
                     Reduction reduction) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("smooth_l1: beta must be positive");
    return componentwise(pred, target, reduction, [beta](double d) {
        const double a = std::abs(d);
        if (a < beta) return std::pair{0.5 * d * d / beta, d / beta};
        return std::pair{a - 0.5 * beta, d > 0.0 ? 1.0 : -1.0};
    });
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
    if (name == "bce") return LossKind::bce;
    if (name == "weighted-bce" || name == "weighted_bce") return LossKind::weighted_bce;
    if (name == "focal") return LossKind::focal;
    if (name == "mse") return LossKind::mse;
    if (name == "smooth-l1" || name == "smooth_l1") return LossKind::smooth_l1;
    return std::nullopt;
}

std::string_view loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::bce: return "bce";
        case LossKind::weighted_bce: return "weighted-bce";
        case LossKind::focal: return "focal";
        case LossKind::mse: return "mse";
        case LossKind::smooth_l1: return "smooth-l1";
    }
    return "unknown";
}

LossResult evaluate(LossKind kind, const ScoredBatch& batch, const LossParams& params) {
    switch (kind) {
        case LossKind::bce: return bce(batch, params.reduction);
        case LossKind::weighted_bce: return weighted_bce(batch, params.weights, params.reduction);
        case LossKind::focal: return focal_loss(batch, params.alpha, params.gamma, params.reduction);
        default: throw std::invalid_argument(std::string(loss_kind_name(kind)) + " is a regression loss");
    }
}

LossResult evaluate(LossKind kind, std::span<const OffsetVector> pred, std::span<const OffsetVector> target,
                    const LossParams& params) {
    switch (kind) {
        case LossKind::mse: return mse(pred, target, params.reduction);
        case LossKind::smooth_l1: return smooth_l1(pred, target, params.beta, params.reduction);
        default: throw std::invalid_argument(std::string(loss_kind_name(kind)) + " is a classification loss");
    }
}

std::vector<double> gradient(LossKind kind, const ScoredBatch& batch, const LossParams& params) {
    return *evaluate(kind, batch, params).gradient;
}

std::vector<double> gradient(LossKind kind, std::span<const OffsetVector> pred, std::span<const OffsetVector> target,
                             const LossParams& params) {
    return *evaluate(kind, pred, target, params).gradient;
}

}  // namespace anchorforge

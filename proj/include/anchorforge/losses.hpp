#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "anchorforge/matching.hpp"

namespace anchorforge {

inline constexpr double kProbEpsilon = 1e-12;

/// Binary labels paired with either logits or probabilities. Probability
/// inputs are clamped to [eps, 1 - eps] before any log is taken; the logit
/// entry points use log-sigmoid forms and never clamp.
class ScoredBatch {
public:
    enum class Kind { logits, probabilities };

    /// Throw std::invalid_argument on empty input or labels outside {0, 1},
    /// ShapeMismatch on length mismatch.
    static ScoredBatch from_logits(std::vector<std::uint8_t> labels, std::vector<double> logits);
    static ScoredBatch from_probabilities(std::vector<std::uint8_t> labels, std::vector<double> probs);

    Kind kind() const { return kind_; }
    std::size_t size() const { return labels_.size(); }
    std::span<const std::uint8_t> labels() const { return labels_; }
    /// Scores exactly as supplied (logits or probabilities).
    std::span<const double> scores() const { return scores_; }
    /// Probability for element i: sigmoid(z) for logits, clamped input otherwise.
    double probability(std::size_t i) const;

    std::size_t positives() const;
    std::size_t negatives() const { return size() - positives(); }

private:
    ScoredBatch(Kind kind, std::vector<std::uint8_t> labels, std::vector<double> scores);

    Kind kind_;
    std::vector<std::uint8_t> labels_;
    std::vector<double> scores_;
};

enum class Reduction { mean, sum };

/// Loss value plus d(loss)/d(input) with the reduction applied. For batches
/// the input is the logit or probability, whichever the batch holds; for
/// regression losses it is the prediction, flattened as dx, dy, dw, dh per box.
struct LossResult {
    double value = 0.0;
    std::optional<std::vector<double>> gradient;
};

struct ClassWeights {
    double w_pos = 1.0;
    double w_neg = 1.0;

    /// w_pos = #negatives / #total, w_neg = 1 - w_pos.
    static ClassWeights from_labels(std::span<const std::uint8_t> labels);
    /// Throws std::invalid_argument on negative or non-finite weights or a zero sum.
    void validate() const;
};

double sigmoid(double z);
/// log(1 + e^z) without overflow.
double softplus(double z);

LossResult bce(const ScoredBatch& batch, Reduction reduction = Reduction::mean);

/// Without explicit weights the per-batch rule ClassWeights::from_labels is
/// used. Pass weights computed over a whole dataset to override it.
LossResult weighted_bce(const ScoredBatch& batch, std::optional<ClassWeights> weights = std::nullopt,
                        Reduction reduction = Reduction::mean);

/// alpha weights the positive term, (1 - alpha) the negative one.
LossResult focal_loss(const ScoredBatch& batch, double alpha = 0.1, double gamma = 2.0,
                      Reduction reduction = Reduction::mean);

/// Regression losses over positive anchors only. Mean reduction averages over
/// all 4n components.
LossResult mse(std::span<const OffsetVector> pred, std::span<const OffsetVector> target,
               Reduction reduction = Reduction::mean);
LossResult smooth_l1(std::span<const OffsetVector> pred, std::span<const OffsetVector> target, double beta = 1.0,
                     Reduction reduction = Reduction::mean);

enum class LossKind { bce, weighted_bce, focal, mse, smooth_l1 };

std::optional<LossKind> parse_loss_kind(std::string_view name);
std::string_view loss_kind_name(LossKind kind);

struct LossParams {
    double alpha = 0.1;
    double gamma = 2.0;
    double beta = 1.0;
    std::optional<ClassWeights> weights;
    Reduction reduction = Reduction::mean;
};

/// Closed-form gradient for a classification loss.
std::vector<double> gradient(LossKind kind, const ScoredBatch& batch, const LossParams& params = {});
/// Closed-form gradient for a regression loss, flattened 4 per box.
std::vector<double> gradient(LossKind kind, std::span<const OffsetVector> pred, std::span<const OffsetVector> target,
                             const LossParams& params = {});

/// Dispatch by kind; throws std::invalid_argument if the kind does not take
/// the given input form.
LossResult evaluate(LossKind kind, const ScoredBatch& batch, const LossParams& params = {});
LossResult evaluate(LossKind kind, std::span<const OffsetVector> pred, std::span<const OffsetVector> target,
                    const LossParams& params = {});

}  // namespace anchorforge

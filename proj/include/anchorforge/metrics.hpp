#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anchorforge/geometry.hpp"
#include "anchorforge/losses.hpp"
#include "anchorforge/matching.hpp"

namespace anchorforge {

/// width x height raster of {0, 1}, row-major.
class BinaryMask {
public:
    BinaryMask(int width, int height);
    /// Any nonzero input pixel becomes 1. Throws ShapeMismatch if
    /// pixels.size() != width * height.
    BinaryMask(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    std::span<const std::uint8_t> pixels() const { return pixels_; }
    std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int x, int y, bool on) { pixels_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }
    std::size_t count() const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Fields are absent when not computed. All present ratios lie in [0, 1].
struct EvalReport {
    std::optional<double> accuracy;
    std::optional<double> auc;
    std::optional<double> iou;
    double threshold = 0.5;
    std::size_t n = 0;
};

/// Single-line JSON, fields in the order accuracy, auc, iou, threshold, n.
/// Absent fields are written as null; reals use six decimals.
std::string to_json(const EvalReport& r);
std::string eval_csv_header();  // "accuracy,auc,iou,threshold,n"
/// Absent fields are left empty.
std::string to_csv_row(const EvalReport& r);

// Prediction rule for all thresholded metrics: probability >= threshold is
// positive. Logit batches are thresholded on sigmoid(z).

ConfusionCounts confusion(const ScoredBatch& scores, double threshold = 0.5);
double accuracy(const ScoredBatch& scores, double threshold = 0.5);

/// Mann-Whitney AUC from average ranks: the fraction of (positive, negative)
/// pairs ordered correctly, ties counting one half. Computed in integer
/// arithmetic on doubled ranks, so the result equals the pairwise count
/// exactly. Throws DegenerateLabels when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
double roc_auc(const ScoredBatch& scores);

enum class EmptyMaskPolicy { perfect, error };

/// |pred & gt| / |pred | gt|. Two empty masks give 1.0, or throw DataError
/// under EmptyMaskPolicy::error. Throws ShapeMismatch on differing dimensions.
double pixel_iou(const BinaryMask& pred, const BinaryMask& gt, EmptyMaskPolicy empty = EmptyMaskPolicy::perfect);

/// IoU of thresholded per-pixel probabilities, plus pixelwise AUC when `gt`
/// holds both classes (absent otherwise).
EvalReport segmentation_report(std::span<const double> pred_probs, const BinaryMask& gt, double threshold = 0.5);

struct DetectionEval {
    std::size_t top_anchor = 0;
    Box predicted;
    double iou = 0.0;
    std::optional<double> auc;  // absent when the assignment labels are single-class
};

/// Decodes the highest-scoring anchor (lowest index on ties) with its
/// predicted offsets and scores it against `gt`; AUC compares the anchor
/// scores with the assignment labels. Throws ShapeMismatch when the score,
/// offset, anchor and label counts disagree.
DetectionEval detection_top1_eval(std::span<const double> anchor_scores, std::span<const OffsetVector> pred_offsets,
                                  const AnchorGrid& anchors, const Box& gt, const TargetAssignment& assignment);

}  // namespace anchorforge

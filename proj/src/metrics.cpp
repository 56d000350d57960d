#include "anchorforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "anchorforge/errors.hpp"
#include "anchorforge/report.hpp"

namespace anchorforge {

BinaryMask::BinaryMask(int width, int height) : BinaryMask(width, height, std::vector<std::uint8_t>(
    width > 0 && height > 0 ? static_cast<std::size_t>(width) * static_cast<std::size_t>(height) : 0, 0)) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("mask: dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw ShapeMismatch("mask: " + std::to_string(pixels_.size()) + " pixels for " + std::to_string(width) + "x" +
                            std::to_string(height));
    for (auto& p : pixels_) p = p != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

namespace {

std::string json_field(const std::optional<double>& v) { return v ? fixed6(*v) : "null"; }
std::string csv_field(const std::optional<double>& v) { return v ? fixed6(*v) : ""; }

}  // namespace

std::string to_json(const EvalReport& r) {
    return "{\"accuracy\":" + json_field(r.accuracy) + ",\"auc\":" + json_field(r.auc) +
           ",\"iou\":" + json_field(r.iou) + ",\"threshold\":" + fixed6(r.threshold) +
           ",\"n\":" + std::to_string(r.n) + "}";
}

std::string eval_csv_header() { return "accuracy,auc,iou,threshold,n"; }

std::string to_csv_row(const EvalReport& r) {
    return csv_field(r.accuracy) + "," + csv_field(r.auc) + "," + csv_field(r.iou) + "," + fixed6(r.threshold) +
           "," + std::to_string(r.n);
}

ConfusionCounts confusion(const ScoredBatch& scores, double threshold) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores.probability(i) >= threshold;
        const bool actual = scores.labels()[i] == 1;
        if (predicted && actual) ++c.tp;
        else if (predicted) ++c.fp;
        else if (actual) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double accuracy(const ScoredBatch& scores, double threshold) {
    const auto c = confusion(scores, threshold);
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw ShapeMismatch("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                            std::to_string(labels.size()) + " labels");
    for (double s : scores)
        if (std::isnan(s)) throw NumericError("roc_auc: NaN score");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Doubled average rank of a tie group occupying sorted positions [i, j)
    // is (i + 1) + j.
    std::uint64_t pos_rank_sum_x2 = 0;
    std::uint64_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t rank_x2 = i + 1 + j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                pos_rank_sum_x2 += rank_x2;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::uint64_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DegenerateLabels();

    // 2U = 2 * (wins + ties / 2)
    const std::uint64_t u_x2 = pos_rank_sum_x2 - n_pos * (n_pos + 1);
    return static_cast<double>(u_x2) / static_cast<double>(2 * n_pos * n_neg);
}

double roc_auc(const ScoredBatch& scores) { return roc_auc(scores.scores(), scores.labels()); }

double pixel_iou(const BinaryMask& pred, const BinaryMask& gt, EmptyMaskPolicy empty) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw ShapeMismatch("pixel_iou: " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                            " vs " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto a = pred.pixels()[i], b = gt.pixels()[i];
        inter += a & b;
        uni += a | b;
    }
    if (uni == 0) {
        if (empty == EmptyMaskPolicy::error) throw DataError("pixel_iou: both masks are empty");
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

EvalReport segmentation_report(std::span<const double> pred_probs, const BinaryMask& gt, double threshold) {
    if (pred_probs.size() != gt.size())
        throw ShapeMismatch("segmentation_report: " + std::to_string(pred_probs.size()) + " scores for " +
                            std::to_string(gt.size()) + " mask pixels");
    std::vector<std::uint8_t> thresholded(pred_probs.size());
    for (std::size_t i = 0; i < pred_probs.size(); ++i) thresholded[i] = pred_probs[i] >= threshold ? 1 : 0;
    const BinaryMask pred(gt.width(), gt.height(), std::move(thresholded));

    EvalReport r;
    r.threshold = threshold;
    r.n = gt.size();
    r.iou = pixel_iou(pred, gt);
    const std::size_t pos = gt.count();
    if (pos > 0 && pos < gt.size()) r.auc = roc_auc(pred_probs, gt.pixels());
    return r;
}

DetectionEval detection_top1_eval(std::span<const double> anchor_scores, std::span<const OffsetVector> pred_offsets,
                                  const AnchorGrid& anchors, const Box& gt, const TargetAssignment& assignment) {
    const std::size_t n = anchors.size();
    if (anchor_scores.size() != n || pred_offsets.size() != n || assignment.labels.size() != n)
        throw ShapeMismatch("detection_top1_eval: expected " + std::to_string(n) + " scores, offsets and labels");
    if (n == 0) throw std::invalid_argument("detection_top1_eval: no anchors");

    std::size_t top = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (anchor_scores[i] > anchor_scores[top]) top = i;

    const Box predicted = decode_offsets(anchors.boxes[top], pred_offsets[top]);
    DetectionEval out{top, predicted, iou(predicted, gt), std::nullopt};
    const std::size_t pos = assignment.positive_count();
    if (pos > 0 && pos < n) out.auc = roc_auc(anchor_scores, assignment.label_bytes());
    return out;
}

}  // namespace anchorforge

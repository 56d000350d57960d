#include "anchorforge/matching.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "anchorforge/errors.hpp"
#include "anchorforge/report.hpp"

namespace anchorforge {

void AssignmentPolicy::validate() const {
    if (!(fallback_iou > 0.0 && fallback_iou <= pos_iou && pos_iou < 1.0))
        throw std::invalid_argument("assignment policy: need 0 < fallback_iou <= pos_iou < 1");
}

std::vector<std::uint8_t> TargetAssignment::label_bytes() const {
    std::vector<std::uint8_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<std::uint8_t>(labels[i]);
    return out;
}

OffsetVector encode_offsets(const Box& anchor, const Box& gt) {
    return {(gt.cx() - anchor.cx()) / anchor.w(), (gt.cy() - anchor.cy()) / anchor.h(),
            std::log(gt.w() / anchor.w()), std::log(gt.h() / anchor.h())};
}

Box decode_offsets(const Box& anchor, const OffsetVector& off) {
    if (!std::isfinite(off.dx) || !std::isfinite(off.dy) || !std::isfinite(off.dw) || !std::isfinite(off.dh))
        throw NumericError("decode_offsets: non-finite offset");
    const double cx = anchor.cx() + off.dx * anchor.w();
    const double cy = anchor.cy() + off.dy * anchor.h();
    const double w = anchor.w() * std::exp(off.dw);
    const double h = anchor.h() * std::exp(off.dh);
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h) || w <= 0.0 || h <= 0.0)
        throw NumericError("decode_offsets: decoded box is not finite");
    try {
        return Box(cx, cy, w, h);
    } catch (const std::invalid_argument& e) {
        throw NumericError(std::string("decode_offsets: ") + e.what());
    }
}

TargetAssignment assign_targets(const AnchorGrid& anchors, std::span<const Box> gt, const AssignmentPolicy& policy) {
    policy.validate();
    if (anchors.boxes.empty()) throw std::invalid_argument("assign_targets: no anchors");

    TargetAssignment ta;
    const std::size_t n = anchors.boxes.size();
    ta.labels.assign(n, AnchorLabel::negative);
    if (gt.empty()) return ta;

    const IouMatrix overlaps = iou_matrix(anchors.boxes, gt);

    std::vector<bool> gt_has_positive(gt.size(), false);
    for (std::size_t a = 0; a < n; ++a) {
        auto row = overlaps.row(a);
        std::size_t best = 0;
        for (std::size_t g = 1; g < gt.size(); ++g)
            if (row[g] > row[best]) best = g;
        if (row[best] > policy.pos_iou) {
            ta.labels[a] = AnchorLabel::positive;
            ta.matched_gt[a] = best;
        }
        for (std::size_t g = 0; g < gt.size(); ++g)
            if (row[g] > policy.pos_iou) gt_has_positive[g] = true;
    }

    for (std::size_t g = 0; g < gt.size(); ++g) {
        if (gt_has_positive[g]) continue;
        std::size_t best = 0;
        for (std::size_t a = 1; a < n; ++a)
            if (overlaps(a, g) > overlaps(best, g)) best = a;
        if (overlaps(best, g) > policy.fallback_iou && ta.labels[best] == AnchorLabel::negative) {
            ta.labels[best] = AnchorLabel::positive;
            ta.matched_gt[best] = g;
        }
    }

    for (const auto& [a, g] : ta.matched_gt) ta.offsets[a] = encode_offsets(anchors.boxes[a], gt[g]);
    return ta;
}

void write_assignment_csv_header(std::ostream& os, bool with_record_id) {
    if (with_record_id) os << "record_id,";
    os << "anchor_index,label,gt_index,dx,dy,dw,dh\n";
}

void write_assignment_rows(std::ostream& os, const TargetAssignment& ta, const std::string* record_id) {
    for (std::size_t a = 0; a < ta.labels.size(); ++a) {
        if (record_id) os << *record_id << ',';
        os << a << ',';
        if (ta.labels[a] == AnchorLabel::positive) {
            const auto& o = ta.offsets.at(a);
            os << "1," << ta.matched_gt.at(a) << ',' << round_trip(o.dx) << ',' << round_trip(o.dy) << ','
               << round_trip(o.dw) << ',' << round_trip(o.dh) << '\n';
        } else {
            os << "0,,,,,\n";
        }
    }
}

}  // namespace anchorforge

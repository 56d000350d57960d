#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "anchorforge/geometry.hpp"

namespace anchorforge {

struct AssignmentPolicy {
    double pos_iou = 0.5;
    double fallback_iou = 0.3;

    /// Requires 0 < fallback_iou <= pos_iou < 1.
    void validate() const;
};

/// Regression target that morphs an anchor into a ground-truth box:
/// center shift in units of the anchor size plus log size ratios.
struct OffsetVector {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;

    friend bool operator==(const OffsetVector&, const OffsetVector&) = default;
};

enum class AnchorLabel : std::uint8_t { negative = 0, positive = 1 };

struct TargetAssignment {
    std::vector<AnchorLabel> labels;
    std::map<std::size_t, std::size_t> matched_gt;   // positive anchor -> gt index
    std::map<std::size_t, OffsetVector> offsets;     // positive anchor -> target

    std::size_t positive_count() const { return matched_gt.size(); }
    bool is_positive(std::size_t anchor) const { return labels[anchor] == AnchorLabel::positive; }
    /// Labels as 0/1 bytes, for metrics.
    std::vector<std::uint8_t> label_bytes() const;

    friend bool operator==(const TargetAssignment&, const TargetAssignment&) = default;
};

OffsetVector encode_offsets(const Box& anchor, const Box& gt);
/// Inverse of encode_offsets. Throws NumericError when the offsets are
/// non-finite or the decoded box would have non-finite or zero size.
Box decode_offsets(const Box& anchor, const OffsetVector& off);

/// Labels each anchor against the ground truths.
///
/// 1. An anchor is positive when its best IoU over `gt` exceeds pos_iou; it is
///    matched to that argmax ground truth (lowest gt index on ties).
/// 2. Every ground truth with no anchor above pos_iou gets its single best
///    anchor (lowest anchor index on ties) as a positive, provided that IoU
///    exceeds fallback_iou. An anchor that is already positive keeps its match.
/// 3. Everything else is negative; there is no ignore band.
///
/// Empty `gt` yields an all-negative assignment.
TargetAssignment assign_targets(const AnchorGrid& anchors, std::span<const Box> gt,
                                const AssignmentPolicy& policy = {});

/// Rows `anchor_index,label,gt_index,dx,dy,dw,dh`; gt/offset fields blank for
/// negatives. Pass `record_id` to prefix every row with it (multi-record files).
void write_assignment_csv_header(std::ostream& os, bool with_record_id);
void write_assignment_rows(std::ostream& os, const TargetAssignment& ta, const std::string* record_id = nullptr);

}  // namespace anchorforge

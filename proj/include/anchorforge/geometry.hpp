#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace anchorforge {

/// Axis-aligned box in normalized center-size form. Coordinates are fractions
/// of the image side, so the same box describes any raster resolution.
///
/// Width and height must be strictly positive and all fields finite; the
/// constructor throws std::invalid_argument otherwise. Zero-area boxes are
/// rejected here so that IoU is never 0/0.
class Box {
public:
    Box(double cx, double cy, double w, double h);

    static Box from_corners(double x1, double y1, double x2, double y2);
    /// Top-left corner plus size, the layout used in dataset manifests.
    static Box from_top_left(double x, double y, double w, double h);

    double cx() const { return cx_; }
    double cy() const { return cy_; }
    double w() const { return w_; }
    double h() const { return h_; }

    double x1() const { return cx_ - w_ / 2; }
    double y1() const { return cy_ - h_ / 2; }
    double x2() const { return cx_ + w_ / 2; }
    double y2() const { return cy_ + h_ / 2; }

    /// Area of the corner rectangle. Matches the intersection arithmetic in
    /// iou() bit for bit, which is what makes iou(a, a) exactly 1.
    double area() const { return (x2() - x1()) * (y2() - y1()); }

    friend bool operator==(const Box&, const Box&) = default;

private:
    double cx_, cy_, w_, h_;
};

std::ostream& operator<<(std::ostream& os, const Box& b);

/// Intersection area over union area, in [0, 1].
double iou(const Box& a, const Box& b);

/// Dense |rows| x |cols| IoU table, row-major.
class IouMatrix {
public:
    IouMatrix() = default;
    IouMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Rows are split across `workers` threads; the result does not depend on it.
IouMatrix iou_matrix(std::span<const Box> a, std::span<const Box> b, unsigned workers = 1);

struct AnchorConfig {
    std::vector<double> scales;  // side of the ratio-1 anchor, fraction of image side
    std::vector<double> ratios;  // width : height
    int grid_rows = 0;
    int grid_cols = 0;

    /// Throws std::invalid_argument on empty lists, non-positive or
    /// non-finite entries, scales above 1 or zero grid dimensions.
    void validate() const;
    std::size_t anchor_count() const;

    /// Scales {0.1, 0.175, 0.3}, ratios {2, 1, 0.5}, 32x32 cells: 9216 anchors.
    static AnchorConfig standard();
};

/// Anchors in row-major cell order, then scale, then ratio. Boxes are not
/// clipped to the image and may extend past [0, 1].
struct AnchorGrid {
    std::vector<Box> boxes;
    AnchorConfig config;

    std::size_t size() const { return boxes.size(); }
    std::size_t index(int row, int col, std::size_t scale_idx, std::size_t ratio_idx) const;
};

/// Anchor for cell (i, j), scale s, ratio r: center ((j+0.5)/cols, (i+0.5)/rows),
/// w = s*sqrt(r), h = s/sqrt(r). Area s^2 is the same for every ratio.
AnchorGrid generate_anchors(const AnchorConfig& cfg);

struct CoverageRow {
    double threshold = 0.0;
    std::size_t covered = 0;
    std::size_t total = 0;
    double fraction = 0.0;
};

/// Best IoU over all anchors for each ground truth.
std::vector<double> best_anchor_iou(const AnchorGrid& anchors, std::span<const Box> gt, unsigned workers = 1);

/// For each threshold t: fraction of ground truths whose best anchor IoU is
/// strictly greater than t. Throws DataError when `gt` is empty.
std::vector<CoverageRow> coverage_report(const AnchorGrid& anchors, std::span<const Box> gt,
                                         std::span<const double> thresholds, unsigned workers = 1);

inline constexpr double kDefaultCoverageThresholds[] = {0.3, 0.5, 0.75};

/// CSV with header `index,cx,cy,w,h`, grid order, round-trip precision.
void write_anchor_csv(std::ostream& os, const AnchorGrid& grid);
/// Reads the anchor CSV back. The config echo is not recoverable from CSV and
/// is left empty. Throws DataError on malformed input.
AnchorGrid read_anchor_csv(std::istream& is);

}  // namespace anchorforge

#include "anchorforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "anchorforge/errors.hpp"
#include "anchorforge/parallel.hpp"
#include "anchorforge/report.hpp"

namespace anchorforge {

Box::Box(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h))
        throw std::invalid_argument("box: non-finite coordinate");
    if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("box: width and height must be positive");
    if (!(x1() < x2()) || !(y1() < y2())) throw std::invalid_argument("box: degenerate corners");
}

Box Box::from_corners(double x1, double y1, double x2, double y2) {
    return Box((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1);
}

Box Box::from_top_left(double x, double y, double w, double h) {
    return Box(x + w / 2, y + h / 2, w, h);
}

std::ostream& operator<<(std::ostream& os, const Box& b) {
    return os << "Box(" << b.cx() << ", " << b.cy() << ", " << b.w() << ", " << b.h() << ")";
}

double iou(const Box& a, const Box& b) {
    const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

IouMatrix iou_matrix(std::span<const Box> a, std::span<const Box> b, unsigned workers) {
    IouMatrix m(a.size(), b.size());
    parallel_for(a.size(), workers, [&](std::size_t i) {
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = iou(a[i], b[j]);
    });
    return m;
}

void AnchorConfig::validate() const {
    if (scales.empty()) throw std::invalid_argument("anchor config: no scales");
    if (ratios.empty()) throw std::invalid_argument("anchor config: no ratios");
    if (grid_rows <= 0 || grid_cols <= 0) throw std::invalid_argument("anchor config: grid dimensions must be positive");
    for (double s : scales)
        if (!std::isfinite(s) || s <= 0.0 || s > 1.0) throw std::invalid_argument("anchor config: scale outside (0, 1]");
    for (double r : ratios)
        if (!std::isfinite(r) || r <= 0.0) throw std::invalid_argument("anchor config: ratio must be positive");
}

std::size_t AnchorConfig::anchor_count() const {
    return static_cast<std::size_t>(grid_rows) * static_cast<std::size_t>(grid_cols) * scales.size() * ratios.size();
}

AnchorConfig AnchorConfig::standard() {
    return AnchorConfig{{0.1, 0.175, 0.3}, {2.0, 1.0, 0.5}, 32, 32};
}

std::size_t AnchorGrid::index(int row, int col, std::size_t scale_idx, std::size_t ratio_idx) const {
    const std::size_t per_cell = config.scales.size() * config.ratios.size();
    const std::size_t cell = static_cast<std::size_t>(row) * static_cast<std::size_t>(config.grid_cols) +
                             static_cast<std::size_t>(col);
    return cell * per_cell + scale_idx * config.ratios.size() + ratio_idx;
}

AnchorGrid generate_anchors(const AnchorConfig& cfg) {
    cfg.validate();
    AnchorGrid grid;
    grid.config = cfg;
    grid.boxes.reserve(cfg.anchor_count());
    for (int i = 0; i < cfg.grid_rows; ++i) {
        const double cy = (i + 0.5) / cfg.grid_rows;
        for (int j = 0; j < cfg.grid_cols; ++j) {
            const double cx = (j + 0.5) / cfg.grid_cols;
            for (double s : cfg.scales) {
                for (double r : cfg.ratios) {
                    const double root = std::sqrt(r);
                    grid.boxes.emplace_back(cx, cy, s * root, s / root);
                }
            }
        }
    }
    return grid;
}

std::vector<double> best_anchor_iou(const AnchorGrid& anchors, std::span<const Box> gt, unsigned workers) {
    std::vector<double> best(gt.size(), 0.0);
    parallel_for(gt.size(), workers, [&](std::size_t g) {
        double m = 0.0;
        for (const Box& a : anchors.boxes) m = std::max(m, iou(a, gt[g]));
        best[g] = m;
    });
    return best;
}

std::vector<CoverageRow> coverage_report(const AnchorGrid& anchors, std::span<const Box> gt,
                                         std::span<const double> thresholds, unsigned workers) {
    if (gt.empty()) throw DataError("coverage: no ground truths");
    const auto best = best_anchor_iou(anchors, gt, workers);
    std::vector<CoverageRow> rows;
    rows.reserve(thresholds.size());
    for (double t : thresholds) {
        CoverageRow row;
        row.threshold = t;
        row.total = gt.size();
        row.covered = static_cast<std::size_t>(std::count_if(best.begin(), best.end(), [t](double v) { return v > t; }));
        row.fraction = static_cast<double>(row.covered) / static_cast<double>(row.total);
        rows.push_back(row);
    }
    return rows;
}

void write_anchor_csv(std::ostream& os, const AnchorGrid& grid) {
    os << "index,cx,cy,w,h\n";
    for (std::size_t i = 0; i < grid.boxes.size(); ++i) {
        const Box& b = grid.boxes[i];
        os << i << ',' << round_trip(b.cx()) << ',' << round_trip(b.cy()) << ',' << round_trip(b.w()) << ','
           << round_trip(b.h()) << '\n';
    }
}

AnchorGrid read_anchor_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "index,cx,cy,w,h")
        throw DataError("anchor csv: missing header 'index,cx,cy,w,h'");
    AnchorGrid grid;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(trim(line), ',');
        if (fields.size() != 5) throw DataError("anchor csv line " + std::to_string(line_no) + ": expected 5 fields");
        auto idx = parse_int(fields[0]);
        if (!idx || *idx != static_cast<long long>(grid.boxes.size()))
            throw DataError("anchor csv line " + std::to_string(line_no) + ": index out of sequence");
        double v[4];
        for (int k = 0; k < 4; ++k) {
            auto d = parse_double(fields[k + 1]);
            if (!d) throw DataError("anchor csv line " + std::to_string(line_no) + ": bad number");
            v[k] = *d;
        }
        try {
            grid.boxes.emplace_back(v[0], v[1], v[2], v[3]);
        } catch (const std::invalid_argument& e) {
            throw DataError("anchor csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (grid.boxes.empty()) throw DataError("anchor csv: no anchors");
    return grid;
}

}  // namespace anchorforge

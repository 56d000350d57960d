#pragma once

// Test-only reference computations. Nothing here calls into the library's
// implementation of the quantity being checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace oracle {

struct Rect {
    double cx, cy, w, h;
};

/// IoU from overlap lengths along each axis.
inline double iou(const Rect& a, const Rect& b) {
    auto overlap = [](double c1, double s1, double c2, double s2) {
        const double lo = std::max(c1 - s1 / 2, c2 - s2 / 2);
        const double hi = std::min(c1 + s1 / 2, c2 + s2 / 2);
        return std::max(0.0, hi - lo);
    };
    const double inter = overlap(a.cx, a.w, b.cx, b.w) * overlap(a.cy, a.h, b.cy, b.h);
    return inter / (a.w * a.h + b.w * b.h - inter);
}

/// Anchors laid out cell by cell, scale by scale, ratio by ratio.
inline std::vector<Rect> anchors(const std::vector<double>& scales, const std::vector<double>& ratios, int rows,
                                 int cols) {
    std::vector<Rect> out;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            for (double s : scales)
                for (double r : ratios) out.push_back({(j + 0.5) / cols, (i + 0.5) / rows, s * std::sqrt(r), s / std::sqrt(r)});
    return out;
}

inline double best_iou(const std::vector<Rect>& anchors, const Rect& g) {
    double best = 0.0;
    for (const auto& a : anchors) best = std::max(best, iou(a, g));
    return best;
}

/// O(n^2) AUC: (2 * wins + ties) / (2 * positives * negatives), counted in integers.
inline double pairwise_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    std::uint64_t twice_u = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i]) ++pos; else ++neg;
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) twice_u += 2;
            else if (scores[i] == scores[j]) twice_u += 1;
        }
    }
    return static_cast<double>(twice_u) / static_cast<double>(2 * pos * neg);
}

/// Central difference of f with respect to x[i], step h.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h = 1e-5) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    return (up - down) / (2 * h);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Scratch directory under the build tree (or /tmp), wiped on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const char* base = std::getenv("ANCHORFORGE_TEST_TMP");
    std::filesystem::path dir = std::filesystem::path(base ? base : "/tmp/anchorforge_tests") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle

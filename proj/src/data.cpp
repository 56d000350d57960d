#include "anchorforge/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "anchorforge/errors.hpp"
#include "anchorforge/parallel.hpp"
#include "anchorforge/random.hpp"
#include "anchorforge/report.hpp"

namespace anchorforge {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view split_name(Split s) { return s == Split::train ? "train" : "test"; }

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    return std::nullopt;
}

std::string_view class_name(ClassLabel c) {
    switch (c) {
        case ClassLabel::notumor: return "notumor";
        case ClassLabel::meningioma: return "meningioma";
        case ClassLabel::glioma: return "glioma";
        case ClassLabel::pituitary: return "pituitary";
        case ClassLabel::tumor: return "tumor";
    }
    return "unknown";
}

std::optional<ClassLabel> parse_class(std::string_view s) {
    if (s == "notumor" || s == "no_tumor" || s == "no-tumor") return ClassLabel::notumor;
    if (s == "meningioma") return ClassLabel::meningioma;
    if (s == "glioma") return ClassLabel::glioma;
    if (s == "pituitary") return ClassLabel::pituitary;
    if (s == "tumor") return ClassLabel::tumor;
    return std::nullopt;
}

void ImageRecord::validate() const {
    if (image.width <= 0 || image.height <= 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height))
        throw DataError("record '" + id + "': image pixel count does not match its dimensions");
    if (mask && (mask->width() != image.width || mask->height() != image.height))
        throw ShapeMismatch("record '" + id + "': mask is " + std::to_string(mask->width()) + "x" +
                            std::to_string(mask->height()) + " but image is " + std::to_string(image.width) + "x" +
                            std::to_string(image.height));
}

namespace {

struct ManifestEntry {
    std::size_t line_no;
    std::string id;
    fs::path image;
    std::optional<fs::path> mask;
    std::optional<std::vector<Box>> boxes;
    std::optional<ClassLabel> label;
    Split split;
};

[[noreturn]] void bad_line(const fs::path& manifest, std::size_t line_no, const std::string& what) {
    throw DataError(manifest.string() + " line " + std::to_string(line_no) + ": " + what);
}

ManifestEntry parse_entry(const fs::path& manifest, std::size_t line_no, const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        bad_line(manifest, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad_line(manifest, line_no, "expected a JSON object");

    auto get_string = [&](const char* key, bool required) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) bad_line(manifest, line_no, std::string("missing field '") + key + "'");
            return std::nullopt;
        }
        if (!it->is_string()) bad_line(manifest, line_no, std::string("field '") + key + "' must be a string");
        return it->get<std::string>();
    };

    const fs::path base = manifest.parent_path();
    ManifestEntry e;
    e.line_no = line_no;
    e.id = *get_string("id", true);
    if (e.id.empty()) bad_line(manifest, line_no, "empty id");
    e.image = base / *get_string("image", true);
    if (auto m = get_string("mask", false)) e.mask = base / *m;

    auto split = parse_split(*get_string("split", true));
    if (!split) bad_line(manifest, line_no, "split must be 'train' or 'test'");
    e.split = *split;

    if (auto l = get_string("label", false)) {
        e.label = parse_class(*l);
        if (!e.label) bad_line(manifest, line_no, "unknown label '" + *l + "'");
    }

    if (auto it = j.find("boxes"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) bad_line(manifest, line_no, "'boxes' must be an array");
        std::vector<Box> boxes;
        for (const auto& b : *it) {
            double v[4];
            const char* keys[4] = {"x", "y", "w", "h"};
            for (int k = 0; k < 4; ++k) {
                if (!b.is_object() || !b.contains(keys[k]) || !b[keys[k]].is_number())
                    bad_line(manifest, line_no, std::string("box field '") + keys[k] + "' missing or not a number");
                v[k] = b[keys[k]].get<double>();
            }
            try {
                boxes.push_back(Box::from_top_left(v[0], v[1], v[2], v[3]));
            } catch (const std::invalid_argument& ex) {
                bad_line(manifest, line_no, ex.what());
            }
        }
        e.boxes = std::move(boxes);
    }
    return e;
}

}  // namespace

std::vector<ImageRecord> load_dataset(const fs::path& manifest, const LoadOptions& opts) {
    std::ifstream is(manifest);
    if (!is) throw DataError("missing manifest '" + manifest.string() + "'");

    std::vector<ManifestEntry> entries;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto e = parse_entry(manifest, line_no, line);
        if (!ids.insert(e.id).second) bad_line(manifest, line_no, "duplicate id '" + e.id + "'");
        entries.push_back(std::move(e));
    }

    std::vector<ImageRecord> records(entries.size());
    parallel_for(entries.size(), opts.workers, [&](std::size_t i) {
        const ManifestEntry& e = entries[i];
        ImageRecord& r = records[i];
        r.id = e.id;
        r.split = e.split;
        r.label = e.label;
        r.boxes = e.boxes;
        r.image = read_gray_image(e.image);
        if (e.mask) {
            GrayImage m = read_gray_image(*e.mask);
            if (m.width != r.image.width || m.height != r.image.height)
                throw ShapeMismatch("record '" + e.id + "': mask is " + std::to_string(m.width) + "x" +
                                    std::to_string(m.height) + " but image is " + std::to_string(r.image.width) +
                                    "x" + std::to_string(r.image.height));
            r.mask = BinaryMask(m.width, m.height, std::move(m.pixels));
        }
    });

    if (opts.drop_empty_masks)
        std::erase_if(records, [](const ImageRecord& r) { return !r.mask || r.mask->count() == 0; });
    std::stable_sort(records.begin(), records.end(),
                     [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
    return records;
}

std::string manifest_line(const ImageRecord& r, const std::string& image_path, const std::string* mask_path) {
    ordered_json j;
    j["id"] = r.id;
    j["image"] = image_path;
    if (mask_path) j["mask"] = *mask_path;
    if (r.boxes) {
        ordered_json arr = ordered_json::array();
        for (const Box& b : *r.boxes) {
            ordered_json o;
            o["x"] = b.x1();
            o["y"] = b.y1();
            o["w"] = b.w();
            o["h"] = b.h();
            arr.push_back(std::move(o));
        }
        j["boxes"] = std::move(arr);
    }
    if (r.label) j["label"] = std::string(class_name(*r.label));
    j["split"] = std::string(split_name(r.split));
    return j.dump();
}

DatasetSummary summarize(std::span<const ImageRecord> records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    constexpr int kUnlabeled = 5;
    std::map<std::pair<int, int>, std::size_t> counts;
    std::map<int, std::size_t> split_totals;
    for (const auto& r : records) {
        const int split = static_cast<int>(r.split);
        const int cls = r.label ? static_cast<int>(*r.label) : kUnlabeled;
        ++counts[{split, cls}];
        ++split_totals[split];
    }
    DatasetSummary s;
    for (const auto& [key, count] : counts) {
        const auto [split, cls] = key;
        const std::string name = cls == kUnlabeled ? "unlabeled" : std::string(class_name(static_cast<ClassLabel>(cls)));
        const double pct = 100.0 * static_cast<double>(count) / static_cast<double>(split_totals[split]);
        s.rows.push_back({static_cast<Split>(split), name, count, pct});
    }
    return s;
}

void write_summary_csv(std::ostream& os, const DatasetSummary& s) {
    os << "split,class,count,percent\n";
    for (const auto& row : s.rows)
        os << split_name(row.split) << ',' << row.cls << ',' << row.count << ',' << fixed6(row.percent) << '\n';
}

void SynthConfig::validate() const {
    if (n_samples == 0) throw std::invalid_argument("synth: n_samples must be positive");
    if (image_size <= 0) throw std::invalid_argument("synth: image_size must be positive");
    if (!(tumor_fraction >= 0.0 && tumor_fraction <= 1.0))
        throw std::invalid_argument("synth: tumor_fraction must lie in [0, 1]");
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0))
        throw std::invalid_argument("synth: test_fraction must lie in [0, 1]");
    if (!(radius_min > 0.0 && radius_min <= radius_max && radius_max < 0.5))
        throw std::invalid_argument("synth: need 0 < radius_min <= radius_max < 0.5");
    if (noise_amplitude < 0 || noise_amplitude > 255) throw std::invalid_argument("synth: noise must lie in [0, 255]");
}

namespace {

constexpr std::uint64_t kTumorStream = 0x7475'6d6f'7273ULL;
constexpr std::uint64_t kSplitStream = 0x7370'6c69'7473ULL;

constexpr int kBackgroundLevel = 16;
constexpr int kTumorLevel = 176;

std::vector<bool> choose_subset(std::size_t n, double fraction, std::uint64_t seed, std::uint64_t stream) {
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    Rng rng(derive_seed(seed, stream));
    const auto order = permutation(n, rng);
    std::vector<bool> chosen(n, false);
    for (std::size_t i = 0; i < count; ++i) chosen[order[i]] = true;
    return chosen;
}

std::string synth_id(std::size_t i, std::size_t n) {
    std::string digits = std::to_string(i);
    const std::size_t width = std::max<std::size_t>(5, std::to_string(n > 0 ? n - 1 : 0).size());
    return "synth_" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// Integer pixel index for an ellipse center such that the semi-axis fits.
int center_pixel(Rng& rng, double radius_px, int size) {
    int lo = static_cast<int>(std::floor(radius_px));
    int hi = size - 1 - lo;
    if (hi < lo) lo = hi = size / 2;
    return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

ImageRecord synth_record(const SynthConfig& cfg, std::size_t i, bool tumor, bool test) {
    Rng rng(derive_seed(cfg.seed, i));
    const int size = cfg.image_size;
    const auto noise_levels = static_cast<std::uint64_t>(cfg.noise_amplitude) + 1;

    ImageRecord r;
    r.id = synth_id(i, cfg.n_samples);
    r.split = test ? Split::test : Split::train;
    r.label = tumor ? ClassLabel::tumor : ClassLabel::notumor;
    r.image.width = r.image.height = size;
    r.image.pixels.resize(static_cast<std::size_t>(size) * size);
    for (auto& px : r.image.pixels)
        px = static_cast<std::uint8_t>(std::min<std::uint64_t>(255, kBackgroundLevel + uniform_below(rng, noise_levels)));

    BinaryMask mask(size, size);
    if (tumor) {
        // Half-integer semi-axes in pixels: no one-pixel tips, so the raster fills
        // more than 0.7 of its bounding box at every size.
        const double rx = std::floor(uniform(rng, cfg.radius_min, cfg.radius_max) * size) + 0.5;
        const double ry = std::floor(uniform(rng, cfg.radius_min, cfg.radius_max) * size) + 0.5;
        const double cx = center_pixel(rng, rx, size) + 0.5;
        const double cy = center_pixel(rng, ry, size) + 0.5;
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double u = (x + 0.5 - cx) / rx;
                const double v = (y + 0.5 - cy) / ry;
                if (u * u + v * v > 1.0) continue;
                mask.set(x, y, true);
                r.image.pixels[static_cast<std::size_t>(y) * size + x] = static_cast<std::uint8_t>(
                    std::min<std::uint64_t>(255, kTumorLevel + uniform_below(rng, noise_levels)));
            }
        }
        r.boxes = std::vector<Box>{*mask_bounding_box(mask)};
    }
    r.mask = std::move(mask);
    return r;
}

}  // namespace

std::vector<ImageRecord> generate_synthetic(const SynthConfig& cfg, unsigned workers) {
    cfg.validate();
    const auto tumor = choose_subset(cfg.n_samples, cfg.tumor_fraction, cfg.seed, kTumorStream);
    const auto test = choose_subset(cfg.n_samples, cfg.test_fraction, cfg.seed, kSplitStream);
    std::vector<ImageRecord> records(cfg.n_samples);
    parallel_for(cfg.n_samples, workers, [&](std::size_t i) { records[i] = synth_record(cfg, i, tumor[i], test[i]); });
    return records;
}

void write_dataset(const fs::path& out_dir, std::span<const ImageRecord> records) {
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    fs::create_directories(out_dir / "masks", ec);
    if (ec) throw DataError("cannot create '" + out_dir.string() + "': " + ec.message());

    std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::binary);
    if (!manifest) throw DataError("cannot write manifest in '" + out_dir.string() + "'");
    for (const auto& r : records) {
        const std::string image_rel = "images/" + r.id + ".pgm";
        write_pgm(out_dir / image_rel, r.image);
        std::string mask_rel;
        if (r.mask) {
            mask_rel = "masks/" + r.id + ".pgm";
            GrayImage m{r.mask->width(), r.mask->height(), {}};
            m.pixels.reserve(r.mask->size());
            for (auto p : r.mask->pixels()) m.pixels.push_back(p ? 255 : 0);
            write_pgm(out_dir / mask_rel, m);
        }
        manifest << manifest_line(r, image_rel, r.mask ? &mask_rel : nullptr) << '\n';
    }
    if (!manifest) throw DataError("manifest write failed in '" + out_dir.string() + "'");
}

ImageRecord resize(const ImageRecord& record, int size) {
    if (size <= 0) throw std::invalid_argument("resize: size must be positive");
    record.validate();
    if (record.width() == size && record.height() == size) return record;

    ImageRecord out;
    out.id = record.id;
    out.split = record.split;
    out.label = record.label;
    out.boxes = record.boxes;

    const int in_w = record.width(), in_h = record.height();
    out.image.width = out.image.height = size;
    out.image.pixels.resize(static_cast<std::size_t>(size) * size);

    auto source = [](int dst, int in, int out_size) {
        const double s = (dst + 0.5) * in / out_size - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(in - 1));
    };
    for (int y = 0; y < size; ++y) {
        const double sy = source(y, in_h, size);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, in_h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < size; ++x) {
            const double sx = source(x, in_w, size);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, in_w - 1);
            const double fx = sx - x0;
            auto px = [&](int xx, int yy) {
                return static_cast<double>(record.image.pixels[static_cast<std::size_t>(yy) * in_w + xx]);
            };
            const double top = px(x0, y0) + (px(x1, y0) - px(x0, y0)) * fx;
            const double bottom = px(x0, y1) + (px(x1, y1) - px(x0, y1)) * fx;
            const double v = top + (bottom - top) * fy;
            out.image.pixels[static_cast<std::size_t>(y) * size + x] =
                static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
        }
    }

    if (record.mask) {
        BinaryMask m(size, size);
        for (int y = 0; y < size; ++y) {
            const int sy = std::min(in_h - 1, static_cast<int>((y + 0.5) * in_h / size));
            for (int x = 0; x < size; ++x) {
                const int sx = std::min(in_w - 1, static_cast<int>((x + 0.5) * in_w / size));
                m.set(x, y, record.mask->at(sx, sy) != 0);
            }
        }
        out.mask = std::move(m);
    }
    return out;
}

BinaryMask box_mask(const Box& box, int width, int height) {
    BinaryMask m(width, height);
    for (int y = 0; y < height; ++y) {
        const double py = (y + 0.5) / height;
        if (py <= box.y1() || py >= box.y2()) continue;
        for (int x = 0; x < width; ++x) {
            const double px = (x + 0.5) / width;
            if (px > box.x1() && px < box.x2()) m.set(x, y, true);
        }
    }
    return m;
}

std::optional<Box> mask_bounding_box(const BinaryMask& mask) {
    int min_x = mask.width(), min_y = mask.height(), max_x = -1, max_y = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
    }
    if (max_x < 0) return std::nullopt;
    const double w = mask.width(), h = mask.height();
    return Box::from_corners(min_x / w, min_y / h, (max_x + 1) / w, (max_y + 1) / h);
}

std::vector<double> pixel_features(const GrayImage& img) {
    std::vector<double> f(img.pixels.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = img.pixels[i] / 255.0;
    return f;
}

}  // namespace anchorforge

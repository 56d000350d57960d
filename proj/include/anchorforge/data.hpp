#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchorforge/geometry.hpp"
#include "anchorforge/image_io.hpp"
#include "anchorforge/metrics.hpp"

namespace anchorforge {

enum class Split { train, test };

// Declaration order is the reporting order.
enum class ClassLabel { notumor, meningioma, glioma, pituitary, tumor };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view s);
std::string_view class_name(ClassLabel c);
std::optional<ClassLabel> parse_class(std::string_view s);
/// Binary target: notumor is 0, every tumor class is 1.
inline std::uint8_t binary_target(ClassLabel c) { return c == ClassLabel::notumor ? 0 : 1; }

struct ImageRecord {
    std::string id;
    GrayImage image;
    std::optional<BinaryMask> mask;
    std::optional<std::vector<Box>> boxes;
    std::optional<ClassLabel> label;
    Split split = Split::train;

    int width() const { return image.width; }
    int height() const { return image.height; }
    /// Throws DataError naming the record when mask and image disagree.
    void validate() const;
};

struct LoadOptions {
    /// Drop records whose mask is absent or empty.
    bool drop_empty_masks = false;
    unsigned workers = 1;
};

/// Reads a JSONL manifest, one record per nonblank line:
///   {"id", "image", "mask"?, "boxes"?: [{"x","y","w","h"}], "label"?, "split"}
/// Paths are relative to the manifest's directory. Boxes are normalized
/// top-left form and come back as center-size. Masks are binarized. Records
/// are returned sorted by id.
///
/// Throws DataError for missing files, malformed lines (with the line
/// number), duplicate ids, and mask/image dimension mismatches.
std::vector<ImageRecord> load_dataset(const std::filesystem::path& manifest, const LoadOptions& opts = {});

/// Manifest line for a record, keys in the order id, image, mask, boxes,
/// label, split. Paths are written as given.
std::string manifest_line(const ImageRecord& r, const std::string& image_path, const std::string* mask_path);

struct DatasetSummary {
    struct Row {
        Split split;
        std::string cls;
        std::size_t count;
        double percent;  // of the split total
    };
    std::vector<Row> rows;  // train before test, classes in ClassLabel order, unlabeled last
};

/// Counts records per split and class; classes with no records in a split
/// are omitted. Throws std::invalid_argument on empty input.
DatasetSummary summarize(std::span<const ImageRecord> records);
/// CSV `split,class,count,percent`, percent with six decimals.
void write_summary_csv(std::ostream& os, const DatasetSummary& s);

struct SynthConfig {
    std::size_t n_samples = 64;
    int image_size = 64;
    double tumor_fraction = 0.5;
    double radius_min = 0.08;  // ellipse semi-axes, fraction of image side
    double radius_max = 0.2;
    int noise_amplitude = 24;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument unless 0 < radius_min <= radius_max < 0.5,
    /// fractions lie in [0, 1], noise lies in [0, 255] and sizes are positive.
    void validate() const;
};

/// Seeded MRI-like images: dark noisy background, and for exactly
/// round(n * tumor_fraction) records a bright filled ellipse. Tumor records
/// carry the ellipse mask and its tight bounding box; other records carry an
/// empty mask and no boxes. Exactly round(n * test_fraction) records are
/// assigned to the test split. Each record draws from its own derived stream,
/// so output is identical for any worker count.
std::vector<ImageRecord> generate_synthetic(const SynthConfig& cfg, unsigned workers = 1);

/// Writes images/<id>.pgm, masks/<id>.pgm (0 or 255) and manifest.jsonl.
void write_dataset(const std::filesystem::path& out_dir, std::span<const ImageRecord> records);

/// Bilinear resample of the image and nearest-neighbor resample of the mask
/// to size x size. Normalized boxes are carried over unchanged.
ImageRecord resize(const ImageRecord& record, int size);

/// Pixels whose centers lie inside `box`, as a mask of the given size.
BinaryMask box_mask(const Box& box, int width, int height);
/// Tight normalized bounding box of the set pixels; nullopt for an empty mask.
std::optional<Box> mask_bounding_box(const BinaryMask& mask);

/// Flattened pixels scaled to [0, 1].
std::vector<double> pixel_features(const GrayImage& img);

}  // namespace anchorforge

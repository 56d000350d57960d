#include "anchorforge/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "anchorforge/data.hpp"
#include "anchorforge/errors.hpp"
#include "anchorforge/geometry.hpp"
#include "anchorforge/losses.hpp"
#include "anchorforge/matching.hpp"
#include "anchorforge/metrics.hpp"
#include "anchorforge/parallel.hpp"
#include "anchorforge/report.hpp"
#include "anchorforge/trainer.hpp"

namespace anchorforge {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Output file that only appears under its final name once commit() runs.
class ReportFile {
public:
    explicit ReportFile(fs::path path) : path_(std::move(path)), tmp_(path_.string() + ".partial") {
        os_.open(tmp_, std::ios::binary);
        if (!os_) throw DataError("cannot write '" + path_.string() + "'");
    }
    ReportFile(const ReportFile&) = delete;
    ReportFile& operator=(const ReportFile&) = delete;
    ~ReportFile() {
        if (!committed_) {
            os_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }

    std::ostream& stream() { return os_; }

    void commit() {
        os_.close();
        if (!os_) throw DataError("write failed for '" + path_.string() + "'");
        fs::rename(tmp_, path_);
        committed_ = true;
    }

private:
    fs::path path_;
    fs::path tmp_;
    std::ofstream os_;
    bool committed_ = false;
};

std::vector<double> parse_list(const std::string& text, const char* flag) {
    if (trim(text).empty()) throw UsageError(std::string(flag) + ": empty list");
    std::vector<double> out;
    for (auto field : split_fields(text, ',')) {
        // "a:b" is accepted for aspect ratios
        auto colon = field.find(':');
        std::optional<double> v;
        if (colon != std::string_view::npos) {
            auto num = parse_double(field.substr(0, colon));
            auto den = parse_double(field.substr(colon + 1));
            if (num && den && *den != 0.0) v = *num / *den;
        } else {
            v = parse_double(field);
        }
        if (!v || !std::isfinite(*v)) throw UsageError(std::string(flag) + ": bad number '" + std::string(field) + "'");
        out.push_back(*v);
    }
    return out;
}

std::pair<int, int> parse_grid(const std::string& text) {
    auto parts = split_fields(text, 'x');
    if (parts.size() != 2) throw UsageError("--grid: expected RxC, e.g. 32x32");
    auto r = parse_int(parts[0]);
    auto c = parse_int(parts[1]);
    if (!r || !c || *r <= 0 || *c <= 0 || *r > 100000 || *c > 100000)
        throw UsageError("--grid: dimensions must be positive integers");
    return {static_cast<int>(*r), static_cast<int>(*c)};
}

AnchorGrid load_anchors(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("missing anchors file '" + path.string() + "'");
    return read_anchor_csv(is);
}

std::vector<std::string> read_lines(const fs::path& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw DataError(std::string("missing ") + what + " '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

// Parses a CSV file with the exact header given; returns data rows split into fields.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string_view header, const char* what) {
    auto lines = read_lines(path, what);
    if (lines.empty() || trim(lines[0]) != header)
        throw DataError(path.string() + ": expected header '" + std::string(header) + "'");
    const auto width = split_fields(header, ',').size();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto fields = split_fields(trim(lines[i]), ',');
        if (fields.size() != width)
            throw DataError(path.string() + " line " + std::to_string(i + 1) + ": expected " + std::to_string(width) +
                            " fields");
        rows.emplace_back(fields.begin(), fields.end());
    }
    return rows;
}

double csv_number(const std::string& field, const fs::path& path, std::size_t row) {
    auto v = parse_double(field);
    if (!v || !std::isfinite(*v))
        throw DataError(path.string() + " row " + std::to_string(row + 1) + ": bad number '" + field + "'");
    return *v;
}

std::uint8_t csv_label(const std::string& field, const fs::path& path, std::size_t row) {
    auto v = parse_int(field);
    if (!v || (*v != 0 && *v != 1))
        throw DataError(path.string() + " row " + std::to_string(row + 1) + ": label must be 0 or 1");
    return static_cast<std::uint8_t>(*v);
}

std::vector<Box> manifest_boxes(const std::vector<ImageRecord>& records) {
    std::vector<Box> boxes;
    for (const auto& r : records)
        if (r.boxes) boxes.insert(boxes.end(), r.boxes->begin(), r.boxes->end());
    return boxes;
}

// Features and binary targets for every labelled record in `split` (all splits when nullopt).
// resize_to == 0 keeps the native resolution.
std::vector<Sample> samples_from(const std::vector<ImageRecord>& records, std::optional<Split> split, int resize_to) {
    std::vector<Sample> out;
    for (const auto& r : records) {
        if (split && r.split != *split) continue;
        if (!r.label) throw DataError("record '" + r.id + "' has no label");
        const GrayImage img = resize_to > 0 ? resize(r, resize_to).image : r.image;
        out.push_back({pixel_features(img), binary_target(*r.label)});
    }
    return out;
}

EvalReport classification_report(const LinearModel& model, const std::vector<Sample>& samples, double threshold,
                                 bool require_auc) {
    std::vector<std::uint8_t> labels;
    std::vector<double> probs;
    for (const auto& s : samples) {
        labels.push_back(s.label);
        probs.push_back(predict(model, s.features));
    }
    const auto batch = ScoredBatch::from_probabilities(std::move(labels), std::move(probs));
    EvalReport r;
    r.threshold = threshold;
    r.n = batch.size();
    r.accuracy = accuracy(batch, threshold);
    if (require_auc || (batch.positives() > 0 && batch.negatives() > 0)) r.auc = roc_auc(batch);
    return r;
}

void emit_report(const EvalReport& r, std::ostream& out, const std::string& csv_path) {
    std::optional<ReportFile> csv;
    if (!csv_path.empty()) {
        csv.emplace(csv_path);
        csv->stream() << eval_csv_header() << '\n' << to_csv_row(r) << '\n';
        csv->commit();
    }
    out << to_json(r) << '\n';
}

// ---------------------------------------------------------------------------

struct AnchorsGenArgs {
    std::string scales = "0.1,0.175,0.3";
    std::string ratios = "2,1,0.5";
    std::string grid = "32x32";
    std::string out;
};

int cmd_anchors_gen(const AnchorsGenArgs& a, std::ostream& out) {
    AnchorConfig cfg;
    cfg.scales = parse_list(a.scales, "--scales");
    cfg.ratios = parse_list(a.ratios, "--ratios");
    std::tie(cfg.grid_rows, cfg.grid_cols) = parse_grid(a.grid);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const AnchorGrid grid = generate_anchors(cfg);
    if (a.out.empty()) {
        write_anchor_csv(out, grid);
    } else {
        ReportFile f(a.out);
        write_anchor_csv(f.stream(), grid);
        f.commit();
        out << "wrote " << grid.size() << " anchors to " << a.out << '\n';
    }
    return kExitOk;
}

struct CoverageArgs {
    std::string anchors, manifest, thresholds = "0.3,0.5,0.75", out;
};

int cmd_coverage(const CoverageArgs& a, std::ostream& out) {
    const auto thresholds = parse_list(a.thresholds, "--thresholds");
    const unsigned workers = default_workers();
    const AnchorGrid anchors = load_anchors(a.anchors);
    const auto records = load_dataset(a.manifest, {false, workers});
    const auto boxes = manifest_boxes(records);
    if (boxes.empty()) throw DataError("manifest '" + a.manifest + "' contains no boxes");
    const auto rows = coverage_report(anchors, boxes, thresholds, workers);

    std::ostringstream table;
    table << "threshold,covered,total,fraction\n";
    for (const auto& r : rows)
        table << fixed6(r.threshold) << ',' << r.covered << ',' << r.total << ',' << fixed6(r.fraction) << '\n';
    if (!a.out.empty()) {
        ReportFile f(a.out);
        f.stream() << table.str();
        f.commit();
    }
    out << table.str();
    return kExitOk;
}

struct TargetsArgs {
    std::string manifest, anchors, out;
    double pos_iou = 0.5, fallback_iou = 0.3;
};

int cmd_targets_assign(const TargetsArgs& a, std::ostream& out) {
    AssignmentPolicy policy{a.pos_iou, a.fallback_iou};
    try {
        policy.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const unsigned workers = default_workers();
    const AnchorGrid anchors = load_anchors(a.anchors);
    const auto records = load_dataset(a.manifest, {false, workers});

    std::vector<TargetAssignment> assignments(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
        const auto& boxes = records[i].boxes;
        assignments[i] = assign_targets(anchors, boxes ? std::span<const Box>(*boxes) : std::span<const Box>{}, policy);
    });

    std::size_t with_positive = 0, positives = 0;
    ReportFile f(a.out);
    write_assignment_csv_header(f.stream(), true);
    for (std::size_t i = 0; i < records.size(); ++i) {
        write_assignment_rows(f.stream(), assignments[i], &records[i].id);
        positives += assignments[i].positive_count();
        if (assignments[i].positive_count() > 0) ++with_positive;
    }
    f.commit();
    const double frac = records.empty() ? 0.0 : static_cast<double>(with_positive) / static_cast<double>(records.size());
    out << "records=" << records.size() << " anchors=" << anchors.size() << " positive_anchors=" << positives
        << " records_with_positive=" << with_positive << " fraction=" << fixed6(frac) << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::string manifest, model_out;
    TrainConfig cfg;
    int resize = 0;
    double threshold = 0.5;
};

int cmd_train_logreg(const TrainArgs& a, std::ostream& out) {
    try {
        a.cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.resize < 0) throw UsageError("--resize must be positive");
    const auto records = load_dataset(a.manifest, {false, default_workers()});
    const auto train = samples_from(records, Split::train, a.resize);
    const auto test = samples_from(records, Split::test, a.resize);
    if (train.empty()) throw DataError("manifest has no training records");

    const TrainResult result = sgd_train(train, a.cfg);
    ReportFile f(a.model_out);
    write_model(f.stream(), result.model);

    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
        out << "epoch " << e + 1 << " lr " << fixed6(lr_at(static_cast<int>(e), a.cfg)) << " loss "
            << fixed6(result.loss_history[e]) << '\n';
    out << "train " << to_json(classification_report(result.model, train, a.threshold, false)) << '\n';
    if (!test.empty()) out << "test " << to_json(classification_report(result.model, test, a.threshold, false)) << '\n';
    f.commit();
    return kExitOk;
}

struct EvalArgs {
    std::string task;
    std::string scores, model, manifest, split = "test";
    std::string pred, gt;
    std::string anchors, predictions;
    double pos_iou = 0.5, fallback_iou = 0.3;
    double threshold = 0.5;
    int resize = 0;
    bool no_auc = false;
    std::string out;
};

EvalReport eval_cls(const EvalArgs& a) {
    if (!a.scores.empty()) {
        const auto rows = read_csv(a.scores, "score,label", "scores file");
        if (rows.empty()) throw DataError("scores file has no rows");
        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            scores.push_back(csv_number(rows[i][0], a.scores, i));
            labels.push_back(csv_label(rows[i][1], a.scores, i));
        }
        for (double s : scores)
            if (s < 0.0 || s > 1.0) throw DataError("scores must be probabilities in [0, 1]");
        const auto batch = ScoredBatch::from_probabilities(std::move(labels), std::move(scores));
        EvalReport r;
        r.threshold = a.threshold;
        r.n = batch.size();
        r.accuracy = accuracy(batch, a.threshold);
        if (!a.no_auc) r.auc = roc_auc(batch);
        return r;
    }
    if (a.model.empty() || a.manifest.empty()) throw UsageError("--task cls needs --scores, or --model with --manifest");
    std::ifstream is(a.model);
    if (!is) throw DataError("missing model file '" + a.model + "'");
    const LinearModel model = read_model(is);
    std::optional<Split> split;
    if (a.split != "all") {
        split = parse_split(a.split);
        if (!split) throw UsageError("--split must be train, test or all");
    }
    const auto records = load_dataset(a.manifest, {false, default_workers()});
    const auto samples = samples_from(records, split, a.resize);
    if (samples.empty()) throw DataError("no records in split '" + a.split + "'");
    auto r = classification_report(model, samples, a.threshold, !a.no_auc);
    if (a.no_auc) r.auc.reset();
    return r;
}

EvalReport eval_seg(const EvalArgs& a) {
    if (a.pred.empty() || a.gt.empty()) throw UsageError("--task seg needs --pred and --gt");
    const GrayImage pred = read_gray_image(a.pred);
    GrayImage gt_img = read_gray_image(a.gt);
    if (pred.width != gt_img.width || pred.height != gt_img.height)
        throw ShapeMismatch("prediction is " + std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                            " but ground truth is " + std::to_string(gt_img.width) + "x" +
                            std::to_string(gt_img.height));
    const BinaryMask gt(gt_img.width, gt_img.height, std::move(gt_img.pixels));
    std::vector<double> probs(pred.pixels.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = pred.pixels[i] / 255.0;
    auto r = segmentation_report(probs, gt, a.threshold);
    if (a.no_auc) r.auc.reset();
    return r;
}

EvalReport eval_det(const EvalArgs& a) {
    if (a.manifest.empty() || a.anchors.empty() || a.predictions.empty())
        throw UsageError("--task det needs --manifest, --anchors and --predictions");
    AssignmentPolicy policy{a.pos_iou, a.fallback_iou};
    try {
        policy.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const AnchorGrid anchors = load_anchors(a.anchors);
    const auto records = load_dataset(a.manifest, {false, default_workers()});
    const auto rows = read_csv(a.predictions, "record_id,anchor_index,score,dx,dy,dw,dh", "predictions file");

    struct Predictions {
        std::vector<double> scores;
        std::vector<OffsetVector> offsets;
        std::vector<bool> seen;
    };
    std::map<std::string, Predictions> by_record;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& p = by_record[rows[i][0]];
        if (p.scores.empty()) {
            p.scores.assign(anchors.size(), 0.0);
            p.offsets.assign(anchors.size(), {});
            p.seen.assign(anchors.size(), false);
        }
        auto idx = parse_int(rows[i][1]);
        if (!idx || *idx < 0 || static_cast<std::size_t>(*idx) >= anchors.size())
            throw ShapeMismatch(a.predictions + " row " + std::to_string(i + 1) + ": anchor index out of range");
        const auto k = static_cast<std::size_t>(*idx);
        if (p.seen[k]) throw DataError(a.predictions + " row " + std::to_string(i + 1) + ": duplicate anchor index");
        p.seen[k] = true;
        p.scores[k] = csv_number(rows[i][2], a.predictions, i);
        p.offsets[k] = {csv_number(rows[i][3], a.predictions, i), csv_number(rows[i][4], a.predictions, i),
                        csv_number(rows[i][5], a.predictions, i), csv_number(rows[i][6], a.predictions, i)};
    }

    double iou_sum = 0.0, auc_sum = 0.0;
    std::size_t n = 0, n_auc = 0;
    for (const auto& r : records) {
        if (!r.boxes || r.boxes->empty()) continue;
        auto it = by_record.find(r.id);
        if (it == by_record.end()) throw ShapeMismatch("no predictions for record '" + r.id + "'");
        const auto& p = it->second;
        if (std::find(p.seen.begin(), p.seen.end(), false) != p.seen.end())
            throw ShapeMismatch("predictions for record '" + r.id + "' do not cover every anchor");
        const auto assignment = assign_targets(anchors, *r.boxes, policy);
        const auto ev = detection_top1_eval(p.scores, p.offsets, anchors, r.boxes->front(), assignment);
        iou_sum += ev.iou;
        ++n;
        if (ev.auc) {
            auc_sum += *ev.auc;
            ++n_auc;
        }
    }
    if (n == 0) throw DataError("manifest has no records with boxes");
    EvalReport rep;
    rep.threshold = a.threshold;
    rep.n = n;
    rep.iou = iou_sum / static_cast<double>(n);
    if (!a.no_auc) {
        if (n_auc == 0) throw DegenerateLabels();
        rep.auc = auc_sum / static_cast<double>(n_auc);
    }
    return rep;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    EvalReport r;
    if (a.task == "cls") r = eval_cls(a);
    else if (a.task == "seg") r = eval_seg(a);
    else if (a.task == "det") r = eval_det(a);
    else throw UsageError("--task must be cls, seg or det");
    emit_report(r, out, a.out);
    return kExitOk;
}

struct SynthArgs {
    SynthConfig cfg;
    std::string out_dir;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    try {
        a.cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto records = generate_synthetic(a.cfg, default_workers());
    write_dataset(a.out_dir, records);
    std::size_t tumors = 0;
    for (const auto& r : records) tumors += r.label == ClassLabel::tumor ? 1 : 0;
    out << "wrote " << records.size() << " records (" << tumors << " tumor) to " << a.out_dir << '\n';
    return kExitOk;
}

int cmd_kfold(long long n, long long k, std::uint64_t seed, std::ostream& out) {
    if (n <= 0) throw UsageError("--n must be positive");
    if (k < 2 || k > n) throw UsageError("--k must satisfy 2 <= k <= n");
    const auto folds = kfold_split(static_cast<std::size_t>(n), static_cast<std::size_t>(k), seed);
    out << '[';
    for (std::size_t f = 0; f < folds.size(); ++f) {
        out << (f ? ",[" : "[");
        for (std::size_t i = 0; i < folds[f].size(); ++i) out << (i ? "," : "") << folds[f][i];
        out << ']';
    }
    out << "]\n";
    return kExitOk;
}

int cmd_summarize(const std::string& manifest, bool drop_empty, const std::string& out_path, std::ostream& out) {
    const auto records = load_dataset(manifest, {drop_empty, default_workers()});
    if (records.empty()) throw DataError("manifest '" + manifest + "' has no records");
    const auto summary = summarize(records);
    if (out_path.empty()) {
        write_summary_csv(out, summary);
    } else {
        ReportFile f(out_path);
        write_summary_csv(f.stream(), summary);
        f.commit();
    }
    return kExitOk;
}

struct LossArgs {
    std::string kind, input, reduction = "mean";
    bool logits = false;
    double alpha = 0.1, gamma = 2.0, beta = 1.0;
    std::optional<double> w_pos, w_neg;
};

int cmd_loss_eval(const LossArgs& a, std::ostream& out) {
    const auto kind = parse_loss_kind(a.kind);
    if (!kind) throw UsageError("--kind must be bce, weighted-bce, focal, mse or smooth-l1");
    LossParams params;
    params.alpha = a.alpha;
    params.gamma = a.gamma;
    params.beta = a.beta;
    if (a.reduction == "sum") params.reduction = Reduction::sum;
    else if (a.reduction != "mean") throw UsageError("--reduction must be mean or sum");
    if (a.w_pos || a.w_neg) {
        if (!a.w_pos || !a.w_neg) throw UsageError("--w-pos and --w-neg go together");
        params.weights = ClassWeights{*a.w_pos, *a.w_neg};
    }

    LossResult res;
    std::size_t n = 0;
    try {
        if (*kind == LossKind::mse || *kind == LossKind::smooth_l1) {
            const auto rows = read_csv(a.input, "pdx,pdy,pdw,pdh,tdx,tdy,tdw,tdh", "loss input");
            std::vector<OffsetVector> pred, target;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                double v[8];
                for (int k = 0; k < 8; ++k) v[k] = csv_number(rows[i][k], a.input, i);
                pred.push_back({v[0], v[1], v[2], v[3]});
                target.push_back({v[4], v[5], v[6], v[7]});
            }
            if (pred.empty()) throw DataError("loss input has no rows");
            n = pred.size();
            res = evaluate(*kind, pred, target, params);
        } else {
            const auto rows = read_csv(a.input, "label,score", "loss input");
            std::vector<std::uint8_t> labels;
            std::vector<double> scores;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                labels.push_back(csv_label(rows[i][0], a.input, i));
                scores.push_back(csv_number(rows[i][1], a.input, i));
            }
            if (labels.empty()) throw DataError("loss input has no rows");
            n = labels.size();
            const auto batch = a.logits ? ScoredBatch::from_logits(std::move(labels), std::move(scores))
                                        : ScoredBatch::from_probabilities(std::move(labels), std::move(scores));
            res = evaluate(*kind, batch, params);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!std::isfinite(res.value)) throw NumericError("loss is not finite");
    out << "{\"loss\":\"" << loss_kind_name(*kind) << "\",\"value\":" << fixed6(res.value) << ",\"n\":" << n
        << "}\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"anchor-based detection targets, losses, metrics and a logistic-regression baseline", "anchorforge"};
    app.require_subcommand(1);

    std::function<int()> action;

    AnchorsGenArgs gen;
    auto* anchors = app.add_subcommand("anchors", "anchor grid tools");
    anchors->require_subcommand(1);
    auto* anchors_gen = anchors->add_subcommand("gen", "write an anchor grid as CSV");
    anchors_gen->add_option("--scales", gen.scales, "comma-separated scales")->capture_default_str();
    anchors_gen->add_option("--ratios", gen.ratios, "comma-separated width:height ratios")->capture_default_str();
    anchors_gen->add_option("--grid", gen.grid, "feature map size RxC")->capture_default_str();
    anchors_gen->add_option("--out", gen.out, "output CSV (stdout when omitted)");
    anchors_gen->callback([&] { action = [&] { return cmd_anchors_gen(gen, out); }; });

    CoverageArgs cov;
    auto* coverage = app.add_subcommand("coverage", "fraction of ground-truth boxes matched by some anchor");
    coverage->add_option("--anchors", cov.anchors, "anchor CSV")->required();
    coverage->add_option("--manifest", cov.manifest, "dataset manifest (JSONL)")->required();
    coverage->add_option("--thresholds", cov.thresholds, "comma-separated IoU thresholds")->capture_default_str();
    coverage->add_option("--out", cov.out, "CSV report");
    coverage->callback([&] { action = [&] { return cmd_coverage(cov, out); }; });

    TargetsArgs tgt;
    auto* targets = app.add_subcommand("targets", "anchor target tools");
    targets->require_subcommand(1);
    auto* targets_assign = targets->add_subcommand("assign", "label anchors and compute offset targets");
    targets_assign->add_option("--manifest", tgt.manifest)->required();
    targets_assign->add_option("--anchors", tgt.anchors)->required();
    targets_assign->add_option("--pos-iou", tgt.pos_iou)->capture_default_str();
    targets_assign->add_option("--fallback-iou", tgt.fallback_iou)->capture_default_str();
    targets_assign->add_option("--out", tgt.out)->required();
    targets_assign->callback([&] { action = [&] { return cmd_targets_assign(tgt, out); }; });

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "model training");
    train->require_subcommand(1);
    auto* train_logreg = train->add_subcommand("logreg", "logistic regression with mini-batch SGD");
    train_logreg->add_option("--manifest", tr.manifest)->required();
    train_logreg->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
    train_logreg->add_option("--lr", tr.cfg.lr0)->capture_default_str();
    train_logreg->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
    train_logreg->add_option("--decay-factor", tr.cfg.decay_factor)->capture_default_str();
    train_logreg->add_option("--decay-every", tr.cfg.decay_every)->capture_default_str();
    train_logreg->add_option("--seed", tr.cfg.seed)->capture_default_str();
    train_logreg->add_option("--resize", tr.resize, "resample images to NxN first");
    train_logreg->add_option("--threshold", tr.threshold)->capture_default_str();
    train_logreg->add_option("--model-out", tr.model_out)->required();
    train_logreg->callback([&] { action = [&] { return cmd_train_logreg(tr, out); }; });

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluation reports");
    eval->add_option("--task", ev.task, "cls, seg or det")->required();
    eval->add_option("--scores", ev.scores, "cls: CSV score,label");
    eval->add_option("--model", ev.model, "cls: model file");
    eval->add_option("--manifest", ev.manifest, "cls/det: dataset manifest");
    eval->add_option("--split", ev.split, "cls: train, test or all")->capture_default_str();
    eval->add_option("--resize", ev.resize, "cls: resample images to NxN first");
    eval->add_option("--pred", ev.pred, "seg: prediction image, probability = value / 255");
    eval->add_option("--gt", ev.gt, "seg: ground-truth mask image");
    eval->add_option("--anchors", ev.anchors, "det: anchor CSV");
    eval->add_option("--predictions", ev.predictions, "det: CSV record_id,anchor_index,score,dx,dy,dw,dh");
    eval->add_option("--pos-iou", ev.pos_iou)->capture_default_str();
    eval->add_option("--fallback-iou", ev.fallback_iou)->capture_default_str();
    eval->add_option("--threshold", ev.threshold)->capture_default_str();
    eval->add_flag("--no-auc", ev.no_auc, "skip AUC");
    eval->add_option("--out", ev.out, "CSV report");
    eval->callback([&] { action = [&] { return cmd_eval(ev, out); }; });

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    synth->add_option("--n", sy.cfg.n_samples)->capture_default_str();
    synth->add_option("--size", sy.cfg.image_size)->capture_default_str();
    synth->add_option("--tumor-fraction", sy.cfg.tumor_fraction)->capture_default_str();
    synth->add_option("--test-fraction", sy.cfg.test_fraction)->capture_default_str();
    synth->add_option("--radius-min", sy.cfg.radius_min)->capture_default_str();
    synth->add_option("--radius-max", sy.cfg.radius_max)->capture_default_str();
    synth->add_option("--noise", sy.cfg.noise_amplitude)->capture_default_str();
    synth->add_option("--seed", sy.cfg.seed)->capture_default_str();
    synth->add_option("--out-dir", sy.out_dir)->required();
    synth->callback([&] { action = [&] { return cmd_synth(sy, out); }; });

    long long kf_n = 0, kf_k = 0;
    std::uint64_t kf_seed = 0;
    auto* kfold = app.add_subcommand("kfold", "print seeded k-fold index sets as JSON");
    kfold->add_option("--n", kf_n)->required();
    kfold->add_option("--k", kf_k)->required();
    kfold->add_option("--seed", kf_seed)->capture_default_str();
    kfold->callback([&] { action = [&] { return cmd_kfold(kf_n, kf_k, kf_seed, out); }; });

    std::string sum_manifest, sum_out;
    bool sum_drop_empty = false;
    auto* summ = app.add_subcommand("summarize", "per-split class distribution");
    summ->add_option("--manifest", sum_manifest)->required();
    summ->add_flag("--drop-empty-masks", sum_drop_empty, "ignore records without a nonempty mask");
    summ->add_option("--out", sum_out, "CSV report (stdout when omitted)");
    summ->callback([&] { action = [&] { return cmd_summarize(sum_manifest, sum_drop_empty, sum_out, out); }; });

    LossArgs la;
    double w_pos = 0.0, w_neg = 0.0;
    auto* loss = app.add_subcommand("loss", "loss kernels");
    loss->require_subcommand(1);
    auto* loss_eval = loss->add_subcommand("eval", "evaluate a loss over a CSV batch");
    loss_eval->add_option("--kind", la.kind, "bce, weighted-bce, focal, mse or smooth-l1")->required();
    loss_eval->add_option("--input", la.input, "CSV label,score or pdx..tdh")->required();
    loss_eval->add_flag("--logits", la.logits, "scores are logits");
    loss_eval->add_option("--alpha", la.alpha)->capture_default_str();
    loss_eval->add_option("--gamma", la.gamma)->capture_default_str();
    loss_eval->add_option("--beta", la.beta)->capture_default_str();
    auto* w_pos_opt = loss_eval->add_option("--w-pos", w_pos);
    auto* w_neg_opt = loss_eval->add_option("--w-neg", w_neg);
    loss_eval->add_option("--reduction", la.reduction)->capture_default_str();
    loss_eval->callback([&] {
        if (w_pos_opt->count()) la.w_pos = w_pos;
        if (w_neg_opt->count()) la.w_neg = w_neg;
        action = [&] { return cmd_loss_eval(la, out); };
    });

    std::vector<const char*> argv{"anchorforge"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace anchorforge

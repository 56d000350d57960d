#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace anchorforge {

/// Logistic regression: p = sigmoid(w . x + b).
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;

    static LinearModel zeros(std::size_t dim) { return {std::vector<double>(dim, 0.0), 0.0}; }
    std::size_t dim() const { return weights.size(); }
    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct TrainConfig {
    double lr0 = 0.001;
    int epochs = 20;
    int batch_size = 16;
    double decay_factor = 0.1;
    int decay_every = 20;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument unless lr0 >= 0, epochs >= 0,
    /// batch_size > 0, decay_every > 0 and 0 < decay_factor <= 1.
    void validate() const;
};

struct Sample {
    std::vector<double> features;
    std::uint8_t label = 0;
};

struct TrainResult {
    LinearModel model;
    std::vector<double> loss_history;  // mean BCE over the samples seen in each epoch
};

/// Step schedule: lr0 * decay_factor ^ floor(epoch / decay_every).
double lr_at(int epoch, const TrainConfig& cfg);

double logit(const LinearModel& model, std::span<const double> features);
/// Throws ShapeMismatch on a feature length mismatch.
double predict(const LinearModel& model, std::span<const double> features);

/// Mini-batch SGD on mean BCE-with-logits from zero weights. Each epoch draws
/// one seeded permutation and walks it in batches of batch_size, keeping the
/// final partial batch. Single-threaded and bit-deterministic for a given
/// seed and input order.
///
/// Throws std::invalid_argument on an empty dataset and ShapeMismatch on
/// inconsistent feature lengths.
TrainResult sgd_train(std::span<const Sample> samples, const TrainConfig& cfg);

/// k folds over 0..n-1: a seeded shuffle dealt into contiguous chunks whose
/// sizes differ by at most one (the first n % k folds get the extra index).
/// Throws std::invalid_argument unless 2 <= k <= n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

/// Text format: `linmodel v1 <dim>`, the bias, then one weight per line, all
/// in shortest round-trip decimal.
void write_model(std::ostream& os, const LinearModel& model);
/// Throws DataError on malformed input.
LinearModel read_model(std::istream& is);

}  // namespace anchorforge

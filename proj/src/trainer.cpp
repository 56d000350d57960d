#include "anchorforge/trainer.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "anchorforge/errors.hpp"
#include "anchorforge/losses.hpp"
#include "anchorforge/random.hpp"
#include "anchorforge/report.hpp"

namespace anchorforge {

void TrainConfig::validate() const {
    if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw std::invalid_argument("train config: lr0 must be >= 0");
    if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
    if (batch_size <= 0) throw std::invalid_argument("train config: batch_size must be positive");
    if (decay_every <= 0) throw std::invalid_argument("train config: decay_every must be positive");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
        throw std::invalid_argument("train config: decay_factor must lie in (0, 1]");
}

double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("lr_at: negative epoch");
    return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

double logit(const LinearModel& model, std::span<const double> features) {
    if (features.size() != model.dim())
        throw ShapeMismatch("model expects " + std::to_string(model.dim()) + " features, got " +
                            std::to_string(features.size()));
    double z = model.bias;
    for (std::size_t i = 0; i < features.size(); ++i) z += model.weights[i] * features[i];
    return z;
}

double predict(const LinearModel& model, std::span<const double> features) {
    return sigmoid(logit(model, features));
}

TrainResult sgd_train(std::span<const Sample> samples, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw std::invalid_argument("sgd_train: empty dataset");
    const std::size_t dim = samples.front().features.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].features.size() != dim)
            throw ShapeMismatch("sgd_train: sample " + std::to_string(i) + " has " +
                                std::to_string(samples[i].features.size()) + " features, expected " +
                                std::to_string(dim));
        if (samples[i].label > 1) throw std::invalid_argument("sgd_train: labels must be 0 or 1");
    }

    TrainResult result{LinearModel::zeros(dim), {}};
    LinearModel& model = result.model;
    Rng rng(cfg.seed);
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<double> grad_w(dim);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        const auto order = permutation(samples.size(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const double scale = 1.0 / static_cast<double>(end - start);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = samples[order[k]];
                const double z = logit(model, s.features);
                epoch_loss += s.label ? softplus(-z) : softplus(z);
                const double residual = (sigmoid(z) - s.label) * scale;
                for (std::size_t d = 0; d < dim; ++d) grad_w[d] += residual * s.features[d];
                grad_b += residual;
            }
            for (std::size_t d = 0; d < dim; ++d) model.weights[d] -= lr * grad_w[d];
            model.bias -= lr * grad_b;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(samples.size()));
    }
    return result;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n) throw std::invalid_argument("kfold_split: need 2 <= k <= n");
    Rng rng(seed);
    const auto order = permutation(n, rng);
    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return folds;
}

void write_model(std::ostream& os, const LinearModel& model) {
    os << "linmodel v1 " << model.dim() << '\n' << round_trip(model.bias) << '\n';
    for (double w : model.weights) os << round_trip(w) << '\n';
}

LinearModel read_model(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("model: empty file");
    auto header = split_fields(trim(line), ' ');
    if (header.size() != 3 || header[0] != "linmodel" || header[1] != "v1")
        throw DataError("model: expected header 'linmodel v1 <dim>'");
    auto dim = parse_int(header[2]);
    if (!dim || *dim < 0) throw DataError("model: bad dimension");

    auto next_value = [&](const char* what) {
        if (!std::getline(is, line)) throw DataError(std::string("model: missing ") + what);
        auto v = parse_double(line);
        if (!v || !std::isfinite(*v)) throw DataError(std::string("model: bad ") + what);
        return *v;
    };
    LinearModel m;
    m.bias = next_value("bias");
    m.weights.reserve(static_cast<std::size_t>(*dim));
    for (long long i = 0; i < *dim; ++i) m.weights.push_back(next_value("weight"));
    while (std::getline(is, line))
        if (!trim(line).empty()) throw DataError("model: trailing data after weights");
    return m;
}

}  // namespace anchorforge

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mln/dataset.hpp"
#include "mln/errors.hpp"
#include "mln/loss.hpp"
#include "mln/model.hpp"
#include "mln/rng.hpp"
#include "mln/uncertainty.hpp"

namespace mln {

/// Training protocol knobs. Defaults follow the reference protocol: batch 128,
/// Adam at 1e-3 with 0.2 step decay every ten epochs, K = 20 mixtures,
/// lambda1 = lambda2 = 1, sigma in [1, 10].
struct TrainerConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double lr_decay_factor = 0.2;
    std::size_t lr_decay_every = 10;  // epochs; 0 disables decay
    std::size_t mixtures = 20;        // K
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double sigma_lo = 1.0;
    double sigma_hi = 10.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) throw UsageError("trainer: batch_size must be >= 1");
        if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
            throw UsageError("trainer: lr_decay_factor must be in (0,1]");
        if (!(sigma_lo < sigma_hi)) throw UsageError("trainer: requires sigma_lo < sigma_hi");
    }
};

struct EpochStats {
    std::size_t epoch = 0;       // 1-based
    double train_loss = 0.0;     // mean total loss over the epoch's batches
    double test_accuracy = -1.0; // clean-label accuracy on the eval set, -1 if none
    double mean_aleatoric = 0.0; // mean over training instances as seen this epoch
    double mean_epistemic = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::string checkpoint_ref;  // path once persisted, empty for in-memory runs
};

/// Fraction of instances whose Bayes-optimal label matches the clean label.
inline double evaluate_accuracy(const ModelParams& params, const LabeledDataset& dataset) {
    if (!dataset.has_clean_labels())
        throw UsageError("evaluate_accuracy: dataset has no clean labels");
    if (dataset.size() == 0) throw UsageError("evaluate_accuracy: empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const MixtureOutput out = forward(params, dataset.features.row(i));
        if (static_cast<int>(bayes_optimal_label(out)) == dataset.clean_labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

namespace detail {

/// Adam with zero-initialized moments. Parameters, gradients and both moment
/// containers are visited in the fixed param_values order.
struct AdamState {
    ModelParams m;
    ModelParams v;
    std::size_t step = 0;

    explicit AdamState(const ModelParams& like) : m(zeros_like(like)), v(zeros_like(like)) {}

    void update(ModelParams& params, ModelParams& grads, const TrainerConfig& cfg, double lr) {
        ++step;
        const auto t = static_cast<double>(step);
        const double bias1 = 1.0 - std::pow(cfg.adam_beta1, t);
        const double bias2 = 1.0 - std::pow(cfg.adam_beta2, t);
        std::vector<double*> p = param_values(params);
        std::vector<double*> g = param_values(grads);
        std::vector<double*> mm = param_values(m);
        std::vector<double*> vv = param_values(v);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double grad = *g[i];
            *mm[i] = cfg.adam_beta1 * *mm[i] + (1.0 - cfg.adam_beta1) * grad;
            *vv[i] = cfg.adam_beta2 * *vv[i] + (1.0 - cfg.adam_beta2) * grad * grad;
            const double m_hat = *mm[i] / bias1;
            const double v_hat = *vv[i] / bias2;
            *p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
};

}  // namespace detail

/// Minibatch training with Adam. Deterministic given (dataset, model, cfg):
/// a full seeded permutation per epoch, the short final batch kept, learning
/// rate multiplied by lr_decay_factor every lr_decay_every completed epochs.
/// Throws NumericError naming epoch/batch when the loss turns non-finite.
inline TrainReport train(const LabeledDataset& dataset, ModelParams& params,
                         const TrainerConfig& cfg,
                         const LabeledDataset* eval_set = nullptr) {
    cfg.validate();
    if (dataset.size() == 0) throw UsageError("train: empty dataset");
    if (dataset.dim() != params.input_dim())
        throw UsageError("train: dataset dimension " + std::to_string(dataset.dim()) +
                         " does not match model input " + std::to_string(params.input_dim()));

    TrainReport report;
    Rng shuffle_rng(cfg.seed);
    detail::AdamState adam(params);
    const LossConfig loss_cfg{cfg.lambda1, cfg.lambda2};

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr =
            cfg.lr_decay_every == 0
                ? cfg.lr
                : cfg.lr * std::pow(cfg.lr_decay_factor,
                                    static_cast<double>(epoch / cfg.lr_decay_every));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batch_count = 0;
        double alea_sum = 0.0;
        double epis_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<ForwardTrace> traces;
            std::vector<MixtureOutput> outs;
            std::vector<int> labels;
            traces.reserve(end - start);
            outs.reserve(end - start);
            labels.reserve(end - start);
            for (std::size_t idx = start; idx < end; ++idx) {
                const std::size_t i = order[idx];
                traces.push_back(forward_trace(params, dataset.features.row(i)));
                outs.push_back(traces.back().out);
                labels.push_back(dataset.noisy_labels[i]);
                alea_sum += aleatoric(outs.back());
                epis_sum += epistemic(outs.back());
            }
            const double batch_loss = total_loss(outs, labels, loss_cfg);
            if (!std::isfinite(batch_loss))
                throw NumericError("train: non-finite loss " + std::to_string(batch_loss) +
                                   " at epoch " + std::to_string(epoch + 1) + ", batch " +
                                   std::to_string(batch_count + 1));
            const std::vector<HeadGradients> head_grads = total_loss_grad(outs, labels, loss_cfg);
            ModelParams grads = zeros_like(params);
            for (std::size_t b = 0; b < traces.size(); ++b)
                backward(params, traces[b], head_grads[b], grads);
            adam.update(params, grads, cfg, lr);
            loss_sum += batch_loss;
            ++batch_count;
        }

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.train_loss = loss_sum / static_cast<double>(batch_count);
        stats.mean_aleatoric = alea_sum / static_cast<double>(dataset.size());
        stats.mean_epistemic = epis_sum / static_cast<double>(dataset.size());
        if (eval_set != nullptr) stats.test_accuracy = evaluate_accuracy(params, *eval_set);
        report.epochs.push_back(stats);
    }
    return report;
}

}  // namespace mln

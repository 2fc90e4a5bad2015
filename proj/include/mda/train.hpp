#pragma once

#include "mda/corpus.hpp"
#include "mda/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mda {

struct TrainConfig {
    Technique technique = Technique::base;
    bool dsb = false;
    bool dsn = false;
    double lambda = 1e-5;
    double learning_rate = 0.5;
    std::size_t max_iters = 2000;
    double tol = 1e-6;           // relative change of the total loss
    double gr_weight = 1.0;
    std::optional<std::size_t> rank;  // factorization rank; default max(k, 16)
    std::uint64_t seed = 0;
    double label_alpha = 1.0;    // smoothing for producer-side label distributions

    std::size_t rank_for(std::size_t k) const { return rank.value_or(std::max<std::size_t>(k, 16)); }

    void validate() const;
    /// Canonical JSON of every field; its SHA-256 is the provenance digest.
    std::string canonical_json() const;
    std::string digest() const;
};

struct LossBreakdown {
    double label_ce = 0.0;
    double domain_ce = 0.0;
    double l1_penalty = 0.0;
    double total = 0.0;
};

/// Featurized, fully labeled training data. Domain indices refer to
/// `domain_names`, which lists only domains that have documents.
struct TrainingSet {
    std::vector<FeatureVector> features;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> domain_of;
    std::vector<std::string> domain_names;
    std::vector<std::string> label_names;
    std::size_t h = 0;

    std::size_t size() const { return features.size(); }
    std::size_t k() const { return label_names.size(); }

    /// Selected instances; domains left without documents are dropped and
    /// the remaining indices renumbered.
    TrainingSet subset(std::span<const std::size_t> indices) const;
};

TrainingSet make_training_set(const Corpus& corpus, const Vocabulary& vocab);
/// Same, reusing pre-tokenized documents (one token list per corpus document).
TrainingSet make_training_set(const Corpus& corpus, std::span<const std::vector<std::string>> tokens,
                              const Vocabulary& vocab);

/// Per-domain statistics computed from a featurized set.
std::vector<DomainStats> training_domain_stats(const TrainingSet& set, double alpha);

/// Parameter-shaped gradient. Members not used by the model stay empty.
struct ModelGradients {
    Matrix w;
    Matrix w1;
    Matrix w2;
    Matrix head;
    std::vector<double> head_bias;
    std::vector<double> bias;
    Matrix dr;
};

/// -log p[y], with p clamped to at least 1e-12.
double cross_entropy(std::span<const double> proba, std::size_t y);

/// Model with parameter shapes and domain statistics for `set`, initialized
/// as the optimizer starts: zeros everywhere except W1 ~ U(-0.01, 0.01).
LinearModel initialize_model(const TrainingSet& set, const Vocabulary& vocab, const TrainConfig& config);

LossBreakdown batch_loss(const LinearModel& model, const TrainingSet& set, const TrainConfig& config);

/// Gradients of the smooth part of the loss. With GR the domain-loss
/// contribution into W1 is reversed while the head gets the ordinary gradient.
ModelGradients batch_gradients(const LinearModel& model, const TrainingSet& set, const TrainConfig& config);

struct IterationRecord {
    std::size_t iter = 0;
    LossBreakdown loss;
    double learning_rate = 0.0;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Full-batch proximal gradient descent with L1 on the weight matrices.
LinearModel train_full_batch(const TrainingSet& set, const Vocabulary& vocab, const TrainConfig& config,
                             const IterationObserver& observer = {});
LinearModel train_full_batch(const Corpus& train, const Vocabulary& vocab, const TrainConfig& config,
                             const IterationObserver& observer = {});

/// Soft-thresholding operator; returns +0.0 inside the dead zone.
inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

std::size_t count_nonzero_weights(const LinearModel& model);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Domain-stratified folds: every fold's per-domain count is within one of
/// the others'. `strata[i]` is the domain of instance i.
std::vector<Fold> kfold_splits(std::span<const std::size_t> strata, std::size_t k_folds, std::uint64_t seed);

/// {1e-5 * 2^j : j = 0..4}
std::vector<double> default_lambda_grid();

struct GridSearchResult {
    double best_lambda = 0.0;
    /// (lambda, mean validation label cross-entropy); empty when the grid has one value.
    std::vector<std::pair<double, double>> validation_loss;
    LinearModel model;  // retrained on the full set with best_lambda
};

/// `observer` follows only the final retraining.
GridSearchResult grid_search_lambda(const TrainingSet& set, const Vocabulary& vocab, const TrainConfig& config,
                                    std::span<const double> grid, std::size_t k_folds,
                                    const IterationObserver& observer = {});

/// Mean label cross-entropy of `model` on `set`, each instance scored with
/// the statistics of its own (seen) training domain.
double mean_label_cross_entropy(const LinearModel& model, const TrainingSet& set);

}  // namespace mda

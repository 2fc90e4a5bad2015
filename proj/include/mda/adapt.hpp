#pragma once

#include "mda/corpus.hpp"
#include "mda/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mda {

/// probs[c] = (count_c + alpha) / (n + k * alpha)
LabelDistribution estimate_label_distribution(std::span<const std::size_t> samples, std::size_t k,
                                              double alpha = 1.0);

/// A published model plus the target-domain inputs its flags call for.
/// The base model is referenced, never modified.
struct AdaptedModel {
    const LinearModel* base = nullptr;
    std::optional<LabelDistribution> target_label_dist;
    std::optional<std::vector<double>> target_dsn_means;

    PredictionContext context() const;
    BatchPredictor predictor() const { return BatchPredictor(*base, context()); }
};

/// Errors if the model lacks the DSB flag or `dist` has a zero entry.
AdaptedModel apply_dsb(const LinearModel& model, const LabelDistribution& dist);

/// Attaches target feature means to an adapted model (DSN models only).
AdaptedModel with_dsn_means(AdaptedModel adapted, std::vector<double> means);

/// Per-token presence rate over unlabeled target documents.
std::vector<double> compute_dsn_stats(std::span<const Document> docs, const Vocabulary& vocab);
std::vector<double> compute_dsn_stats(std::span<const FeatureVector> features, std::size_t h);

/// f - mu, with explicit negative entries wherever mu is nonzero and the
/// token is absent.
FeatureVector apply_dsn(const FeatureVector& fv, std::span<const double> means);

/// Accuracy of `model` under `ctx` on labeled features.
double context_accuracy(const LinearModel& model, const PredictionContext& ctx,
                        std::span<const FeatureVector> features, std::span<const std::size_t> labels);

struct PerformanceEstimate {
    double mean = 0.0;
    double std = 0.0;  // sample std across repeats
    std::vector<double> per_repeat;
};

/// Split-swap-average accuracy estimate: half the labels estimate the label
/// distribution and the other half are scored under it, then roles swap.
/// `ctx` supplies target DSN means when the model needs them; its label
/// distribution, if any, is ignored.
PerformanceEstimate two_fold_estimate(const LinearModel& model, std::span<const FeatureVector> features,
                                      std::span<const std::size_t> labels, const PredictionContext& ctx,
                                      std::uint64_t seed, std::size_t repeats = 10, double alpha = 1.0);

struct ThresholdChoice {
    double threshold = 0.0;
    double accuracy = 0.0;
};

/// Accuracy-maximizing threshold among -inf, +inf and the midpoints of
/// consecutive distinct scores; ties go to the smallest threshold.
/// Labels are 0 (negative) or 1 (positive).
ThresholdChoice tune_threshold(std::span<const double> scores, std::span<const int> labels);

}  // namespace mda

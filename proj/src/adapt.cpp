#include "mda/adapt.hpp"

#include "mda/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mda {

LabelDistribution estimate_label_distribution(std::span<const std::size_t> samples, std::size_t k, double alpha) {
    if (k < 2) throw UsageError("estimate_label_distribution: k must be at least 2");
    if (!(alpha >= 0.0)) throw UsageError("estimate_label_distribution: alpha must be >= 0");
    if (samples.empty() && alpha == 0.0)
        throw UsageError("estimate_label_distribution: no samples and no smoothing");
    std::vector<double> counts(k, 0.0);
    for (std::size_t y : samples) {
        if (y >= k) throw UsageError("estimate_label_distribution: label index out of range");
        counts[y] += 1.0;
    }
    const double denom = static_cast<double>(samples.size()) + static_cast<double>(k) * alpha;
    LabelDistribution dist;
    dist.probs.resize(k);
    for (std::size_t c = 0; c < k; ++c) dist.probs[c] = (counts[c] + alpha) / denom;
    dist.n_samples_used = samples.size();
    dist.smoothing_alpha = alpha;
    return dist;
}

PredictionContext AdaptedModel::context() const {
    PredictionContext ctx;
    if (target_label_dist) ctx.label_dist = target_label_dist->probs;
    if (target_dsn_means) ctx.dsn_means = target_dsn_means;
    return ctx;
}

AdaptedModel apply_dsb(const LinearModel& model, const LabelDistribution& dist) {
    if (!model.adaptation.dsb) throw UsageError("apply_dsb: model was not trained with DSB");
    if (dist.probs.size() != model.k) throw UsageError("apply_dsb: distribution length differs from k");
    for (double p : dist.probs)
        if (!(p > 0.0))
            throw UsageError("apply_dsb: label distribution has a zero entry; estimate it with smoothing (alpha > 0)");
    AdaptedModel out;
    out.base = &model;
    out.target_label_dist = dist;
    return out;
}

AdaptedModel with_dsn_means(AdaptedModel adapted, std::vector<double> means) {
    if (!adapted.base->adaptation.dsn) throw UsageError("with_dsn_means: model was not trained with DSN");
    if (means.size() != adapted.base->h) throw UsageError("with_dsn_means: means length differs from h");
    adapted.target_dsn_means = std::move(means);
    return adapted;
}

std::vector<double> compute_dsn_stats(std::span<const FeatureVector> features, std::size_t h) {
    if (features.empty()) throw DataError("compute_dsn_stats: no target documents");
    return presence_means(features, h);
}

std::vector<double> compute_dsn_stats(std::span<const Document> docs, const Vocabulary& vocab) {
    std::vector<FeatureVector> features;
    features.reserve(docs.size());
    for (const auto& d : docs) features.push_back(featurize(d, vocab));
    return compute_dsn_stats(features, vocab.size());
}

FeatureVector apply_dsn(const FeatureVector& fv, std::span<const double> means) {
    if (means.size() != fv.dimension) throw UsageError("apply_dsn: means length differs from feature dimension");
    FeatureVector out;
    out.dimension = fv.dimension;
    auto it = fv.entries.begin();
    for (std::size_t j = 0; j < means.size(); ++j) {
        double value = 0.0;
        bool present = false;
        if (it != fv.entries.end() && it->first == j) {
            value = it->second;
            present = value != 0.0;
            ++it;
        }
        if (present || means[j] > 0.0) out.entries.emplace_back(j, value - means[j]);
    }
    return out;
}

double context_accuracy(const LinearModel& model, const PredictionContext& ctx,
                        std::span<const FeatureVector> features, std::span<const std::size_t> labels) {
    if (features.size() != labels.size() || features.empty())
        throw UsageError("context_accuracy: features and labels must be equal-length and non-empty");
    const BatchPredictor predictor(model, ctx);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i) correct += predictor.predict(features[i]) == labels[i];
    return static_cast<double>(correct) / static_cast<double>(features.size());
}

PerformanceEstimate two_fold_estimate(const LinearModel& model, std::span<const FeatureVector> features,
                                      std::span<const std::size_t> labels, const PredictionContext& ctx,
                                      std::uint64_t seed, std::size_t repeats, double alpha) {
    const std::size_t n = labels.size();
    if (n < 2 || features.size() != n) throw UsageError("two_fold_estimate: need at least 2 labeled samples");
    if (repeats < 1) throw UsageError("two_fold_estimate: repeats must be >= 1");

    auto score_half = [&](const std::vector<std::size_t>& est, const std::vector<std::size_t>& eval) {
        PredictionContext c;
        c.dsn_means = ctx.dsn_means;
        if (model.adaptation.dsb) {
            std::vector<std::size_t> est_labels;
            for (std::size_t i : est) est_labels.push_back(labels[i]);
            c.label_dist = estimate_label_distribution(est_labels, model.k, alpha).probs;
        }
        const BatchPredictor predictor(model, c);
        std::size_t correct = 0;
        for (std::size_t i : eval) correct += predictor.predict(features[i]) == labels[i];
        return static_cast<double>(correct) / static_cast<double>(eval.size());
    };

    PerformanceEstimate out;
    for (std::size_t r = 0; r < repeats; ++r) {
        Rng rng(derive_seed(seed, r));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        const std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n / 2));
        const std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(n / 2), order.end());
        out.per_repeat.push_back(0.5 * (score_half(a, b) + score_half(b, a)));
    }
    out.mean = mean(out.per_repeat);
    out.std = sample_std(out.per_repeat);
    return out;
}

ThresholdChoice tune_threshold(std::span<const double> scores, std::span<const int> labels) {
    if (scores.empty() || scores.size() != labels.size())
        throw UsageError("tune_threshold: scores and labels must be equal-length and non-empty");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<double> candidates;
    candidates.push_back(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    candidates.push_back(std::numeric_limits<double>::infinity());

    ThresholdChoice best{candidates.front(), -1.0};
    for (double t : candidates) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            correct += classify_with_threshold(scores[i], t) == (labels[i] != 0 ? 1 : 0);
        const double acc = static_cast<double>(correct) / static_cast<double>(scores.size());
        if (acc > best.accuracy) best = {t, acc};
    }
    return best;
}

}  // namespace mda

#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include "mda/model.hpp"
#include "mda/rng.hpp"
#include "mda/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mda::testing {

inline Vocabulary numbered_vocab(std::size_t h) {
    std::vector<std::string> tokens;
    for (std::size_t j = 0; j < h; ++j) tokens.push_back("tok" + std::to_string(100 + j));
    return Vocabulary(tokens);
}

inline FeatureVector random_features(Rng& rng, std::size_t h, double density) {
    FeatureVector fv;
    fv.dimension = h;
    for (std::size_t j = 0; j < h; ++j)
        if (rng.bernoulli(density)) fv.entries.emplace_back(j, 1.0);
    return fv;
}

/// n instances over m domains with random binary features and labels; every
/// domain gets at least one instance.
inline TrainingSet random_training_set(std::uint64_t seed, std::size_t k, std::size_t h, std::size_t n,
                                       std::size_t m) {
    Rng rng(seed);
    TrainingSet set;
    set.h = h;
    for (std::size_t c = 0; c < k; ++c) set.label_names.push_back("c" + std::to_string(c));
    for (std::size_t d = 0; d < m; ++d) set.domain_names.push_back("d" + std::to_string(d));
    for (std::size_t i = 0; i < n; ++i) {
        set.features.push_back(random_features(rng, h, 0.35));
        set.labels.push_back(rng.below(k));
        set.domain_of.push_back(i < m ? i : rng.below(m));
    }
    return set;
}

/// Parameters of every trainable block filled with U(-scale, scale).
inline void randomize_parameters(LinearModel& model, std::uint64_t seed, double scale = 0.5) {
    Rng rng(seed);
    auto fill = [&](std::vector<double>& v) {
        for (double& x : v) x = rng.uniform(-scale, scale);
    };
    fill(model.bias);
    if (auto* d = std::get_if<DenseWeights>(&model.weights)) fill(d->w.data());
    if (auto* f = std::get_if<FactorizedWeights>(&model.weights)) {
        fill(f->w1.data());
        fill(f->w2.data());
        fill(f->head.data());
        fill(f->head_bias);
    }
    if (model.dr_bias_table) fill(model.dr_bias_table->data());
}

/// Named (parameter block, gradient block) pairs in matching order.
struct Block {
    std::string name;
    std::vector<double>* param;
    const std::vector<double>* grad;
    double domain_sign;  // coefficient of the domain loss in the expected gradient
};

inline std::vector<Block> blocks(LinearModel& model, const ModelGradients& g) {
    std::vector<Block> out;
    out.push_back({"bias", &model.bias, &g.bias, 0.0});
    if (auto* d = std::get_if<DenseWeights>(&model.weights)) out.push_back({"w", &d->w.data(), &g.w.data(), 0.0});
    if (auto* f = std::get_if<FactorizedWeights>(&model.weights)) {
        out.push_back({"w1", &f->w1.data(), &g.w1.data(), -1.0});
        out.push_back({"w2", &f->w2.data(), &g.w2.data(), 0.0});
        out.push_back({"head", &f->head.data(), &g.head.data(), 1.0});
        out.push_back({"head_bias", &f->head_bias, &g.head_bias, 1.0});
    }
    if (model.dr_bias_table) out.push_back({"dr", &model.dr_bias_table->data(), &g.dr.data(), 0.0});
    return out;
}

/// Largest relative deviation between the analytic gradient and central
/// differences of label_ce + sign * gr_weight * domain_ce, per parameter.
/// The denominator is floored at `floor` so near-zero entries compare in
/// absolute terms.
inline double max_fd_relative_error(LinearModel model, const TrainingSet& set, TrainConfig config,
                                    double step = 1e-6, double floor = 1e-4, std::string* worst = nullptr) {
    config.lambda = 0.0;
    const ModelGradients g = batch_gradients(model, set, config);
    double max_err = 0.0;
    for (const Block& b : blocks(model, g)) {
        if (b.grad->size() != b.param->size()) {
            if (worst) *worst = b.name + " gradient has the wrong shape";
            return INFINITY;
        }
        for (std::size_t i = 0; i < b.param->size(); ++i) {
            double& p = (*b.param)[i];
            const double saved = p;
            auto objective = [&] {
                const LossBreakdown l = batch_loss(model, set, config);
                return l.label_ce + b.domain_sign * config.gr_weight * l.domain_ce;
            };
            p = saved + step;
            const double up = objective();
            p = saved - step;
            const double down = objective();
            p = saved;
            const double fd = (up - down) / (2.0 * step);
            const double an = (*b.grad)[i];
            const double err = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), floor});
            if (err > max_err) {
                max_err = err;
                if (worst) *worst = b.name + "[" + std::to_string(i) + "] analytic " + std::to_string(an) + " fd " +
                                    std::to_string(fd);
            }
        }
    }
    return max_err;
}

/// The twelve technique x DSB x DSN combinations.
inline std::vector<TrainConfig> all_configs() {
    std::vector<TrainConfig> out;
    for (Technique t : {Technique::base, Technique::dr, Technique::gr})
        for (bool dsb : {false, true})
            for (bool dsn : {false, true}) {
                TrainConfig c;
                c.technique = t;
                c.dsb = dsb;
                c.dsn = dsn;
                out.push_back(c);
            }
    return out;
}

inline std::string combo_name(const TrainConfig& c) {
    return std::string(to_string(c.technique)) + (c.dsb ? "+dsb" : "") + (c.dsn ? "+dsn" : "");
}

/// Factorized model with random W1 (h x r), W2 (r x k) and bias.
inline LinearModel random_factorized_model(std::uint64_t seed, std::size_t k, std::size_t h, std::size_t r,
                                           std::size_t m) {
    const TrainingSet set = random_training_set(seed, k, h, std::max<std::size_t>(m, 4), m);
    TrainConfig c;
    c.technique = Technique::gr;
    c.rank = r;
    LinearModel model = initialize_model(set, numbered_vocab(h), c);
    randomize_parameters(model, seed + 1, 1.0);
    return model;
}

/// Logits bias + f·(W1·W2) with the product formed by explicit triple loops.
inline std::vector<double> dense_product_logits(const LinearModel& model, const FeatureVector& fv) {
    const auto& f = std::get<FactorizedWeights>(model.weights);
    const std::size_t r = f.w1.cols();
    std::vector<double> z = model.bias;
    for (const auto& [j, v] : fv.entries)
        for (std::size_t c = 0; c < model.k; ++c) {
            double w = 0.0;
            for (std::size_t t = 0; t < r; ++t) w += f.w1(j, t) * f.w2(t, c);
            z[c] += v * w;
        }
    return z;
}

/// Pascal-triangle binomial coefficients up to row n, exact in doubles for n <= 60.
inline std::vector<std::vector<double>> pascal(std::size_t n) {
    std::vector<std::vector<double>> rows(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        rows[i].assign(i + 1, 1.0);
        for (std::size_t j = 1; j < i; ++j) rows[i][j] = rows[i - 1][j - 1] + rows[i - 1][j];
    }
    return rows;
}

/// Two-sided exact McNemar p-value by direct summation over a Pascal row.
inline double mcnemar_by_summation(const std::vector<std::vector<double>>& tri, std::size_t n01, std::size_t n10) {
    const std::size_t n = n01 + n10;
    if (n == 0) return 1.0;
    const std::size_t lo = std::min(n01, n10);
    double tail = 0.0;
    for (std::size_t i = 0; i <= lo; ++i) tail += tri[n][i];
    return std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
}

}  // namespace mda::testing

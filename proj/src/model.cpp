#include "mda/model.hpp"

#include "mda/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mda {

const char* to_string(Technique t) {
    switch (t) {
        case Technique::base: return "base";
        case Technique::dr: return "dr";
        case Technique::gr: return "gr";
    }
    return "base";
}

Technique parse_technique(const std::string& name) {
    if (name == "base") return Technique::base;
    if (name == "dr") return Technique::dr;
    if (name == "gr") return Technique::gr;
    throw UsageError("unknown technique '" + name + "' (expected base, dr or gr)");
}

Technique LinearModel::technique() const {
    if (is_factorized()) return Technique::gr;
    if (dr_bias_table) return Technique::dr;
    return Technique::base;
}

std::size_t LinearModel::rank() const {
    if (const auto* f = std::get_if<FactorizedWeights>(&weights)) return f->w1.cols();
    return 0;
}

std::optional<std::size_t> LinearModel::find_domain(const std::string& name) const {
    auto it = std::find(domains.begin(), domains.end(), name);
    if (it == domains.end()) return std::nullopt;
    return static_cast<std::size_t>(it - domains.begin());
}

Matrix LinearModel::effective_weights() const {
    if (const auto* d = std::get_if<DenseWeights>(&weights)) return d->w;
    const auto& f = std::get<FactorizedWeights>(weights);
    return matmul(f.w1, f.w2);
}

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DataError("invalid model: " + what);
}

}  // namespace

void LinearModel::validate() const {
    require(k >= 2, "k must be at least 2");
    require(labels.size() == k, "label count differs from k");
    require(vocab.size() == h, "vocabulary size differs from h");
    require(!domains.empty(), "no training domains");
    require(std::set<std::string>(domains.begin(), domains.end()).size() == domains.size(),
            "duplicate domain names");
    require(bias.size() == k, "bias length differs from k");
    require(all_finite(bias), "non-finite bias");
    if (const auto* d = std::get_if<DenseWeights>(&weights)) {
        require(d->w.rows() == h && d->w.cols() == k, "dense W must be h×k");
        require(all_finite(d->w.data()), "non-finite weight");
    } else {
        const auto& f = std::get<FactorizedWeights>(weights);
        const std::size_t r = f.w1.cols();
        require(r >= 1, "factorization rank must be at least 1");
        require(f.w1.rows() == h, "W1 must be h×r");
        require(f.w2.rows() == r && f.w2.cols() == k, "W2 must be r×k");
        require(f.head.rows() == r && f.head.cols() == domains.size(), "domain head must be r×|D|");
        require(f.head_bias.size() == domains.size(), "domain head bias length differs from |D|");
        require(all_finite(f.w1.data()) && all_finite(f.w2.data()) && all_finite(f.head.data()) &&
                    all_finite(f.head_bias),
                "non-finite weight");
    }
    if (dr_bias_table) {
        require(dr_bias_table->rows() == domains.size() && dr_bias_table->cols() == k,
                "DR table must be |D|×k");
        require(all_finite(dr_bias_table->data()), "non-finite DR table entry");
    }
    const bool needs_stats = adaptation.dsb || adaptation.dsn;
    require(needs_stats == !domain_stats.empty(), "domain statistics present iff dsb or dsn");
    if (needs_stats) {
        require(domain_stats.size() == domains.size(), "one DomainStats per training domain required");
        for (std::size_t d = 0; d < domains.size(); ++d) {
            const auto& s = domain_stats[d];
            require(s.domain == domains[d], "domain statistics out of order");
            if (adaptation.dsb) {
                require(s.label_dist.probs.size() == k, "label distribution length differs from k");
                double total = 0.0;
                for (double p : s.label_dist.probs) {
                    require(p > 0.0 && p <= 1.0, "label distribution entries must lie in (0, 1]");
                    total += p;
                }
                require(std::abs(total - 1.0) <= 1e-9, "label distribution does not sum to 1");
            }
            if (adaptation.dsn) {
                require(s.feature_means.size() == h, "feature means length differs from h");
                for (double m : s.feature_means) require(m >= 0.0 && m <= 1.0, "feature mean outside [0, 1]");
            }
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

struct ResolvedContext {
    const std::vector<double>* label_dist = nullptr;
    const std::vector<double>* dsn_means = nullptr;
    const double* dr_row = nullptr;
};

ResolvedContext resolve(const LinearModel& model, const PredictionContext& ctx,
                        std::optional<std::size_t> train_domain) {
    if (train_domain && *train_domain >= model.domains.size())
        throw UsageError("train_domain index out of range");
    ResolvedContext out;
    if (model.adaptation.dsb) {
        if (ctx.label_dist) out.label_dist = &*ctx.label_dist;
        else if (train_domain) out.label_dist = &model.domain_stats[*train_domain].label_dist.probs;
        else throw UsageError("model uses DSB but no label distribution was supplied");
        if (out.label_dist->size() != model.k) throw UsageError("label distribution length differs from k");
        for (double p : *out.label_dist)
            if (!(p > 0.0)) throw UsageError("label distribution has a zero entry; apply smoothing");
    }
    if (model.adaptation.dsn) {
        if (ctx.dsn_means) out.dsn_means = &*ctx.dsn_means;
        else if (train_domain) out.dsn_means = &model.domain_stats[*train_domain].feature_means;
        else throw UsageError("model uses DSN but no feature means were supplied");
        if (out.dsn_means->size() != model.h) throw UsageError("DSN means length differs from h");
    }
    if (model.dr_bias_table && train_domain) out.dr_row = model.dr_bias_table->row(*train_domain).data();
    return out;
}

}  // namespace

std::vector<double> forward_logits(const LinearModel& model, const FeatureVector& fv,
                                   const PredictionContext& ctx, std::optional<std::size_t> train_domain) {
    if (fv.dimension != model.h) throw UsageError("feature dimension differs from model h");
    const ResolvedContext rc = resolve(model, ctx, train_domain);
    const FeatureVector input = rc.dsn_means ? apply_dsn(fv, *rc.dsn_means) : fv;

    std::vector<double> z = model.bias;
    if (const auto* d = std::get_if<DenseWeights>(&model.weights)) {
        for (const auto& [j, v] : input.entries) {
            auto row = d->w.row(j);
            for (std::size_t c = 0; c < model.k; ++c) z[c] += v * row[c];
        }
    } else {
        const auto& f = std::get<FactorizedWeights>(model.weights);
        std::vector<double> e(f.w1.cols(), 0.0);
        for (const auto& [j, v] : input.entries) {
            auto row = f.w1.row(j);
            for (std::size_t m = 0; m < e.size(); ++m) e[m] += v * row[m];
        }
        for (std::size_t m = 0; m < e.size(); ++m) {
            auto row = f.w2.row(m);
            for (std::size_t c = 0; c < model.k; ++c) z[c] += e[m] * row[c];
        }
    }
    if (rc.label_dist)
        for (std::size_t c = 0; c < model.k; ++c) z[c] += std::log((*rc.label_dist)[c]);
    if (rc.dr_row)
        for (std::size_t c = 0; c < model.k; ++c) z[c] += rc.dr_row[c];
    return z;
}

std::vector<double> predict_proba(std::span<const double> logits) { return softmax(logits); }

std::size_t predict_label(std::span<const double> proba) { return argmax(proba); }

BatchPredictor::BatchPredictor(const LinearModel& model, const PredictionContext& ctx,
                               std::optional<std::size_t> train_domain)
    : w_(model.effective_weights()), constant_(model.bias) {
    const ResolvedContext rc = resolve(model, ctx, train_domain);
    const std::size_t k = model.k;
    if (rc.label_dist)
        for (std::size_t c = 0; c < k; ++c) constant_[c] += std::log((*rc.label_dist)[c]);
    if (rc.dr_row)
        for (std::size_t c = 0; c < k; ++c) constant_[c] += rc.dr_row[c];
    // DSN: (f - mu)ᵀW = fᵀW - muᵀW, and muᵀW is fixed per context.
    if (rc.dsn_means) {
        for (std::size_t j = 0; j < model.h; ++j) {
            const double m = (*rc.dsn_means)[j];
            if (m == 0.0) continue;
            auto row = w_.row(j);
            for (std::size_t c = 0; c < k; ++c) constant_[c] -= m * row[c];
        }
    }
}

std::vector<double> BatchPredictor::logits(const FeatureVector& fv) const {
    if (fv.dimension != w_.rows()) throw UsageError("feature dimension differs from model h");
    std::vector<double> z = constant_;
    for (const auto& [j, v] : fv.entries) {
        auto row = w_.row(j);
        for (std::size_t c = 0; c < z.size(); ++c) z[c] += v * row[c];
    }
    return z;
}

std::size_t BatchPredictor::predict(const FeatureVector& fv) const { return argmax(logits(fv)); }

LinearModel collapse_weights(const LinearModel& model) {
    if (!model.is_factorized()) return model;
    LinearModel out = model;
    out.weights = DenseWeights{model.effective_weights()};
    return out;
}

// ---------------------------------------------------------------------------

WordWeights Lexicon::class_weights(std::size_t c) const {
    WordWeights out;
    for (const auto& [token, w] : entries.at(c)) out.emplace(token, w);
    return out;
}

Lexicon elicit_lexicon(const LinearModel& model, std::size_t top_n) {
    const Matrix w = model.effective_weights();
    Lexicon lex;
    lex.classes = model.labels;
    const std::size_t n = std::min(top_n, model.h);
    std::vector<std::size_t> order(model.h);
    for (std::size_t c = 0; c < model.k; ++c) {
        for (std::size_t j = 0; j < model.h; ++j) order[j] = j;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (w(a, c) != w(b, c)) return w(a, c) > w(b, c);
            return model.vocab.token(a) < model.vocab.token(b);
        });
        std::vector<std::pair<std::string, double>> ranked;
        ranked.reserve(n);
        for (std::size_t i = 0; i < n; ++i) ranked.emplace_back(model.vocab.token(order[i]), w(order[i], c));
        lex.entries.push_back(std::move(ranked));
    }
    return lex;
}

double lexicon_score(const WordWeights& weights, std::span<const std::string> tokens) {
    std::set<std::string_view> seen;
    double score = 0.0;
    for (const auto& t : tokens) {
        if (!seen.insert(t).second) continue;
        if (auto it = weights.find(t); it != weights.end()) score += it->second;
    }
    return score;
}

std::vector<double> lexicon_scores(const Lexicon& lexicon, std::span<const std::string> tokens) {
    std::vector<double> out;
    out.reserve(lexicon.entries.size());
    for (std::size_t c = 0; c < lexicon.entries.size(); ++c)
        out.push_back(lexicon_score(lexicon.class_weights(c), tokens));
    return out;
}

int classify_with_threshold(double score, double threshold) { return score > threshold ? 1 : 0; }

}  // namespace mda

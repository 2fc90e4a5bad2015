#include "mda/train.hpp"

#include "mda/rng.hpp"
#include "mda/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

namespace mda {

void TrainConfig::validate() const {
    if (!(lambda >= 0.0)) throw UsageError("lambda must be >= 0");
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
    if (max_iters < 1) throw UsageError("max_iters must be >= 1");
    if (!(tol > 0.0)) throw UsageError("tol must be > 0");
    if (!(gr_weight >= 0.0)) throw UsageError("gr_weight must be >= 0");
    if (rank && *rank < 1) throw UsageError("rank must be >= 1");
    if (!(label_alpha >= 0.0)) throw UsageError("label_alpha must be >= 0");
}

std::string TrainConfig::canonical_json() const {
    nlohmann::json j;
    j["technique"] = to_string(technique);
    j["dsb"] = dsb;
    j["dsn"] = dsn;
    j["lambda"] = lambda;
    j["learning_rate"] = learning_rate;
    j["max_iters"] = max_iters;
    j["tol"] = tol;
    j["gr_weight"] = gr_weight;
    j["rank"] = rank ? nlohmann::json(*rank) : nlohmann::json(nullptr);
    j["seed"] = seed;
    j["label_alpha"] = label_alpha;
    return j.dump();
}

std::string TrainConfig::digest() const { return sha256_hex(canonical_json()); }

// ---------------------------------------------------------------------------

TrainingSet TrainingSet::subset(std::span<const std::size_t> indices) const {
    TrainingSet out;
    out.h = h;
    out.label_names = label_names;
    std::vector<std::size_t> present(domain_names.size(), 0);
    for (std::size_t i : indices) ++present.at(domain_of[i]);
    std::vector<std::size_t> remap(domain_names.size(), 0);
    for (std::size_t d = 0; d < domain_names.size(); ++d) {
        if (present[d] == 0) continue;
        remap[d] = out.domain_names.size();
        out.domain_names.push_back(domain_names[d]);
    }
    out.features.reserve(indices.size());
    for (std::size_t i : indices) {
        out.features.push_back(features[i]);
        out.labels.push_back(labels[i]);
        out.domain_of.push_back(remap[domain_of[i]]);
    }
    return out;
}

TrainingSet make_training_set(const Corpus& corpus, std::span<const std::vector<std::string>> tokens,
                              const Vocabulary& vocab) {
    if (tokens.size() != corpus.documents.size()) throw UsageError("token lists do not match corpus");
    TrainingSet set;
    set.h = vocab.size();
    set.label_names = corpus.labels;
    std::vector<std::size_t> count(corpus.domains.size(), 0);
    for (const auto& doc : corpus.documents) ++count[corpus.domain_index(doc.domain)];
    std::vector<std::size_t> remap(corpus.domains.size(), 0);
    for (std::size_t d = 0; d < corpus.domains.size(); ++d) {
        if (count[d] == 0) continue;
        remap[d] = set.domain_names.size();
        set.domain_names.push_back(corpus.domains[d]);
    }
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        const auto& doc = corpus.documents[i];
        if (!doc.label) throw DataError("training document '" + doc.id + "' is unlabeled");
        set.features.push_back(featurize_tokens(tokens[i], vocab));
        set.labels.push_back(*doc.label);
        set.domain_of.push_back(remap[corpus.domain_index(doc.domain)]);
    }
    return set;
}

TrainingSet make_training_set(const Corpus& corpus, const Vocabulary& vocab) {
    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(corpus.documents.size());
    for (const auto& doc : corpus.documents) tokens.push_back(document_tokens(doc));
    return make_training_set(corpus, tokens, vocab);
}

std::vector<DomainStats> training_domain_stats(const TrainingSet& set, double alpha) {
    const std::size_t n_dom = set.domain_names.size();
    const std::size_t k = set.k();
    std::vector<DomainStats> stats(n_dom);
    std::vector<std::vector<double>> counts(n_dom, std::vector<double>(k, 0.0));
    for (std::size_t d = 0; d < n_dom; ++d) {
        stats[d].domain = set.domain_names[d];
        stats[d].feature_means.assign(set.h, 0.0);
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto& s = stats[set.domain_of[i]];
        ++s.n_instances;
        counts[set.domain_of[i]][set.labels[i]] += 1.0;
        for (const auto& [j, v] : set.features[i].entries)
            if (v != 0.0) s.feature_means[j] += 1.0;
    }
    for (std::size_t d = 0; d < n_dom; ++d) {
        auto& s = stats[d];
        if (s.n_instances == 0) throw DataError("domain '" + s.domain + "' has no documents");
        const double n = static_cast<double>(s.n_instances);
        for (double& m : s.feature_means) m /= n;
        const double denom = n + static_cast<double>(k) * alpha;
        s.label_dist.probs.resize(k);
        for (std::size_t c = 0; c < k; ++c) s.label_dist.probs[c] = (counts[d][c] + alpha) / denom;
        s.label_dist.n_samples_used = s.n_instances;
        s.label_dist.smoothing_alpha = alpha;
    }
    return stats;
}

double cross_entropy(std::span<const double> proba, std::size_t y) {
    return -std::log(std::max(proba[y], 1e-12));
}

LinearModel initialize_model(const TrainingSet& set, const Vocabulary& vocab, const TrainConfig& config) {
    config.validate();
    const std::size_t k = set.k();
    if (k < 2) throw DataError("training needs at least 2 labels");
    if (set.size() == 0) throw DataError("empty training set");
    if (vocab.size() != set.h) throw UsageError("vocabulary does not match training features");

    LinearModel m;
    m.k = k;
    m.h = set.h;
    m.vocab = vocab;
    m.labels = set.label_names;
    m.domains = set.domain_names;
    m.bias.assign(k, 0.0);
    m.adaptation = {config.dsb, config.dsn};
    if (config.technique == Technique::gr) {
        const std::size_t r = config.rank_for(k);
        FactorizedWeights f{Matrix(set.h, r), Matrix(r, k), Matrix(r, set.domain_names.size()),
                            std::vector<double>(set.domain_names.size(), 0.0)};
        Rng rng(config.seed);
        for (double& v : f.w1.data()) v = rng.uniform(-0.01, 0.01);
        m.weights = std::move(f);
    } else {
        m.weights = DenseWeights{Matrix(set.h, k)};
    }
    if (config.technique == Technique::dr) m.dr_bias_table = Matrix(set.domain_names.size(), k);
    if (config.dsb || config.dsn) m.domain_stats = training_domain_stats(set, config.label_alpha);
    if (config.dsb)
        for (const auto& s : m.domain_stats)
            for (double p : s.label_dist.probs)
                if (!(p > 0.0))
                    throw DataError("domain '" + s.domain + "' is missing a class; DSB needs label_alpha > 0");
    m.provenance.config_digest = config.digest();
    m.provenance.stopword_hash = stopword_hash();
    m.provenance.lambda = config.lambda;
    m.provenance.seed = config.seed;
    return m;
}

namespace {

struct Objective {
    LossBreakdown loss;
    ModelGradients grad;
};

void check_compatible(const LinearModel& model, const TrainingSet& set, const TrainConfig& config) {
    if (model.technique() != config.technique) throw UsageError("model technique differs from config");
    if (model.adaptation.dsb != config.dsb || model.adaptation.dsn != config.dsn)
        throw UsageError("model adaptation flags differ from config");
    if (model.h != set.h || model.k != set.k()) throw UsageError("model dimensions differ from training set");
    if (model.domains != set.domain_names) throw UsageError("model domains differ from training set");
}

double l1_norm(const LinearModel& model) {
    double s = 0.0;
    if (const auto* d = std::get_if<DenseWeights>(&model.weights)) {
        for (double v : d->w.data()) s += std::abs(v);
    } else {
        const auto& f = std::get<FactorizedWeights>(model.weights);
        for (double v : f.w1.data()) s += std::abs(v);
        for (double v : f.w2.data()) s += std::abs(v);
    }
    return s;
}

// Softmax of z written to p; returns -log p[y] with the usual clamp.
double softmax_into(const std::vector<double>& z, std::vector<double>& p, std::size_t y) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) sum += (p[c] = std::exp(z[c] - mx));
    const double inv = 1.0 / sum;
    for (double& v : p) v *= inv;
    return -std::log(std::max(p[y], 1e-12));
}

// Training features flattened once per optimizer run.
struct Csr {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
    std::vector<std::size_t> start;  // n + 1 offsets
    bool binary = true;              // every stored value is 1

    explicit Csr(const TrainingSet& set) {
        start.reserve(set.size() + 1);
        start.push_back(0);
        for (const auto& fv : set.features) {
            for (const auto& [j, v] : fv.entries) {
                index.push_back(static_cast<std::uint32_t>(j));
                value.push_back(v);
                binary = binary && v == 1.0;
            }
            start.push_back(index.size());
        }
    }
};

template <std::size_t W, bool Binary>
void accumulate_fixed(const Csr& x, std::size_t i, const double* base, double* acc, std::size_t width) {
    const std::size_t w = W ? W : width;
    for (std::size_t p = x.start[i]; p < x.start[i + 1]; ++p) {
        const double* row = base + x.index[p] * w;
        if constexpr (Binary) {
            for (std::size_t c = 0; c < w; ++c) acc[c] += row[c];
        } else {
            const double v = x.value[p];
            for (std::size_t c = 0; c < w; ++c) acc[c] += v * row[c];
        }
    }
}

template <std::size_t W, bool Binary>
void scatter_fixed(const Csr& x, std::size_t i, double* base, const double* g, std::size_t width) {
    const std::size_t w = W ? W : width;
    for (std::size_t p = x.start[i]; p < x.start[i + 1]; ++p) {
        double* row = base + x.index[p] * w;
        if constexpr (Binary) {
            for (std::size_t c = 0; c < w; ++c) row[c] += g[c];
        } else {
            const double v = x.value[p];
            for (std::size_t c = 0; c < w; ++c) row[c] += v * g[c];
        }
    }
}

template <bool Binary>
void accumulate_row(const Csr& x, std::size_t i, const Matrix& m, double* acc) {
    const double* base = m.data().data();
    switch (m.cols()) {
        case 2: return accumulate_fixed<2, Binary>(x, i, base, acc, 2);
        case 3: return accumulate_fixed<3, Binary>(x, i, base, acc, 3);
        case 4: return accumulate_fixed<4, Binary>(x, i, base, acc, 4);
        default: return accumulate_fixed<0, Binary>(x, i, base, acc, m.cols());
    }
}

template <bool Binary>
void scatter_row(const Csr& x, std::size_t i, Matrix& m, const double* g) {
    double* base = m.data().data();
    switch (m.cols()) {
        case 2: return scatter_fixed<2, Binary>(x, i, base, g, 2);
        case 3: return scatter_fixed<3, Binary>(x, i, base, g, 3);
        case 4: return scatter_fixed<4, Binary>(x, i, base, g, 4);
        default: return scatter_fixed<0, Binary>(x, i, base, g, m.cols());
    }
}

// acc += x_iᵀ m
void accumulate_rows(const Csr& x, std::size_t i, const Matrix& m, double* acc) {
    x.binary ? accumulate_row<true>(x, i, m, acc) : accumulate_row<false>(x, i, m, acc);
}

// m[j, .] += x_ij * g for every stored feature j of instance i
void scatter_rows(const Csr& x, std::size_t i, Matrix& m, const double* g) {
    x.binary ? scatter_row<true>(x, i, m, g) : scatter_row<false>(x, i, m, g);
}

// Single pass over the data computing the loss and, optionally, gradients.
// DSN is handled through per-domain offsets: (f - mu)ᵀW = fᵀW - muᵀW, and the
// matching gradient correction is applied once per domain after the pass.
Objective evaluate(const LinearModel& model, const TrainingSet& set, const Csr& x, const TrainConfig& config,
                   bool want_grad) {
    check_compatible(model, set, config);
    const std::size_t n = set.size();
    const std::size_t k = model.k;
    const std::size_t n_dom = model.domains.size();
    const bool dsb = model.adaptation.dsb;
    const bool dsn = model.adaptation.dsn;
    const bool gr = model.is_factorized();
    const double inv_n = 1.0 / static_cast<double>(n);

    const auto* dense = std::get_if<DenseWeights>(&model.weights);
    const auto* fact = std::get_if<FactorizedWeights>(&model.weights);
    const std::size_t width = dense ? k : fact->w1.cols();  // row width of the input-side matrix
    const Matrix& w_in = dense ? dense->w : fact->w1;

    std::vector<std::vector<double>> log_prior(n_dom);
    if (dsb)
        for (std::size_t d = 0; d < n_dom; ++d)
            for (double p : model.domain_stats[d].label_dist.probs) log_prior[d].push_back(std::log(p));

    std::vector<std::vector<double>> offset(n_dom, std::vector<double>(width, 0.0));
    if (dsn) {
        for (std::size_t d = 0; d < n_dom; ++d) {
            const auto& mu = model.domain_stats[d].feature_means;
            for (std::size_t j = 0; j < model.h; ++j) {
                if (mu[j] == 0.0) continue;
                auto row = w_in.row(j);
                for (std::size_t c = 0; c < width; ++c) offset[d][c] += mu[j] * row[c];
            }
        }
    }

    Objective out;
    ModelGradients& g = out.grad;
    if (want_grad) {
        g.bias.assign(k, 0.0);
        if (dense) g.w = Matrix(model.h, k);
        if (fact) {
            g.w1 = Matrix(model.h, width);
            g.w2 = Matrix(width, k);
            g.head = Matrix(width, n_dom);
            g.head_bias.assign(n_dom, 0.0);
        }
        if (model.dr_bias_table) g.dr = Matrix(n_dom, k);
    }
    std::vector<std::vector<double>> domain_grad_sum(dsn && want_grad ? n_dom : 0, std::vector<double>(width, 0.0));

    // Per-domain additive constant on the logits (dense) or on the intermediate
    // (factorized, where only the DSN offset lives on that side).
    std::vector<std::vector<double>> logit_const(n_dom, std::vector<double>(k, 0.0));
    for (std::size_t d = 0; d < n_dom; ++d)
        for (std::size_t c = 0; c < k; ++c) {
            double v = model.bias[c];
            if (dsb) v += log_prior[d][c];
            if (model.dr_bias_table) v += (*model.dr_bias_table)(d, c);
            if (dense && dsn) v -= offset[d][c];
            logit_const[d][c] = v;
        }

    double label_ce = 0.0, domain_ce = 0.0;
    std::vector<double> z(k), p(k), e(width), de(width), u(n_dom), q(n_dom);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t dom = set.domain_of[i];
        const std::size_t y = set.labels[i];
        if (dense) {
            std::copy(logit_const[dom].begin(), logit_const[dom].end(), z.begin());
            accumulate_rows(x, i, w_in, z.data());
        } else {
            std::fill(e.begin(), e.end(), 0.0);
            accumulate_rows(x, i, w_in, e.data());
            if (dsn)
                for (std::size_t c = 0; c < width; ++c) e[c] -= offset[dom][c];
            std::copy(logit_const[dom].begin(), logit_const[dom].end(), z.begin());
            for (std::size_t m = 0; m < width; ++m) {
                const double em = e[m];
                const double* row = fact->w2.row(m).data();
                for (std::size_t c = 0; c < k; ++c) z[c] += em * row[c];
            }
        }
        label_ce += softmax_into(z, p, y);

        if (gr) {
            for (std::size_t d = 0; d < n_dom; ++d) u[d] = fact->head_bias[d];
            for (std::size_t m = 0; m < width; ++m) {
                const double em = e[m];
                const double* row = fact->head.row(m).data();
                for (std::size_t d = 0; d < n_dom; ++d) u[d] += em * row[d];
            }
            domain_ce += softmax_into(u, q, dom);
        }
        if (!want_grad) continue;

        // residual of the label softmax, already divided by n
        for (std::size_t c = 0; c < k; ++c) p[c] = (p[c] - (c == y ? 1.0 : 0.0)) * inv_n;
        for (std::size_t c = 0; c < k; ++c) g.bias[c] += p[c];
        if (model.dr_bias_table)
            for (std::size_t c = 0; c < k; ++c) g.dr(dom, c) += p[c];

        const std::vector<double>* into_input = &p;
        if (fact) {
            for (std::size_t m = 0; m < width; ++m) {
                double* grow = g.w2.row(m).data();
                const double* wrow = fact->w2.row(m).data();
                const double em = e[m];
                double s = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                    grow[c] += em * p[c];
                    s += wrow[c] * p[c];
                }
                de[m] = s;
            }
            if (gr) {
                for (std::size_t d = 0; d < n_dom; ++d)
                    q[d] = (q[d] - (d == dom ? 1.0 : 0.0)) * inv_n * config.gr_weight;
                for (std::size_t d = 0; d < n_dom; ++d) g.head_bias[d] += q[d];
                for (std::size_t m = 0; m < width; ++m) {
                    double* grow = g.head.row(m).data();
                    const double* hrow = fact->head.row(m).data();
                    const double em = e[m];
                    double s = 0.0;
                    for (std::size_t d = 0; d < n_dom; ++d) {
                        grow[d] += em * q[d];
                        s += hrow[d] * q[d];
                    }
                    de[m] -= s;  // gradient reversal into W1
                }
            }
            into_input = &de;
        }
        scatter_rows(x, i, dense ? g.w : g.w1, into_input->data());
        if (dsn)
            for (std::size_t c = 0; c < width; ++c) domain_grad_sum[dom][c] += (*into_input)[c];
    }

    if (want_grad && dsn) {
        Matrix& g_in = dense ? g.w : g.w1;
        for (std::size_t d = 0; d < n_dom; ++d) {
            const auto& mu = model.domain_stats[d].feature_means;
            for (std::size_t j = 0; j < model.h; ++j) {
                if (mu[j] == 0.0) continue;
                auto row = g_in.row(j);
                for (std::size_t c = 0; c < width; ++c) row[c] -= mu[j] * domain_grad_sum[d][c];
            }
        }
    }

    out.loss.label_ce = label_ce * inv_n;
    out.loss.domain_ce = gr ? domain_ce * inv_n : 0.0;
    out.loss.l1_penalty = l1_norm(model);
    out.loss.total = out.loss.label_ce + config.gr_weight * out.loss.domain_ce + config.lambda * out.loss.l1_penalty;
    return out;
}

// Writes model - lr * g into `next` (which must share model's shapes), then
// soft-thresholds the weight matrices only.
void proximal_step(const LinearModel& model, const ModelGradients& g, double lr, double lambda,
                   LinearModel& next) {
    const double t = lr * lambda;
    auto step_prox = [&](const Matrix& w, const Matrix& gw, Matrix& out) {
        const auto& wd = w.data();
        const auto& gd = gw.data();
        auto& od = out.data();
        for (std::size_t i = 0; i < wd.size(); ++i) od[i] = soft_threshold(wd[i] - lr * gd[i], t);
    };
    auto step = [&](const std::vector<double>& w, const std::vector<double>& gw, std::vector<double>& out) {
        for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - lr * gw[i];
    };
    if (const auto* d = std::get_if<DenseWeights>(&model.weights)) {
        step_prox(d->w, g.w, std::get<DenseWeights>(next.weights).w);
    } else {
        const auto& f = std::get<FactorizedWeights>(model.weights);
        auto& nf = std::get<FactorizedWeights>(next.weights);
        step_prox(f.w1, g.w1, nf.w1);
        step_prox(f.w2, g.w2, nf.w2);
        step(f.head.data(), g.head.data(), nf.head.data());
        step(f.head_bias, g.head_bias, nf.head_bias);
    }
    step(model.bias, g.bias, next.bias);
    if (model.dr_bias_table) step(model.dr_bias_table->data(), g.dr.data(), next.dr_bias_table->data());
}

}  // namespace

LossBreakdown batch_loss(const LinearModel& model, const TrainingSet& set, const TrainConfig& config) {
    return evaluate(model, set, Csr(set), config, false).loss;
}

ModelGradients batch_gradients(const LinearModel& model, const TrainingSet& set, const TrainConfig& config) {
    return evaluate(model, set, Csr(set), config, true).grad;
}

// The reversed W1 update may raise the label objective a little; only larger
// rises count as overshooting.
constexpr double kAdversarialSlack = 1e-3;
// The near-zero factorized start is a saddle where the first steps barely move
// the loss, so the relative-change test waits this many iterations.
constexpr std::size_t kFactorizedWarmup = 200;

LinearModel train_full_batch(const TrainingSet& set, const Vocabulary& vocab, const TrainConfig& config,
                             const IterationObserver& observer) {
    LinearModel model = initialize_model(set, vocab, config);
    const bool gr = config.technique == Technique::gr;
    // GR's W1 update ascends the domain loss, so only the label objective is
    // expected to decrease.
    auto monitored = [&](const LossBreakdown& l) {
        return gr ? l.label_ce + config.lambda * l.l1_penalty : l.total;
    };
    const double min_lr = config.learning_rate * std::ldexp(1.0, -40);

    const Csr x(set);
    LinearModel candidate = model;
    Objective current = evaluate(model, set, x, config, true);
    double lr = config.learning_rate;
    if (observer) observer({0, current.loss, lr});
    for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
        Objective next;
        for (;;) {
            proximal_step(model, current.grad, lr, config.lambda, candidate);
            next = evaluate(candidate, set, x, config, true);
            const bool finite = std::isfinite(next.loss.total);
            const double limit = monitored(current.loss) * (gr ? 1.0 + kAdversarialSlack : 1.0);
            if (!finite || monitored(next.loss) > limit) {
                if (lr * 0.5 >= min_lr) {
                    lr *= 0.5;
                    continue;
                }
                if (!finite)
                    throw DataError("training diverged (non-finite loss); try a smaller learning_rate");
            }
            break;
        }
        const double prev_total = current.loss.total;
        std::swap(model, candidate);
        current = std::move(next);
        if (observer) observer({iter, current.loss, lr});
        const double rel = std::abs(prev_total - current.loss.total) / std::max(std::abs(prev_total), 1e-12);
        if (rel < config.tol && !(gr && iter < kFactorizedWarmup)) break;
    }
    return model;
}

LinearModel train_full_batch(const Corpus& train, const Vocabulary& vocab, const TrainConfig& config,
                             const IterationObserver& observer) {
    return train_full_batch(make_training_set(train, vocab), vocab, config, observer);
}

std::size_t count_nonzero_weights(const LinearModel& model) {
    auto nz = [](const Matrix& m) {
        return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](double v) { return v != 0.0; }));
    };
    if (const auto* d = std::get_if<DenseWeights>(&model.weights)) return nz(d->w);
    const auto& f = std::get<FactorizedWeights>(model.weights);
    return nz(f.w1) + nz(f.w2);
}

// ---------------------------------------------------------------------------

std::vector<Fold> kfold_splits(std::span<const std::size_t> strata, std::size_t k_folds, std::uint64_t seed) {
    const std::size_t n = strata.size();
    if (k_folds < 2) throw UsageError("k_folds must be at least 2");
    if (k_folds > n) throw UsageError("k_folds exceeds the number of instances");
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) members[strata[i]].push_back(i);

    std::vector<std::size_t> fold_of(n);
    Rng rng(seed);
    // The round-robin pointer carries across strata so overall fold sizes
    // stay balanced as well.
    std::size_t next = 0;
    for (auto& [stratum, idx] : members) {
        rng.shuffle(idx);
        for (std::size_t i : idx) {
            fold_of[i] = next;
            next = (next + 1) % k_folds;
        }
    }
    std::vector<Fold> folds(k_folds);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < k_folds; ++f) (f == fold_of[i] ? folds[f].validation : folds[f].train).push_back(i);
    return folds;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int j = 0; j <= 4; ++j) grid.push_back(1e-5 * std::ldexp(1.0, j));
    return grid;
}

double mean_label_cross_entropy(const LinearModel& model, const TrainingSet& set) {
    std::vector<std::optional<BatchPredictor>> per_domain(set.domain_names.size());
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const std::size_t d = set.domain_of[i];
        if (!per_domain[d]) {
            auto seen = model.find_domain(set.domain_names[d]);
            if (!seen) throw DataError("domain '" + set.domain_names[d] + "' was not seen in training");
            per_domain[d].emplace(model, PredictionContext{}, seen);
        }
        total += cross_entropy(softmax(per_domain[d]->logits(set.features[i])), set.labels[i]);
    }
    return total / static_cast<double>(set.size());
}

GridSearchResult grid_search_lambda(const TrainingSet& set, const Vocabulary& vocab, const TrainConfig& config,
                                    std::span<const double> grid, std::size_t k_folds,
                                    const IterationObserver& observer) {
    if (grid.empty()) throw UsageError("grid_search_lambda: empty grid");
    GridSearchResult result;
    if (grid.size() == 1) {
        result.best_lambda = grid[0];
    } else {
        std::vector<std::size_t> per_domain(set.domain_names.size(), 0);
        for (std::size_t d : set.domain_of) ++per_domain[d];
        for (std::size_t d = 0; d < per_domain.size(); ++d)
            if (per_domain[d] < 2)
                throw DataError("domain '" + set.domain_names[d] + "' needs at least 2 documents for k-fold search");
        const auto folds = kfold_splits(set.domain_of, k_folds, config.seed);
        double best_loss = std::numeric_limits<double>::infinity();
        for (double lambda : grid) {
            TrainConfig c = config;
            c.lambda = lambda;
            double loss_sum = 0.0;
            for (const auto& fold : folds) {
                const TrainingSet tr = set.subset(fold.train);
                const TrainingSet va = set.subset(fold.validation);
                const LinearModel m = train_full_batch(tr, vocab, c);
                loss_sum += mean_label_cross_entropy(m, va) * static_cast<double>(va.size());
            }
            const double loss = loss_sum / static_cast<double>(set.size());
            result.validation_loss.emplace_back(lambda, loss);
            if (loss < best_loss || (loss == best_loss && lambda < result.best_lambda)) {
                best_loss = loss;
                result.best_lambda = lambda;
            }
        }
    }
    TrainConfig final_config = config;
    final_config.lambda = result.best_lambda;
    result.model = train_full_batch(set, vocab, final_config, observer);
    return result;
}

}  // namespace mda

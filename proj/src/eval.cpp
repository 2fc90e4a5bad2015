#include "mda/eval.hpp"

#include "mda/adapt.hpp"
#include "mda/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace mda {

using json = nlohmann::json;

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> golds) {
    if (predictions.size() != golds.size()) throw UsageError("accuracy: predictions and golds differ in length");
    if (predictions.empty()) throw UsageError("accuracy: no predictions");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) correct += predictions[i] == golds[i];
    return static_cast<double>(correct) / static_cast<double>(golds.size());
}

// ---------------------------------------------------------------------------

double PairedOutcome::agreement() const {
    const std::size_t n = total();
    return n ? static_cast<double>(n00 + n11) / static_cast<double>(n) : 0.0;
}

PairedOutcome PairedOutcome::from_predictions(std::span<const std::size_t> pred_a,
                                              std::span<const std::size_t> pred_b,
                                              std::span<const std::size_t> golds) {
    if (pred_a.size() != golds.size() || pred_b.size() != golds.size())
        throw UsageError("paired outcome: prediction lists differ in length");
    PairedOutcome t;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const bool a = pred_a[i] == golds[i];
        const bool b = pred_b[i] == golds[i];
        (a ? (b ? t.n11 : t.n10) : (b ? t.n01 : t.n00))++;
    }
    return t;
}

double mcnemar_exact(std::size_t n01, std::size_t n10) {
    const std::size_t d = n01 + n10;
    if (d == 0) return 1.0;
    const std::size_t m = std::min(n01, n10);
    double tail = 0.0;
    if (d <= 60) {
        // Binomial coefficients stay exact integers in double up to here.
        double c = 1.0;
        for (std::size_t i = 0; i <= m; ++i) {
            tail += c;
            c = c * static_cast<double>(d - i) / static_cast<double>(i + 1);
        }
        tail = std::ldexp(tail, -static_cast<int>(d));
    } else {
        const double lg = std::lgamma(static_cast<double>(d) + 1.0);
        for (std::size_t i = 0; i <= m; ++i)
            tail += std::exp(lg - std::lgamma(static_cast<double>(i) + 1.0) -
                             std::lgamma(static_cast<double>(d - i) + 1.0) - static_cast<double>(d) * std::log(2.0));
    }
    return std::min(1.0, 2.0 * tail);
}

double mcnemar_chi_square(std::size_t n01, std::size_t n10, bool continuity_correction) {
    const std::size_t d = n01 + n10;
    if (d == 0) return 1.0;
    double diff = std::abs(static_cast<double>(n01) - static_cast<double>(n10));
    if (continuity_correction) diff = std::max(0.0, diff - 1.0);
    const double stat = diff * diff / static_cast<double>(d);
    return std::erfc(std::sqrt(stat / 2.0));
}

double mcnemar_test(const PairedOutcome& t, const McNemarOptions& options) {
    if (t.n01 + t.n10 <= options.exact_max) return mcnemar_exact(t.n01, t.n10);
    return mcnemar_chi_square(t.n01, t.n10, options.continuity_correction);
}

// ---------------------------------------------------------------------------

CellProbabilities solve_cells(double acc_a, double acc_b, double agreement) {
    for (double v : {acc_a, acc_b, agreement})
        if (!(v >= 0.0 && v <= 1.0)) throw UsageError("power: accuracies and agreement must lie in [0, 1]");
    CellProbabilities c;
    c.p11 = (acc_a + acc_b - 1.0 + agreement) / 2.0;
    c.p10 = acc_a - c.p11;
    c.p01 = acc_b - c.p11;
    c.p00 = 1.0 - c.p11 - c.p10 - c.p01;
    constexpr double eps = 1e-12;
    const std::pair<const char*, double*> cells[] = {
        {"p11 (both right)", &c.p11}, {"p10 (only A right)", &c.p10},
        {"p01 (only B right)", &c.p01}, {"p00 (both wrong)", &c.p00}};
    for (auto& [name, p] : cells) {
        if (*p < -eps) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "power: infeasible accuracies/agreement, cell %s = %.6g is negative", name, *p);
            throw UsageError(buf);
        }
        *p = std::max(0.0, *p);
    }
    return c;
}

double power_analysis(const PowerConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw UsageError("power: alpha must lie in (0, 1)");
    if (config.n_test == 0) throw UsageError("power: n_test must be positive");
    if (config.trials == 0) throw UsageError("power: trials must be positive");
    const CellProbabilities c = solve_cells(config.acc_a, config.acc_b, config.agreement);
    const double cut_01 = c.p01;
    const double cut_10 = c.p01 + c.p10;
    Rng rng(config.seed);
    std::size_t rejections = 0;
    for (std::size_t t = 0; t < config.trials; ++t) {
        PairedOutcome table;
        for (std::size_t i = 0; i < config.n_test; ++i) {
            const double u = rng.uniform();
            if (u < cut_01)
                ++table.n01;
            else if (u < cut_10)
                ++table.n10;
        }
        // Concordant cells do not enter the statistic; park them in n11.
        table.n11 = config.n_test - table.n01 - table.n10;
        rejections += mcnemar_test(table, config.mcnemar) < config.alpha;
    }
    return static_cast<double>(rejections) / static_cast<double>(config.trials);
}

// ---------------------------------------------------------------------------

const EvalReport& ProtocolResult::report(const std::string& config) const {
    for (const auto& r : reports)
        if (r.config == config) return r;
    throw UsageError("no report row named '" + config + "'");
}

void attach_baseline(std::vector<EvalReport>& reports, const std::string& baseline) {
    const EvalReport* base = nullptr;
    for (const auto& r : reports)
        if (r.config == baseline) base = &r;
    if (!base) throw UsageError("baseline row '" + baseline + "' not found");
    const std::vector<DomainResult> base_rows = base->per_domain;
    for (auto& r : reports) {
        if (r.per_domain.size() != base_rows.size()) throw UsageError("reports cover different domains");
        std::vector<double> deltas;
        for (std::size_t i = 0; i < r.per_domain.size(); ++i) {
            const double d = r.per_domain[i].accuracy - base_rows[i].accuracy;
            r.per_domain[i].improvement = d;
            deltas.push_back(d);
        }
        r.baseline = baseline;
        r.mean_improvement = mean(deltas);
        r.sigma_delta = population_std(deltas);
    }
}

std::string config_label(const TrainConfig& config, std::optional<std::size_t> dsb_samples) {
    std::string out = config.technique == Technique::base ? "LogReg"
                      : config.technique == Technique::dr ? "DR"
                                                          : "GR";
    if (config.dsn) out += "+DSN";
    if (config.dsb) out += dsb_samples ? "+DSB(" + std::to_string(*dsb_samples) + ")" : "+DSB(oracle)";
    return out;
}

namespace {

// Runs fn(0..n-1) on up to `threads` workers; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// A corpus slice together with the token lists of its documents.
struct Slice {
    Corpus corpus;
    std::vector<std::vector<std::string>> tokens;

    std::vector<FeatureVector> features(const Vocabulary& vocab) const {
        std::vector<FeatureVector> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(featurize_tokens(t, vocab));
        return out;
    }
    std::vector<std::size_t> labels() const {
        std::vector<std::size_t> out;
        out.reserve(corpus.documents.size());
        for (const auto& d : corpus.documents) out.push_back(*d.label);
        return out;
    }
};

struct Prepared {
    Slice train;
    Slice test;
};

Slice tokenize_all(Corpus corpus) {
    Slice s;
    s.tokens.reserve(corpus.documents.size());
    for (const auto& d : corpus.documents) s.tokens.push_back(document_tokens(d));
    s.corpus = std::move(corpus);
    return s;
}

template <typename Pred>
Slice select(const Slice& from, Pred keep) {
    Slice out;
    out.corpus.labels = from.corpus.labels;
    out.corpus.domains = from.corpus.domains;
    for (std::size_t i = 0; i < from.corpus.documents.size(); ++i)
        if (keep(from.corpus.documents[i])) {
            out.corpus.documents.push_back(from.corpus.documents[i]);
            out.tokens.push_back(from.tokens[i]);
        }
    return out;
}

Slice of_domain(const Slice& from, const std::string& domain) {
    return select(from, [&](const Document& d) { return d.domain == domain; });
}

Prepared prepare(const Corpus& corpus, const ProtocolOptions& options, std::size_t min_domains) {
    corpus.validate();
    if (corpus.domains.size() < min_domains)
        throw DataError("protocol needs at least " + std::to_string(min_domains) + " domains");
    for (const auto& d : corpus.documents)
        if (!d.label) throw DataError("protocol needs a fully labeled corpus; '" + d.id + "' has no label");
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0))
        throw UsageError("test fraction must lie in (0, 1)");
    if (options.estimate_trials == 0) throw UsageError("estimate trials must be positive");
    Split split = split_dataset(corpus, SplitSpec::fraction(options.test_fraction, options.seed));
    Prepared p;
    p.train = tokenize_all(std::move(split.train));
    p.test = tokenize_all(std::move(split.test));
    for (const auto& name : corpus.domains)
        if (std::none_of(p.test.corpus.documents.begin(), p.test.corpus.documents.end(),
                         [&](const Document& d) { return d.domain == name; }))
            throw DataError("domain '" + name + "' has an empty test split");
    return p;
}

// One row set per config: the plain row, or the oracle row followed by one
// row per estimate size for DSB configs.
std::vector<std::string> row_labels(std::span<const TrainConfig> configs, const ProtocolOptions& options) {
    std::vector<std::string> out;
    for (const auto& c : configs) {
        out.push_back(config_label(c));
        if (c.dsb)
            for (std::size_t s : options.estimate_sizes) out.push_back(config_label(c, s));
    }
    std::set<std::string> seen;
    for (const auto& l : out)
        if (!seen.insert(l).second) throw UsageError("duplicate configuration '" + l + "'");
    return out;
}

// Expected number of correct predictions for every row of one config on a
// target domain. Estimated rows average over trials.
std::vector<double> score_target(const LinearModel& model, const TrainConfig& config, const Slice& target_test,
                                 const Slice& target_train, const ProtocolOptions& options,
                                 std::uint64_t target_seed) {
    const auto features = target_test.features(model.vocab);
    const auto labels = target_test.labels();
    PredictionContext ctx;
    if (config.dsn) {
        if (target_train.tokens.empty()) throw DataError("no unlabeled target text for DSN means");
        ctx.dsn_means = presence_means(target_train.features(model.vocab), model.h);
    }
    auto correct = [&](const PredictionContext& c) {
        const BatchPredictor predictor(model, c);
        std::size_t n = 0;
        for (std::size_t i = 0; i < features.size(); ++i) n += predictor.predict(features[i]) == labels[i];
        return static_cast<double>(n);
    };
    std::vector<double> out;
    if (!config.dsb) {
        out.push_back(correct(ctx));
        return out;
    }
    ctx.label_dist = estimate_label_distribution(labels, model.k, options.label_alpha).probs;
    out.push_back(correct(ctx));
    const auto pool = target_train.labels();
    for (std::size_t s : options.estimate_sizes) {
        if (s == 0 || s > pool.size())
            throw DataError("cannot draw " + std::to_string(s) + " labeled samples from a target train split of " +
                            std::to_string(pool.size()));
        double total = 0.0;
        for (std::size_t t = 0; t < options.estimate_trials; ++t) {
            Rng rng(derive_seed(derive_seed(target_seed, s), t));
            std::vector<std::size_t> sample;
            for (std::size_t i : rng.sample_without_replacement(pool.size(), s)) sample.push_back(pool[i]);
            ctx.label_dist = estimate_label_distribution(sample, model.k, options.label_alpha).probs;
            total += correct(ctx);
        }
        out.push_back(total / static_cast<double>(options.estimate_trials));
    }
    return out;
}

LinearModel fit(const Slice& train, const TrainConfig& config, const ProtocolOptions& options, std::uint64_t seed,
                Vocabulary& vocab) {
    vocab = build_vocabulary(train.tokens, options.vocab_size);
    const TrainingSet set = make_training_set(train.corpus, train.tokens, vocab);
    TrainConfig c = config;
    c.seed = seed;
    c.label_alpha = options.label_alpha;
    return grid_search_lambda(set, vocab, c, options.lambda_grid, options.k_folds).model;
}

std::optional<std::string> default_baseline(std::span<const TrainConfig> configs) {
    for (const auto& c : configs)
        if (c.technique == Technique::base && !c.dsb && !c.dsn) return config_label(c);
    return std::nullopt;
}

std::vector<EvalReport> assemble(const std::vector<std::string>& labels, const std::vector<std::string>& domains,
                                 const std::vector<std::vector<double>>& acc,
                                 const std::vector<std::size_t>& n_eval) {
    std::vector<EvalReport> reports;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        EvalReport rep;
        rep.config = labels[r];
        std::vector<double> values;
        for (std::size_t d = 0; d < domains.size(); ++d) {
            rep.per_domain.push_back({domains[d], acc[d][r], n_eval[d], std::nullopt});
            values.push_back(acc[d][r]);
        }
        rep.accuracy = mean(values);
        reports.push_back(std::move(rep));
    }
    return reports;
}

}  // namespace

HoldoutResult holdout_domain_protocol(const Corpus& corpus, std::span<const TrainConfig> configs,
                                      const ProtocolOptions& options) {
    if (configs.empty()) throw UsageError("no configurations to evaluate");
    const Prepared prep = prepare(corpus, options, 2);
    const auto labels = row_labels(configs, options);
    const std::size_t m = corpus.domains.size();

    std::vector<std::vector<double>> acc(m);
    std::vector<std::size_t> n_eval(m);
    std::vector<HeldOutRun> runs(m);
    parallel_for(m, options.threads, [&](std::size_t d) {
        const std::string& held = corpus.domains[d];
        const std::uint64_t domain_seed = derive_seed(options.seed, d);
        const Slice train = select(prep.train, [&](const Document& doc) { return doc.domain != held; });
        const Slice target_test = of_domain(prep.test, held);
        const Slice target_train = of_domain(prep.train, held);

        // No held-out test document may reach training or label estimation.
        std::set<std::string> test_ids;
        for (const auto& doc : target_test.corpus.documents) test_ids.insert(doc.id);
        for (const auto& doc : train.corpus.documents)
            if (test_ids.count(doc.id)) throw std::logic_error("held-out test document '" + doc.id + "' leaked");
        for (const auto& doc : target_train.corpus.documents)
            if (test_ids.count(doc.id)) throw std::logic_error("held-out test document '" + doc.id + "' leaked");

        HeldOutRun run;
        run.held_out = held;
        for (const auto& config : configs) {
            LinearModel model = fit(train, config, options, domain_seed, run.vocab);
            for (double c : score_target(model, config, target_test, target_train, options, domain_seed))
                acc[d].push_back(c / static_cast<double>(target_test.corpus.documents.size()));
            run.models.push_back(std::move(model));
        }
        n_eval[d] = target_test.corpus.documents.size();
        runs[d] = std::move(run);
    });

    HoldoutResult out;
    out.result.protocol = "holdout";
    out.result.reports = assemble(labels, corpus.domains, acc, n_eval);
    if (auto base = default_baseline(configs)) attach_baseline(out.result.reports, *base);
    out.runs = std::move(runs);
    return out;
}

ProtocolResult single_domain_protocol(const Corpus& corpus, std::span<const TrainConfig> configs,
                                      const ProtocolOptions& options) {
    if (configs.empty()) throw UsageError("no configurations to evaluate");
    const Prepared prep = prepare(corpus, options, 2);
    const auto labels = row_labels(configs, options);
    const std::size_t m = corpus.domains.size();

    ProtocolResult result;
    result.protocol = "single-domain";
    for (const auto& c : configs)
        if (c.technique == Technique::gr) {
            result.warnings.push_back(
                "GR with a single training domain: the domain classifier has one class, so no deconfounding "
                "between training domains is possible");
            break;
        }

    std::vector<std::vector<double>> acc(m);
    std::vector<std::size_t> n_eval(m);
    parallel_for(m, options.threads, [&](std::size_t d) {
        const std::uint64_t domain_seed = derive_seed(options.seed, d);
        const Slice train = of_domain(prep.train, corpus.domains[d]);
        std::vector<double> correct(labels.size(), 0.0);
        std::size_t total = 0;
        for (std::size_t e = 0; e < m; ++e)
            if (e != d) total += of_domain(prep.test, corpus.domains[e]).corpus.documents.size();
        std::size_t row = 0;
        for (const auto& config : configs) {
            Vocabulary vocab;
            const LinearModel model = fit(train, config, options, domain_seed, vocab);
            std::vector<double> sums;
            for (std::size_t e = 0; e < m; ++e) {
                if (e == d) continue;
                const auto c = score_target(model, config, of_domain(prep.test, corpus.domains[e]),
                                            of_domain(prep.train, corpus.domains[e]), options,
                                            derive_seed(options.seed, e));
                if (sums.empty()) sums.assign(c.size(), 0.0);
                for (std::size_t i = 0; i < c.size(); ++i) sums[i] += c[i];
            }
            for (double s : sums) correct[row++] = s;
        }
        for (double c : correct) acc[d].push_back(c / static_cast<double>(total));
        n_eval[d] = total;
    });

    result.reports = assemble(labels, corpus.domains, acc, n_eval);
    if (auto base = default_baseline(configs)) attach_baseline(result.reports, *base);
    return result;
}

InVsOutReport in_vs_out_report(const Corpus& corpus, const TrainConfig& config, const ProtocolOptions& options) {
    ProtocolOptions opts = options;
    opts.estimate_sizes.clear();
    const Prepared prep = prepare(corpus, opts, 2);

    Vocabulary vocab;
    const LinearModel model = fit(prep.train, config, opts, derive_seed(opts.seed, corpus.domains.size()), vocab);

    const auto ood = holdout_domain_protocol(corpus, std::span(&config, 1), opts);
    const EvalReport& ood_row = ood.result.reports.front();

    InVsOutReport out;
    out.config = config_label(config);
    std::vector<double> drops, ids, oods;
    for (std::size_t d = 0; d < corpus.domains.size(); ++d) {
        const Slice test = of_domain(prep.test, corpus.domains[d]);
        const auto features = test.features(vocab);
        const auto labels = test.labels();
        PredictionContext ctx;
        if (config.dsb) ctx.label_dist = estimate_label_distribution(labels, model.k, opts.label_alpha).probs;
        const BatchPredictor predictor(model, ctx, model.find_domain(corpus.domains[d]));
        std::vector<std::size_t> preds;
        for (const auto& f : features) preds.push_back(predictor.predict(f));
        InVsOutRow row{corpus.domains[d], accuracy(preds, labels), ood_row.per_domain[d].accuracy};
        ids.push_back(row.in_domain);
        oods.push_back(row.out_of_domain);
        drops.push_back(row.in_domain - row.out_of_domain);
        out.rows.push_back(std::move(row));
    }
    out.in_domain = mean(ids);
    out.out_of_domain = mean(oods);
    out.sigma_delta = population_std(drops);
    return out;
}

LabelpropCurve labelprop_curve(const LinearModel& model, std::span<const FeatureVector> features,
                               std::span<const std::size_t> labels, std::span<const std::size_t> sizes,
                               std::size_t trials, std::uint64_t seed, double alpha, const PredictionContext& ctx) {
    if (!model.adaptation.dsb) throw UsageError("labelprop curve: model was not trained with DSB");
    if (features.size() != labels.size() || labels.empty())
        throw UsageError("labelprop curve: features and labels must be equal-length and non-empty");
    if (trials == 0) throw UsageError("labelprop curve: trials must be positive");
    for (std::size_t s : sizes)
        if (s == 0 || s > labels.size())
            throw DataError("labelprop curve: sample size " + std::to_string(s) + " exceeds the " +
                            std::to_string(labels.size()) + " labeled target documents");

    PredictionContext c = ctx;
    LabelpropCurve curve;
    c.label_dist = estimate_label_distribution(labels, model.k, alpha).probs;
    curve.oracle_accuracy = context_accuracy(model, c, features, labels);
    for (std::size_t s : sizes) {
        CurvePoint point;
        point.size = s;
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng(derive_seed(derive_seed(seed, s), t));
            std::vector<std::size_t> sample;
            for (std::size_t i : rng.sample_without_replacement(labels.size(), s)) sample.push_back(labels[i]);
            c.label_dist = estimate_label_distribution(sample, model.k, alpha).probs;
            point.per_trial.push_back(context_accuracy(model, c, features, labels));
        }
        point.mean = mean(point.per_trial);
        point.std = sample_std(point.per_trial);
        curve.points.push_back(std::move(point));
    }
    return curve;
}

// ---------------------------------------------------------------------------

namespace {

std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

std::string csv_lines(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_cell(cells[i]);
        out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    std::string out;
    auto emit = [&](const std::vector<std::string>& r) {
        std::string line;
        for (std::size_t i = 0; i < width.size(); ++i) {
            const std::string cell = i < r.size() ? r[i] : "";
            const std::string pad(width[i] - cell.size(), ' ');
            if (i) line += "  ";
            line += i == 0 ? cell + pad : pad + cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
}

std::string protocol_to_json(const ProtocolResult& result) {
    json j;
    j["protocol"] = result.protocol;
    j["warnings"] = result.warnings;
    json reports = json::array();
    for (const auto& r : result.reports) {
        json rep;
        rep["config"] = r.config;
        rep["accuracy"] = r.accuracy;
        rep["baseline"] = r.baseline ? json(*r.baseline) : json(nullptr);
        rep["mean_improvement"] = optional_number(r.mean_improvement);
        rep["sigma_delta"] = optional_number(r.sigma_delta);
        json per = json::array();
        for (const auto& d : r.per_domain)
            per.push_back({{"domain", d.domain},
                           {"accuracy", d.accuracy},
                           {"n_eval", d.n_eval},
                           {"improvement", optional_number(d.improvement)}});
        rep["per_domain"] = std::move(per);
        reports.push_back(std::move(rep));
    }
    j["reports"] = std::move(reports);
    return j.dump(2) + "\n";
}

namespace {

std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>> protocol_cells(
    const ProtocolResult& result) {
    std::vector<std::string> header = {"config", "acc", "delta", "sigma_delta"};
    if (!result.reports.empty())
        for (const auto& d : result.reports.front().per_domain) header.push_back(d.domain);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.reports) {
        std::vector<std::string> row = {r.config, fixed(r.accuracy),
                                        r.mean_improvement ? fixed(*r.mean_improvement) : "",
                                        r.sigma_delta ? fixed(*r.sigma_delta) : ""};
        for (const auto& d : r.per_domain) row.push_back(fixed(d.accuracy));
        rows.push_back(std::move(row));
    }
    return {header, rows};
}

}  // namespace

std::string protocol_to_table(const ProtocolResult& result) {
    const auto [header, rows] = protocol_cells(result);
    std::string out = format_table(header, rows);
    for (const auto& w : result.warnings) out += "warning: " + w + "\n";
    return out;
}

std::string protocol_to_csv(const ProtocolResult& result) {
    const auto [header, rows] = protocol_cells(result);
    return csv_lines(header, rows);
}

std::string in_vs_out_to_json(const InVsOutReport& report) {
    json j;
    j["config"] = report.config;
    j["ID"] = report.in_domain;
    j["OOD"] = report.out_of_domain;
    j["sigma_delta"] = report.sigma_delta;
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"domain", r.domain}, {"ID", r.in_domain}, {"OOD", r.out_of_domain}});
    j["per_domain"] = std::move(rows);
    return j.dump(2) + "\n";
}

namespace {

std::vector<std::vector<std::string>> in_vs_out_rows(const InVsOutReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.rows)
        rows.push_back({r.domain, fixed(r.in_domain), fixed(r.out_of_domain), fixed(r.in_domain - r.out_of_domain)});
    rows.push_back({"mean", fixed(report.in_domain), fixed(report.out_of_domain),
                    fixed(report.in_domain - report.out_of_domain)});
    return rows;
}

}  // namespace

std::string in_vs_out_to_table(const InVsOutReport& report) {
    return report.config + "\n" + format_table({"domain", "ID", "OOD", "drop"}, in_vs_out_rows(report)) +
           "sigma_delta " + fixed(report.sigma_delta) + "\n";
}

std::string in_vs_out_to_csv(const InVsOutReport& report) {
    return csv_lines({"domain", "ID", "OOD", "drop"}, in_vs_out_rows(report));
}

std::string curve_to_json(const LabelpropCurve& curve) {
    json j;
    j["oracle_accuracy"] = curve.oracle_accuracy;
    json points = json::array();
    for (const auto& p : curve.points)
        points.push_back({{"size", p.size}, {"mean", p.mean}, {"std", p.std}, {"per_trial", p.per_trial}});
    j["points"] = std::move(points);
    return j.dump(2) + "\n";
}

namespace {

std::vector<std::vector<std::string>> curve_rows(const LabelpropCurve& curve) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : curve.points)
        rows.push_back({std::to_string(p.size), fixed(p.mean, 4), fixed(p.std, 4), fixed(curve.oracle_accuracy, 4)});
    return rows;
}

}  // namespace

std::string curve_to_table(const LabelpropCurve& curve) {
    return format_table({"size", "mean", "std", "oracle"}, curve_rows(curve));
}

std::string curve_to_csv(const LabelpropCurve& curve) {
    return csv_lines({"size", "mean", "std", "oracle"}, curve_rows(curve));
}

}  // namespace mda

// mda: producer and consumer workflows for domain-adaptable linear text
// classifiers.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error.

#include "mda/adapt.hpp"
#include "mda/corpus.hpp"
#include "mda/eval.hpp"
#include "mda/model.hpp"
#include "mda/modelfmt.hpp"
#include "mda/rng.hpp"
#include "mda/synth.hpp"
#include "mda/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

struct Global {
    std::uint64_t seed = 0;
    bool json = false;
    bool csv = false;
    bool quiet = false;
    std::size_t threads = 1;
};

Global g;

void note(const std::string& msg) {
    if (!g.quiet) std::cerr << msg << "\n";
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

void emit(const std::string& text, const std::optional<std::string>& path = std::nullopt) {
    if (path) {
        mda::write_text_file(*path, text);
    } else {
        std::cout << text;
        std::cout.flush();
    }
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

mda::TrainConfig parse_config(const std::string& spec) {
    mda::TrainConfig c;
    std::stringstream ss(spec);
    std::string part;
    bool technique_seen = false;
    while (std::getline(ss, part, '+')) {
        if (part == "dsb") {
            c.dsb = true;
        } else if (part == "dsn") {
            c.dsn = true;
        } else {
            if (technique_seen) throw mda::UsageError("config '" + spec + "' names two techniques");
            c.technique = mda::parse_technique(part);
            technique_seen = true;
        }
    }
    return c;
}

mda::LinearModel load_model_checked(const std::string& path) {
    std::vector<std::string> warnings;
    mda::LinearModel m = mda::load_model(path, &warnings);
    for (const auto& w : warnings) warn(w);
    return m;
}

std::vector<std::size_t> gold_labels(const mda::Corpus& corpus) {
    std::vector<std::size_t> out;
    for (const auto& d : corpus.documents) {
        if (!d.label) throw mda::DataError("document '" + d.id + "' has no label");
        out.push_back(*d.label);
    }
    return out;
}

std::vector<mda::FeatureVector> featurize_all(const mda::Corpus& corpus, const mda::Vocabulary& vocab) {
    std::vector<mda::FeatureVector> out;
    out.reserve(corpus.documents.size());
    for (const auto& d : corpus.documents) out.push_back(mda::featurize(d, vocab));
    return out;
}

json loss_json(const mda::LossBreakdown& l) {
    return {{"label_ce", l.label_ce}, {"domain_ce", l.domain_ce}, {"l1_penalty", l.l1_penalty}, {"total", l.total}};
}

json dist_json(const mda::LabelDistribution& d, const std::vector<std::string>& labels) {
    return {{"labels", labels}, {"probs", d.probs}, {"n_samples_used", d.n_samples_used}, {"alpha", d.smoothing_alpha}};
}

// Options shared by the training-based subcommands.
struct TrainFlags {
    std::string technique = "base";
    bool dsb = false;
    bool dsn = false;
    std::optional<double> lambda;
    std::vector<double> grid;
    std::size_t k_folds = 3;
    std::optional<std::size_t> rank;
    double gr_weight = 1.0;
    double learning_rate = 0.5;
    std::size_t max_iters = 2000;
    double tol = 1e-6;
    double alpha = 1.0;
    std::size_t vocab_size = mda::kDefaultVocabularySize;

    void add_optimizer(CLI::App* cmd) {
        cmd->add_option("--grid", grid, "Lambda grid (default 1e-5 * 2^k, k = 0..4)");
        cmd->add_option("--k-folds", k_folds, "Cross-validation folds for the lambda search")->capture_default_str();
        cmd->add_option("--rank", rank, "Factorization rank for GR (default max(k, 16))");
        cmd->add_option("--gr-weight", gr_weight, "Weight of the domain loss under GR")->capture_default_str();
        cmd->add_option("--learning-rate", learning_rate, "Initial learning rate")->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
        cmd->add_option("--tol", tol, "Relative loss-change stopping threshold")->capture_default_str();
        cmd->add_option("--alpha", alpha, "Label-distribution smoothing")->capture_default_str();
        cmd->add_option("--vocab-size", vocab_size, "Vocabulary size")->capture_default_str();
    }

    mda::TrainConfig base_config() const {
        mda::TrainConfig c;
        c.rank = rank;
        c.gr_weight = gr_weight;
        c.learning_rate = learning_rate;
        c.max_iters = max_iters;
        c.tol = tol;
        c.label_alpha = alpha;
        c.seed = g.seed;
        return c;
    }

    std::vector<double> lambda_grid() const {
        if (lambda) return {*lambda};
        return grid.empty() ? mda::default_lambda_grid() : grid;
    }

    void apply(mda::TrainConfig& c) const {
        c.rank = rank;
        c.gr_weight = gr_weight;
        c.learning_rate = learning_rate;
        c.max_iters = max_iters;
        c.tol = tol;
        c.label_alpha = alpha;
    }
};

// ---------------------------------------------------------------------------

struct TrainCmd {
    std::string data, out;
    std::optional<std::string> log;
    TrainFlags flags;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("train", "Grid-search lambda, train, and write a model file");
        cmd->add_option("--data", data, "Labeled training corpus (JSONL)")->required();
        cmd->add_option("--out", out, "Output model path (.mda.json)")->required();
        cmd->add_option("--technique", flags.technique, "base, dr or gr")->capture_default_str();
        cmd->add_flag("--dsb", flags.dsb, "Domain-specific bias");
        cmd->add_flag("--dsn", flags.dsn, "Domain-specific normalization");
        cmd->add_option("--lambda", flags.lambda, "Fixed L1 strength (skips the grid search)");
        cmd->add_option("--log", log, "Write a JSONL training log of the final fit");
        flags.add_optimizer(cmd);
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        mda::TrainConfig config = flags.base_config();
        config.technique = mda::parse_technique(flags.technique);
        config.dsb = flags.dsb;
        config.dsn = flags.dsn;
        config.validate();

        const mda::Corpus corpus = mda::load_jsonl(data);
        std::vector<std::vector<std::string>> tokens;
        for (const auto& d : corpus.documents) tokens.push_back(mda::document_tokens(d));
        const mda::Vocabulary vocab = mda::build_vocabulary(tokens, flags.vocab_size);
        const mda::TrainingSet set = mda::make_training_set(corpus, tokens, vocab);
        note("training on " + std::to_string(set.size()) + " documents, " + std::to_string(vocab.size()) +
             " features, " + std::to_string(set.domain_names.size()) + " domains");

        std::ofstream log_stream;
        mda::IterationObserver observer;
        if (log) {
            log_stream.open(*log);
            if (!log_stream) throw mda::DataError("cannot write '" + *log + "'");
            observer = [&](const mda::IterationRecord& r) {
                json j = loss_json(r.loss);
                j["iter"] = r.iter;
                j["lr"] = r.learning_rate;
                log_stream << j.dump() << "\n";
            };
        }
        const auto grid = flags.lambda_grid();
        auto result = mda::grid_search_lambda(set, vocab, config, grid, flags.k_folds, observer);
        mda::save_model(result.model, out);

        mda::TrainConfig final_config = config;
        final_config.lambda = result.best_lambda;
        const mda::LossBreakdown loss = mda::batch_loss(result.model, set, final_config);

        json j;
        j["model"] = out;
        j["technique"] = mda::to_string(config.technique);
        j["dsb"] = config.dsb;
        j["dsn"] = config.dsn;
        j["lambda"] = result.best_lambda;
        j["validation_loss"] = json::array();
        for (const auto& [lambda, l] : result.validation_loss)
            j["validation_loss"].push_back({{"lambda", lambda}, {"loss", l}});
        j["loss"] = loss_json(loss);
        j["nonzero_weights"] = mda::count_nonzero_weights(result.model);
        j["n_documents"] = set.size();
        j["h"] = vocab.size();
        if (g.json) {
            emit(j.dump(2) + "\n");
            return;
        }
        std::string text = "lambda " + fmt(result.best_lambda, 6) + "\n";
        for (const auto& [lambda, l] : result.validation_loss)
            text += "  cv lambda " + fmt(lambda, 6) + "  loss " + fmt(l, 6) + "\n";
        text += "label_ce " + fmt(loss.label_ce, 6) + "  domain_ce " + fmt(loss.domain_ce, 6) + "  l1 " +
                fmt(loss.l1_penalty, 6) + "  total " + fmt(loss.total, 6) + "\n";
        text += "nonzero weights " + std::to_string(mda::count_nonzero_weights(result.model)) + "\n";
        text += "wrote " + out + "\n";
        emit(text);
    }
};

struct AdaptCmd {
    std::string model_path, out;
    std::optional<std::string> labels_json, estimate_from, unlabeled;
    double alpha = 1.0;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("adapt", "Build a target-domain context file for a published model");
        cmd->add_option("--model", model_path, "Model file")->required();
        cmd->add_option("--out", out, "Output context file (JSON)")->required();
        auto* lj = cmd->add_option("--labels-json", labels_json, "Known label distribution (JSON)");
        auto* ef = cmd->add_option("--estimate-from", estimate_from, "Labeled target samples (JSONL)");
        lj->excludes(ef);
        cmd->add_option("--unlabeled", unlabeled, "Unlabeled target documents for DSN means (JSONL)");
        cmd->add_option("--alpha", alpha, "Smoothing for the estimated distribution")->capture_default_str();
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::LinearModel model = load_model_checked(model_path);
        mda::ContextFile ctx;
        if (labels_json) ctx.label_dist = mda::label_distribution_from_json(mda::read_text_file(*labels_json), model.labels);
        if (estimate_from) {
            const mda::Corpus samples = mda::load_jsonl(*estimate_from, {model.labels});
            ctx.label_dist = mda::estimate_label_distribution(gold_labels(samples), model.k, alpha);
        }
        if (model.adaptation.dsb && !ctx.label_dist)
            throw mda::UsageError("model uses DSB: supply --labels-json or --estimate-from");
        if (!model.adaptation.dsb && ctx.label_dist) {
            warn("model was trained without DSB; the label distribution is not used");
            ctx.label_dist.reset();
        }
        if (ctx.label_dist)
            for (double p : ctx.label_dist->probs)
                if (!(p > 0.0)) throw mda::DataError("label distribution has a zero entry; use --alpha > 0");
        if (unlabeled) {
            if (model.adaptation.dsn) {
                const mda::Corpus target = mda::load_jsonl(*unlabeled, {model.labels});
                ctx.dsn_means = mda::compute_dsn_stats(target.documents, model.vocab);
            } else {
                warn("model was trained without DSN; --unlabeled is ignored");
            }
        }
        if (model.adaptation.dsn && !ctx.dsn_means)
            throw mda::UsageError("model uses DSN: supply --unlabeled target documents");
        if (!model.adaptation.dsb && !model.adaptation.dsn)
            warn("model has neither DSB nor DSN; the context file is empty");
        mda::write_text_file(out, mda::context_to_json(ctx, model));

        json j;
        j["context"] = out;
        j["label_dist"] = ctx.label_dist ? dist_json(*ctx.label_dist, model.labels) : json(nullptr);
        j["dsn_means"] = ctx.dsn_means.has_value();
        if (g.json) {
            emit(j.dump(2) + "\n");
            return;
        }
        std::string text;
        if (ctx.label_dist) {
            text += "label distribution (" + std::to_string(ctx.label_dist->n_samples_used) + " samples)\n";
            for (std::size_t c = 0; c < model.k; ++c)
                text += "  " + model.labels[c] + " " + fmt(ctx.label_dist->probs[c]) + "\n";
        }
        if (ctx.dsn_means) text += "DSN means over " + std::to_string(model.h) + " features\n";
        text += "wrote " + out + "\n";
        emit(text);
    }
};

mda::PredictionContext read_context(const std::optional<std::string>& path, const mda::LinearModel& model) {
    if (!path) return {};
    return mda::context_from_json(mda::read_text_file(*path), model).context();
}

struct PredictCmd {
    std::string model_path, data;
    std::optional<std::string> context, out;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("predict", "Label documents with a model and optional context");
        cmd->add_option("--model", model_path, "Model file")->required();
        cmd->add_option("--data", data, "Documents (JSONL)")->required();
        cmd->add_option("--context", context, "Context file from adapt");
        cmd->add_option("--out", out, "Write predictions here instead of stdout");
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::LinearModel model = load_model_checked(model_path);
        const mda::BatchPredictor predictor(model, read_context(context, model));
        const mda::Corpus corpus = mda::load_jsonl(data, {model.labels});
        std::string text;
        for (const auto& doc : corpus.documents) {
            const auto proba = mda::predict_proba(predictor.logits(mda::featurize(doc, model.vocab)));
            json j;
            j["id"] = doc.id;
            j["label"] = model.labels[mda::predict_label(proba)];
            j["probs"] = proba;
            text += j.dump() + "\n";
        }
        emit(text, out);
        note("predicted " + std::to_string(corpus.documents.size()) + " documents");
    }
};

struct EvalCmd {
    std::string model_path, data;
    std::optional<std::string> context;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("eval", "Accuracy of a model on labeled documents");
        cmd->add_option("--model", model_path, "Model file")->required();
        cmd->add_option("--data", data, "Labeled documents (JSONL)")->required();
        cmd->add_option("--context", context, "Context file from adapt");
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::LinearModel model = load_model_checked(model_path);
        const mda::BatchPredictor predictor(model, read_context(context, model));
        const mda::Corpus corpus = mda::load_jsonl(data, {model.labels});
        const auto golds = gold_labels(corpus);
        std::vector<std::size_t> preds;
        for (const auto& doc : corpus.documents) preds.push_back(predictor.predict(mda::featurize(doc, model.vocab)));
        std::map<std::string, std::pair<std::size_t, std::size_t>> per;  // correct, total
        for (std::size_t i = 0; i < golds.size(); ++i) {
            auto& [correct, total] = per[corpus.documents[i].domain];
            correct += preds[i] == golds[i];
            ++total;
        }
        json j;
        j["accuracy"] = mda::accuracy(preds, golds);
        j["n"] = golds.size();
        j["per_domain"] = json::array();
        std::vector<std::vector<std::string>> rows;
        for (const auto& name : corpus.domains) {
            const auto& [correct, total] = per[name];
            if (total == 0) continue;
            const double acc = static_cast<double>(correct) / static_cast<double>(total);
            j["per_domain"].push_back({{"domain", name}, {"accuracy", acc}, {"n", total}});
            rows.push_back({name, fmt(acc), std::to_string(total)});
        }
        rows.push_back({"all", fmt(j["accuracy"].get<double>()), std::to_string(golds.size())});
        if (g.json)
            emit(j.dump(2) + "\n");
        else if (g.csv)
            emit("domain,accuracy,n\n" + [&] {
                std::string s;
                for (const auto& r : rows) s += r[0] + "," + r[1] + "," + r[2] + "\n";
                return s;
            }());
        else
            emit(mda::format_table({"domain", "accuracy", "n"}, rows));
    }
};

struct ProtocolFlags {
    std::string data;
    std::vector<std::string> configs;
    std::vector<std::size_t> n_est = {250};
    std::size_t trials = 5;
    double test_fraction = 0.2;
    TrainFlags train;

    void add(CLI::App* cmd) {
        cmd->add_option("--data", data, "Labeled multi-domain corpus (JSONL)")->required();
        cmd->add_option("--config", configs,
                        "Configuration such as base, base+dsb, base+dsn+dsb, dr, gr+dsb (repeatable; default "
                        "base, base+dsb, base+dsn+dsb)");
        cmd->add_option("--n-est", n_est, "Labeled-sample budgets for estimated DSB rows")->capture_default_str();
        cmd->add_option("--trials", trials, "Draws per estimated DSB budget")->capture_default_str();
        cmd->add_option("--test-fraction", test_fraction, "Per-domain test split fraction")->capture_default_str();
        cmd->add_option("--lambda", train.lambda, "Fixed L1 strength (skips the grid search)");
        train.add_optimizer(cmd);
    }

    std::vector<mda::TrainConfig> train_configs() const {
        std::vector<std::string> specs = configs;
        if (specs.empty()) specs = {"base", "base+dsb", "base+dsn+dsb"};
        std::vector<mda::TrainConfig> out;
        for (const auto& s : specs) {
            mda::TrainConfig c = parse_config(s);
            train.apply(c);
            c.validate();
            out.push_back(c);
        }
        return out;
    }

    mda::ProtocolOptions options() const {
        mda::ProtocolOptions o;
        o.test_fraction = test_fraction;
        o.vocab_size = train.vocab_size;
        o.lambda_grid = train.lambda_grid();
        o.k_folds = train.k_folds;
        o.estimate_sizes = n_est;
        o.estimate_trials = trials;
        o.label_alpha = train.alpha;
        o.seed = g.seed;
        o.threads = g.threads;
        return o;
    }
};

void emit_protocol(const mda::ProtocolResult& r) {
    for (const auto& w : r.warnings) warn(w);
    if (g.json)
        emit(mda::protocol_to_json(r));
    else if (g.csv)
        emit(mda::protocol_to_csv(r));
    else
        emit(mda::protocol_to_table(r));
}

struct HoldoutCmd {
    ProtocolFlags flags;
    bool in_vs_out = false;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("eval-holdout", "Hold out each domain in turn");
        flags.add(cmd);
        cmd->add_flag("--in-vs-out", in_vs_out, "Report in-domain vs out-of-domain accuracy per config instead");
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::Corpus corpus = mda::load_jsonl(flags.data);
        const auto configs = flags.train_configs();
        const auto options = flags.options();
        if (!in_vs_out) {
            emit_protocol(mda::holdout_domain_protocol(corpus, configs, options).result);
            return;
        }
        std::string text;
        json all = json::array();
        for (const auto& c : configs) {
            const auto rep = mda::in_vs_out_report(corpus, c, options);
            if (g.json)
                all.push_back(json::parse(mda::in_vs_out_to_json(rep)));
            else if (g.csv)
                text += mda::in_vs_out_to_csv(rep);
            else
                text += mda::in_vs_out_to_table(rep);
        }
        emit(g.json ? all.dump(2) + "\n" : text);
    }
};

struct SingleDomainCmd {
    ProtocolFlags flags;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("eval-single-domain", "Train on one domain, evaluate on the others");
        flags.add(cmd);
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::Corpus corpus = mda::load_jsonl(flags.data);
        emit_protocol(mda::single_domain_protocol(corpus, flags.train_configs(), flags.options()));
    }
};

// Target features, labels and DSN context for the consumer-side estimators.
struct Target {
    std::vector<mda::FeatureVector> features;
    std::vector<std::size_t> labels;
    mda::PredictionContext ctx;
};

Target load_target(const mda::LinearModel& model, const std::string& data, const std::optional<std::string>& unlabeled) {
    Target t;
    const mda::Corpus corpus = mda::load_jsonl(data, {model.labels});
    t.labels = gold_labels(corpus);
    t.features = featurize_all(corpus, model.vocab);
    if (model.adaptation.dsn) {
        if (unlabeled) {
            const mda::Corpus u = mda::load_jsonl(*unlabeled, {model.labels});
            t.ctx.dsn_means = mda::compute_dsn_stats(u.documents, model.vocab);
        } else {
            t.ctx.dsn_means = mda::compute_dsn_stats(std::span<const mda::FeatureVector>(t.features), model.h);
        }
    }
    return t;
}

struct EstimatePerfCmd {
    std::string model_path, data;
    std::optional<std::string> unlabeled;
    std::size_t repeats = 10;
    double alpha = 1.0;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("estimate-perf", "Two-fold accuracy estimate from labeled target samples");
        cmd->add_option("--model", model_path, "Model file")->required();
        cmd->add_option("--data", data, "Labeled target samples (JSONL)")->required();
        cmd->add_option("--unlabeled", unlabeled, "Target text for DSN means (default: the samples' text)");
        cmd->add_option("--repeats", repeats, "Random halvings")->capture_default_str();
        cmd->add_option("--alpha", alpha, "Label-distribution smoothing")->capture_default_str();
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::LinearModel model = load_model_checked(model_path);
        const Target t = load_target(model, data, unlabeled);
        const auto est = mda::two_fold_estimate(model, t.features, t.labels, t.ctx, g.seed, repeats, alpha);
        const auto all = mda::estimate_label_distribution(t.labels, model.k, alpha);
        json j;
        j["mean"] = est.mean;
        j["std"] = est.std;
        j["per_repeat"] = est.per_repeat;
        j["n_samples"] = t.labels.size();
        j["label_dist"] = dist_json(all, model.labels);
        if (g.json) {
            emit(j.dump(2) + "\n");
            return;
        }
        std::string text = "two-fold accuracy " + fmt(est.mean) + " (std " + fmt(est.std) + ", " +
                           std::to_string(repeats) + " halvings of " + std::to_string(t.labels.size()) +
                           " samples)\nlabel distribution from all samples\n";
        for (std::size_t c = 0; c < model.k; ++c) text += "  " + model.labels[c] + " " + fmt(all.probs[c]) + "\n";
        emit(text);
    }
};

struct LabelpropCmd {
    std::string model_path, data;
    std::optional<std::string> unlabeled;
    std::vector<std::size_t> sizes = {10, 25, 50, 100, 250, 500};
    std::size_t trials = 5;
    double alpha = 1.0;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("labelprop-curve", "Accuracy versus labeled samples used to estimate DSB");
        cmd->add_option("--model", model_path, "Model file")->required();
        cmd->add_option("--data", data, "Labeled target documents (JSONL)")->required();
        cmd->add_option("--unlabeled", unlabeled, "Target text for DSN means (default: --data text)");
        cmd->add_option("--sizes", sizes, "Sample sizes")->capture_default_str();
        cmd->add_option("--trials", trials, "Draws per size")->capture_default_str();
        cmd->add_option("--alpha", alpha, "Label-distribution smoothing")->capture_default_str();
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::LinearModel model = load_model_checked(model_path);
        const Target t = load_target(model, data, unlabeled);
        const auto curve = mda::labelprop_curve(model, t.features, t.labels, sizes, trials, g.seed, alpha, t.ctx);
        emit(g.json ? mda::curve_to_json(curve) : g.csv ? mda::curve_to_csv(curve) : mda::curve_to_table(curve));
    }
};

struct LexiconCmd {
    std::optional<std::string> model_path, words, data, out, positive;
    std::size_t top_n = 20;
    bool no_weights = false;
    std::size_t tune_size = 250;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand(
            "lexicon", "Export a model's lexicon, or score documents with a word list and tune its threshold");
        auto* m = cmd->add_option("--model", model_path, "Model to elicit a lexicon from");
        auto* w = cmd->add_option("--words", words, "Word list to score with (word or word,weight per line)");
        m->excludes(w);
        cmd->add_option("--top-n", top_n, "Words per class")->capture_default_str();
        cmd->add_flag("--no-weights", no_weights, "Word columns only");
        cmd->add_option("--out", out, "Output CSV (default stdout)");
        cmd->add_option("--data", data, "Labeled binary documents to score (with --words)");
        cmd->add_option("--positive", positive, "Label treated as positive (with --words)");
        cmd->add_option("--tune-size", tune_size, "Samples used to tune the threshold")->capture_default_str();
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        if (model_path) {
            const mda::LinearModel model = load_model_checked(*model_path);
            std::ostringstream ss;
            const mda::Lexicon lex = mda::elicit_lexicon(model, top_n);
            no_weights ? mda::write_lexicon_wordlist(lex, ss) : mda::write_lexicon_csv(lex, ss);
            emit(ss.str(), out);
            return;
        }
        if (!words) throw mda::UsageError("lexicon needs --model or --words");
        if (!data || !positive) throw mda::UsageError("scoring with --words needs --data and --positive");
        const mda::WordWeights list = mda::load_word_list(*words);
        const mda::Corpus corpus = mda::load_jsonl(*data);
        if (corpus.labels.size() > 2) throw mda::DataError("threshold tuning needs a binary task");
        const std::size_t pos = corpus.label_index(*positive);
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& d : corpus.documents) {
            if (!d.label) throw mda::DataError("document '" + d.id + "' has no label");
            scores.push_back(mda::lexicon_score(list, mda::document_tokens(d)));
            labels.push_back(*d.label == pos ? 1 : 0);
        }
        const std::size_t n = scores.size();
        const std::size_t tune_n = std::min(tune_size, n);
        mda::Rng rng(g.seed);
        const auto picked = rng.sample_without_replacement(n, tune_n);
        std::vector<bool> in_tune(n, false);
        std::vector<double> tune_scores;
        std::vector<int> tune_labels;
        for (std::size_t i : picked) {
            in_tune[i] = true;
            tune_scores.push_back(scores[i]);
            tune_labels.push_back(labels[i]);
        }
        const auto choice = mda::tune_threshold(tune_scores, tune_labels);
        auto acc = [&](double threshold, bool rest_only) {
            std::size_t ok = 0, total = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (rest_only && in_tune[i]) continue;
                ok += mda::classify_with_threshold(scores[i], threshold) == labels[i];
                ++total;
            }
            return total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
        };
        json j;
        j["untuned_accuracy"] = acc(0.0, false);
        j["threshold"] = choice.threshold;
        j["tune_accuracy"] = choice.accuracy;
        j["tuned_accuracy"] = acc(choice.threshold, tune_n < n);
        j["n_tune"] = tune_n;
        j["n"] = n;
        if (g.json) {
            emit(j.dump(2) + "\n");
            return;
        }
        emit("untuned accuracy " + fmt(j["untuned_accuracy"].get<double>()) + "\nthreshold " +
             fmt(choice.threshold) + " (tuned on " + std::to_string(tune_n) + ")\ntuned accuracy " +
             fmt(j["tuned_accuracy"].get<double>()) + "\n");
    }
};

struct McNemarCmd {
    std::size_t n01 = 0, n10 = 0;
    std::optional<std::size_t> n00, n11;
    std::size_t exact_max = 25;
    bool no_correction = false;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("mcnemar", "McNemar's test on paired outcome counts");
        cmd->add_option("--n01", n01, "Items only model B got right")->required();
        cmd->add_option("--n10", n10, "Items only model A got right")->required();
        cmd->add_option("--n00", n00, "Items both got wrong");
        cmd->add_option("--n11", n11, "Items both got right");
        cmd->add_option("--exact-max", exact_max, "Largest discordant count for the exact test")->capture_default_str();
        cmd->add_flag("--no-correction", no_correction, "Chi-square without continuity correction");
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        const mda::PairedOutcome t{n00.value_or(0), n01, n10, n11.value_or(0)};
        const mda::McNemarOptions opt{exact_max, !no_correction};
        const double p = mda::mcnemar_test(t, opt);
        const bool exact = n01 + n10 <= exact_max;
        json j;
        j["n01"] = n01;
        j["n10"] = n10;
        j["method"] = exact ? "exact" : (no_correction ? "chi-square" : "chi-square-corrected");
        j["p_value"] = p;
        if (n00 && n11 && t.total() > 0) j["agreement"] = t.agreement();
        if (g.json) {
            emit(j.dump(2) + "\n");
            return;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", p);
        emit("p = " + std::string(buf) + " (" + j["method"].get<std::string>() + ")\n");
    }
};

struct PowerCmd {
    mda::PowerConfig cfg;
    bool no_correction = false;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("power", "Monte-Carlo power of McNemar's test");
        cmd->add_option("--acc-a", cfg.acc_a, "Accuracy of model A")->required();
        cmd->add_option("--acc-b", cfg.acc_b, "Accuracy of model B")->required();
        cmd->add_option("--agreement", cfg.agreement, "Rate at which A and B are both right or both wrong")
            ->required();
        cmd->add_option("--n", cfg.n_test, "Test-set size")->required();
        cmd->add_option("--alpha", cfg.alpha, "Significance level")->capture_default_str();
        cmd->add_option("--trials", cfg.trials, "Simulated test sets")->capture_default_str();
        cmd->add_flag("--no-correction", no_correction, "Chi-square without continuity correction");
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        cfg.seed = g.seed;
        cfg.mcnemar.continuity_correction = !no_correction;
        const auto cells = mda::solve_cells(cfg.acc_a, cfg.acc_b, cfg.agreement);
        const double power = mda::power_analysis(cfg);
        json j;
        j["power"] = power;
        j["trials"] = cfg.trials;
        j["n"] = cfg.n_test;
        j["alpha"] = cfg.alpha;
        j["cells"] = {{"p00", cells.p00}, {"p01", cells.p01}, {"p10", cells.p10}, {"p11", cells.p11}};
        if (g.json) {
            emit(j.dump(2) + "\n");
            return;
        }
        emit("power " + fmt(power) + " (" + std::to_string(cfg.trials) + " trials, n = " +
             std::to_string(cfg.n_test) + ", alpha = " + fmt(cfg.alpha, 3) + ")\n");
    }
};

struct SynthCmd {
    std::string spec = "default-benchmark";
    std::optional<std::string> out, spec_out;

    void add(CLI::App& app, std::function<void()>& run) {
        auto* cmd = app.add_subcommand("synth", "Generate a synthetic multi-domain corpus");
        cmd->add_option("spec", spec, "default-benchmark or a spec JSON file")->capture_default_str();
        cmd->add_option("--out", out, "Output JSONL (default stdout)");
        cmd->add_option("--write-spec", spec_out, "Also write the resolved spec as JSON");
        cmd->callback([&run, this] { run = [this] { exec(); }; });
    }

    void exec() {
        mda::SynthSpec s = spec == "default-benchmark" ? mda::default_benchmark_spec()
                                                       : mda::synth_spec_from_json(mda::read_text_file(spec));
        if (spec != "default-benchmark" && g.seed != 0) s.seed = g.seed;
        const mda::Corpus corpus = mda::generate_corpus(s);
        std::ostringstream ss;
        mda::write_jsonl(corpus, ss);
        if (spec_out) mda::write_text_file(*spec_out, mda::synth_spec_to_json(s) + "\n");
        if (out) {
            mda::write_text_file(*out, ss.str());
            json j{{"out", *out}, {"documents", corpus.documents.size()}, {"domains", corpus.domains},
                   {"labels", corpus.labels}, {"seed", s.seed}};
            if (g.json)
                emit(j.dump(2) + "\n");
            else
                note("wrote " + std::to_string(corpus.documents.size()) + " documents to " + *out);
        } else {
            emit(ss.str());
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-adaptable linear text classifiers"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_flag("--json", g.json, "JSON output");
    app.add_flag("--csv", g.csv, "CSV output for tables");
    app.add_option("--threads", g.threads, "Worker threads for protocol runs")->capture_default_str();
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");

    std::function<void()> run;
    TrainCmd train;
    AdaptCmd adapt;
    PredictCmd predict;
    EvalCmd eval;
    HoldoutCmd holdout;
    SingleDomainCmd single;
    EstimatePerfCmd estimate;
    LabelpropCmd labelprop;
    LexiconCmd lexicon;
    McNemarCmd mcnemar;
    PowerCmd power;
    SynthCmd synth;
    train.add(app, run);
    adapt.add(app, run);
    predict.add(app, run);
    eval.add(app, run);
    holdout.add(app, run);
    single.add(app, run);
    estimate.add(app, run);
    labelprop.add(app, run);
    lexicon.add(app, run);
    mcnemar.add(app, run);
    power.add(app, run);
    synth.add(app, run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (g.threads == 0) {
        std::cerr << "error: --threads must be at least 1\n";
        return 1;
    }
    try {
        run();
    } catch (const mda::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mda::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

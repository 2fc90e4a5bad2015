// Python bindings over the core library. Structured results cross the
// boundary as the same JSON the CLI emits; the package wrapper decodes them.

#include "mda/adapt.hpp"
#include "mda/eval.hpp"
#include "mda/modelfmt.hpp"
#include "mda/synth.hpp"
#include "mda/train.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <sstream>

namespace py = pybind11;
using namespace mda;

namespace {

Document text_document(const std::string& text) {
    Document d;
    d.raw_text = text;
    return d;
}

std::vector<FeatureVector> featurize_texts(const std::vector<std::string>& texts, const Vocabulary& vocab) {
    std::vector<FeatureVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(featurize(text_document(t), vocab));
    return out;
}

PredictionContext make_context(const LinearModel& model, std::optional<std::vector<double>> label_dist,
                               std::optional<std::vector<double>> dsn_means) {
    PredictionContext ctx;
    if (label_dist) {
        if (label_dist->size() != model.k) throw UsageError("label_dist needs one entry per label");
        ctx.label_dist = std::move(label_dist);
    }
    if (dsn_means) {
        if (dsn_means->size() != model.h) throw UsageError("dsn_means needs one entry per vocabulary token");
        ctx.dsn_means = std::move(dsn_means);
    }
    return ctx;
}

std::vector<std::vector<double>> proba_for(const LinearModel& model, const std::vector<std::string>& texts,
                                           const PredictionContext& ctx) {
    const BatchPredictor predictor(model, ctx);
    std::vector<std::vector<double>> out;
    for (const auto& fv : featurize_texts(texts, model.vocab)) out.push_back(predict_proba(predictor.logits(fv)));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-domain text classification with label-shift adaptation";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    py::class_<Corpus>(m, "Corpus")
        .def_static("load_jsonl", [](const std::filesystem::path& p) { return load_jsonl(p); }, py::arg("path"))
        .def_static(
            "from_jsonl",
            [](const std::string& text) {
                std::istringstream in(text);
                return read_jsonl(in);
            },
            py::arg("text"))
        .def("to_jsonl",
             [](const Corpus& c) {
                 std::ostringstream out;
                 write_jsonl(c, out);
                 return out.str();
             })
        .def("save_jsonl", [](const Corpus& c, const std::filesystem::path& p) { save_jsonl(c, p); })
        .def_readonly("labels", &Corpus::labels)
        .def_readonly("domains", &Corpus::domains)
        .def("__len__", [](const Corpus& c) { return c.documents.size(); })
        .def("records", [](const Corpus& c) {
            py::list out;
            for (const auto& d : c.documents) {
                py::dict r;
                r["id"] = d.id;
                r["text"] = d.raw_text;
                r["domain"] = d.domain;
                r["label"] = d.label ? py::object(py::str(c.labels[*d.label])) : py::object(py::none());
                out.append(r);
            }
            return out;
        });

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_property(
            "technique", [](const TrainConfig& c) { return std::string(to_string(c.technique)); },
            [](TrainConfig& c, const std::string& t) { c.technique = parse_technique(t); })
        .def_readwrite("dsb", &TrainConfig::dsb)
        .def_readwrite("dsn", &TrainConfig::dsn)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("max_iters", &TrainConfig::max_iters)
        .def_readwrite("tol", &TrainConfig::tol)
        .def_readwrite("gr_weight", &TrainConfig::gr_weight)
        .def_readwrite("rank", &TrainConfig::rank)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("label_alpha", &TrainConfig::label_alpha)
        .def("label", [](const TrainConfig& c) { return config_label(c); })
        .def("__repr__", [](const TrainConfig& c) { return "TrainConfig(" + c.canonical_json() + ")"; });

    py::class_<LinearModel>(m, "Model")
        .def_static(
            "load",
            [](const std::filesystem::path& p) {
                std::vector<std::string> warnings;
                LinearModel model = load_model(p, &warnings);
                for (const auto& w : warnings) PyErr_WarnEx(PyExc_UserWarning, w.c_str(), 1);
                return model;
            },
            py::arg("path"))
        .def_static("from_json", [](const std::string& s) { return model_from_json(s); }, py::arg("text"))
        .def("to_json", [](const LinearModel& model) { return model_to_json(model); })
        .def("save", [](const LinearModel& model, const std::filesystem::path& p) { save_model(model, p); })
        .def_readonly("k", &LinearModel::k)
        .def_readonly("h", &LinearModel::h)
        .def_readonly("labels", &LinearModel::labels)
        .def_readonly("domains", &LinearModel::domains)
        .def_property_readonly("technique", [](const LinearModel& model) { return to_string(model.technique()); })
        .def_property_readonly("dsb", [](const LinearModel& model) { return model.adaptation.dsb; })
        .def_property_readonly("dsn", [](const LinearModel& model) { return model.adaptation.dsn; })
        .def_property_readonly("vocabulary", [](const LinearModel& model) { return model.vocab.tokens(); })
        .def("nonzero_weights", &count_nonzero_weights)
        .def(
            "predict_proba",
            [](const LinearModel& model, const std::vector<std::string>& texts,
               std::optional<std::vector<double>> label_dist, std::optional<std::vector<double>> dsn_means) {
                return proba_for(model, texts, make_context(model, std::move(label_dist), std::move(dsn_means)));
            },
            py::arg("texts"), py::arg("label_dist") = py::none(), py::arg("dsn_means") = py::none())
        .def(
            "predict",
            [](const LinearModel& model, const std::vector<std::string>& texts,
               std::optional<std::vector<double>> label_dist, std::optional<std::vector<double>> dsn_means) {
                std::vector<std::string> out;
                for (const auto& p :
                     proba_for(model, texts, make_context(model, std::move(label_dist), std::move(dsn_means))))
                    out.push_back(model.labels[predict_label(p)]);
                return out;
            },
            py::arg("texts"), py::arg("label_dist") = py::none(), py::arg("dsn_means") = py::none())
        .def(
            "dsn_means",
            [](const LinearModel& model, const std::vector<std::string>& texts) {
                return compute_dsn_stats(featurize_texts(texts, model.vocab), model.h);
            },
            py::arg("texts"))
        .def(
            "lexicon",
            [](const LinearModel& model, std::size_t top_n) {
                std::ostringstream out;
                write_lexicon_csv(elicit_lexicon(model, top_n), out);
                return out.str();
            },
            py::arg("top_n") = 100);

    m.def(
        "train",
        [](const Corpus& corpus, const TrainConfig& config, std::optional<std::vector<double>> grid,
           std::size_t k_folds, std::size_t vocab_size) {
            std::vector<std::vector<std::string>> tokens;
            for (const auto& d : corpus.documents) tokens.push_back(document_tokens(d));
            const Vocabulary vocab = build_vocabulary(tokens, vocab_size);
            const TrainingSet set = make_training_set(corpus, tokens, vocab);
            const std::vector<double> g = grid.value_or(std::vector<double>{config.lambda});
            GridSearchResult r;
            {
                py::gil_scoped_release release;
                r = grid_search_lambda(set, vocab, config, g, k_folds);
            }
            return py::make_tuple(std::move(r.model), r.best_lambda);
        },
        py::arg("corpus"), py::arg("config") = TrainConfig{}, py::arg("lambda_grid") = py::none(),
        py::arg("k_folds") = 3, py::arg("vocab_size") = kDefaultVocabularySize,
        "Fit a model; with a lambda grid the penalty is chosen by k-fold cross-validation.");

    m.def(
        "estimate_label_distribution",
        [](const LinearModel& model, const std::vector<std::string>& labels, double alpha) {
            std::vector<std::size_t> idx;
            for (const auto& l : labels) {
                const auto it = std::find(model.labels.begin(), model.labels.end(), l);
                if (it == model.labels.end()) throw DataError("label '" + l + "' is not one of the model's labels");
                idx.push_back(static_cast<std::size_t>(it - model.labels.begin()));
            }
            return estimate_label_distribution(idx, model.k, alpha).probs;
        },
        py::arg("model"), py::arg("labels"), py::arg("alpha") = 1.0);

    m.def(
        "mcnemar",
        [](std::size_t n01, std::size_t n10, std::size_t n00, std::size_t n11, std::size_t exact_max,
           bool continuity_correction) {
            return mcnemar_test(PairedOutcome{n00, n01, n10, n11}, McNemarOptions{exact_max, continuity_correction});
        },
        py::arg("n01"), py::arg("n10"), py::arg("n00") = 0, py::arg("n11") = 0, py::arg("exact_max") = 25,
        py::arg("continuity_correction") = true, "Two-sided McNemar p-value.");

    m.def(
        "power",
        [](double acc_a, double acc_b, double agreement, std::size_t n, double alpha, std::size_t trials,
           std::uint64_t seed, bool continuity_correction) {
            PowerConfig c;
            c.acc_a = acc_a;
            c.acc_b = acc_b;
            c.agreement = agreement;
            c.n_test = n;
            c.alpha = alpha;
            c.trials = trials;
            c.seed = seed;
            c.mcnemar.continuity_correction = continuity_correction;
            py::gil_scoped_release release;
            return power_analysis(c);
        },
        py::arg("acc_a"), py::arg("acc_b"), py::arg("agreement"), py::arg("n"), py::arg("alpha") = 0.05,
        py::arg("trials") = 10000, py::arg("seed") = 0, py::arg("continuity_correction") = true);

    m.def("default_benchmark_spec", [] { return synth_spec_to_json(default_benchmark_spec()); });
    m.def(
        "generate_corpus", [](const std::string& spec_json) { return generate_corpus(synth_spec_from_json(spec_json)); },
        py::arg("spec_json"));

    m.def(
        "_holdout_json",
        [](const Corpus& corpus, const std::vector<TrainConfig>& configs, std::vector<std::size_t> estimate_sizes,
           std::size_t trials, std::size_t k_folds, std::optional<std::vector<double>> grid, std::uint64_t seed) {
            ProtocolOptions o;
            o.estimate_sizes = std::move(estimate_sizes);
            o.estimate_trials = trials;
            o.k_folds = k_folds;
            if (grid) o.lambda_grid = *grid;
            o.seed = seed;
            py::gil_scoped_release release;
            return protocol_to_json(holdout_domain_protocol(corpus, configs, o).result);
        },
        py::arg("corpus"), py::arg("configs"), py::arg("estimate_sizes"), py::arg("trials"), py::arg("k_folds"),
        py::arg("lambda_grid"), py::arg("seed"));
}

#include "mda/corpus.hpp"

#include "mda/common.hpp"
#include "mda/rng.hpp"
#include "mda/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mda {

using json = nlohmann::json;

std::size_t Corpus::domain_index(const std::string& name) const {
    auto it = std::find(domains.begin(), domains.end(), name);
    if (it == domains.end()) throw DataError("unknown domain '" + name + "'");
    return static_cast<std::size_t>(it - domains.begin());
}

std::size_t Corpus::label_index(const std::string& name) const {
    auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw DataError("unknown label '" + name + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

void Corpus::validate() const {
    if (domains.empty()) throw DataError("corpus has no domains");
    if (labels.size() == 1) throw DataError("corpus needs at least 2 labels");
    std::set<std::string> known(domains.begin(), domains.end());
    if (known.size() != domains.size()) throw DataError("duplicate domain names");
    std::set<std::string> ids;
    for (const auto& d : documents) {
        if (d.domain.empty()) throw DataError("document '" + d.id + "' has an empty domain");
        if (!known.contains(d.domain))
            throw DataError("document '" + d.id + "' has unlisted domain '" + d.domain + "'");
        if (d.label && *d.label >= labels.size())
            throw DataError("document '" + d.id + "' has an out-of-range label");
        if (!ids.insert(d.id).second) throw DataError("duplicate document id '" + d.id + "'");
    }
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
    Corpus out{{}, labels, domains};
    out.documents.reserve(indices.size());
    for (std::size_t i : indices) out.documents.push_back(documents.at(i));
    return out;
}

Corpus Corpus::of_domain(const std::string& domain) const {
    Corpus out{{}, labels, domains};
    for (const auto& d : documents)
        if (d.domain == domain) out.documents.push_back(d);
    return out;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        if (!index_.emplace(tokens_[i], i).second)
            throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
}

std::optional<std::size_t> Vocabulary::find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double FeatureVector::value_at(std::size_t pos) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), pos,
                               [](const auto& e, std::size_t p) { return e.first < p; });
    return (it != entries.end() && it->first == pos) ? it->second : 0.0;
}

std::vector<std::string> document_tokens(const Document& doc) {
    return tokenize(sanitize_text(doc.raw_text, false));
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> token_lists, std::size_t v_max) {
    if (v_max == 0) throw UsageError("build_vocabulary: v_max must be at least 1");
    if (token_lists.empty()) throw DataError("build_vocabulary: no documents");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& tokens : token_lists)
        for (const auto& t : tokens) ++counts[t];
    if (counts.empty()) throw DataError("build_vocabulary: no tokens survive filtering");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > v_max) ranked.resize(v_max);
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [t, c] : ranked) tokens.push_back(std::move(t));
    return Vocabulary(std::move(tokens));
}

Vocabulary build_vocabulary(std::span<const Document> docs, std::size_t v_max) {
    std::vector<std::vector<std::string>> lists;
    lists.reserve(docs.size());
    for (const auto& d : docs) lists.push_back(document_tokens(d));
    return build_vocabulary(lists, v_max);
}

FeatureVector featurize_tokens(std::span<const std::string> tokens, const Vocabulary& vocab) {
    FeatureVector fv;
    fv.dimension = vocab.size();
    std::vector<std::size_t> positions;
    for (const auto& t : tokens)
        if (auto p = vocab.find(t)) positions.push_back(*p);
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    fv.entries.reserve(positions.size());
    for (std::size_t p : positions) fv.entries.emplace_back(p, 1.0);
    return fv;
}

FeatureVector featurize(const Document& doc, const Vocabulary& vocab) {
    return featurize_tokens(document_tokens(doc), vocab);
}

std::vector<double> presence_means(std::span<const FeatureVector> features, std::size_t dimension) {
    if (features.empty()) throw DataError("presence_means: no documents");
    std::vector<double> counts(dimension, 0.0);
    for (const auto& fv : features)
        for (const auto& [pos, v] : fv.entries)
            if (v != 0.0) counts.at(pos) += 1.0;
    const double n = static_cast<double>(features.size());
    for (double& c : counts) c /= n;
    return counts;
}

std::map<std::string, DomainStats> compute_domain_stats(const Corpus& corpus, const Vocabulary& vocab,
                                                        double alpha) {
    const std::size_t k = corpus.num_labels();
    if (k < 2) throw DataError("compute_domain_stats: corpus needs at least 2 labels");
    std::map<std::string, DomainStats> out;
    for (const auto& domain : corpus.domains) {
        std::vector<FeatureVector> features;
        std::vector<double> counts(k, 0.0);
        for (const auto& doc : corpus.documents) {
            if (doc.domain != domain) continue;
            if (!doc.label) throw DataError("compute_domain_stats: document '" + doc.id + "' is unlabeled");
            counts[*doc.label] += 1.0;
            features.push_back(featurize(doc, vocab));
        }
        if (features.empty()) throw DataError("compute_domain_stats: domain '" + domain + "' has no documents");
        DomainStats s;
        s.domain = domain;
        s.n_instances = features.size();
        s.feature_means = presence_means(features, vocab.size());
        const double denom = static_cast<double>(features.size()) + static_cast<double>(k) * alpha;
        s.label_dist.probs.resize(k);
        for (std::size_t c = 0; c < k; ++c) s.label_dist.probs[c] = (counts[c] + alpha) / denom;
        s.label_dist.n_samples_used = features.size();
        s.label_dist.smoothing_alpha = alpha;
        out.emplace(domain, std::move(s));
    }
    return out;
}

Split split_dataset(const Corpus& corpus, const SplitSpec& spec) {
    if (spec.mode == SplitSpec::Mode::fraction && !(spec.test_fraction >= 0.0 && spec.test_fraction <= 1.0))
        throw UsageError("split_dataset: test fraction must lie in [0, 1]");
    std::vector<bool> is_test(corpus.documents.size(), false);
    for (std::size_t d = 0; d < corpus.domains.size(); ++d) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < corpus.documents.size(); ++i)
            if (corpus.documents[i].domain == corpus.domains[d]) members.push_back(i);
        std::size_t n_test = spec.mode == SplitSpec::Mode::count
                                 ? spec.test_count
                                 : static_cast<std::size_t>(std::llround(spec.test_fraction *
                                                                         static_cast<double>(members.size())));
        if (n_test > members.size())
            throw DataError("split_dataset: domain '" + corpus.domains[d] + "' has " +
                            std::to_string(members.size()) + " documents, fewer than the " +
                            std::to_string(n_test) + " requested for test");
        Rng rng(derive_seed(spec.seed, d));
        for (std::size_t pick : rng.sample_without_replacement(members.size(), n_test))
            is_test[members[pick]] = true;
    }
    Split out{Corpus{{}, corpus.labels, corpus.domains}, Corpus{{}, corpus.labels, corpus.domains}};
    for (std::size_t i = 0; i < corpus.documents.size(); ++i)
        (is_test[i] ? out.test : out.train).documents.push_back(corpus.documents[i]);
    return out;
}

// ---------------------------------------------------------------------------

Corpus read_jsonl(std::istream& in, const LoadOptions& opts) {
    Corpus corpus;
    if (opts.label_schema) corpus.labels = *opts.label_schema;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw DataError("line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(std::string("malformed JSON (") + e.what() + ")");
        }
        if (!rec.is_object()) fail("record is not an object");
        if (!rec.contains("text") || !rec["text"].is_string()) fail("missing string field \"text\"");
        if (!rec.contains("domain") || !rec["domain"].is_string()) fail("missing string field \"domain\"");

        Document doc;
        doc.raw_text = rec["text"].get<std::string>();
        doc.domain = rec["domain"].get<std::string>();
        if (doc.domain.empty()) fail("empty domain");
        if (rec.contains("id")) {
            const auto& id = rec["id"];
            if (id.is_string()) doc.id = id.get<std::string>();
            else if (id.is_number_integer()) doc.id = std::to_string(id.get<long long>());
            else fail("field \"id\" must be a string or integer");
        } else {
            doc.id = "line-" + std::to_string(line_no);
        }
        if (rec.contains("label") && !rec["label"].is_null()) {
            if (!rec["label"].is_string()) fail("field \"label\" must be a string or null");
            const auto name = rec["label"].get<std::string>();
            auto it = std::find(corpus.labels.begin(), corpus.labels.end(), name);
            if (it == corpus.labels.end()) {
                if (opts.label_schema) fail("unknown label '" + name + "'");
                corpus.labels.push_back(name);
                it = corpus.labels.end() - 1;
            }
            doc.label = static_cast<std::size_t>(it - corpus.labels.begin());
        }
        if (std::find(corpus.domains.begin(), corpus.domains.end(), doc.domain) == corpus.domains.end())
            corpus.domains.push_back(doc.domain);
        corpus.documents.push_back(std::move(doc));
    }
    if (corpus.documents.empty()) throw DataError("empty corpus");
    corpus.validate();
    return corpus;
}

Corpus load_jsonl(const std::filesystem::path& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return read_jsonl(in, opts);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& doc : corpus.documents) {
        json rec;
        rec["id"] = doc.id;
        rec["text"] = doc.raw_text;
        rec["domain"] = doc.domain;
        rec["label"] = doc.label ? json(corpus.labels.at(*doc.label)) : json(nullptr);
        out << rec.dump() << '\n';
    }
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_jsonl(corpus, out);
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace mda

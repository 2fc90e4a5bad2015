#include "mda/synth.hpp"

#include "mda/common.hpp"
#include "mda/rng.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace mda {

namespace {

// Fixed-width base-26 lowercase encoding; keeps generated tokens purely
// alphabetic so they pass the tokenizer untouched.
std::string letters(std::size_t value, std::size_t width) {
    std::string out(width, 'a');
    for (std::size_t i = width; i > 0; --i) {
        out[i - 1] = static_cast<char>('a' + value % 26);
        value /= 26;
    }
    return out;
}

bool valid_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SynthSpec::validate() const {
    auto fail = [](const std::string& what) { throw UsageError("invalid synth spec: " + what); };
    if (k < 2) fail("k must be at least 2");
    if (m < 1) fail("m must be at least 1");
    if (priors.size() != m) fail("need one prior per domain");
    for (const auto& p : priors) {
        if (p.size() != k) fail("prior length differs from k");
        double total = 0.0;
        for (double v : p) {
            if (!valid_probability(v)) fail("prior entry outside [0, 1]");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) fail("prior does not sum to 1");
    }
    if (!valid_probability(signal_emission) || !valid_probability(signal_leak) ||
        !valid_probability(background_emission))
        fail("emission probabilities must lie in [0, 1]");
    if (doc_length_max < doc_length_min) fail("doc_length_max < doc_length_min");
    if (doc_length_max == 0) fail("documents would have zero length");
    if (neutral_tokens == 0 && doc_length_min > 0 && signal_tokens_per_class == 0 &&
        background_tokens_per_domain == 0)
        fail("no tokens available to emit");
    if (neutral_tokens == 0 && doc_length_min > 0 && (signal_emission < 1.0 || background_emission < 1.0))
        fail("neutral_tokens must be positive to pad documents");
    if (docs_per_domain == 0) fail("docs_per_domain must be positive");
    if (k > 26 * 26 || m > 26 * 26 || signal_tokens_per_class > 26 * 26 || background_tokens_per_domain > 26 * 26 ||
        neutral_tokens > 26 * 26 * 26)
        fail("too many classes, domains or tokens for the naming scheme");
}

std::string SynthSpec::signal_token(std::size_t cls, std::size_t i) const {
    return "sig" + letters(cls, 2) + letters(i, 2);
}
std::string SynthSpec::background_token(std::size_t domain, std::size_t i) const {
    return "bkg" + letters(domain, 2) + letters(i, 2);
}
std::string SynthSpec::neutral_token(std::size_t i) const { return "neu" + letters(i, 3); }
std::string SynthSpec::label_name(std::size_t cls) const { return "class" + std::to_string(cls); }
std::string SynthSpec::domain_name(std::size_t domain) const { return "domain" + std::to_string(domain); }

SynthSpec default_benchmark_spec() {
    SynthSpec s;
    s.k = 4;
    s.m = 4;
    for (std::size_t d = 0; d < s.m; ++d) {
        std::vector<double> p(s.k, 0.15);
        p[d % s.k] = 0.55;
        s.priors.push_back(p);
    }
    s.signal_tokens_per_class = 12;
    s.signal_emission = 0.35;
    s.signal_leak = 0.1;
    s.background_tokens_per_domain = 30;
    s.background_emission = 0.5;
    s.neutral_tokens = 200;
    s.doc_length_min = 20;
    s.doc_length_max = 60;
    s.docs_per_domain = 1500;
    s.seed = 20240401;
    return s;
}

Corpus generate_corpus(const SynthSpec& spec) {
    spec.validate();
    Corpus corpus;
    for (std::size_t c = 0; c < spec.k; ++c) corpus.labels.push_back(spec.label_name(c));
    for (std::size_t d = 0; d < spec.m; ++d) corpus.domains.push_back(spec.domain_name(d));

    for (std::size_t d = 0; d < spec.m; ++d) {
        Rng rng(derive_seed(spec.seed, d));
        for (std::size_t n = 0; n < spec.docs_per_domain; ++n) {
            const std::size_t y = rng.categorical(spec.priors[d]);
            const auto length = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.doc_length_min),
                                                                     static_cast<std::int64_t>(spec.doc_length_max)));
            std::vector<std::string> tokens;
            for (std::size_t c = 0; c < spec.k; ++c) {
                const double p = c == y ? spec.signal_emission : spec.signal_leak;
                for (std::size_t i = 0; i < spec.signal_tokens_per_class; ++i)
                    if (rng.bernoulli(p)) tokens.push_back(spec.signal_token(c, i));
            }
            for (std::size_t i = 0; i < spec.background_tokens_per_domain; ++i)
                if (rng.bernoulli(spec.background_emission)) tokens.push_back(spec.background_token(d, i));
            while (tokens.size() < length)
                tokens.push_back(spec.neutral_token(static_cast<std::size_t>(rng.below(spec.neutral_tokens))));
            rng.shuffle(tokens);

            Document doc;
            doc.id = corpus.domains[d] + "-" + std::to_string(n);
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i) doc.raw_text.push_back(' ');
                doc.raw_text += tokens[i];
            }
            doc.label = y;
            doc.domain = corpus.domains[d];
            corpus.documents.push_back(std::move(doc));
        }
    }
    return corpus;
}

std::string synth_spec_to_json(const SynthSpec& s) {
    nlohmann::json j;
    j["k"] = s.k;
    j["m"] = s.m;
    j["priors"] = s.priors;
    j["signal_tokens_per_class"] = s.signal_tokens_per_class;
    j["signal_emission"] = s.signal_emission;
    j["signal_leak"] = s.signal_leak;
    j["background_tokens_per_domain"] = s.background_tokens_per_domain;
    j["background_emission"] = s.background_emission;
    j["neutral_tokens"] = s.neutral_tokens;
    j["doc_length_min"] = s.doc_length_min;
    j["doc_length_max"] = s.doc_length_max;
    j["docs_per_domain"] = s.docs_per_domain;
    j["seed"] = s.seed;
    return j.dump(2);
}

SynthSpec synth_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("synth spec: ") + e.what());
    }
    SynthSpec s;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
        };
        get("k", s.k);
        get("m", s.m);
        get("priors", s.priors);
        get("signal_tokens_per_class", s.signal_tokens_per_class);
        get("signal_emission", s.signal_emission);
        get("signal_leak", s.signal_leak);
        get("background_tokens_per_domain", s.background_tokens_per_domain);
        get("background_emission", s.background_emission);
        get("neutral_tokens", s.neutral_tokens);
        get("doc_length_min", s.doc_length_min);
        get("doc_length_max", s.doc_length_max);
        get("docs_per_domain", s.docs_per_domain);
        get("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("synth spec: ") + e.what());
    }
    if (s.priors.empty())
        for (std::size_t d = 0; d < s.m; ++d) s.priors.emplace_back(s.k, 1.0 / static_cast<double>(s.k));
    return s;
}

}  // namespace mda

#include "mda/corpus.hpp"
#include "mda/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mda;

namespace {

std::vector<double> label_rates(const Corpus& c, const std::string& domain) {
    std::vector<double> r(c.labels.size(), 0.0);
    double n = 0;
    for (const auto& d : c.documents)
        if (d.domain == domain) {
            r[*d.label] += 1;
            n += 1;
        }
    for (double& v : r) v /= n;
    return r;
}

std::string dump(const Corpus& c) {
    std::ostringstream out;
    write_jsonl(c, out);
    return out.str();
}

}  // namespace

TEST_SUITE("synth") {
TEST_CASE("default benchmark spec") {
    const SynthSpec s = default_benchmark_spec();
    CHECK(s.k == 4);
    CHECK(s.m == 4);
    CHECK(s.docs_per_domain * s.m == 6000);
    CHECK(s.seed == 20240401);
    for (const auto& p : s.priors) {
        double sum = 0;
        for (double v : p) sum += v;
        CHECK(sum == doctest::Approx(1.0));
    }
}

TEST_CASE("generation is deterministic and follows the priors") {
    const SynthSpec s = default_benchmark_spec();
    const Corpus a = generate_corpus(s);
    CHECK(a.documents.size() == 6000);
    CHECK(dump(a) == dump(generate_corpus(s)));
    for (std::size_t d = 0; d < s.m; ++d) {
        const auto rates = label_rates(a, a.domains[d]);
        double l1 = 0, bound = 0;
        for (std::size_t c = 0; c < s.k; ++c) {
            const double p = s.priors[d][c];
            l1 += std::abs(rates[a.label_index(s.label_name(c))] - p);
            bound += 3 * std::sqrt(p * (1 - p) / static_cast<double>(s.docs_per_domain));
        }
        INFO("domain ", d, " L1 ", l1, " bound ", bound);
        CHECK(l1 < bound);
    }
}

TEST_CASE("signal tokens are predictive") {
    SynthSpec s = default_benchmark_spec();
    s.docs_per_domain = 400;
    const Corpus c = generate_corpus(s);
    const std::string tok = s.signal_token(0, 0);
    double in = 0, in_n = 0, out = 0, out_n = 0;
    const std::size_t cls = c.label_index(s.label_name(0));
    for (const auto& d : c.documents) {
        const bool has = (" " + d.raw_text + " ").find(" " + tok + " ") != std::string::npos;
        if (*d.label == cls) {
            in += has;
            ++in_n;
        } else {
            out += has;
            ++out_n;
        }
    }
    CHECK(in / in_n - out / out_n > 0.15);
}

TEST_CASE("identical priors give matching label rates") {
    SynthSpec s;
    s.k = 2;
    s.m = 2;
    s.priors = {{0.5, 0.5}, {0.5, 0.5}};
    s.docs_per_domain = 2000;
    s.seed = 9;
    const Corpus c = generate_corpus(s);
    const auto a = label_rates(c, c.domains[0]);
    const auto b = label_rates(c, c.domains[1]);
    CHECK(std::abs(a[0] - b[0]) < 4 * std::sqrt(0.25 / 2000 * 2));
}

TEST_CASE("DSB prior alone reaches majority accuracy") {
    SynthSpec s;
    s.k = 2;
    s.m = 2;
    s.priors = {{0.8, 0.2}, {0.2, 0.8}};
    s.docs_per_domain = 5000;
    s.seed = 10;
    const Corpus c = generate_corpus(s);
    for (std::size_t d = 0; d < 2; ++d) {
        const auto rates = label_rates(c, c.domains[d]);
        CHECK(std::max(rates[0], rates[1]) == doctest::Approx(0.8).epsilon(0.03));
    }
}

TEST_CASE("spec validation and json round trip") {
    SynthSpec s;
    s.k = 2;
    s.m = 1;
    s.priors = {{0.7, 0.2}};
    CHECK_THROWS(s.validate());
    s.priors = {{0.7, 0.3}};
    s.doc_length_min = 0;
    s.doc_length_max = 0;
    CHECK_THROWS(s.validate());
    const SynthSpec d = default_benchmark_spec();
    const SynthSpec back = synth_spec_from_json(synth_spec_to_json(d));
    CHECK(synth_spec_to_json(back) == synth_spec_to_json(d));
    CHECK(synth_spec_from_json(R"({"k":2,"m":1,"priors":[[0.5,0.5]]})").docs_per_domain == SynthSpec{}.docs_per_domain);
}
}

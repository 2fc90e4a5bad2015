#include "mda/model.hpp"
#include "mda/train.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace mda;
using namespace mda::testing;

namespace {

LinearModel dense_model(std::size_t h, std::size_t k) {
    LinearModel m;
    m.k = k;
    m.h = h;
    m.weights = DenseWeights{Matrix(h, k)};
    m.bias.assign(k, 0.0);
    m.vocab = numbered_vocab(h);
    for (std::size_t c = 0; c < k; ++c) m.labels.push_back("c" + std::to_string(c));
    return m;
}

FeatureVector fv_of(std::size_t h, std::initializer_list<std::size_t> on) {
    FeatureVector fv;
    fv.dimension = h;
    for (auto j : on) fv.entries.emplace_back(j, 1.0);
    return fv;
}

}  // namespace

TEST_SUITE("model") {
TEST_CASE("forward logits") {
    LinearModel m = dense_model(3, 2);
    std::get<DenseWeights>(m.weights).w(0, 0) = 2;
    std::get<DenseWeights>(m.weights).w(0, 1) = -1;
    const auto z = forward_logits(m, fv_of(3, {0}), {});
    CHECK(z == std::vector<double>{2, -1});

    LinearModel d = dense_model(3, 2);
    d.adaptation.dsb = true;
    PredictionContext ctx;
    ctx.label_dist = std::vector<double>{0.7, 0.3};
    const auto zd = forward_logits(d, fv_of(3, {1, 2}), ctx);
    CHECK(zd[0] == doctest::Approx(std::log(0.7)));
    CHECK(zd[1] == doctest::Approx(std::log(0.3)));
}

TEST_CASE("DSN shifts logits by the mean-weighted rows") {
    LinearModel m = dense_model(2, 2);
    auto& w = std::get<DenseWeights>(m.weights).w;
    w(0, 0) = 1.5;
    w(1, 1) = -2.0;
    m.adaptation.dsn = true;
    PredictionContext ctx;
    ctx.dsn_means = std::vector<double>{1.0, 0.25};
    // (f - mu) W with f = (1, 0): (0, -0.25) W = (0, 0.5)
    const auto z = forward_logits(m, fv_of(2, {0}), ctx);
    CHECK(z[0] == doctest::Approx(0.0));
    CHECK(z[1] == doctest::Approx(0.5));
}

TEST_CASE("DR adds the training-domain row only for seen domains") {
    LinearModel m = dense_model(2, 2);
    m.domains = {"a", "b"};
    m.dr_bias_table = Matrix(2, 2);
    (*m.dr_bias_table)(1, 0) = 3.0;
    CHECK(forward_logits(m, fv_of(2, {}), {}, 1) == std::vector<double>{3, 0});
    CHECK(forward_logits(m, fv_of(2, {}), {}) == std::vector<double>{0, 0});
}

TEST_CASE("batch predictor agrees with forward logits") {
    const LinearModel f = random_factorized_model(4, 3, 10, 4, 2);
    LinearModel m = f;
    m.adaptation = {true, true};
    Rng rng(5);
    PredictionContext ctx;
    ctx.label_dist = std::vector<double>{0.2, 0.5, 0.3};
    ctx.dsn_means = std::vector<double>(10);
    for (double& v : *ctx.dsn_means) v = rng.uniform();
    const BatchPredictor p(m, ctx);
    for (int i = 0; i < 50; ++i) {
        const auto fv = random_features(rng, 10, 0.4);
        const auto a = forward_logits(m, fv, ctx);
        const auto b = p.logits(fv);
        for (std::size_t c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
    }
}

TEST_CASE("predict_proba and predict_label") {
    auto p = predict_proba(std::vector<double>{std::log(2.0), 0.0});
    CHECK(p[0] == doctest::Approx(2.0 / 3));
    CHECK(predict_label(std::vector<double>{0.2, 0.5, 0.3}) == 1);
    CHECK(predict_label(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(predict_label(std::vector<double>{0, 0, 0, 1}) == 3);
}

TEST_CASE("collapse matches the explicit product") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const LinearModel f = random_factorized_model(100 + seed, 3, 15, 4, 3);
        const LinearModel d = collapse_weights(f);
        CHECK(!d.is_factorized());
        Rng rng(seed);
        for (int i = 0; i < 100; ++i) {
            const auto fv = random_features(rng, 15, 0.3);
            const auto a = forward_logits(f, fv, {});
            const auto b = forward_logits(d, fv, {});
            const auto oracle = dense_product_logits(f, fv);
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(std::abs(a[c] - oracle[c]) <= 1e-12);
                CHECK(std::abs(b[c] - oracle[c]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("collapse special cases") {
    LinearModel f = random_factorized_model(3, 2, 4, 4, 2);
    auto& fw = std::get<FactorizedWeights>(f.weights);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) fw.w1(i, j) = i == j ? 1.0 : 0.0;
    CHECK(std::get<DenseWeights>(collapse_weights(f).weights).w == fw.w2);
    for (double& v : fw.w2.data()) v = 0.0;
    const LinearModel zero = collapse_weights(f);
    for (double v : std::get<DenseWeights>(zero.weights).w.data()) CHECK(v == 0.0);
}

TEST_CASE("lexicon elicitation") {
    LinearModel m = dense_model(3, 2);
    m.vocab = Vocabulary({"love", "poor", "waste"});
    auto& w = std::get<DenseWeights>(m.weights).w;
    w(2, 0) = 0.5;
    w(1, 0) = 0.2;
    w(0, 0) = -1;
    const Lexicon lex = elicit_lexicon(m, 2);
    REQUIRE(lex.entries[0].size() == 2);
    CHECK(lex.entries[0][0] == std::pair<std::string, double>{"waste", 0.5});
    CHECK(lex.entries[0][1] == std::pair<std::string, double>{"poor", 0.2});
    // class 1 is all zero: lexicographic order
    CHECK(lex.entries[1][0].first == "love");
    CHECK(lex.entries[1][1].first == "poor");
    CHECK(elicit_lexicon(m, 0).entries[0].empty());
}

TEST_CASE("lexicon scoring and thresholds") {
    const WordWeights w{{"good", 1.0}, {"bad", -1.0}};
    CHECK(lexicon_score(w, std::vector<std::string>{"good", "good", "bad"}) == 0.0);
    CHECK(lexicon_score(w, std::vector<std::string>{"meh"}) == 0.0);
    CHECK(lexicon_score(WordWeights{{"great", 1.0}}, std::vector<std::string>{"great"}) == 1.0);
    CHECK(classify_with_threshold(0.5, 0.0) == 1);
    CHECK(classify_with_threshold(0.0, 0.0) == 0);
    CHECK(classify_with_threshold(-2, -3) == 1);
}

TEST_CASE("validate catches broken invariants") {
    LinearModel m = dense_model(3, 2);
    m.domains = {"a"};
    CHECK_NOTHROW(m.validate());
    m.bias.push_back(0.0);
    CHECK_THROWS_AS(m.validate(), DataError);
}
}

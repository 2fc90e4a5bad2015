#include "mda/modelfmt.hpp"
#include "mda/train.hpp"
#include "support.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>

using namespace mda;
using namespace mda::testing;
using json = nlohmann::json;

namespace {

LinearModel trained_model(const TrainConfig& base, std::uint64_t seed = 1) {
    TrainConfig c = base;
    c.rank = 3;
    c.max_iters = 30;
    c.lambda = 1e-3;
    c.seed = seed;
    const TrainingSet set = random_training_set(seed, 3, 12, 40, 3);
    return train_full_batch(set, numbered_vocab(12), c);
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mda_unit_" + name);
}

}  // namespace

TEST_SUITE("modelfmt") {
TEST_CASE("save, load, save is byte-identical for every combination") {
    for (const TrainConfig& c : all_configs()) {
        INFO(combo_name(c));
        const LinearModel m = trained_model(c);
        const std::string first = model_to_json(m);
        const LinearModel back = model_from_json(first);
        CHECK(model_to_json(back) == first);
        CHECK(back.technique() == c.technique);
        CHECK(back.adaptation == Adaptation{c.dsb, c.dsn});
        CHECK(back.effective_weights() == m.effective_weights());

        const auto path = temp_path(combo_name(c) + ".mda.json");
        save_model(m, path);
        CHECK(read_text_file(path) == first);
        CHECK(model_to_json(load_model(path)) == first);
        std::filesystem::remove(path);
    }
}

TEST_CASE("loaded models predict exactly like the originals") {
    TrainConfig c;
    c.technique = Technique::gr;
    c.dsb = true;
    c.dsn = true;
    const LinearModel m = trained_model(c, 4);
    const LinearModel back = model_from_json(model_to_json(m));
    PredictionContext ctx;
    ctx.label_dist = std::vector<double>{0.5, 0.3, 0.2};
    ctx.dsn_means = std::vector<double>(12, 0.3);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto fv = random_features(rng, 12, 0.3);
        CHECK(forward_logits(m, fv, ctx) == forward_logits(back, fv, ctx));
    }
}

TEST_CASE("DSN models carry per-domain feature means of length h") {
    TrainConfig c;
    c.dsn = true;
    const json j = json::parse(model_to_json(trained_model(c)));
    REQUIRE(j["domain_stats"].size() == 3);
    for (const auto& s : j["domain_stats"]) CHECK(s["feature_means"].size() == 12);
}

TEST_CASE("corrupted files are rejected") {
    const LinearModel m = trained_model(TrainConfig{});
    json j = json::parse(model_to_json(m));
    json bad = j;
    bad["weights"].push_back({0, 3, 1.0});
    try {
        model_from_json(bad.dump());
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("weight index out of range") != std::string::npos);
    }
    bad = j;
    bad["format_version"] = 99;
    CHECK_THROWS_AS(model_from_json(bad.dump()), DataError);
    bad = j;
    bad.erase("bias");
    CHECK_THROWS_AS(model_from_json(bad.dump()), DataError);
    bad = j;
    bad["flags"]["gr"] = true;
    CHECK_THROWS_AS(model_from_json(bad.dump()), DataError);
    bad = j;
    bad["flags"]["dr"] = true;
    CHECK_THROWS_AS(model_from_json(bad.dump()), DataError);
    CHECK_THROWS_AS(model_from_json("{"), DataError);
    CHECK_THROWS_AS(load_model(temp_path("does_not_exist.mda.json")), DataError);
}

TEST_CASE("a foreign stopword hash produces a tokenizer warning") {
    json j = json::parse(model_to_json(trained_model(TrainConfig{})));
    std::vector<std::string> warnings;
    model_from_json(j.dump(), &warnings);
    CHECK(warnings.empty());
    j["stopword_sha256"] = std::string(64, '0');
    model_from_json(j.dump(), &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("tokenizer mismatch") != std::string::npos);
}

TEST_CASE("model files hold no document text") {
    Corpus c;
    c.labels = {"neg", "pos"};
    c.domains = {"d"};
    c.documents = {{"1", "zebra crossing uniquephrase", 0, "d"}, {"2", "lovely weather", 1, "d"},
                   {"3", "zebra lovely", 1, "d"}};
    const Vocabulary v = build_vocabulary(c.documents, 2);
    TrainConfig cfg;
    cfg.dsb = true;
    cfg.dsn = true;
    cfg.max_iters = 5;
    const std::string text = model_to_json(train_full_batch(c, v, cfg));
    CHECK(text.find("uniquephrase") == std::string::npos);
    CHECK(text.find("zebra crossing") == std::string::npos);
}

TEST_CASE("lexicon export and csv round trip") {
    const LinearModel m = trained_model(TrainConfig{});
    std::ostringstream csv;
    write_lexicon_csv(elicit_lexicon(m, 1), csv);
    std::istringstream lines(csv.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 1 + 3);
    std::istringstream in(csv.str());
    const Lexicon back = read_lexicon_csv(in);
    CHECK(back.classes == m.labels);
    CHECK(back.entries[0].size() == 1);

    std::ostringstream words;
    write_lexicon_wordlist(elicit_lexicon(m, 2), words);
    CHECK(words.str().rfind("c0,c1,c2\n", 0) == 0);
    CHECK(words.str().find('.') == std::string::npos);
}

TEST_CASE("word lists") {
    std::istringstream in("# comment\ngood\nbad,-1.5\n\nmeh\t0.25\n");
    const WordWeights w = read_word_list(in);
    CHECK(w.size() == 3);
    CHECK(w.at("good") == 1.0);
    CHECK(w.at("bad") == -1.5);
    CHECK(w.at("meh") == 0.25);
    std::istringstream bad("word,notanumber\n");
    CHECK_THROWS_AS(read_word_list(bad), DataError);
}

TEST_CASE("label distribution files") {
    const std::vector<std::string> labels{"a", "b", "c"};
    const LabelDistribution d{{0.2, 0.3, 0.5}, 10, 1.0};
    const auto back = label_distribution_from_json(label_distribution_to_json(d, labels), labels);
    CHECK(back.probs == d.probs);
    CHECK(back.n_samples_used == 10);
    const auto reordered =
        label_distribution_from_json(R"({"labels":["c","a","b"],"probs":[0.5,0.2,0.3]})", labels);
    CHECK(reordered.probs == std::vector<double>{0.2, 0.3, 0.5});
    CHECK_THROWS_AS(label_distribution_from_json(R"({"labels":["a","b","c"],"probs":[0.5,0.2,0.2]})", labels),
                    DataError);
    CHECK_THROWS_AS(label_distribution_from_json(R"({"labels":["a","b","x"],"probs":[0.5,0.2,0.3]})", labels),
                    DataError);
}

TEST_CASE("context files") {
    TrainConfig c;
    c.dsb = true;
    c.dsn = true;
    const LinearModel m = trained_model(c);
    ContextFile ctx;
    ctx.label_dist = LabelDistribution{{0.2, 0.3, 0.5}, 10, 1.0};
    ctx.dsn_means = std::vector<double>(12, 0.125);
    const std::string text = context_to_json(ctx, m);
    const ContextFile back = context_from_json(text, m);
    CHECK(back.label_dist->probs == ctx.label_dist->probs);
    CHECK(*back.dsn_means == *ctx.dsn_means);
    CHECK(context_to_json(back, m) == text);
    const ContextFile empty = context_from_json(context_to_json(ContextFile{}, m), m);
    CHECK(!empty.label_dist);
    CHECK(!empty.dsn_means);
    json j = json::parse(text);
    j["dsn_means"].push_back(0.5);
    CHECK_THROWS_AS(context_from_json(j.dump(), m), DataError);
}
}

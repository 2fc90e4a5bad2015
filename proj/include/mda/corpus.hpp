#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mda {

inline constexpr std::size_t kDefaultVocabularySize = 5000;

struct Document {
    std::string id;
    std::string raw_text;
    std::optional<std::size_t> label;  // index into Corpus::labels
    std::string domain;
};

struct Corpus {
    std::vector<Document> documents;
    std::vector<std::string> labels;
    std::vector<std::string> domains;

    std::size_t num_labels() const { return labels.size(); }
    std::size_t domain_index(const std::string& name) const;
    std::size_t label_index(const std::string& name) const;

    /// Throws DataError on any broken invariant.
    void validate() const;

    /// Same label/domain tables, selected documents only.
    Corpus subset(std::span<const std::size_t> indices) const;
    /// Documents of one domain, same tables.
    Corpus of_domain(const std::string& domain) const;
};

/// Ordered token set; position is the feature index.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(std::size_t i) const { return tokens_[i]; }
    std::optional<std::size_t> find(const std::string& token) const;

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Sparse vector: (position, value) pairs sorted by position, no duplicates.
struct FeatureVector {
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t dimension = 0;

    double value_at(std::size_t pos) const;
};

struct LabelDistribution {
    std::vector<double> probs;
    std::size_t n_samples_used = 0;
    double smoothing_alpha = 0.0;
};

struct DomainStats {
    std::string domain;
    std::size_t n_instances = 0;
    LabelDistribution label_dist;
    std::vector<double> feature_means;  // presence rate per vocabulary position
};

/// Top-`v_max` tokens by occurrence count; ties broken lexicographically.
Vocabulary build_vocabulary(std::span<const Document> docs, std::size_t v_max);
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> token_lists, std::size_t v_max);

/// Tokens as produced by sanitize_text + tokenize (never a tweet).
std::vector<std::string> document_tokens(const Document& doc);

/// Binarized bag of words over `vocab`.
FeatureVector featurize(const Document& doc, const Vocabulary& vocab);
FeatureVector featurize_tokens(std::span<const std::string> tokens, const Vocabulary& vocab);

/// Per-domain instance counts, smoothed label distributions and feature means.
/// Every document must be labeled.
std::map<std::string, DomainStats> compute_domain_stats(const Corpus& corpus, const Vocabulary& vocab,
                                                        double alpha = 1.0);

/// Feature presence rate over a set of binarized feature vectors.
std::vector<double> presence_means(std::span<const FeatureVector> features, std::size_t dimension);

struct SplitSpec {
    enum class Mode { count, fraction };
    Mode mode = Mode::fraction;
    std::size_t test_count = 0;
    double test_fraction = 0.0;
    std::uint64_t seed = 0;

    static SplitSpec fixed_count(std::size_t n, std::uint64_t seed) {
        return {Mode::count, n, 0.0, seed};
    }
    static SplitSpec fraction(double f, std::uint64_t seed) { return {Mode::fraction, 0, f, seed}; }
};

struct Split {
    Corpus train;
    Corpus test;
};

/// Per-domain seeded random test carve-out. Document order is preserved
/// within each side.
Split split_dataset(const Corpus& corpus, const SplitSpec& spec);

struct LoadOptions {
    /// Fixed label set; labels outside it are an error. When absent, labels
    /// are indexed in first-appearance order.
    std::optional<std::vector<std::string>> label_schema;
};

/// JSONL with one {"text", "label"?, "domain", "id"?} record per line.
Corpus read_jsonl(std::istream& in, const LoadOptions& opts = {});
Corpus load_jsonl(const std::filesystem::path& path, const LoadOptions& opts = {});

void write_jsonl(const Corpus& corpus, std::ostream& out);
void save_jsonl(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace mda

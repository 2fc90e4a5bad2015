#pragma once

#include "mda/common.hpp"
#include "mda/corpus.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace mda {

inline constexpr int kFormatVersion = 1;

/// W, h×k.
struct DenseWeights {
    Matrix w;
    bool operator==(const DenseWeights&) const = default;
};

/// W = W1·W2 with an adversarial domain head reading the rank-r intermediate.
struct FactorizedWeights {
    Matrix w1;                       // h×r
    Matrix w2;                       // r×k
    Matrix head;                     // r×|D|
    std::vector<double> head_bias;   // |D|
    bool operator==(const FactorizedWeights&) const = default;
};

using Weights = std::variant<DenseWeights, FactorizedWeights>;

enum class Technique { base, dr, gr };

const char* to_string(Technique t);
Technique parse_technique(const std::string& name);

struct Adaptation {
    bool dsb = false;
    bool dsn = false;
    bool operator==(const Adaptation&) const = default;
};

struct Provenance {
    std::string config_digest;
    std::string stopword_hash;
    int format_version = kFormatVersion;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    bool operator==(const Provenance&) const = default;
};

struct LinearModel {
    std::size_t k = 0;
    std::size_t h = 0;
    Weights weights;
    std::vector<double> bias;
    std::optional<Matrix> dr_bias_table;  // |D|×k, rows follow `domains`
    Adaptation adaptation;
    /// Producer-side statistics per training domain (same order as
    /// `domains`); present iff dsb or dsn is enabled.
    std::vector<DomainStats> domain_stats;
    Vocabulary vocab;
    std::vector<std::string> labels;
    std::vector<std::string> domains;
    Provenance provenance;

    bool is_factorized() const { return std::holds_alternative<FactorizedWeights>(weights); }
    Technique technique() const;
    std::size_t rank() const;
    std::optional<std::size_t> find_domain(const std::string& name) const;

    /// W, or the product W1·W2 for factorized models.
    Matrix effective_weights() const;

    /// Throws DataError describing the first broken invariant.
    void validate() const;
};

/// Consumer-supplied information about the domain being predicted.
struct PredictionContext {
    std::optional<std::vector<double>> label_dist;
    std::optional<std::vector<double>> dsn_means;
};

/// Class logits: bias + features·W plus whichever of DSB, DSN and DR the model carries.
/// `train_domain` indexes model.domains; when set, producer-side statistics
/// for that domain fill in anything the context leaves out and the DR table
/// row is added. Unseen domains get a zero DR contribution.
std::vector<double> forward_logits(const LinearModel& model, const FeatureVector& fv,
                                   const PredictionContext& ctx,
                                   std::optional<std::size_t> train_domain = std::nullopt);

std::vector<double> predict_proba(std::span<const double> logits);

/// Argmax, lowest index on ties.
std::size_t predict_label(std::span<const double> proba);

/// Precomputes the collapsed weights and every per-context constant, so
/// scoring many documents under one context costs one sparse row sum each.
class BatchPredictor {
public:
    BatchPredictor(const LinearModel& model, const PredictionContext& ctx,
                   std::optional<std::size_t> train_domain = std::nullopt);

    std::vector<double> logits(const FeatureVector& fv) const;
    std::size_t predict(const FeatureVector& fv) const;

private:
    Matrix w_;
    std::vector<double> constant_;
};

/// Dense model with W = W1·W2; the domain head is dropped. Dense input is
/// returned unchanged.
LinearModel collapse_weights(const LinearModel& model);

// ---------------------------------------------------------------------------
// Lexicons

using WordWeights = std::unordered_map<std::string, double>;

struct Lexicon {
    std::vector<std::string> classes;
    /// Per class, (token, weight) ranked by descending weight.
    std::vector<std::vector<std::pair<std::string, double>>> entries;

    WordWeights class_weights(std::size_t c) const;
};

/// Top `top_n` vocabulary tokens per class by W[., class]; ties lexicographic.
Lexicon elicit_lexicon(const LinearModel& model, std::size_t top_n);

/// Sum of weights over the distinct document tokens present in the list.
double lexicon_score(const WordWeights& weights, std::span<const std::string> tokens);

/// One score per lexicon class.
std::vector<double> lexicon_scores(const Lexicon& lexicon, std::span<const std::string> tokens);

/// Positive (1) iff score > threshold.
int classify_with_threshold(double score, double threshold);

}  // namespace mda

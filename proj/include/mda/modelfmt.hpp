#pragma once

#include "mda/adapt.hpp"
#include "mda/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mda {

inline constexpr const char* kModelExtension = ".mda.json";

/// Canonical model JSON: sorted keys, shortest round-trip floats, only the
/// nonzero weight entries as [row, col, value] triples. Identical models
/// serialize to identical bytes.
std::string model_to_json(const LinearModel& model);

/// Parses and validates. Throws DataError on unknown format versions,
/// dimension mismatches or flags that disagree with the payload. A stopword
/// hash that differs from the local resource is reported through `warnings`.
LinearModel model_from_json(const std::string& text, std::vector<std::string>* warnings = nullptr);

void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Lexicon CSV

/// "class,rank,token,weight" rows, weights with 6 significant digits.
void write_lexicon_csv(const Lexicon& lexicon, std::ostream& out);
/// One column per class, one row per rank, no weights.
void write_lexicon_wordlist(const Lexicon& lexicon, std::ostream& out);
void export_lexicon(const LinearModel& model, std::size_t top_n, const std::filesystem::path& path,
                    bool with_weights = true);

Lexicon read_lexicon_csv(std::istream& in);

/// External word list: one entry per line, "word" (weight 1) or
/// "word,weight" / "word<TAB>weight". Blank lines and '#' comments skipped.
WordWeights read_word_list(std::istream& in);
WordWeights load_word_list(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Consumer-side files

/// {"labels": [...], "probs": [...], "n_samples_used": n, "alpha": a}
std::string label_distribution_to_json(const LabelDistribution& dist, const std::vector<std::string>& labels);
/// Validates the labels against `expected_labels` and reorders probs to match.
LabelDistribution label_distribution_from_json(const std::string& text,
                                               const std::vector<std::string>& expected_labels);

/// Adaptation context consumed by prediction: optional label distribution
/// and optional DSN means.
struct ContextFile {
    std::optional<LabelDistribution> label_dist;
    std::optional<std::vector<double>> dsn_means;

    PredictionContext context() const;
};

std::string context_to_json(const ContextFile& ctx, const LinearModel& model);
ContextFile context_from_json(const std::string& text, const LinearModel& model);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mda

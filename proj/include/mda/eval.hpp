#pragma once

#include "mda/corpus.hpp"
#include "mda/model.hpp"
#include "mda/train.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mda {

/// Fraction of positions where prediction equals gold.
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> golds);

// ---------------------------------------------------------------------------
// McNemar

/// Paired outcome counts; the first digit is model A (0 wrong, 1 right), the
/// second model B. n01 counts items only B got right.
struct PairedOutcome {
    std::size_t n00 = 0;
    std::size_t n01 = 0;
    std::size_t n10 = 0;
    std::size_t n11 = 0;

    std::size_t total() const { return n00 + n01 + n10 + n11; }
    double agreement() const;

    static PairedOutcome from_predictions(std::span<const std::size_t> pred_a, std::span<const std::size_t> pred_b,
                                          std::span<const std::size_t> golds);
};

struct McNemarOptions {
    /// Largest discordant count handled by the exact binomial test.
    std::size_t exact_max = 25;
    /// Yates correction in the chi-square branch.
    bool continuity_correction = true;
};

/// Two-sided p-value. Exact binomial on the discordant pairs up to
/// `exact_max`, chi-square with one degree of freedom above it.
double mcnemar_test(const PairedOutcome& t, const McNemarOptions& options = {});

/// min(1, 2 * P(X <= min(n01, n10))) for X ~ Binomial(n01 + n10, 1/2).
double mcnemar_exact(std::size_t n01, std::size_t n10);
double mcnemar_chi_square(std::size_t n01, std::size_t n10, bool continuity_correction);

// ---------------------------------------------------------------------------
// Power

struct CellProbabilities {
    double p00 = 0.0;
    double p01 = 0.0;
    double p10 = 0.0;
    double p11 = 0.0;
};

/// Joint correctness probabilities implied by two accuracies and their
/// agreement rate. Throws UsageError naming the cell that comes out negative.
CellProbabilities solve_cells(double acc_a, double acc_b, double agreement);

struct PowerConfig {
    double acc_a = 0.0;
    double acc_b = 0.0;
    double agreement = 0.0;
    std::size_t n_test = 0;
    double alpha = 0.05;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    McNemarOptions mcnemar;
};

/// Fraction of simulated test sets of size n_test on which McNemar rejects at `alpha`.
double power_analysis(const PowerConfig& config);

// ---------------------------------------------------------------------------
// Reports

struct DomainResult {
    std::string domain;
    double accuracy = 0.0;
    std::size_t n_eval = 0;
    std::optional<double> improvement;  // over the baseline row
};

struct EvalReport {
    std::string config;
    double accuracy = 0.0;  // mean over domains
    std::vector<DomainResult> per_domain;
    std::optional<std::string> baseline;
    std::optional<double> mean_improvement;
    std::optional<double> sigma_delta;  // population std of the improvements
};

struct ProtocolResult {
    std::string protocol;
    std::vector<EvalReport> reports;
    std::vector<std::string> warnings;

    const EvalReport& report(const std::string& config) const;
};

/// Fills improvements, mean improvement and sigma_delta of every report
/// against the named baseline row.
void attach_baseline(std::vector<EvalReport>& reports, const std::string& baseline);

/// "LogReg", "DR" or "GR", then "+DSN", then "+DSB(oracle)" / "+DSB(<n>)".
std::string config_label(const TrainConfig& config, std::optional<std::size_t> dsb_samples = std::nullopt);

struct ProtocolOptions {
    double test_fraction = 0.2;
    std::size_t vocab_size = kDefaultVocabularySize;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t k_folds = 3;
    /// Labeled-sample budgets for estimated DSB rows.
    std::vector<std::size_t> estimate_sizes = {250};
    std::size_t estimate_trials = 5;
    double label_alpha = 1.0;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Models trained in one protocol run, exposed for follow-up analysis.
struct HeldOutRun {
    std::string held_out;
    Vocabulary vocab;
    std::vector<LinearModel> models;  // one per config
};

struct HoldoutResult {
    ProtocolResult result;
    std::vector<HeldOutRun> runs;
};

/// Each domain in turn is held out. Models are grid-searched and trained on
/// the train splits of the others and scored on the held-out test split.
/// DSB configs are scored with the held-out test-split label distribution
/// (oracle) and with distributions estimated from random samples of the
/// held-out train split. DSN means come from the held-out train-split text.
HoldoutResult holdout_domain_protocol(const Corpus& corpus, std::span<const TrainConfig> configs,
                                      const ProtocolOptions& options);

/// Each domain in turn is the only training domain; accuracy is pooled over
/// the test splits of every other domain, each scored with its own target
/// statistics.
ProtocolResult single_domain_protocol(const Corpus& corpus, std::span<const TrainConfig> configs,
                                      const ProtocolOptions& options);

struct InVsOutRow {
    std::string domain;
    double in_domain = 0.0;
    double out_of_domain = 0.0;
};

struct InVsOutReport {
    std::string config;
    std::vector<InVsOutRow> rows;
    double in_domain = 0.0;
    double out_of_domain = 0.0;
    double sigma_delta = 0.0;  // population std of the per-domain drops
};

/// In-domain: one model trained on every domain's train split, scored per
/// domain test split as a seen domain. Out-of-domain: the holdout protocol.
/// DSB configs use the oracle distribution on both sides.
InVsOutReport in_vs_out_report(const Corpus& corpus, const TrainConfig& config, const ProtocolOptions& options);

struct CurvePoint {
    std::size_t size = 0;
    double mean = 0.0;
    double std = 0.0;  // sample std across trials
    std::vector<double> per_trial;
};

struct LabelpropCurve {
    std::vector<CurvePoint> points;
    double oracle_accuracy = 0.0;
};

/// Accuracy on the whole target set when its label distribution is
/// estimated from `size` random labeled target items, `trials` times per
/// size. The oracle estimates from every target label with the same alpha.
/// `ctx` may carry DSN means.
LabelpropCurve labelprop_curve(const LinearModel& model, std::span<const FeatureVector> features,
                               std::span<const std::size_t> labels, std::span<const std::size_t> sizes,
                               std::size_t trials, std::uint64_t seed, double alpha = 1.0,
                               const PredictionContext& ctx = {});

// ---------------------------------------------------------------------------
// Output

std::string protocol_to_json(const ProtocolResult& result);
std::string protocol_to_table(const ProtocolResult& result);
std::string protocol_to_csv(const ProtocolResult& result);

std::string in_vs_out_to_json(const InVsOutReport& report);
std::string in_vs_out_to_table(const InVsOutReport& report);
std::string in_vs_out_to_csv(const InVsOutReport& report);

std::string curve_to_json(const LabelpropCurve& curve);
std::string curve_to_table(const LabelpropCurve& curve);
std::string curve_to_csv(const LabelpropCurve& curve);

/// Left-aligned first column, right-aligned rest, two spaces between.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace mda

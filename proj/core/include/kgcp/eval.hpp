#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgcp/kg.hpp"
#include "kgcp/model.hpp"
#include "kgcp/predictor.hpp"
#include "kgcp/rng.hpp"
#include "kgcp/stats.hpp"

namespace kgcp {

// Ranking ------------------------------------------------------------------

/// 1 + #{competitors scoring higher} + #{competitors tied} / 2, where the
/// competitors are all entities except `answer` and those in `removed`
/// (sorted).
double filtered_rank(std::span<const double> scores, EntityId answer, std::span<const EntityId> removed);

struct RankingMetrics {
  double mean_rank = 0.0;
  double mean_reciprocal_rank = 0.0;
  double hits_at_1 = 0.0;
  double hits_at_3 = 0.0;
  double hits_at_10 = 0.0;
  double hits_at_100 = 0.0;
  std::size_t count = 0;
};

/// Ranks of every test example's true answer. A null filter index ranks
/// against all entities; otherwise known answers other than the example's
/// own are removed.
std::vector<double> true_answer_ranks(const ScoredExamples& test, const FilterIndex* filter);

RankingMetrics ranking_metrics(const ScoredExamples& test, const FilterIndex* filter);
RankingMetrics ranking_metrics(const ModelParams& model, std::span<const QueryExample> test,
                               const FilterIndex* filter);

// Predictor evaluation -------------------------------------------------------

/// Empirical coverage and mean size of one fitted predictor on a test set.
struct TrialOutcome {
  double coverage = 0.0;
  double mean_size = 0.0;
};

TrialOutcome run_trial(const FittedPredictor& predictor, const ScoredExamples& test, const FilterIndex* filter);

/// Per trial, a calibration subset is drawn uniformly without replacement
/// from the pool. `n_cal == 0` means `fraction` of the pool.
struct CalibrationPlan {
  std::size_t n_cal = 0;
  double fraction = 0.8;

  std::size_t resolve(std::size_t pool_size) const;
};

struct PredictorRecord {
  std::string predictor;
  std::string family;
  double epsilon = 0.0;
  std::size_t n_cal = 0;
  Summary coverage;
  Summary size;
  /// False for single deterministic rows (sd reported as absent).
  bool has_sd = true;
  double mean_rank = 0.0;
  std::size_t trials = 0;
};

struct EvalReport {
  std::vector<PredictorRecord> records;
  double mean_rank = 0.0;
  std::size_t trials = 0;
  double epsilon = 0.0;
  bool filtered = false;
};

/// Draws `n` distinct indices from [0, pool) with a partial Fisher-Yates shuffle.
std::vector<std::size_t> sample_without_replacement(std::size_t pool, std::size_t n, Rng& rng);

PredictorRecord evaluate_predictor(const PredictorSpec& spec, const ScoredExamples& calibration_pool,
                                   const CalibrationPlan& plan, const ScoredExamples& test,
                                   const FilterIndex* filter, double epsilon, std::size_t trials,
                                   std::uint64_t seed);

// Adaptiveness -----------------------------------------------------------------

struct AdaptivenessBin {
  std::size_t rank_lo = 0;
  std::size_t rank_hi = 0;
  std::size_t count = 0;
  double mean_size = 0.0;
};

struct AdaptivenessProfile {
  std::size_t bin_width = 100;
  std::size_t max_rank = 3000;
  std::vector<AdaptivenessBin> bins;
  std::size_t overflow_count = 0;
  double overflow_mean_size = 0.0;
};

/// Bins test examples by the rank of their true answer (bin b covers ranks
/// (b-1)*w+1 .. b*w, the last bin ends at max_rank) and reports the mean
/// set size per bin. Fractional tie ranks fall in the bin containing them.
AdaptivenessProfile adaptiveness(const FittedPredictor& predictor, const ScoredExamples& test,
                                 const FilterIndex* filter, std::size_t bin_width = 100,
                                 std::size_t max_rank = 3000);

/// Spearman correlation between bin index and mean size over nonempty bins.
double adaptiveness_correlation(const AdaptivenessProfile& profile);

// Sweeps -----------------------------------------------------------------------

/// One record per calibration size (n_cal set, `trials` subsamples each) plus
/// a final deterministic row calibrated on the whole pool.
std::vector<PredictorRecord> calibration_size_sweep(const PredictorSpec& spec, const ScoredExamples& pool,
                                                    std::span<const std::size_t> sizes,
                                                    const ScoredExamples& test, const FilterIndex* filter,
                                                    double epsilon, std::size_t trials, std::uint64_t seed);

/// Coverage and size per (predictor, epsilon), predictors refitted for each epsilon.
std::vector<PredictorRecord> epsilon_sweep(std::span<const PredictorSpec> specs,
                                           const ScoredExamples& calibration_pool, const CalibrationPlan& plan,
                                           const ScoredExamples& test, const FilterIndex* filter,
                                           std::span<const double> epsilons, std::size_t trials,
                                           std::uint64_t seed);

// Synthetic graphs -------------------------------------------------------------

struct SyntheticConfig {
  std::size_t num_entities = 200;
  std::size_t num_relations = 10;
  std::size_t dim = 16;  // planted DistMult dimension
  std::size_t train = 5000;
  std::size_t valid = 1000;
  std::size_t test = 2000;
  /// Standard deviation of the planted logits.
  double sharpness = 3.0;
  std::uint64_t seed = 0;
};

/// Plants a DistMult model, samples (h, r) uniformly and t from the softmax of
/// the planted scores, collapses duplicate triples, and splits the distinct
/// triples by a random permutation so valid and test are exchangeable.
KnowledgeGraph generate_synthetic_kg(const SyntheticConfig& cfg);

// Reports ----------------------------------------------------------------------

/// predictor,kind,epsilon,coverage_mean,coverage_sd,size_mean,size_sd,mr,trials,n_cal
/// (sd columns empty for single deterministic rows).
void write_report_csv(std::ostream& out, std::span<const PredictorRecord> records);
std::string report_json(const EvalReport& report);

/// rank_lo,rank_hi,count,mean_size
void write_adaptiveness_csv(std::ostream& out, const AdaptivenessProfile& profile);

/// MR, MRR and Hits@K as one-row CSV with a header.
void write_ranking_csv(std::ostream& out, const RankingMetrics& m);

}  // namespace kgcp

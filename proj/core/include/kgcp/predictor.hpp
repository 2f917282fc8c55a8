#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgcp/baselines.hpp"
#include "kgcp/conformal.hpp"
#include "kgcp/model.hpp"

namespace kgcp {

/// Query examples with their full score vectors, computed once and reused
/// across predictors and trials.
class ScoredExamples {
 public:
  ScoredExamples() = default;
  ScoredExamples(std::vector<QueryExample> examples, std::size_t num_entities, std::vector<double> scores);

  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  std::size_t num_entities() const noexcept { return num_entities_; }
  const QueryExample& example(std::size_t i) const { return examples_[i]; }
  std::span<const QueryExample> examples() const noexcept { return examples_; }
  std::span<const double> scores(std::size_t i) const {
    return {scores_.data() + i * num_entities_, num_entities_};
  }

  /// Copy of the rows at `indices`, in that order.
  ScoredExamples subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<QueryExample> examples_;
  std::size_t num_entities_ = 0;
  std::vector<double> scores_;
};

ScoredExamples score_examples(const ModelParams& model, std::span<const QueryExample> examples);

enum class Family : std::uint8_t { Conformal, Naive, Platt, TopK, Fixed };

std::string to_string(Family family);
Family parse_family(std::string_view name);

struct PredictorSpec {
  Family family = Family::Conformal;
  Measure measure = Measure::NegScore;  // Conformal only
  std::size_t k = 10;                   // Fixed only

  /// Report name: the measure for conformal predictors ("negscore", ...),
  /// "naive", "platt", "topk", or "top<K>" for fixed sizes.
  std::string name() const;
  /// True when fitting consumes calibration data.
  bool needs_calibration() const;

  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

/// Parses a report name back into a spec ("softmax", "platt", "top10", ...).
PredictorSpec parse_predictor(std::string_view name);

/// A predictor with all data-dependent state fitted: a calibration profile,
/// a temperature, or K.
class FittedPredictor {
 public:
  FittedPredictor(PredictorSpec spec, double epsilon) : spec_(spec), epsilon_(epsilon) {}

  const PredictorSpec& spec() const noexcept { return spec_; }
  double epsilon() const noexcept { return epsilon_; }
  const std::optional<CalibrationProfile>& profile() const noexcept { return profile_; }
  const std::optional<Temperature>& temperature() const noexcept { return temperature_; }
  const std::optional<TopKChoice>& topk() const noexcept { return topk_; }

  void set_profile(CalibrationProfile p) { profile_ = std::move(p); }
  void set_temperature(Temperature t) { temperature_ = t; }
  void set_topk(TopKChoice k) { topk_ = k; }

  /// Same fitted state, different error rate (K is not refitted).
  FittedPredictor with_epsilon(double epsilon) const;

  AnswerSet predict(std::span<const double> scores, const Query& query,
                    const CandidateFilter& filter = {}) const;
  AnswerSet predict(const ModelParams& model, const Query& query, const CandidateFilter& filter = {}) const;

 private:
  PredictorSpec spec_;
  double epsilon_;
  std::optional<CalibrationProfile> profile_;
  std::optional<Temperature> temperature_;
  std::optional<TopKChoice> topk_;
};

/// Fits `spec` on the calibration examples. Conformal predictors calibrate a
/// profile (CalibratedSoftmax fits its temperature on the same data first);
/// Platt fits a temperature; topk selects K.
FittedPredictor fit_predictor(const PredictorSpec& spec, const ScoredExamples& calibration, double epsilon);

CalibrationProfile calibrate(const ScoredExamples& calibration, NonconformityKind kind);
Temperature fit_temperature(const ScoredExamples& calibration);
TopKChoice select_topk(const ScoredExamples& calibration, double epsilon);

}  // namespace kgcp

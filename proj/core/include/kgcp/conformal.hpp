#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgcp/kg.hpp"
#include "kgcp/model.hpp"

namespace kgcp {

enum class Measure : std::uint8_t { NegScore, Minmax, Softmax, CalibratedSoftmax, Rank };

/// A nonconformity measure. `temperature` is used by CalibratedSoftmax only.
struct NonconformityKind {
  Measure measure = Measure::NegScore;
  double temperature = 1.0;

  friend bool operator==(const NonconformityKind&, const NonconformityKind&) = default;
};

/// "negscore", "minmax", "softmax", "calibrated_softmax", "rank".
std::string to_string(Measure measure);
Measure parse_measure(std::string_view name);

/// Minmax on a constant score vector.
class DegenerateScores : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nonconformity of every entity given the full (unfiltered) score vector of
/// one query. Lower means more conforming.
///   NegScore: -s_e
///   Minmax:   -(s_e - min) / (max - min)
///   Softmax:  1 - softmax(s)_e, via max-shifted logsumexp
///   CalibratedSoftmax: Softmax on s / T
///   Rank:     1-based descending rank, ties share the mean rank
std::vector<double> nonconformity_all(std::span<const double> scores, NonconformityKind kind);

/// Single-entity variant of nonconformity_all.
double nonconformity(std::span<const double> scores, EntityId entity, NonconformityKind kind);
double nonconformity(const ModelParams& model, const Query& query, EntityId entity,
                     NonconformityKind kind);

/// Sorted calibration nonconformity scores for one measure.
struct CalibrationProfile {
  NonconformityKind kind;
  std::vector<double> scores;  // ascending

  std::size_t n_cal() const noexcept { return scores.size(); }
};

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, std::size_t example)
      : std::runtime_error(what), example_(example) {}
  std::size_t example() const noexcept { return example_; }

 private:
  std::size_t example_;
};

CalibrationProfile calibrate(const ModelParams& model, std::span<const QueryExample> examples,
                             NonconformityKind kind);

/// Builds a profile from raw alpha values (sorted internally).
CalibrationProfile make_profile(NonconformityKind kind, std::vector<double> alphas);

/// Inclusion threshold. An infinite threshold admits every candidate.
class Threshold {
 public:
  static Threshold infinite() { return Threshold(true, std::numeric_limits<double>::infinity()); }
  static Threshold at(double value) { return Threshold(false, value); }

  bool is_infinite() const noexcept { return infinite_; }
  double value() const noexcept { return value_; }
  bool admits(double alpha) const noexcept { return infinite_ || alpha <= value_; }

 private:
  Threshold(bool infinite, double value) : infinite_(infinite), value_(value) {}
  bool infinite_;
  double value_;
};

/// Order statistic used by the threshold: j = ceil((n + 1)(1 - eps)), computed
/// as n + 1 - floor(eps (n + 1)) so that `alpha <= tau` agrees exactly with the
/// counting rule (#{i : alpha_i >= alpha} + 1) > eps (n + 1). A result above n
/// means the threshold is infinite.
std::size_t quantile_index(std::size_t n_cal, double epsilon);

/// Throws std::invalid_argument unless 0 < epsilon < 1.
void check_epsilon(double epsilon);

Threshold threshold(const CalibrationProfile& profile, double epsilon);

struct AnswerSet {
  Query query;
  std::vector<EntityId> entities;  // ascending ids
  double epsilon = 0.0;
  bool filtered = false;

  std::size_t size() const noexcept { return entities.size(); }
  bool contains(EntityId e) const;
};

/// Candidates whose nonconformity under `profile.kind` does not exceed the
/// threshold. Normalization always uses the full score vector; filtering only
/// restricts membership.
AnswerSet predict_set(const ModelParams& model, const Query& query, const CalibrationProfile& profile,
                      double epsilon, const CandidateFilter& filter = {});
AnswerSet predict_set(std::span<const double> scores, const Query& query,
                      const CalibrationProfile& profile, double epsilon,
                      const CandidateFilter& filter = {});

/// Drops the filter's known-true answers for `query` from `entities` and
/// returns the remainder sorted by id.
std::vector<EntityId> apply_filter(std::vector<EntityId> entities, const CandidateFilter& filter,
                                   const Query& query);

/// JSON object {kind, temperature?, n_cal, scores}.
std::string profile_to_json(const CalibrationProfile& profile);
CalibrationProfile profile_from_json(std::string_view json);

}  // namespace kgcp

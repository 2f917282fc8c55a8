#include "kgcp/predictor.hpp"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

#include "kgcp/parallel.hpp"

namespace kgcp {

ScoredExamples::ScoredExamples(std::vector<QueryExample> examples, std::size_t num_entities,
                               std::vector<double> scores)
    : examples_(std::move(examples)), num_entities_(num_entities), scores_(std::move(scores)) {
  if (scores_.size() != examples_.size() * num_entities_) {
    throw std::invalid_argument("ScoredExamples: score matrix has the wrong size");
  }
}

ScoredExamples ScoredExamples::subset(std::span<const std::size_t> indices) const {
  std::vector<QueryExample> ex;
  std::vector<double> sc;
  ex.reserve(indices.size());
  sc.reserve(indices.size() * num_entities_);
  for (std::size_t i : indices) {
    ex.push_back(examples_.at(i));
    const auto row = scores(i);
    sc.insert(sc.end(), row.begin(), row.end());
  }
  return {std::move(ex), num_entities_, std::move(sc)};
}

ScoredExamples score_examples(const ModelParams& model, std::span<const QueryExample> examples) {
  const std::size_t n = model.num_entities();
  std::vector<double> scores(examples.size() * n);
  parallel_for(examples.size(), [&](std::size_t i) {
    score_all(model, examples[i].query, std::span<double>(scores.data() + i * n, n));
  });
  return {std::vector<QueryExample>(examples.begin(), examples.end()), n, std::move(scores)};
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Conformal: return "conformal";
    case Family::Naive: return "naive";
    case Family::Platt: return "platt";
    case Family::TopK: return "topk";
    case Family::Fixed: return "fixed";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "conformal") return Family::Conformal;
  if (name == "naive") return Family::Naive;
  if (name == "platt") return Family::Platt;
  if (name == "topk") return Family::TopK;
  if (name == "fixed") return Family::Fixed;
  throw std::invalid_argument(fmt::format("unknown predictor family '{}'", name));
}

std::string PredictorSpec::name() const {
  switch (family) {
    case Family::Conformal: return to_string(measure);
    case Family::Fixed: return fmt::format("top{}", k);
    default: return to_string(family);
  }
}

bool PredictorSpec::needs_calibration() const {
  return family == Family::Conformal || family == Family::Platt || family == Family::TopK;
}

PredictorSpec parse_predictor(std::string_view name) {
  if (name == "naive") return {Family::Naive};
  if (name == "platt") return {Family::Platt};
  if (name == "topk") return {Family::TopK};
  if (name.starts_with("top")) {
    std::size_t k = 0;
    const auto digits = name.substr(3);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && k > 0) {
      return {Family::Fixed, Measure::NegScore, k};
    }
  }
  return {Family::Conformal, parse_measure(name)};
}

FittedPredictor FittedPredictor::with_epsilon(double epsilon) const {
  FittedPredictor copy = *this;
  copy.epsilon_ = epsilon;
  return copy;
}

AnswerSet FittedPredictor::predict(std::span<const double> scores, const Query& query,
                                   const CandidateFilter& filter) const {
  switch (spec_.family) {
    case Family::Conformal:
      if (!profile_) throw std::logic_error("conformal predictor used before calibration");
      return predict_set(scores, query, *profile_, epsilon_, filter);
    case Family::Naive:
      return predict_set_naive(scores, query, epsilon_, std::nullopt, filter);
    case Family::Platt:
      if (!temperature_) throw std::logic_error("platt predictor used before fitting a temperature");
      return predict_set_naive(scores, query, epsilon_, temperature_->value, filter);
    case Family::TopK: {
      if (!topk_) throw std::logic_error("topk predictor used before selecting K");
      auto set = predict_set_topk(scores, query, topk_->k, filter);
      set.epsilon = epsilon_;
      return set;
    }
    case Family::Fixed:
      return predict_set_topk(scores, query, spec_.k, filter);
  }
  throw std::logic_error("unreachable predictor family");
}

AnswerSet FittedPredictor::predict(const ModelParams& model, const Query& query,
                                   const CandidateFilter& filter) const {
  const auto scores = score_all(model, query);
  return predict(scores, query, filter);
}

CalibrationProfile calibrate(const ScoredExamples& calibration, NonconformityKind kind) {
  if (calibration.empty()) throw CalibrationError("calibration set is empty", 0);
  std::vector<double> alphas(calibration.size());
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    try {
      alphas[i] = nonconformity(calibration.scores(i), calibration.example(i).answer, kind);
    } catch (const std::exception& e) {
      throw CalibrationError(fmt::format("calibration example {}: {}", i, e.what()), i);
    }
  }
  return make_profile(kind, std::move(alphas));
}

Temperature fit_temperature(const ScoredExamples& calibration) {
  std::vector<std::vector<double>> scores;
  std::vector<EntityId> answers;
  scores.reserve(calibration.size());
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    const auto row = calibration.scores(i);
    scores.emplace_back(row.begin(), row.end());
    answers.push_back(calibration.example(i).answer);
  }
  return fit_temperature(scores, answers);
}

TopKChoice select_topk(const ScoredExamples& calibration, double epsilon) {
  std::vector<std::size_t> ranks(calibration.size());
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    ranks[i] = order_position(calibration.scores(i), calibration.example(i).answer);
  }
  return select_topk_from_ranks(std::move(ranks), epsilon);
}

FittedPredictor fit_predictor(const PredictorSpec& spec, const ScoredExamples& calibration, double epsilon) {
  check_epsilon(epsilon);
  FittedPredictor fitted(spec, epsilon);
  if (spec.needs_calibration() && calibration.empty()) {
    throw CalibrationError(fmt::format("{} predictor needs a nonempty calibration set", spec.name()), 0);
  }
  switch (spec.family) {
    case Family::Conformal: {
      NonconformityKind kind{spec.measure};
      if (spec.measure == Measure::CalibratedSoftmax) {
        const Temperature t = fit_temperature(calibration);
        fitted.set_temperature(t);
        kind.temperature = t.value;
      }
      fitted.set_profile(calibrate(calibration, kind));
      break;
    }
    case Family::Platt:
      fitted.set_temperature(fit_temperature(calibration));
      break;
    case Family::TopK:
      fitted.set_topk(select_topk(calibration, epsilon));
      break;
    case Family::Naive:
    case Family::Fixed:
      break;
  }
  return fitted;
}

}  // namespace kgcp

#include "kgcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace kgcp {

std::string to_string(Measure measure) {
  switch (measure) {
    case Measure::NegScore: return "negscore";
    case Measure::Minmax: return "minmax";
    case Measure::Softmax: return "softmax";
    case Measure::CalibratedSoftmax: return "calibrated_softmax";
    case Measure::Rank: return "rank";
  }
  return "unknown";
}

Measure parse_measure(std::string_view name) {
  if (name == "negscore") return Measure::NegScore;
  if (name == "minmax") return Measure::Minmax;
  if (name == "softmax") return Measure::Softmax;
  if (name == "calibrated_softmax" || name == "cali") return Measure::CalibratedSoftmax;
  if (name == "rank") return Measure::Rank;
  throw std::invalid_argument(fmt::format("unknown nonconformity measure '{}'", name));
}

namespace {

void softmax_complement(std::span<const double> scores, double temperature, std::span<double> out) {
  double max = -std::numeric_limits<double>::infinity();
  for (double s : scores) max = std::max(max, s / temperature);
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s / temperature - max);
  const double log_z = max + std::log(sum);
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = 1.0 - std::exp(scores[i] / temperature - log_z);
}

void mean_ranks(std::span<const double> scores, std::span<double> out) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    // positions i..j (0-based) share rank mean(i+1 .. j+1)
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank;
    i = j + 1;
  }
}

}  // namespace

std::vector<double> nonconformity_all(std::span<const double> scores, NonconformityKind kind) {
  std::vector<double> out(scores.size());
  switch (kind.measure) {
    case Measure::NegScore:
      for (std::size_t i = 0; i < scores.size(); ++i) out[i] = -scores[i];
      break;
    case Measure::Minmax: {
      const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
      const double range = *hi - *lo;
      if (!(range > 0.0)) throw DegenerateScores("degenerate score vector: max equals min");
      for (std::size_t i = 0; i < scores.size(); ++i) out[i] = -((scores[i] - *lo) / range);
      break;
    }
    case Measure::Softmax:
      softmax_complement(scores, 1.0, out);
      break;
    case Measure::CalibratedSoftmax:
      if (!(kind.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
      softmax_complement(scores, kind.temperature, out);
      break;
    case Measure::Rank:
      mean_ranks(scores, out);
      break;
  }
  return out;
}

double nonconformity(std::span<const double> scores, EntityId entity, NonconformityKind kind) {
  switch (kind.measure) {
    case Measure::NegScore:
      return -scores[entity];
    case Measure::Rank: {
      const double s = scores[entity];
      std::size_t above = 0, tied = 0;
      for (double x : scores) {
        above += x > s;
        tied += x == s;
      }
      return 1.0 + static_cast<double>(above) + 0.5 * static_cast<double>(tied - 1);
    }
    default:
      return nonconformity_all(scores, kind)[entity];
  }
}

double nonconformity(const ModelParams& model, const Query& query, EntityId entity,
                     NonconformityKind kind) {
  const auto scores = score_all(model, query);
  return nonconformity(scores, entity, kind);
}

CalibrationProfile make_profile(NonconformityKind kind, std::vector<double> alphas) {
  for (double a : alphas) {
    if (!std::isfinite(a)) throw std::invalid_argument("calibration scores must be finite");
  }
  std::sort(alphas.begin(), alphas.end());
  return {kind, std::move(alphas)};
}

CalibrationProfile calibrate(const ModelParams& model, std::span<const QueryExample> examples,
                             NonconformityKind kind) {
  if (examples.empty()) throw CalibrationError("calibration set is empty", 0);
  std::vector<double> alphas;
  alphas.reserve(examples.size());
  std::vector<double> scores(model.num_entities());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    score_all(model, examples[i].query, scores);
    try {
      alphas.push_back(nonconformity(scores, examples[i].answer, kind));
    } catch (const std::exception& e) {
      throw CalibrationError(fmt::format("calibration example {}: {}", i, e.what()), i);
    }
  }
  return make_profile(kind, std::move(alphas));
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument(fmt::format("epsilon must lie in (0, 1), got {}", epsilon));
  }
}

std::size_t quantile_index(std::size_t n_cal, double epsilon) {
  check_epsilon(epsilon);
  const double np1 = static_cast<double>(n_cal + 1);
  const auto excluded = static_cast<std::size_t>(std::floor(epsilon * np1));
  return n_cal + 1 - excluded;
}

Threshold threshold(const CalibrationProfile& profile, double epsilon) {
  const std::size_t j = quantile_index(profile.n_cal(), epsilon);
  if (j > profile.n_cal()) return Threshold::infinite();
  return Threshold::at(profile.scores[j - 1]);
}

bool AnswerSet::contains(EntityId e) const {
  return std::binary_search(entities.begin(), entities.end(), e);
}

std::vector<EntityId> apply_filter(std::vector<EntityId> entities, const CandidateFilter& filter,
                                   const Query& query) {
  std::sort(entities.begin(), entities.end());
  const auto removed = filter.removed(query);
  if (removed.empty()) return entities;
  std::vector<EntityId> kept;
  kept.reserve(entities.size());
  std::set_difference(entities.begin(), entities.end(), removed.begin(), removed.end(),
                      std::back_inserter(kept));
  return kept;
}

AnswerSet predict_set(std::span<const double> scores, const Query& query,
                      const CalibrationProfile& profile, double epsilon, const CandidateFilter& filter) {
  const Threshold tau = threshold(profile, epsilon);
  AnswerSet out{query, {}, epsilon, filter.index != nullptr};
  if (tau.is_infinite()) {
    out.entities.resize(scores.size());
    std::iota(out.entities.begin(), out.entities.end(), EntityId{0});
  } else {
    const auto alphas = nonconformity_all(scores, profile.kind);
    for (std::size_t e = 0; e < alphas.size(); ++e) {
      if (tau.admits(alphas[e])) out.entities.push_back(static_cast<EntityId>(e));
    }
  }
  out.entities = apply_filter(std::move(out.entities), filter, query);
  return out;
}

AnswerSet predict_set(const ModelParams& model, const Query& query, const CalibrationProfile& profile,
                      double epsilon, const CandidateFilter& filter) {
  const auto scores = score_all(model, query);
  return predict_set(scores, query, profile, epsilon, filter);
}

std::string profile_to_json(const CalibrationProfile& profile) {
  nlohmann::json j;
  j["kind"] = to_string(profile.kind.measure);
  if (profile.kind.measure == Measure::CalibratedSoftmax) j["temperature"] = profile.kind.temperature;
  j["n_cal"] = profile.n_cal();
  j["scores"] = profile.scores;
  return j.dump();
}

CalibrationProfile profile_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NonconformityKind kind{parse_measure(j.at("kind").get<std::string>())};
    if (kind.measure == Measure::CalibratedSoftmax) kind.temperature = j.at("temperature").get<double>();
    auto scores = j.at("scores").get<std::vector<double>>();
    if (j.at("n_cal").get<std::size_t>() != scores.size()) {
      throw std::invalid_argument("profile n_cal does not match number of scores");
    }
    if (!std::is_sorted(scores.begin(), scores.end())) {
      throw std::invalid_argument("profile scores are not sorted");
    }
    return make_profile(kind, std::move(scores));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(fmt::format("malformed calibration profile: {}", e.what()));
  }
}

}  // namespace kgcp

#include "kgcp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kgcp {

std::vector<double> softmax(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  double max = -std::numeric_limits<double>::infinity();
  for (double s : scores) max = std::max(max, s / temperature);
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] / temperature - max);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::vector<EntityId> ranking_order(std::span<const double> scores) {
  std::vector<EntityId> order(scores.size());
  std::iota(order.begin(), order.end(), EntityId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](EntityId a, EntityId b) { return scores[a] > scores[b]; });
  return order;
}

AnswerSet predict_set_naive(std::span<const double> scores, const Query& query, double epsilon,
                            std::optional<double> temperature, const CandidateFilter& filter) {
  check_epsilon(epsilon);
  const double t = temperature.value_or(1.0);
  if (!(t > 0.0)) throw std::invalid_argument("temperature must be positive");
  const auto probs = softmax(scores, t);

  std::vector<EntityId> order(probs.size());
  std::iota(order.begin(), order.end(), EntityId{0});
  std::stable_sort(order.begin(), order.end(), [&](EntityId a, EntityId b) { return probs[a] > probs[b]; });

  const double target = 1.0 - epsilon;
  AnswerSet out{query, {}, epsilon, filter.index != nullptr};
  double sum = 0.0;
  double compensation = 0.0;  // Neumaier
  for (EntityId e : order) {
    const double x = probs[e];
    const double s = sum + x;
    compensation += std::abs(sum) >= std::abs(x) ? (sum - s) + x : (x - s) + sum;
    sum = s;
    if (!(sum + compensation < target)) break;  // running total only grows
    out.entities.push_back(e);
  }
  out.entities = apply_filter(std::move(out.entities), filter, query);
  return out;
}

AnswerSet predict_set_naive(const ModelParams& model, const Query& query, double epsilon,
                            std::optional<double> temperature, const CandidateFilter& filter) {
  const auto scores = score_all(model, query);
  return predict_set_naive(scores, query, epsilon, temperature, filter);
}

double temperature_nll(std::span<const std::vector<double>> scores, std::span<const EntityId> answers,
                       double temperature) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    double max = -std::numeric_limits<double>::infinity();
    for (double x : s) max = std::max(max, x / temperature);
    double sum = 0.0;
    for (double x : s) sum += std::exp(x / temperature - max);
    total += max + std::log(sum) - s[answers[i]] / temperature;
  }
  return total / static_cast<double>(scores.size());
}

Temperature fit_temperature(std::span<const std::vector<double>> scores,
                            std::span<const EntityId> answers) {
  if (scores.empty() || scores.size() != answers.size()) {
    throw std::invalid_argument("fit_temperature: need a nonempty validation set");
  }
  const auto objective = [&](double log_t) { return temperature_nll(scores, answers, std::pow(10.0, log_t)); };

  constexpr int kIterations = 40;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -2.0, b = 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int i = 0; i < kIterations; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double best = 0.5 * (a + b);
  const double f_best = objective(best);
  const double f_one = objective(0.0);
  if (f_best < f_one) return {std::pow(10.0, best), f_best};
  return {1.0, f_one};
}

Temperature fit_temperature(const ModelParams& model, std::span<const QueryExample> validation) {
  std::vector<std::vector<double>> scores;
  std::vector<EntityId> answers;
  scores.reserve(validation.size());
  answers.reserve(validation.size());
  for (const auto& ex : validation) {
    scores.push_back(score_all(model, ex.query));
    answers.push_back(ex.answer);
  }
  return fit_temperature(scores, answers);
}

std::size_t order_position(std::span<const double> scores, EntityId entity) {
  const double s = scores[entity];
  std::size_t before = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (scores[e] > s || (scores[e] == s && e < entity)) ++before;
  }
  return before + 1;
}

TopKChoice select_topk_from_ranks(std::vector<std::size_t> ranks, double epsilon) {
  check_epsilon(epsilon);
  if (ranks.empty()) throw std::invalid_argument("select_topk: empty validation set");
  std::sort(ranks.begin(), ranks.end());
  const std::size_t n = ranks.size();
  const auto idx = n - static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n)));
  const std::size_t k = ranks[idx - 1];
  const auto covered = static_cast<std::size_t>(std::upper_bound(ranks.begin(), ranks.end(), k) - ranks.begin());
  return {k, static_cast<double>(covered) / static_cast<double>(n)};
}

TopKChoice select_topk(const ModelParams& model, std::span<const QueryExample> validation, double epsilon) {
  std::vector<std::size_t> ranks;
  ranks.reserve(validation.size());
  std::vector<double> scores(model.num_entities());
  for (const auto& ex : validation) {
    score_all(model, ex.query, scores);
    ranks.push_back(order_position(scores, ex.answer));
  }
  return select_topk_from_ranks(std::move(ranks), epsilon);
}

AnswerSet predict_set_topk(std::span<const double> scores, const Query& query, std::size_t k,
                           const CandidateFilter& filter) {
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  auto order = ranking_order(scores);
  order.resize(std::min(k, order.size()));
  return {query, apply_filter(std::move(order), filter, query), 0.0, filter.index != nullptr};
}

AnswerSet predict_set_topk(const ModelParams& model, const Query& query, std::size_t k,
                           const CandidateFilter& filter) {
  const auto scores = score_all(model, query);
  return predict_set_topk(scores, query, k, filter);
}

AnswerSet predict_set_fixed(const ModelParams& model, const Query& query, std::size_t k,
                            const CandidateFilter& filter) {
  return predict_set_topk(model, query, k, filter);
}

}  // namespace kgcp

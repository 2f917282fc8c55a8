#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgcp/conformal.hpp"
#include "kgcp/kg.hpp"
#include "kgcp/model.hpp"

namespace kgcp {

struct Temperature {
  double value = 1.0;
  double fit_nll = 0.0;
};

struct TopKChoice {
  std::size_t k = 1;
  double validation_coverage = 0.0;
};

/// Softmax of scores / T, max-shifted.
std::vector<double> softmax(std::span<const double> scores, double temperature = 1.0);

/// Descending by score, ties by ascending id.
std::vector<EntityId> ranking_order(std::span<const double> scores);

/// Accumulates softmax mass over candidates in descending probability and
/// keeps an entity only while the running total (after adding it) stays
/// strictly below 1 - eps. The boundary entity is therefore excluded. The
/// running total is a compensated sum so that e.g. ten probabilities of 0.1
/// reach exactly 0.9 after nine steps.
AnswerSet predict_set_naive(std::span<const double> scores, const Query& query, double epsilon,
                            std::optional<double> temperature = std::nullopt,
                            const CandidateFilter& filter = {});
AnswerSet predict_set_naive(const ModelParams& model, const Query& query, double epsilon,
                            std::optional<double> temperature = std::nullopt,
                            const CandidateFilter& filter = {});

/// Mean cross-entropy -log softmax(s / T)[answer] over queries.
double temperature_nll(std::span<const std::vector<double>> scores, std::span<const EntityId> answers,
                       double temperature);

/// Golden-section search over log10 T in [-2, 2], 40 iterations. Returns
/// T = 1 unless the search finds a strictly lower objective.
Temperature fit_temperature(std::span<const std::vector<double>> scores,
                            std::span<const EntityId> answers);
Temperature fit_temperature(const ModelParams& model, std::span<const QueryExample> validation);

/// 1-based position of `entity` in ranking_order(scores).
std::size_t order_position(std::span<const double> scores, EntityId entity);

/// K = the ceil((1 - eps) N)-th smallest rank among `ranks`.
TopKChoice select_topk_from_ranks(std::vector<std::size_t> ranks, double epsilon);

/// Fits K on the validation examples using the position of each true answer
/// in the full ranking, i.e. the ordering predict_set_topk draws from.
TopKChoice select_topk(const ModelParams& model, std::span<const QueryExample> validation, double epsilon);

/// The K best-ranked entities of the full ranking, minus filtered known
/// answers. Unfiltered sets have exactly min(K, |E|) members.
AnswerSet predict_set_topk(std::span<const double> scores, const Query& query, std::size_t k,
                           const CandidateFilter& filter = {});
AnswerSet predict_set_topk(const ModelParams& model, const Query& query, std::size_t k,
                           const CandidateFilter& filter = {});

/// Fixed-size variant with a manually chosen K (typically 1, 3, 10 or 100).
AnswerSet predict_set_fixed(const ModelParams& model, const Query& query, std::size_t k,
                            const CandidateFilter& filter = {});

}  // namespace kgcp

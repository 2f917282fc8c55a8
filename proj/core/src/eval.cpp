#include "kgcp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "kgcp/parallel.hpp"

namespace kgcp {

double filtered_rank(std::span<const double> scores, EntityId answer, std::span<const EntityId> removed) {
  const double s = scores[answer];
  std::size_t above = 0;
  std::size_t tied = 0;
  auto skip = removed.begin();
  for (std::size_t e = 0; e < scores.size(); ++e) {
    while (skip != removed.end() && *skip < e) ++skip;
    if (skip != removed.end() && *skip == e) continue;
    if (e == answer) continue;
    above += scores[e] > s;
    tied += scores[e] == s;
  }
  return 1.0 + static_cast<double>(above) + 0.5 * static_cast<double>(tied);
}

std::vector<double> true_answer_ranks(const ScoredExamples& test, const FilterIndex* filter) {
  std::vector<double> ranks(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    const auto& ex = test.example(i);
    const CandidateFilter cf{filter, ex.answer};
    const auto removed = cf.removed(ex.query);
    ranks[i] = filtered_rank(test.scores(i), ex.answer, removed);
  });
  return ranks;
}

RankingMetrics ranking_metrics(const ScoredExamples& test, const FilterIndex* filter) {
  if (test.empty()) throw std::invalid_argument("ranking_metrics: empty test set");
  const auto ranks = true_answer_ranks(test, filter);
  RankingMetrics m;
  m.count = ranks.size();
  for (double r : ranks) {
    m.mean_rank += r;
    m.mean_reciprocal_rank += 1.0 / r;
    m.hits_at_1 += r <= 1.0;
    m.hits_at_3 += r <= 3.0;
    m.hits_at_10 += r <= 10.0;
    m.hits_at_100 += r <= 100.0;
  }
  const double n = static_cast<double>(m.count);
  m.mean_rank /= n;
  m.mean_reciprocal_rank /= n;
  m.hits_at_1 /= n;
  m.hits_at_3 /= n;
  m.hits_at_10 /= n;
  m.hits_at_100 /= n;
  return m;
}

RankingMetrics ranking_metrics(const ModelParams& model, std::span<const QueryExample> test,
                               const FilterIndex* filter) {
  return ranking_metrics(score_examples(model, test), filter);
}

TrialOutcome run_trial(const FittedPredictor& predictor, const ScoredExamples& test, const FilterIndex* filter) {
  if (test.empty()) throw std::invalid_argument("evaluation needs a nonempty test set");
  std::vector<char> covered(test.size());
  std::vector<std::size_t> sizes(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    const auto& ex = test.example(i);
    const auto set = predictor.predict(test.scores(i), ex.query, CandidateFilter{filter, ex.answer});
    covered[i] = set.contains(ex.answer);
    sizes[i] = set.size();
  });
  const double n = static_cast<double>(test.size());
  const double hits = static_cast<double>(std::count(covered.begin(), covered.end(), 1));
  const double total = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  return {hits / n, total / n};
}

std::size_t CalibrationPlan::resolve(std::size_t pool_size) const {
  if (n_cal > 0) return n_cal;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool_size))));
}

std::vector<std::size_t> sample_without_replacement(std::size_t pool, std::size_t n, Rng& rng) {
  if (n > pool) {
    throw std::invalid_argument(fmt::format("cannot draw {} calibration examples from a pool of {}", n, pool));
  }
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

namespace {

PredictorRecord make_record(const PredictorSpec& spec, double epsilon, std::size_t n_cal,
                            std::span<const TrialOutcome> outcomes) {
  std::vector<double> cov, size;
  for (const auto& o : outcomes) {
    cov.push_back(o.coverage);
    size.push_back(o.mean_size);
  }
  PredictorRecord rec;
  rec.predictor = spec.name();
  rec.family = to_string(spec.family);
  rec.epsilon = epsilon;
  rec.n_cal = n_cal;
  rec.coverage = summarize(cov);
  rec.size = summarize(size);
  rec.trials = outcomes.size();
  return rec;
}

}  // namespace

PredictorRecord evaluate_predictor(const PredictorSpec& spec, const ScoredExamples& calibration_pool,
                                   const CalibrationPlan& plan, const ScoredExamples& test,
                                   const FilterIndex* filter, double epsilon, std::size_t trials,
                                   std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (test.empty()) throw std::invalid_argument("evaluation needs a nonempty test set");
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(trials);
  if (!spec.needs_calibration()) {
    // Deterministic predictor: every trial yields the same sets.
    const auto fitted = fit_predictor(spec, ScoredExamples{}, epsilon);
    const TrialOutcome o = run_trial(fitted, test, filter);
    outcomes.assign(trials, o);
    return make_record(spec, epsilon, 0, outcomes);
  }
  const std::size_t n_cal = plan.resolve(calibration_pool.size());
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const auto idx = sample_without_replacement(calibration_pool.size(), n_cal, rng);
    const auto fitted = fit_predictor(spec, calibration_pool.subset(idx), epsilon);
    outcomes.push_back(run_trial(fitted, test, filter));
  }
  return make_record(spec, epsilon, n_cal, outcomes);
}

AdaptivenessProfile adaptiveness(const FittedPredictor& predictor, const ScoredExamples& test,
                                 const FilterIndex* filter, std::size_t bin_width, std::size_t max_rank) {
  if (bin_width < 1) throw std::invalid_argument("bin_width must be >= 1");
  if (max_rank < 1) throw std::invalid_argument("max_rank must be >= 1");
  AdaptivenessProfile profile;
  profile.bin_width = bin_width;
  profile.max_rank = max_rank;
  const std::size_t num_bins = (max_rank + bin_width - 1) / bin_width;
  profile.bins.resize(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    profile.bins[b].rank_lo = b * bin_width + 1;
    profile.bins[b].rank_hi = std::min(max_rank, (b + 1) * bin_width);
  }

  const auto ranks = true_answer_ranks(test, filter);
  std::vector<std::size_t> sizes(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    const auto& ex = test.example(i);
    sizes[i] = predictor.predict(test.scores(i), ex.query, CandidateFilter{filter, ex.answer}).size();
  });

  std::vector<double> totals(num_bins, 0.0);
  double overflow_total = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] > static_cast<double>(max_rank)) {
      ++profile.overflow_count;
      overflow_total += static_cast<double>(sizes[i]);
      continue;
    }
    const auto b = static_cast<std::size_t>(std::ceil(ranks[i] / static_cast<double>(bin_width))) - 1;
    ++profile.bins[b].count;
    totals[b] += static_cast<double>(sizes[i]);
  }
  for (std::size_t b = 0; b < num_bins; ++b) {
    if (profile.bins[b].count > 0) profile.bins[b].mean_size = totals[b] / static_cast<double>(profile.bins[b].count);
  }
  if (profile.overflow_count > 0) profile.overflow_mean_size = overflow_total / static_cast<double>(profile.overflow_count);
  return profile;
}

double adaptiveness_correlation(const AdaptivenessProfile& profile) {
  std::vector<double> index, size;
  for (std::size_t b = 0; b < profile.bins.size(); ++b) {
    if (profile.bins[b].count == 0) continue;
    index.push_back(static_cast<double>(b));
    size.push_back(profile.bins[b].mean_size);
  }
  return spearman(index, size);
}

std::vector<PredictorRecord> calibration_size_sweep(const PredictorSpec& spec, const ScoredExamples& pool,
                                                    std::span<const std::size_t> sizes,
                                                    const ScoredExamples& test, const FilterIndex* filter,
                                                    double epsilon, std::size_t trials, std::uint64_t seed) {
  for (std::size_t n : sizes) {
    if (n < 1 || n > pool.size()) {
      throw std::invalid_argument(
          fmt::format("calibration size {} is outside [1, {}] (validation examples)", n, pool.size()));
    }
  }
  std::vector<PredictorRecord> records;
  for (std::size_t n : sizes) {
    records.push_back(evaluate_predictor(spec, pool, CalibrationPlan{n}, test, filter, epsilon, trials,
                                         derive_seed(seed, n)));
  }
  const auto fitted = fit_predictor(spec, pool, epsilon);
  const TrialOutcome full = run_trial(fitted, test, filter);
  PredictorRecord rec = make_record(spec, epsilon, pool.size(), std::span(&full, 1));
  rec.has_sd = false;
  records.push_back(rec);
  return records;
}

std::vector<PredictorRecord> epsilon_sweep(std::span<const PredictorSpec> specs,
                                           const ScoredExamples& calibration_pool, const CalibrationPlan& plan,
                                           const ScoredExamples& test, const FilterIndex* filter,
                                           std::span<const double> epsilons, std::size_t trials,
                                           std::uint64_t seed) {
  for (double eps : epsilons) check_epsilon(eps);
  std::vector<PredictorRecord> records;
  for (const auto& spec : specs) {
    for (double eps : epsilons) {
      // Same seed for every epsilon: trial t uses the same calibration subset across the grid.
      records.push_back(evaluate_predictor(spec, calibration_pool, plan, test, filter, eps, trials, seed));
    }
  }
  return records;
}

KnowledgeGraph generate_synthetic_kg(const SyntheticConfig& cfg) {
  if (cfg.num_entities < 2 || cfg.num_relations < 1 || cfg.dim < 1 || cfg.train < 1 || cfg.valid < 1 ||
      cfg.test < 1) {
    throw std::invalid_argument("generate_synthetic_kg: all sizes must be positive (and |E| >= 2)");
  }
  const std::size_t total = cfg.train + cfg.valid + cfg.test;
  const std::size_t possible = cfg.num_entities * cfg.num_relations * cfg.num_entities;
  if (total > possible / 2) throw std::invalid_argument("generate_synthetic_kg: too many triples requested");

  Rng emb_rng(derive_seed(cfg.seed, 100));
  std::vector<double> ent(cfg.num_entities * cfg.dim), rel(cfg.num_relations * cfg.dim);
  for (double& x : ent) x = emb_rng.normal();
  for (double& x : rel) x = emb_rng.normal();
  const double scale = cfg.sharpness / std::sqrt(static_cast<double>(cfg.dim));

  // Cumulative tail distributions per (h, r), built lazily.
  std::vector<std::vector<double>> cdf(cfg.num_entities * cfg.num_relations);
  const auto tail_cdf = [&](std::size_t h, std::size_t r) -> const std::vector<double>& {
    auto& c = cdf[h * cfg.num_relations + r];
    if (!c.empty()) return c;
    std::vector<double> logits(cfg.num_entities);
    for (std::size_t t = 0; t < cfg.num_entities; ++t) {
      double s = 0.0;
      for (std::size_t k = 0; k < cfg.dim; ++k) {
        s += ent[h * cfg.dim + k] * rel[r * cfg.dim + k] * ent[t * cfg.dim + k];
      }
      logits[t] = scale * s;
    }
    const double max = *std::max_element(logits.begin(), logits.end());
    c.resize(cfg.num_entities);
    double acc = 0.0;
    for (std::size_t t = 0; t < cfg.num_entities; ++t) {
      acc += std::exp(logits[t] - max);
      c[t] = acc;
    }
    for (double& x : c) x /= acc;
    return c;
  };

  Rng sample_rng(derive_seed(cfg.seed, 101));
  std::set<Triple> seen;
  std::vector<Triple> distinct;
  distinct.reserve(total);
  const std::size_t max_draws = 1000 * total;
  for (std::size_t draws = 0; distinct.size() < total; ++draws) {
    if (draws >= max_draws) {
      throw std::runtime_error("generate_synthetic_kg: could not draw enough distinct triples");
    }
    const auto h = static_cast<std::size_t>(sample_rng.below(cfg.num_entities));
    const auto r = static_cast<std::size_t>(sample_rng.below(cfg.num_relations));
    const auto& c = tail_cdf(h, r);
    const double u = sample_rng.uniform();
    auto t = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
    t = std::min(t, cfg.num_entities - 1);
    const Triple triple{static_cast<EntityId>(h), static_cast<RelationId>(r), static_cast<EntityId>(t)};
    if (seen.insert(triple).second) distinct.push_back(triple);
  }

  Rng split_rng(derive_seed(cfg.seed, 102));
  split_rng.shuffle(distinct.begin(), distinct.end());

  KnowledgeGraph kg;
  for (std::size_t e = 0; e < cfg.num_entities; ++e) kg.entities.add(fmt::format("e{}", e));
  for (std::size_t r = 0; r < cfg.num_relations; ++r) kg.relations.add(fmt::format("r{}", r));
  const auto first = distinct.begin();
  kg.train.assign(first, first + static_cast<std::ptrdiff_t>(cfg.train));
  kg.valid.assign(first + static_cast<std::ptrdiff_t>(cfg.train),
                  first + static_cast<std::ptrdiff_t>(cfg.train + cfg.valid));
  kg.test.assign(first + static_cast<std::ptrdiff_t>(cfg.train + cfg.valid), distinct.end());
  kg.validate();
  return kg;
}

namespace {

std::string num(double x) { return fmt::format("{}", x); }

}  // namespace

void write_report_csv(std::ostream& out, std::span<const PredictorRecord> records) {
  out << "predictor,kind,epsilon,coverage_mean,coverage_sd,size_mean,size_sd,mr,trials,n_cal\n";
  for (const auto& r : records) {
    out << r.predictor << ',' << r.family << ',' << num(r.epsilon) << ',' << num(r.coverage.mean) << ','
        << (r.has_sd ? num(r.coverage.sd) : "") << ',' << num(r.size.mean) << ','
        << (r.has_sd ? num(r.size.sd) : "") << ',' << num(r.mean_rank) << ',' << r.trials << ',' << r.n_cal
        << '\n';
  }
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  j["epsilon"] = report.epsilon;
  j["filtered"] = report.filtered;
  j["trials"] = report.trials;
  j["mr"] = report.mean_rank;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json o;
    o["predictor"] = r.predictor;
    o["kind"] = r.family;
    o["epsilon"] = r.epsilon;
    o["n_cal"] = r.n_cal;
    o["coverage"] = {{"mean", r.coverage.mean}, {"sd", r.has_sd ? nlohmann::json(r.coverage.sd) : nlohmann::json()}};
    o["size"] = {{"mean", r.size.mean}, {"sd", r.has_sd ? nlohmann::json(r.size.sd) : nlohmann::json()}};
    o["mr"] = r.mean_rank;
    o["trials"] = r.trials;
    recs.push_back(std::move(o));
  }
  return j.dump(2);
}

void write_adaptiveness_csv(std::ostream& out, const AdaptivenessProfile& profile) {
  out << "rank_lo,rank_hi,count,mean_size\n";
  for (const auto& b : profile.bins) {
    out << b.rank_lo << ',' << b.rank_hi << ',' << b.count << ',' << num(b.mean_size) << '\n';
  }
}

void write_ranking_csv(std::ostream& out, const RankingMetrics& m) {
  out << "mr,mrr,hits1,hits3,hits10,hits100,count\n";
  out << num(m.mean_rank) << ',' << num(m.mean_reciprocal_rank) << ',' << num(m.hits_at_1) << ','
      << num(m.hits_at_3) << ',' << num(m.hits_at_10) << ',' << num(m.hits_at_100) << ',' << m.count << '\n';
}

}  // namespace kgcp

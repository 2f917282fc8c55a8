// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include <kgcp/eval.hpp>
#include <kgcp/trainer.hpp>

#include "support.hpp"

using namespace kgcp;

namespace {

constexpr double kEps = 0.1;
constexpr std::uint64_t kSeed = 7;

const std::vector<Measure> kConformal{Measure::NegScore, Measure::Minmax, Measure::Softmax,
                                      Measure::CalibratedSoftmax, Measure::Rank};

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  fmt::print("[{}] {:>2} {}: {}\n", ok ? "PASS" : "FAIL", id, title, detail);
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

/// Coverage band [1-eps-3s, 1-eps+1/(n+1)+3s] with s = sqrt(eps(1-eps)/N).
struct Band {
  double lo, hi;
  Band(double eps, std::size_t n_cal, std::size_t n_test) {
    const double s = std::sqrt(eps * (1 - eps) / static_cast<double>(n_test));
    lo = 1 - eps - 3 * s;
    hi = 1 - eps + 1.0 / static_cast<double>(n_cal + 1) + 3 * s;
  }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct Setup {
  KnowledgeGraph kg;
  TrainConfig train_cfg;
  TrainResult trained;
  FilterIndex filter;
  ScoredExamples pool;  // validation, directed
  ScoredExamples test;
};

SyntheticConfig synthetic_config() {
  SyntheticConfig sc;
  sc.seed = kSeed;
  return sc;
}

Setup make_setup() {
  Setup s;
  s.kg = generate_synthetic_kg(synthetic_config());
  s.train_cfg.seed = 1;
  s.trained = train(s.kg, {ModelFamily::DistMult, 1}, 64, s.train_cfg);
  s.filter = build_filter_index(s.kg, kTrain | kValid);
  s.pool = score_examples(s.trained.model, make_query_examples(s.kg.valid));
  s.test = score_examples(s.trained.model, make_query_examples(s.kg.test));
  return s;
}

PredictorSpec conformal(Measure m) { return {Family::Conformal, m}; }

// 1 -----------------------------------------------------------------------------

void coverage_guarantee(const Setup& s, double seconds) {
  const std::size_t n_cal = 500;
  const Band band(kEps, n_cal, s.test.size());
  bool ok = s.test.size() == 4000;
  std::string detail;
  for (const auto m : kConformal) {
    const auto rec = evaluate_predictor(conformal(m), s.pool, {n_cal}, s.test, &s.filter, kEps, 15, kSeed);
    ok = ok && band.contains(rec.coverage.mean);
    detail += fmt::format("{}={:.4f} ", to_string(m), rec.coverage.mean);
  }
  report(1, "coverage guarantee", ok,
         fmt::format("{}band [{:.4f}, {:.4f}], N_test={}, {:.0f}s", detail, band.lo, band.hi, s.test.size(), seconds));
}

// 2 -----------------------------------------------------------------------------

void calibration_size_trend(const Setup& s) {
  const std::vector<std::size_t> sizes{10, 100, 500};
  bool ok_a = true;
  bool ok_b = true;
  std::string detail;
  for (const auto m : kConformal) {
    std::vector<PredictorRecord> recs;
    for (std::size_t n : sizes) {
      recs.push_back(evaluate_predictor(conformal(m), s.pool, {n}, s.test, &s.filter, kEps, 20, derive_seed(kSeed, n)));
    }
    const double ratio = recs[0].size.mean / recs[2].size.mean;
    ok_a = ok_a && recs[0].coverage.mean >= 0.90 && ratio >= 5.0;
    ok_b = ok_b && recs[0].coverage.sd > recs[1].coverage.sd && recs[1].coverage.sd > recs[2].coverage.sd;
    detail += fmt::format("{}: cov10={:.3f} size x{:.2f} sd {:.3f}>{:.3f}>{:.3f}; ", to_string(m),
                          recs[0].coverage.mean, ratio, recs[0].coverage.sd, recs[1].coverage.sd,
                          recs[2].coverage.sd);
  }
  report(2, "calibration-size trend", ok_a && ok_b,
         fmt::format("(a) {} (b) {} | {}", ok_a ? "ok" : "not met", ok_b ? "ok" : "not met", detail));
}

// 3 -----------------------------------------------------------------------------

void epsilon_sweep_check(const Setup& s) {
  const std::vector<double> eps{0.05, 0.1, 0.2, 0.3, 0.5};
  const std::size_t n_cal = 500;
  std::vector<PredictorSpec> specs;
  for (const auto m : kConformal) specs.push_back(conformal(m));
  const auto rows = epsilon_sweep(specs, s.pool, {n_cal}, s.test, &s.filter, eps, 15, kSeed);

  bool cov_ok = true;
  bool size_ok = true;
  std::string misses;
  for (std::size_t p = 0; p < specs.size(); ++p) {
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const auto& r = rows[p * eps.size() + i];
      if (!Band(eps[i], n_cal, s.test.size()).contains(r.coverage.mean)) {
        cov_ok = false;
        misses += fmt::format(" {}@{}={:.4f}", specs[p].name(), eps[i], r.coverage.mean);
      }
      if (i > 0 && r.size.mean > rows[p * eps.size() + i - 1].size.mean) size_ok = false;
    }
  }

  // Per-query nestedness for one calibration draw per kind.
  std::size_t violations = 0;
  std::size_t checked = 0;
  Rng rng(derive_seed(kSeed, 3));
  for (const auto& spec : specs) {
    const auto idx = sample_without_replacement(s.pool.size(), n_cal, rng);
    const auto fitted = fit_predictor(spec, s.pool.subset(idx), eps.front());
    for (std::size_t q = 0; q < s.test.size(); ++q) {
      const auto& ex = s.test.example(q);
      const CandidateFilter f{&s.filter, ex.answer};
      auto prev = fitted.predict(s.test.scores(q), ex.query, f).entities;
      for (std::size_t i = 1; i < eps.size(); ++i) {
        auto cur = fitted.with_epsilon(eps[i]).predict(s.test.scores(q), ex.query, f).entities;
        violations += !std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
        ++checked;
        prev = std::move(cur);
      }
    }
  }
  report(3, "epsilon sweep", cov_ok && size_ok && violations == 0,
         fmt::format("coverage in band: {}{}; mean size non-increasing: {}; nested {}/{} pairs", cov_ok ? "yes" : "no",
                     misses, size_ok ? "yes" : "no", checked - violations, checked));
}

// 4 -----------------------------------------------------------------------------

void threshold_oracle() {
  Rng rng(derive_seed(kSeed, 4));
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(50);
    const bool coarse = rng.coin();  // coarse grid forces ties
    std::vector<double> cal(n);
    for (double& a : cal) a = coarse ? static_cast<double>(rng.below(6)) : rng.normal();
    const double eps = rng.uniform(1e-3, 1 - 1e-3);
    double alpha = coarse ? static_cast<double>(rng.below(7)) - 0.5 * static_cast<double>(rng.below(2)) : rng.normal();
    if (rng.below(4) == 0) alpha = cal[rng.below(n)];

    const auto ge = std::count_if(cal.begin(), cal.end(), [&](double a) { return a >= alpha; });
    const bool brute = static_cast<double>(ge + 1) > eps * static_cast<double>(n + 1);
    const bool fast = threshold(make_profile({Measure::NegScore}, cal), eps).admits(alpha);
    mismatches += brute != fast;
  }
  report(4, "threshold oracle", mismatches == 0, fmt::format("{} mismatches in 1000 instances", mismatches));
}

// 5 -----------------------------------------------------------------------------

void gradients() {
  Rng rng(derive_seed(kSeed, 5));
  bool ok = true;
  std::string detail;
  for (const auto family :
       {ModelFamily::TransE, ModelFamily::DistMult, ModelFamily::ComplEx, ModelFamily::RotatE, ModelFamily::RESCAL}) {
    const ModelKind kind{family, 1};
    double worst = 0;
    std::size_t passed = 0;
    std::size_t kinks = 0;
    while (passed < 100) {
      const std::size_t dim = 2 + rng.below(7);
      const auto m = test::random_model(kind, dim, 8, 3, rng);
      const Triple t{static_cast<EntityId>(rng.below(8)), static_cast<RelationId>(rng.below(3)),
                     static_cast<EntityId>(rng.below(8))};
      const auto r = test::check_gradient(m, t, 1e-6);
      if (r.checked == 0) {
        ++kinks;
        continue;
      }
      worst = std::max(worst, r.worst);
      ok = ok && r.worst <= 1e-4;
      ++passed;
    }
    detail += fmt::format("{} worst {:.1e} ({} kinks skipped); ", to_string(kind), worst, kinks);
  }
  report(5, "gradient check", ok, detail);
}

// 6 -----------------------------------------------------------------------------

void naive_fidelity(const Setup& s) {
  const std::vector<double> uniform(10, 0.0);
  const auto boundary = predict_set_naive(uniform, {Direction::Tail, 0, 0}, 0.1).size();

  std::string worst;
  bool under = false;
  double worst_gap = -1;
  for (const bool filtered : {true, false}) {
    for (const double eps : {0.05, 0.1, 0.2, 0.3, 0.5}) {
      const auto o = run_trial(fit_predictor({Family::Naive}, ScoredExamples{}, eps), s.test,
                               filtered ? &s.filter : nullptr);
      const double sigma = std::sqrt(eps * (1 - eps) / static_cast<double>(s.test.size()));
      const double gap = (1 - eps - o.coverage) / sigma;
      under = under || gap > 3.0;
      if (gap > worst_gap) {
        worst_gap = gap;
        worst = fmt::format("{} eps={} coverage {:.4f}", filtered ? "filtered" : "unfiltered", eps, o.coverage);
      }
    }
  }
  report(6, "naive predictor fidelity", boundary == 8 && under,
         fmt::format("uniform-10 set size {}; largest shortfall {:.1f} sigma ({})", boundary, worst_gap, worst));
}

// 7 -----------------------------------------------------------------------------

void adaptiveness_check(const Setup& s) {
  bool ok = true;
  std::string detail;
  for (const auto m : {Measure::NegScore, Measure::Minmax, Measure::Softmax, Measure::CalibratedSoftmax}) {
    const auto fitted = fit_predictor(conformal(m), s.pool, kEps);
    const double rho = adaptiveness_correlation(adaptiveness(fitted, s.test, nullptr, 10, 200));
    ok = ok && rho > 0;
    detail += fmt::format("{} rho={:.3f}; ", to_string(m), rho);
  }
  const auto topk = fit_predictor({Family::TopK}, s.pool, kEps);
  const auto profile = adaptiveness(topk, s.test, nullptr, 10, 200);
  std::set<double> means;
  for (const auto& b : profile.bins) {
    if (b.count > 0) means.insert(b.mean_size);
  }
  if (profile.overflow_count > 0) means.insert(profile.overflow_mean_size);
  ok = ok && means.size() == 1;
  report(7, "adaptiveness", ok, fmt::format("{}topk distinct bin means {}", detail, means.size()));
}

// 8 -----------------------------------------------------------------------------

void topk_equivalence(const Setup& s) {
  // Pool size N = 1999 makes the order statistics coincide: n+1-floor(eps(n+1))
  // and N-floor(eps N) both give 1800.
  std::vector<std::size_t> idx(1999);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto cal = s.pool.subset(idx);

  std::size_t ties = 0;
  for (std::size_t q = 0; q < s.test.size(); ++q) {
    std::vector<double> v(s.test.scores(q).begin(), s.test.scores(q).end());
    std::sort(v.begin(), v.end());
    ties += std::adjacent_find(v.begin(), v.end()) != v.end();
  }
  for (std::size_t q = 0; q < cal.size(); ++q) {
    std::vector<double> v(cal.scores(q).begin(), cal.scores(q).end());
    std::sort(v.begin(), v.end());
    ties += std::adjacent_find(v.begin(), v.end()) != v.end();
  }

  const auto rank = fit_predictor(conformal(Measure::Rank), cal, kEps);
  const auto topk = fit_predictor({Family::TopK}, cal, kEps);
  std::size_t differ = 0;
  for (const bool filtered : {false, true}) {
    for (std::size_t q = 0; q < s.test.size(); ++q) {
      const auto& ex = s.test.example(q);
      const CandidateFilter f{filtered ? &s.filter : nullptr, ex.answer};
      differ += rank.predict(s.test.scores(q), ex.query, f).entities != topk.predict(s.test.scores(q), ex.query, f).entities;
    }
  }
  report(8, "topk equals rank conformal", ties == 0 && differ == 0,
         fmt::format("K={}, {} differing sets of {} (filtered and unfiltered), {} score vectors with ties",
                     topk.topk()->k, differ, 2 * s.test.size(), ties));
}

// 9 -----------------------------------------------------------------------------

std::string report_csv(const Setup& s, const TrainResult& trained) {
  const auto pool = score_examples(trained.model, make_query_examples(s.kg.valid));
  const auto test = score_examples(trained.model, make_query_examples(s.kg.test));
  std::vector<PredictorRecord> records;
  for (const auto& name : {"naive", "platt", "topk", "negscore", "softmax", "minmax"}) {
    records.push_back(evaluate_predictor(parse_predictor(name), pool, {}, test, &s.filter, kEps, 3, kSeed));
  }
  std::ostringstream out;
  write_report_csv(out, records);
  return out.str();
}

void determinism(const Setup& s) {
  const auto again_kg = generate_synthetic_kg(synthetic_config());
  const bool same_graph = again_kg.train == s.kg.train && again_kg.valid == s.kg.valid && again_kg.test == s.kg.test;
  const auto again = train(again_kg, {ModelFamily::DistMult, 1}, 64, s.train_cfg);

  const auto ckpt = [&](const TrainResult& r) {
    return encode_checkpoint({r.model, s.kg.entities.names(), s.kg.relations.names(), train_config_json(s.train_cfg),
                              r.loss_trace.back()});
  };
  const auto bytes = ckpt(s.trained);
  const bool same_ckpt = bytes == ckpt(again);
  const bool roundtrip = encode_checkpoint(decode_checkpoint(bytes)) == bytes &&
                         decode_checkpoint(bytes).model == s.trained.model;

  const auto cal_json = [&](const TrainResult& r) {
    std::string out;
    const auto ex = make_query_examples(s.kg.valid);
    for (const auto m : kConformal) {
      NonconformityKind kind{m};
      if (m == Measure::CalibratedSoftmax) kind.temperature = fit_temperature(r.model, ex).value;
      out += profile_to_json(calibrate(r.model, ex, kind));
    }
    return out;
  };
  const bool same_cal = cal_json(s.trained) == cal_json(again);
  const bool same_csv = report_csv(s, s.trained) == report_csv(s, again);

  report(9, "determinism and persistence", same_graph && same_ckpt && roundtrip && same_cal && same_csv,
         fmt::format("graph {}, checkpoint {} ({} bytes), round trip {}, calibration JSON {}, report CSV {}",
                     same_graph ? "same" : "differs", same_ckpt ? "identical" : "differs", bytes.size(),
                     roundtrip ? "bitwise" : "differs", same_cal ? "identical" : "differs",
                     same_csv ? "identical" : "differs"));
}

// 10 ----------------------------------------------------------------------------

void ranking_oracle() {
  Rng rng(derive_seed(kSeed, 10));
  std::size_t mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t ne = 2 + rng.below(29);
    const std::size_t nr = 1 + rng.below(3);
    std::set<Triple> all;
    const std::size_t want = 3 + rng.below(3 * ne);
    for (std::size_t i = 0; i < want; ++i) {
      all.insert({static_cast<EntityId>(rng.below(ne)), static_cast<RelationId>(rng.below(nr)),
                  static_cast<EntityId>(rng.below(ne))});
    }
    std::vector<Triple> triples(all.begin(), all.end());
    rng.shuffle(triples.begin(), triples.end());
    const std::size_t n_test = 1 + triples.size() / 3;
    const std::vector<Triple> test(triples.begin(), triples.begin() + static_cast<std::ptrdiff_t>(n_test));
    const std::vector<Triple> train(triples.begin() + static_cast<std::ptrdiff_t>(n_test), triples.end());
    const auto kg = test::make_graph(ne, nr, train, {}, test);

    const auto examples = make_query_examples(kg.test);
    std::vector<double> scores;
    for (std::size_t i = 0; i < examples.size() * ne; ++i) scores.push_back(static_cast<double>(rng.below(5)));
    const ScoredExamples scored(examples, ne, scores);

    // Oracle: sort the surviving candidates and average the tied positions.
    double sum = 0;
    std::size_t h1 = 0, h3 = 0, h10 = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto& ex = examples[i];
      const auto s = scored.scores(i);
      std::vector<double> kept;
      for (EntityId e = 0; e < ne; ++e) {
        bool known = false;
        for (const auto& t : train) known = known || t == materialize(ex.query, e);
        for (const auto& t : test) known = known || t == materialize(ex.query, e);
        if (!known || e == ex.answer) kept.push_back(s[e]);
      }
      std::sort(kept.begin(), kept.end(), std::greater<>());
      const auto lo = std::lower_bound(kept.begin(), kept.end(), s[ex.answer], std::greater<>()) - kept.begin();
      const auto hi = std::upper_bound(kept.begin(), kept.end(), s[ex.answer], std::greater<>()) - kept.begin();
      const double rank = 1.0 + static_cast<double>(lo + hi - 1) / 2.0;
      sum += rank;
      h1 += rank <= 1;
      h3 += rank <= 3;
      h10 += rank <= 10;
    }
    // Filter over all splits for the oracle comparison.
    const FilterIndex full(kg, kTrain | kTest);
    const auto m = ranking_metrics(scored, &full);
    const double n = static_cast<double>(examples.size());
    mismatches += m.mean_rank != sum / n || m.hits_at_1 != static_cast<double>(h1) / n ||
                  m.hits_at_3 != static_cast<double>(h3) / n || m.hits_at_10 != static_cast<double>(h10) / n;
  }
  report(10, "ranking metric oracle", mismatches == 0, fmt::format("{} mismatching instances of 200", mismatches));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const Setup s = make_setup();
  const double setup_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  coverage_guarantee(s, setup_seconds);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (total > 300) report(1, "coverage runtime", false, fmt::format("{:.0f}s exceeds 5 minutes", total));

  calibration_size_trend(s);
  epsilon_sweep_check(s);
  threshold_oracle();
  gradients();
  naive_fidelity(s);
  adaptiveness_check(s);
  topk_equivalence(s);
  determinism(s);
  ranking_oracle();

  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

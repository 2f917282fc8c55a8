#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <kgcp/kg.hpp>
#include <kgcp/model.hpp>
#include <kgcp/rng.hpp>

namespace kgcp::test {

/// Graph with entities e0.. and relations r0.. and the given splits.
inline KnowledgeGraph make_graph(std::size_t num_entities, std::size_t num_relations, std::vector<Triple> train,
                                 std::vector<Triple> valid = {}, std::vector<Triple> test = {}) {
  KnowledgeGraph kg;
  for (std::size_t e = 0; e < num_entities; ++e) kg.entities.add("e" + std::to_string(e));
  for (std::size_t r = 0; r < num_relations; ++r) kg.relations.add("r" + std::to_string(r));
  kg.train = std::move(train);
  kg.valid = std::move(valid);
  kg.test = std::move(test);
  return kg;
}

inline std::vector<double> random_scores(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> s(n);
  for (double& x : s) x = scale * rng.normal();
  return s;
}

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double worst = 0.0;  // largest relative error seen
};

/// Central finite differences (step `h`) against grad() on every coordinate
/// of the rows `triple` touches. A coordinate counts as an L1 kink, and is
/// skipped, when some |component| entering a TransE-L1 or RotatE modulus is
/// within 10 steps of zero. Relative error is |a - n| / max(|a|, |n|, 1e-3);
/// the floor keeps round-off on near-zero partials from dominating.
inline GradientCheck check_gradient(ModelParams model, const Triple& triple, double h = 1e-6) {
  GradientCheck out;
  const auto g = grad(model, triple);
  const auto kind = model.kind();

  bool kink = false;
  if (kind.family == ModelFamily::TransE && kind.norm == 1) {
    const auto eh = model.entity(triple.head);
    const auto er = model.relation(triple.relation);
    const auto et = model.entity(triple.tail);
    for (std::size_t i = 0; i < eh.size(); ++i) kink = kink || std::abs(eh[i] + er[i] - et[i]) < 10 * h;
  }
  if (kind.family == ModelFamily::RotatE) {
    const auto eh = model.entity(triple.head);
    const auto ph = model.relation(triple.relation);
    const auto et = model.entity(triple.tail);
    for (std::size_t k = 0; k < ph.size(); ++k) {
      const double vr = eh[2 * k] * std::cos(ph[k]) - eh[2 * k + 1] * std::sin(ph[k]) - et[2 * k];
      const double vi = eh[2 * k] * std::sin(ph[k]) + eh[2 * k + 1] * std::cos(ph[k]) - et[2 * k + 1];
      kink = kink || std::hypot(vr, vi) < 10 * h;
    }
  }
  if (kink) {
    ++out.skipped;
    return out;
  }

  const auto compare = [&](double analytic, double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = score(model, triple);
    slot = saved - h;
    const double down = score(model, triple);
    slot = saved;
    const double numeric = (up - down) / (2 * h);
    const double diff = std::abs(analytic - numeric);
    const double rel = diff / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    out.worst = std::max(out.worst, rel);
    ++out.checked;
  };

  auto head = model.entity(triple.head);
  for (std::size_t i = 0; i < head.size(); ++i) {
    const double a = g.head[i] + (triple.head == triple.tail ? g.tail[i] : 0.0);
    compare(a, head[i]);
  }
  if (triple.tail != triple.head) {
    auto tail = model.entity(triple.tail);
    for (std::size_t i = 0; i < tail.size(); ++i) compare(g.tail[i], tail[i]);
  }
  auto rel = model.relation(triple.relation);
  for (std::size_t i = 0; i < rel.size(); ++i) compare(g.relation[i], rel[i]);
  return out;
}

/// Model with N(0, 1) parameters (phases uniform for RotatE).
inline ModelParams random_model(ModelKind kind, std::size_t dim, std::size_t num_entities, std::size_t num_relations,
                                Rng& rng) {
  ModelParams m(kind, dim, num_entities, num_relations);
  for (double& x : m.entity_table()) x = rng.normal();
  for (double& x : m.relation_table()) {
    x = kind.family == ModelFamily::RotatE ? rng.uniform(-3.14159, 3.14159) : rng.normal();
  }
  return m;
}

}  // namespace kgcp::test

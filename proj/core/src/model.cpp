#include "kgcp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "kgcp/rng.hpp"

namespace kgcp {
namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double transe_score(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                    int norm) {
  double acc = 0.0;
  if (norm == 1) {
    for (std::size_t i = 0; i < h.size(); ++i) acc += std::abs(h[i] + r[i] - t[i]);
    return -acc;
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = h[i] + r[i] - t[i];
    acc += v * v;
  }
  return -std::sqrt(acc);
}

// Modulus as sqrt(re^2 + im^2): hypot's overflow guard costs ~4x and embedding
// values never get near the range where it matters.
double rotate_terms(std::span<const double> h, std::span<const double> cos_r, std::span<const double> sin_r,
                    std::span<const double> t) {
  double acc = 0.0;
  for (std::size_t k = 0; k < cos_r.size(); ++k) {
    const double a = h[2 * k];
    const double b = h[2 * k + 1];
    const double vr = a * cos_r[k] - b * sin_r[k] - t[2 * k];
    const double vi = a * sin_r[k] + b * cos_r[k] - t[2 * k + 1];
    acc += std::sqrt(vr * vr + vi * vi);
  }
  return -acc;
}

void phase_tables(std::span<const double> phase, std::vector<double>& c, std::vector<double>& s) {
  c.resize(phase.size());
  s.resize(phase.size());
  for (std::size_t k = 0; k < phase.size(); ++k) {
    c[k] = std::cos(phase[k]);
    s[k] = std::sin(phase[k]);
  }
}

double rotate_score(std::span<const double> h, std::span<const double> phase, std::span<const double> t) {
  std::vector<double> c, s;
  phase_tables(phase, c, s);
  return rotate_terms(h, c, s, t);
}

// h^T M first, then dot with t, so tail queries can reuse h^T M.
void rescal_left(std::span<const double> h, std::span<const double> m, std::span<double> u) {
  const std::size_t d = h.size();
  std::fill(u.begin(), u.end(), 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) u[j] += h[i] * m[i * d + j];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double rescal_score(std::span<const double> h, std::span<const double> m, std::span<const double> t) {
  std::vector<double> u(h.size());
  rescal_left(h, m, u);
  return dot(u, t);
}

double distmult_score(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) acc += h[i] * t[i] * r[i];  // h*t first: exact head/tail symmetry
  return acc;
}

double complex_score(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  double acc = 0.0;
  for (std::size_t k = 0; k < h.size() / 2; ++k) {
    const double a = h[2 * k], b = h[2 * k + 1];
    const double c = r[2 * k], d = r[2 * k + 1];
    const double e = t[2 * k], f = t[2 * k + 1];
    acc += (a * c - b * d) * e + (a * d + b * c) * f;
  }
  return acc;
}

double score_rows(ModelKind kind, std::span<const double> h, std::span<const double> r,
                  std::span<const double> t) {
  switch (kind.family) {
    case ModelFamily::TransE: return transe_score(h, r, t, kind.norm);
    case ModelFamily::RotatE: return rotate_score(h, r, t);
    case ModelFamily::RESCAL: return rescal_score(h, r, t);
    case ModelFamily::DistMult: return distmult_score(h, r, t);
    case ModelFamily::ComplEx: return complex_score(h, r, t);
  }
  return 0.0;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind.family) {
    case ModelFamily::TransE: return kind.norm == 2 ? "transe-l2" : "transe";
    case ModelFamily::RotatE: return "rotate";
    case ModelFamily::RESCAL: return "rescal";
    case ModelFamily::DistMult: return "distmult";
    case ModelFamily::ComplEx: return "complex";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "transe" || lower == "transe-l1") return {ModelFamily::TransE, 1};
  if (lower == "transe-l2") return {ModelFamily::TransE, 2};
  if (lower == "rotate") return {ModelFamily::RotatE, 1};
  if (lower == "rescal") return {ModelFamily::RESCAL, 1};
  if (lower == "distmult") return {ModelFamily::DistMult, 1};
  if (lower == "complex") return {ModelFamily::ComplEx, 1};
  throw std::invalid_argument(fmt::format("unknown model kind '{}'", name));
}

std::size_t entity_width(ModelKind kind, std::size_t dim) {
  switch (kind.family) {
    case ModelFamily::RotatE:
    case ModelFamily::ComplEx: return 2 * dim;
    default: return dim;
  }
}

std::size_t relation_width(ModelKind kind, std::size_t dim) {
  switch (kind.family) {
    case ModelFamily::RESCAL: return dim * dim;
    case ModelFamily::ComplEx: return 2 * dim;
    default: return dim;
  }
}

ModelParams::ModelParams(ModelKind kind, std::size_t dim, std::size_t num_entities,
                         std::size_t num_relations)
    : kind_(kind),
      dim_(dim),
      num_entities_(num_entities),
      num_relations_(num_relations),
      entity_width_(kgcp::entity_width(kind, dim)),
      relation_width_(kgcp::relation_width(kind, dim)),
      entities_(num_entities * entity_width_, 0.0),
      relations_(num_relations * relation_width_, 0.0) {
  if (kind.family == ModelFamily::TransE && kind.norm != 1 && kind.norm != 2) {
    throw std::invalid_argument("TransE norm must be 1 or 2");
  }
}

bool ModelParams::all_finite() const {
  const auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(entities_.begin(), entities_.end(), finite) &&
         std::all_of(relations_.begin(), relations_.end(), finite);
}

double wrap_phase(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta > -pi && theta <= pi) return theta;
  double w = std::remainder(theta, 2.0 * pi);  // in [-pi, pi]
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

ModelParams init_model(ModelKind kind, std::size_t dim, std::size_t num_entities,
                       std::size_t num_relations, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("init_model: dim must be positive");
  if (num_entities == 0 || num_relations == 0) {
    throw std::invalid_argument("init_model: need at least one entity and one relation");
  }
  ModelParams model(kind, dim, num_entities, num_relations);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));

  Rng entity_rng(derive_seed(seed, 1));
  for (double& x : model.entity_table()) x = entity_rng.uniform(-bound, bound);

  Rng relation_rng(derive_seed(seed, 2));
  if (kind.family == ModelFamily::RotatE) {
    constexpr double pi = std::numbers::pi;
    for (double& x : model.relation_table()) x = pi - 2.0 * pi * relation_rng.uniform();
  } else {
    for (double& x : model.relation_table()) x = relation_rng.uniform(-bound, bound);
  }
  return model;
}

double score(const ModelParams& model, const Triple& triple) {
  return score_rows(model.kind(), model.entity(triple.head), model.relation(triple.relation),
                    model.entity(triple.tail));
}

void score_all(const ModelParams& model, const Query& query, std::span<double> out) {
  const auto n = static_cast<EntityId>(model.num_entities());
  const auto anchor = model.entity(query.anchor);
  const auto rel = model.relation(query.relation);
  const bool tail = query.direction == Direction::Tail;
  // Per-query work hoisted out of the entity loop; results stay bitwise equal to score().
  if (model.kind().family == ModelFamily::RotatE) {
    std::vector<double> c, s;
    phase_tables(rel, c, s);
    for (EntityId e = 0; e < n; ++e) {
      out[e] = tail ? rotate_terms(anchor, c, s, model.entity(e)) : rotate_terms(model.entity(e), c, s, anchor);
    }
    return;
  }
  if (model.kind().family == ModelFamily::RESCAL && tail) {
    std::vector<double> u(anchor.size());
    rescal_left(anchor, rel, u);
    for (EntityId e = 0; e < n; ++e) out[e] = dot(u, model.entity(e));
    return;
  }
  if (tail) {
    for (EntityId e = 0; e < n; ++e) out[e] = score_rows(model.kind(), anchor, rel, model.entity(e));
  } else {
    for (EntityId e = 0; e < n; ++e) out[e] = score_rows(model.kind(), model.entity(e), rel, anchor);
  }
}

std::vector<double> score_all(const ModelParams& model, const Query& query) {
  std::vector<double> out(model.num_entities());
  score_all(model, query, out);
  return out;
}

TripleGradient grad(const ModelParams& model, const Triple& triple) {
  const auto h = model.entity(triple.head);
  const auto r = model.relation(triple.relation);
  const auto t = model.entity(triple.tail);
  TripleGradient g{std::vector<double>(h.size()), std::vector<double>(r.size()),
                   std::vector<double>(t.size())};

  switch (model.kind().family) {
    case ModelFamily::TransE: {
      if (model.kind().norm == 1) {
        for (std::size_t i = 0; i < h.size(); ++i) {
          const double s = sign(h[i] + r[i] - t[i]);
          g.head[i] = -s;
          g.relation[i] = -s;
          g.tail[i] = s;
        }
      } else {
        double sq = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
          const double v = h[i] + r[i] - t[i];
          sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm > 0.0) {
          for (std::size_t i = 0; i < h.size(); ++i) {
            const double u = (h[i] + r[i] - t[i]) / norm;
            g.head[i] = -u;
            g.relation[i] = -u;
            g.tail[i] = u;
          }
        }
      }
      break;
    }
    case ModelFamily::RotatE: {
      for (std::size_t k = 0; k < r.size(); ++k) {
        const double c = std::cos(r[k]);
        const double s = std::sin(r[k]);
        const double a = h[2 * k];
        const double b = h[2 * k + 1];
        const double hr_re = a * c - b * s;
        const double hr_im = a * s + b * c;
        const double vr = hr_re - t[2 * k];
        const double vi = hr_im - t[2 * k + 1];
        const double m = std::sqrt(vr * vr + vi * vi);
        if (m == 0.0) continue;
        const double ur = vr / m;
        const double ui = vi / m;
        g.head[2 * k] = -(ur * c + ui * s);
        g.head[2 * k + 1] = -(-ur * s + ui * c);
        g.tail[2 * k] = ur;
        g.tail[2 * k + 1] = ui;
        g.relation[k] = -(-ur * hr_im + ui * hr_re);
      }
      break;
    }
    case ModelFamily::RESCAL: {
      const std::size_t d = h.size();
      for (std::size_t i = 0; i < d; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          row += r[i * d + j] * t[j];
          g.tail[j] += h[i] * r[i * d + j];
          g.relation[i * d + j] = h[i] * t[j];
        }
        g.head[i] = row;
      }
      break;
    }
    case ModelFamily::DistMult: {
      for (std::size_t i = 0; i < h.size(); ++i) {
        g.head[i] = r[i] * t[i];
        g.relation[i] = h[i] * t[i];
        g.tail[i] = h[i] * r[i];
      }
      break;
    }
    case ModelFamily::ComplEx: {
      for (std::size_t k = 0; k < h.size() / 2; ++k) {
        const double a = h[2 * k], b = h[2 * k + 1];
        const double c = r[2 * k], d = r[2 * k + 1];
        const double e = t[2 * k], f = t[2 * k + 1];
        g.head[2 * k] = c * e + d * f;
        g.head[2 * k + 1] = -d * e + c * f;
        g.relation[2 * k] = a * e + b * f;
        g.relation[2 * k + 1] = -b * e + a * f;
        g.tail[2 * k] = a * c - b * d;
        g.tail[2 * k + 1] = a * d + b * c;
      }
      break;
    }
  }
  return g;
}

}  // namespace kgcp

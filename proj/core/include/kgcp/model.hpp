#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgcp/kg.hpp"

namespace kgcp {

enum class ModelFamily : std::uint8_t { TransE = 0, RotatE = 1, RESCAL = 2, DistMult = 3, ComplEx = 4 };

/// Scoring-function family. `norm` is the TransE distance norm (1 or 2); the
/// other families ignore it (RotatE always uses the L1 sum of moduli).
struct ModelKind {
  ModelFamily family = ModelFamily::DistMult;
  int norm = 1;

  friend bool operator==(const ModelKind&, const ModelKind&) = default;
};

inline constexpr ModelKind kAllModelKinds[] = {
    {ModelFamily::TransE, 1}, {ModelFamily::RotatE, 1}, {ModelFamily::RESCAL, 1},
    {ModelFamily::DistMult, 1}, {ModelFamily::ComplEx, 1}};

/// "transe" (L1), "transe-l2", "rotate", "rescal", "distmult", "complex".
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Real entries per entity row for embedding dimension `dim`.
std::size_t entity_width(ModelKind kind, std::size_t dim);
/// Real entries per relation row: d, d*d for RESCAL, d phases for RotatE,
/// 2d for ComplEx.
std::size_t relation_width(ModelKind kind, std::size_t dim);

/// Embedding tables for one model. Complex embeddings (RotatE entities,
/// ComplEx entities and relations) are stored as interleaved (re, im) pairs.
/// RotatE relations are stored as phases in (-pi, pi].
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(ModelKind kind, std::size_t dim, std::size_t num_entities, std::size_t num_relations);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_entities() const noexcept { return num_entities_; }
  std::size_t num_relations() const noexcept { return num_relations_; }
  std::size_t entity_width() const noexcept { return entity_width_; }
  std::size_t relation_width() const noexcept { return relation_width_; }

  std::span<const double> entity(EntityId e) const {
    return {entities_.data() + static_cast<std::size_t>(e) * entity_width_, entity_width_};
  }
  std::span<double> entity(EntityId e) {
    return {entities_.data() + static_cast<std::size_t>(e) * entity_width_, entity_width_};
  }
  std::span<const double> relation(RelationId r) const {
    return {relations_.data() + static_cast<std::size_t>(r) * relation_width_, relation_width_};
  }
  std::span<double> relation(RelationId r) {
    return {relations_.data() + static_cast<std::size_t>(r) * relation_width_, relation_width_};
  }

  std::vector<double>& entity_table() noexcept { return entities_; }
  const std::vector<double>& entity_table() const noexcept { return entities_; }
  std::vector<double>& relation_table() noexcept { return relations_; }
  const std::vector<double>& relation_table() const noexcept { return relations_; }

  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelKind kind_{};
  std::size_t dim_ = 0;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::size_t entity_width_ = 0;
  std::size_t relation_width_ = 0;
  std::vector<double> entities_;
  std::vector<double> relations_;
};

/// Uniform init in [-6/sqrt(d), 6/sqrt(d)]; RotatE phases uniform in (-pi, pi].
ModelParams init_model(ModelKind kind, std::size_t dim, std::size_t num_entities,
                       std::size_t num_relations, std::uint64_t seed);

double score(const ModelParams& model, const Triple& triple);

/// Scores of every entity as the answer to `query`. Bitwise equal to calling
/// score() on each materialized triple.
std::vector<double> score_all(const ModelParams& model, const Query& query);
void score_all(const ModelParams& model, const Query& query, std::span<double> out);

/// d score / d parameters for the three rows a triple touches. When head and
/// tail are the same entity the two blocks must be summed by the caller.
struct TripleGradient {
  std::vector<double> head;
  std::vector<double> relation;
  std::vector<double> tail;
};

/// Analytic gradient. L1 terms use the subgradient sign(0) = 0 and a zero
/// modulus contributes zero.
TripleGradient grad(const ModelParams& model, const Triple& triple);

/// Wraps a phase into (-pi, pi].
double wrap_phase(double theta);

}  // namespace kgcp

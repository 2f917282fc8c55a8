#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgcp/kg.hpp"
#include "kgcp/model.hpp"
#include "kgcp/rng.hpp"

namespace kgcp {

enum class LossKind : std::uint8_t { MarginRanking, CrossEntropy };
enum class OptimizerKind : std::uint8_t { SGD, Adagrad };

struct TrainConfig {
  LossKind loss = LossKind::CrossEntropy;
  double margin = 1.0;  // MarginRanking only
  std::size_t negatives = 16;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double learning_rate = 0.05;
  OptimizerKind optimizer = OptimizerKind::Adagrad;
  double adagrad_epsilon = 1e-10;
  double l2 = 1e-7;
  std::uint64_t seed = 0;
  /// CrossEntropy over every entity instead of 1 + k sampled candidates.
  bool full_softmax = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

std::string to_string(LossKind loss);
std::string to_string(OptimizerKind optimizer);
LossKind parse_loss_kind(const std::string& name);
OptimizerKind parse_optimizer_kind(const std::string& name);

std::string train_config_json(const TrainConfig& cfg);

/// Non-finite loss during training.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch);
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Uniform entity in [0, num_entities) other than `original`.
EntityId corrupt_entity(EntityId original, std::size_t num_entities, Rng& rng);

/// `k` corruptions of `positive`, each replacing the head or the tail (side
/// chosen by a fair coin) with a different uniformly drawn entity. No
/// false-negative filtering.
std::vector<Triple> sample_negatives(const Triple& positive, std::size_t k, std::size_t num_entities,
                                     Rng& rng);

/// Mini-batch trainer. Gradients are accumulated over a batch and applied in
/// ascending row order, so results depend only on the seed. Rows of entities
/// and relations absent from the training split are never updated.
class Trainer {
 public:
  Trainer(const KnowledgeGraph& kg, ModelKind kind, std::size_t dim, TrainConfig cfg);

  /// Runs one epoch and returns the mean loss per positive triple.
  double run_epoch();

  const ModelParams& model() const noexcept { return model_; }
  ModelParams& model() noexcept { return model_; }
  std::size_t epochs_done() const noexcept { return epoch_; }
  const std::vector<double>& entity_accumulator() const noexcept { return entity_acc_; }
  const std::vector<double>& relation_accumulator() const noexcept { return relation_acc_; }

 private:
  void accumulate_triple(const Triple& t, double weight);
  double cross_entropy_term(const Triple& positive, Direction dir);
  double margin_term(const Triple& positive);
  void apply_updates();

  const KnowledgeGraph& kg_;
  TrainConfig cfg_;
  ModelParams model_;
  Rng shuffle_rng_;
  Rng negative_rng_;
  std::vector<std::size_t> order_;
  std::vector<char> entity_trainable_;
  std::vector<char> relation_trainable_;

  std::vector<double> entity_grad_;
  std::vector<double> relation_grad_;
  std::vector<char> entity_touched_;
  std::vector<char> relation_touched_;
  std::vector<EntityId> touched_entities_;
  std::vector<RelationId> touched_relations_;
  std::vector<double> entity_acc_;
  std::vector<double> relation_acc_;
  std::vector<double> scratch_;
  std::size_t epoch_ = 0;
};

struct TrainResult {
  ModelParams model;
  std::vector<double> loss_trace;
};

TrainResult train(const KnowledgeGraph& kg, ModelKind kind, std::size_t dim, const TrainConfig& cfg);

// Checkpoints -------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Code { Io, Truncated, BadMagic, BadVersion, Malformed };
  CheckpointError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

struct Checkpoint {
  ModelParams model;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  /// Serialized TrainConfig, or empty.
  std::string train_config;
  double final_loss = 0.0;
};

/// Layout: "CKGE", u32 version, u32 family, u32 norm, u64 dim, u64 |E|, u64 |R|,
/// f64 entity table, f64 relation table, u64 metadata length, metadata JSON.
/// All integers and floats little-endian.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace kgcp

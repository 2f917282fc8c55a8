#include "kgcp/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace kgcp {

void TrainConfig::validate() const {
  const auto fail = [](const char* field, const char* why) {
    throw std::invalid_argument(fmt::format("{}: {}", field, why));
  };
  if (loss == LossKind::MarginRanking && !(margin > 0.0)) fail("margin", "must be > 0");
  if (negatives < 1) fail("negatives", "must be >= 1");
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(adagrad_epsilon > 0.0)) fail("adagrad_epsilon", "must be > 0");
  if (!(l2 >= 0.0)) fail("l2", "must be >= 0");
}

std::string to_string(LossKind loss) {
  return loss == LossKind::MarginRanking ? "margin_ranking" : "cross_entropy";
}

std::string to_string(OptimizerKind optimizer) {
  return optimizer == OptimizerKind::SGD ? "sgd" : "adagrad";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "margin_ranking" || name == "margin") return LossKind::MarginRanking;
  if (name == "cross_entropy" || name == "ce") return LossKind::CrossEntropy;
  throw std::invalid_argument(fmt::format("unknown loss '{}'", name));
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adagrad") return OptimizerKind::Adagrad;
  throw std::invalid_argument(fmt::format("unknown optimizer '{}'", name));
}

std::string train_config_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["loss"] = to_string(cfg.loss);
  j["margin"] = cfg.margin;
  j["negatives"] = cfg.negatives;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["optimizer"] = to_string(cfg.optimizer);
  j["adagrad_epsilon"] = cfg.adagrad_epsilon;
  j["l2"] = cfg.l2;
  j["seed"] = cfg.seed;
  j["full_softmax"] = cfg.full_softmax;
  return j.dump();
}

TrainingDiverged::TrainingDiverged(std::size_t epoch, std::size_t batch)
    : std::runtime_error(fmt::format("non-finite loss at epoch {}, batch {}", epoch, batch)),
      epoch_(epoch),
      batch_(batch) {}

EntityId corrupt_entity(EntityId original, std::size_t num_entities, Rng& rng) {
  if (num_entities < 2) throw std::invalid_argument("negative sampling needs at least 2 entities");
  auto e = static_cast<EntityId>(rng.below(num_entities - 1));
  if (e >= original) ++e;
  return e;
}

std::vector<Triple> sample_negatives(const Triple& positive, std::size_t k, std::size_t num_entities,
                                     Rng& rng) {
  if (num_entities < 2) throw std::invalid_argument("negative sampling needs at least 2 entities");
  std::vector<Triple> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Triple neg = positive;
    if (rng.coin()) {
      neg.head = corrupt_entity(positive.head, num_entities, rng);
    } else {
      neg.tail = corrupt_entity(positive.tail, num_entities, rng);
    }
    out.push_back(neg);
  }
  return out;
}

Trainer::Trainer(const KnowledgeGraph& kg, ModelKind kind, std::size_t dim, TrainConfig cfg)
    : kg_(kg),
      cfg_(cfg),
      model_(init_model(kind, dim, kg.num_entities(), kg.num_relations(), derive_seed(cfg.seed, 0))),
      shuffle_rng_(derive_seed(cfg.seed, 10)),
      negative_rng_(derive_seed(cfg.seed, 11)),
      order_(kg.train.size()),
      entity_trainable_(kg.num_entities(), 0),
      relation_trainable_(kg.num_relations(), 0),
      entity_grad_(model_.entity_table().size(), 0.0),
      relation_grad_(model_.relation_table().size(), 0.0),
      entity_touched_(kg.num_entities(), 0),
      relation_touched_(kg.num_relations(), 0),
      entity_acc_(cfg.optimizer == OptimizerKind::Adagrad ? model_.entity_table().size() : 0, 0.0),
      relation_acc_(cfg.optimizer == OptimizerKind::Adagrad ? model_.relation_table().size() : 0, 0.0) {
  cfg_.validate();
  if (kg.train.empty()) throw std::invalid_argument("train: training split is empty");
  if (kg.num_entities() < 2) throw std::invalid_argument("train: need at least 2 entities");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  for (const Triple& t : kg.train) {
    entity_trainable_[t.head] = 1;
    entity_trainable_[t.tail] = 1;
    relation_trainable_[t.relation] = 1;
  }
}

void Trainer::accumulate_triple(const Triple& t, double weight) {
  const TripleGradient g = grad(model_, t);
  const auto add_entity = [&](EntityId e, const std::vector<double>& block) {
    if (!entity_touched_[e]) {
      entity_touched_[e] = 1;
      touched_entities_.push_back(e);
    }
    double* dst = entity_grad_.data() + static_cast<std::size_t>(e) * model_.entity_width();
    for (std::size_t i = 0; i < block.size(); ++i) dst[i] += weight * block[i];
  };
  add_entity(t.head, g.head);
  add_entity(t.tail, g.tail);
  if (!relation_touched_[t.relation]) {
    relation_touched_[t.relation] = 1;
    touched_relations_.push_back(t.relation);
  }
  double* dst = relation_grad_.data() + static_cast<std::size_t>(t.relation) * model_.relation_width();
  for (std::size_t i = 0; i < g.relation.size(); ++i) dst[i] += weight * g.relation[i];
}

double Trainer::cross_entropy_term(const Triple& positive, Direction dir) {
  const Query q = dir == Direction::Tail ? tail_query(positive) : head_query(positive);
  const EntityId answer = dir == Direction::Tail ? positive.tail : positive.head;

  std::vector<EntityId> candidates;
  if (cfg_.full_softmax) {
    candidates.resize(kg_.num_entities());
    std::iota(candidates.begin(), candidates.end(), EntityId{0});
    std::swap(candidates[0], candidates[answer]);
  } else {
    candidates.reserve(cfg_.negatives + 1);
    candidates.push_back(answer);
    for (std::size_t i = 0; i < cfg_.negatives; ++i) {
      candidates.push_back(corrupt_entity(answer, kg_.num_entities(), negative_rng_));
    }
  }

  scratch_.resize(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    scratch_[j] = score(model_, materialize(q, candidates[j]));
  }
  const double max = *std::max_element(scratch_.begin(), scratch_.end());
  double sum = 0.0;
  for (double s : scratch_) sum += std::exp(s - max);
  const double log_z = max + std::log(sum);
  const double loss = log_z - scratch_[0];

  // dL/ds_j = p_j - [j == 0]; copy since accumulate_triple may not touch scratch_.
  std::vector<double> weights(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    weights[j] = std::exp(scratch_[j] - log_z) - (j == 0 ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (weights[j] != 0.0) accumulate_triple(materialize(q, candidates[j]), weights[j]);
  }
  return loss;
}

double Trainer::margin_term(const Triple& positive) {
  const auto negatives = sample_negatives(positive, cfg_.negatives, kg_.num_entities(), negative_rng_);
  const double pos = score(model_, positive);
  double loss = 0.0;
  for (const Triple& neg : negatives) {
    const double violation = cfg_.margin - pos + score(model_, neg);
    if (violation > 0.0) {
      loss += violation;
      accumulate_triple(positive, -1.0);
      accumulate_triple(neg, 1.0);
    }
  }
  return loss;
}

void Trainer::apply_updates() {
  std::sort(touched_entities_.begin(), touched_entities_.end());
  std::sort(touched_relations_.begin(), touched_relations_.end());
  const double lr = cfg_.learning_rate;
  const bool adagrad = cfg_.optimizer == OptimizerKind::Adagrad;

  const auto update = [&](std::span<double> row, double* g, double* acc) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double gi = g[i] + 2.0 * cfg_.l2 * row[i];
      if (adagrad) {
        acc[i] += gi * gi;
        row[i] -= lr * gi / (std::sqrt(acc[i]) + cfg_.adagrad_epsilon);
      } else {
        row[i] -= lr * gi;
      }
      g[i] = 0.0;
    }
  };

  const std::size_t ew = model_.entity_width();
  for (EntityId e : touched_entities_) {
    double* g = entity_grad_.data() + static_cast<std::size_t>(e) * ew;
    if (entity_trainable_[e]) {
      update(model_.entity(e), g, adagrad ? entity_acc_.data() + static_cast<std::size_t>(e) * ew : nullptr);
    } else {
      std::fill(g, g + ew, 0.0);
    }
    entity_touched_[e] = 0;
  }
  const std::size_t rw = model_.relation_width();
  for (RelationId r : touched_relations_) {
    double* g = relation_grad_.data() + static_cast<std::size_t>(r) * rw;
    if (relation_trainable_[r]) {
      auto row = model_.relation(r);
      update(row, g, adagrad ? relation_acc_.data() + static_cast<std::size_t>(r) * rw : nullptr);
      if (model_.kind().family == ModelFamily::RotatE) {
        for (double& theta : row) theta = wrap_phase(theta);
      }
    } else {
      std::fill(g, g + rw, 0.0);
    }
    relation_touched_[r] = 0;
  }
  touched_entities_.clear();
  touched_relations_.clear();
}

double Trainer::run_epoch() {
  shuffle_rng_.shuffle(order_.begin(), order_.end());
  double total = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order_.size(); start += cfg_.batch_size, ++batch_index) {
    const std::size_t end = std::min(order_.size(), start + cfg_.batch_size);
    double batch_loss = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const Triple& t = kg_.train[order_[i]];
      if (cfg_.loss == LossKind::CrossEntropy) {
        batch_loss += cross_entropy_term(t, Direction::Tail);
        batch_loss += cross_entropy_term(t, Direction::Head);
      } else {
        batch_loss += margin_term(t);
      }
    }
    if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch_, batch_index);
    apply_updates();
    total += batch_loss;
  }
  ++epoch_;
  if (!model_.all_finite()) throw TrainingDiverged(epoch_ - 1, batch_index);
  return total / static_cast<double>(order_.size());
}

TrainResult train(const KnowledgeGraph& kg, ModelKind kind, std::size_t dim, const TrainConfig& cfg) {
  Trainer trainer(kg, kind, dim, cfg);
  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) trace.push_back(trainer.run_epoch());
  return {trainer.model(), std::move(trace)};
}

// Checkpoint encoding ------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'K', 'G', 'E'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Code::Truncated,
                            fmt::format("checkpoint truncated at byte {}", data_.size()));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const ModelParams& m = ckpt.model;
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(m.kind().family));
  w.u32(static_cast<std::uint32_t>(m.kind().norm));
  w.u64(m.dim());
  w.u64(m.num_entities());
  w.u64(m.num_relations());
  for (double x : m.entity_table()) w.f64(x);
  for (double x : m.relation_table()) w.f64(x);

  nlohmann::json meta;
  meta["entities"] = ckpt.entity_names;
  meta["relations"] = ckpt.relation_names;
  meta["train_config"] = ckpt.train_config.empty() ? nlohmann::json(nullptr)
                                                   : nlohmann::json::parse(ckpt.train_config);
  meta["final_loss"] = ckpt.final_loss;
  const std::string text = meta.dump();
  w.u64(text.size());
  w.bytes(text.data(), text.size());
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw CheckpointError(CheckpointError::Code::BadMagic, "not a checkpoint (magic mismatch)");
  }
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Code::BadVersion,
                          fmt::format("unsupported checkpoint version {}", version));
  }
  const std::uint32_t family = r.u32();
  const std::uint32_t norm = r.u32();
  const std::uint64_t dim = r.u64();
  const std::uint64_t num_entities = r.u64();
  const std::uint64_t num_relations = r.u64();
  if (family > static_cast<std::uint32_t>(ModelFamily::ComplEx) || (norm != 1 && norm != 2) || dim == 0 ||
      num_entities == 0 || num_relations == 0 || dim > (1u << 20) || num_entities > (1ull << 32) ||
      num_relations > (1ull << 32)) {
    throw CheckpointError(CheckpointError::Code::Malformed, "checkpoint header out of range");
  }
  const ModelKind kind{static_cast<ModelFamily>(family), static_cast<int>(norm)};
  const std::uint64_t payload =
      8 * (num_entities * entity_width(kind, dim) + num_relations * relation_width(kind, dim));
  r.need(payload);

  Checkpoint ckpt;
  ckpt.model = ModelParams(kind, dim, num_entities, num_relations);
  for (double& x : ckpt.model.entity_table()) x = r.f64();
  for (double& x : ckpt.model.relation_table()) x = r.f64();

  const std::uint64_t meta_len = r.u64();
  const std::string text = r.str(meta_len);
  if (r.remaining() != 0) {
    throw CheckpointError(CheckpointError::Code::Malformed, "trailing bytes after checkpoint metadata");
  }
  try {
    const auto meta = nlohmann::json::parse(text);
    ckpt.entity_names = meta.at("entities").get<std::vector<std::string>>();
    ckpt.relation_names = meta.at("relations").get<std::vector<std::string>>();
    if (!meta.at("train_config").is_null()) ckpt.train_config = meta.at("train_config").dump();
    ckpt.final_loss = meta.at("final_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Code::Malformed, fmt::format("bad checkpoint metadata: {}", e.what()));
  }
  if (ckpt.entity_names.size() != num_entities || ckpt.relation_names.size() != num_relations) {
    throw CheckpointError(CheckpointError::Code::Malformed, "dictionary size does not match header");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Code::Io, fmt::format("cannot write {}", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Code::Io, fmt::format("write failed for {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Code::Io, fmt::format("cannot read {}", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace kgcp

#include "config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace kgcp::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

const char* type_name(const json& v) { return v.type_name(); }

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(join(path, key), "unknown key");
  }
}

std::size_t get_size(const json& v, const std::string& path, bool positive) {
  if (!v.is_number_unsigned()) {
    throw ConfigError(path, fmt::format("expected a non-negative integer, got {}", type_name(v)));
  }
  const auto n = v.get<std::uint64_t>();
  if (positive && n == 0) throw ConfigError(path, "must be positive");
  return static_cast<std::size_t>(n);
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, fmt::format("expected a number, got {}", type_name(v)));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

double get_epsilon(const json& v, const std::string& path) {
  const double e = get_number(v, path);
  if (!(e > 0.0 && e < 1.0)) throw ConfigError(path, "must lie in (0, 1)");
  return e;
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, fmt::format("expected a boolean, got {}", type_name(v)));
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, fmt::format("expected a string, got {}", type_name(v)));
  return v.get<std::string>();
}

std::filesystem::path get_path(const json& v, const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p = get_string(v, path);
  if (p.empty()) throw ConfigError(path, "empty path");
  return p.is_relative() ? base / p : p;
}

SyntheticConfig parse_synthetic(const json& v, const std::string& path) {
  require_object(v, path);
  reject_unknown(v, path, {"num_entities", "num_relations", "dim", "train", "valid", "test", "sharpness", "seed"});
  SyntheticConfig s;
  if (v.contains("num_entities")) s.num_entities = get_size(v["num_entities"], join(path, "num_entities"), true);
  if (v.contains("num_relations")) s.num_relations = get_size(v["num_relations"], join(path, "num_relations"), true);
  if (v.contains("dim")) s.dim = get_size(v["dim"], join(path, "dim"), true);
  if (v.contains("train")) s.train = get_size(v["train"], join(path, "train"), true);
  if (v.contains("valid")) s.valid = get_size(v["valid"], join(path, "valid"), true);
  if (v.contains("test")) s.test = get_size(v["test"], join(path, "test"), true);
  if (v.contains("sharpness")) s.sharpness = get_number(v["sharpness"], join(path, "sharpness"));
  if (v.contains("seed")) s.seed = get_size(v["seed"], join(path, "seed"), false);
  if (s.num_entities < 2) throw ConfigError(join(path, "num_entities"), "must be at least 2");
  return s;
}

DataConfig parse_data(const json& v, const std::filesystem::path& base) {
  require_object(v, "data");
  reject_unknown(v, "data", {"train", "valid", "test", "synthetic"});
  DataConfig d;
  if (v.contains("synthetic")) {
    for (const char* k : {"train", "valid", "test"}) {
      if (v.contains(k)) throw ConfigError(join("data", k), "not allowed together with data.synthetic");
    }
    d.synthetic = parse_synthetic(v["synthetic"], "data.synthetic");
    return d;
  }
  for (const char* k : {"train", "valid", "test"}) {
    if (!v.contains(k)) throw ConfigError(join("data", k), "missing");
  }
  d.train = get_path(v["train"], "data.train", base);
  d.valid = get_path(v["valid"], "data.valid", base);
  d.test = get_path(v["test"], "data.test", base);
  return d;
}

TrainConfig parse_train(const json& v, const std::string& path) {
  require_object(v, path);
  reject_unknown(v, path, {"loss", "margin", "negatives", "epochs", "batch_size", "learning_rate", "optimizer",
                           "adagrad_epsilon", "l2", "full_softmax"});
  TrainConfig t;
  try {
    if (v.contains("loss")) t.loss = parse_loss_kind(get_string(v["loss"], join(path, "loss")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(join(path, "loss"), e.what());
  }
  try {
    if (v.contains("optimizer")) {
      t.optimizer = parse_optimizer_kind(get_string(v["optimizer"], join(path, "optimizer")));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(join(path, "optimizer"), e.what());
  }
  if (v.contains("margin")) t.margin = get_number(v["margin"], join(path, "margin"));
  if (v.contains("negatives")) t.negatives = get_size(v["negatives"], join(path, "negatives"), true);
  if (v.contains("epochs")) t.epochs = get_size(v["epochs"], join(path, "epochs"), false);
  if (v.contains("batch_size")) t.batch_size = get_size(v["batch_size"], join(path, "batch_size"), true);
  if (v.contains("learning_rate")) t.learning_rate = get_number(v["learning_rate"], join(path, "learning_rate"));
  if (v.contains("adagrad_epsilon")) {
    t.adagrad_epsilon = get_number(v["adagrad_epsilon"], join(path, "adagrad_epsilon"));
  }
  if (v.contains("l2")) t.l2 = get_number(v["l2"], join(path, "l2"));
  if (v.contains("full_softmax")) t.full_softmax = get_bool(v["full_softmax"], join(path, "full_softmax"));
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return t;
}

ModelConfig parse_model(const json& v) {
  require_object(v, "model");
  reject_unknown(v, "model", {"kind", "dim", "train"});
  ModelConfig m;
  if (v.contains("kind")) {
    try {
      m.kind = parse_model_kind(get_string(v["kind"], "model.kind"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("model.kind", e.what());
    }
  }
  if (v.contains("dim")) m.dim = get_size(v["dim"], "model.dim", true);
  if (v.contains("train")) m.train = parse_train(v["train"], "model.train");
  return m;
}

PredictorEntry parse_predictor_entry(const json& v, const std::string& path) {
  PredictorEntry p;
  if (v.is_string()) {
    try {
      p.spec = parse_predictor(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
    return p;
  }
  require_object(v, path);
  if (!v.contains("family")) throw ConfigError(join(path, "family"), "missing");
  const std::string family = get_string(v["family"], join(path, "family"));
  try {
    p.spec.family = parse_family(family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(join(path, "family"), e.what());
  }
  switch (p.spec.family) {
    case Family::Conformal:
      reject_unknown(v, path, {"family", "kind", "epsilon"});
      if (!v.contains("kind")) throw ConfigError(join(path, "kind"), "missing (conformal predictors need a measure)");
      try {
        p.spec.measure = parse_measure(get_string(v["kind"], join(path, "kind")));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(join(path, "kind"), e.what());
      }
      break;
    case Family::Fixed:
      reject_unknown(v, path, {"family", "k", "epsilon"});
      if (!v.contains("k")) throw ConfigError(join(path, "k"), "missing (fixed predictors need K)");
      p.spec.k = get_size(v["k"], join(path, "k"), true);
      break;
    default:
      reject_unknown(v, path, {"family", "epsilon"});
      break;
  }
  if (v.contains("epsilon")) p.epsilon = get_epsilon(v["epsilon"], join(path, "epsilon"));
  return p;
}

unsigned parse_splits(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of split names");
  unsigned mask = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item_path = fmt::format("{}[{}]", path, i);
    const std::string s = get_string(v[i], item_path);
    if (s == "train") mask |= kTrain;
    else if (s == "valid") mask |= kValid;
    else if (s == "test") mask |= kTest;
    else throw ConfigError(item_path, fmt::format("unknown split '{}'", s));
  }
  if (mask == 0) throw ConfigError(path, "at least one split is required");
  return mask;
}

EvalConfig parse_eval(const json& v) {
  require_object(v, "eval");
  reject_unknown(v, "eval", {"filtered", "filter_splits", "epsilon", "trials", "n_cal", "cal_fraction",
                             "calibration_sizes", "epsilons", "bin_width", "max_rank"});
  EvalConfig e;
  if (v.contains("filtered")) e.filtered = get_bool(v["filtered"], "eval.filtered");
  if (v.contains("filter_splits")) e.filter_splits = parse_splits(v["filter_splits"], "eval.filter_splits");
  if (v.contains("epsilon")) e.epsilon = get_epsilon(v["epsilon"], "eval.epsilon");
  if (v.contains("trials")) e.trials = get_size(v["trials"], "eval.trials", true);
  if (v.contains("n_cal")) e.n_cal = get_size(v["n_cal"], "eval.n_cal", false);
  if (v.contains("cal_fraction")) {
    e.cal_fraction = get_number(v["cal_fraction"], "eval.cal_fraction");
    if (!(e.cal_fraction > 0.0 && e.cal_fraction <= 1.0)) {
      throw ConfigError("eval.cal_fraction", "must lie in (0, 1]");
    }
  }
  if (v.contains("calibration_sizes")) {
    const auto& a = v["calibration_sizes"];
    if (!a.is_array() || a.empty()) throw ConfigError("eval.calibration_sizes", "expected a nonempty array");
    e.calibration_sizes.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      e.calibration_sizes.push_back(get_size(a[i], fmt::format("eval.calibration_sizes[{}]", i), true));
    }
  }
  if (v.contains("epsilons")) {
    const auto& a = v["epsilons"];
    if (!a.is_array() || a.empty()) throw ConfigError("eval.epsilons", "expected a nonempty array");
    e.epsilons.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      e.epsilons.push_back(get_epsilon(a[i], fmt::format("eval.epsilons[{}]", i)));
    }
  }
  if (v.contains("bin_width")) e.bin_width = get_size(v["bin_width"], "eval.bin_width", true);
  if (v.contains("max_rank")) e.max_rank = get_size(v["max_rank"], "eval.max_rank", true);
  return e;
}

}  // namespace

std::vector<PredictorEntry> default_predictors() {
  std::vector<PredictorEntry> out;
  for (const char* name : {"naive", "platt", "topk", "negscore", "softmax", "minmax"}) {
    out.push_back({parse_predictor(name), std::nullopt});
  }
  return out;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", fmt::format("invalid JSON: {}", e.what()));
  }
  require_object(root, "");
  reject_unknown(root, "", {"data", "model", "predictors", "eval", "seed", "output_dir"});

  RunConfig cfg;
  if (!root.contains("data")) throw ConfigError("data", "missing");
  cfg.data = parse_data(root["data"], base_dir);
  if (root.contains("model")) cfg.model = parse_model(root["model"]);
  if (root.contains("predictors")) {
    const auto& a = root["predictors"];
    if (!a.is_array() || a.empty()) throw ConfigError("predictors", "expected a nonempty array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      cfg.predictors.push_back(parse_predictor_entry(a[i], fmt::format("predictors[{}]", i)));
    }
  } else {
    cfg.predictors = default_predictors();
  }
  if (root.contains("eval")) cfg.eval = parse_eval(root["eval"]);
  if (root.contains("seed")) cfg.seed = get_size(root["seed"], "seed", false);
  if (root.contains("output_dir")) cfg.output_dir = get_path(root["output_dir"], "output_dir", base_dir);
  else cfg.output_dir = base_dir / "out";
  cfg.model.train.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_run_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  check_paths(cfg);
  return cfg;
}

void check_paths(const RunConfig& cfg) {
  if (cfg.data.synthetic) return;
  const std::pair<const char*, const std::filesystem::path*> paths[] = {
      {"data.train", &cfg.data.train}, {"data.valid", &cfg.data.valid}, {"data.test", &cfg.data.test}};
  for (const auto& [field, p] : paths) {
    if (!std::filesystem::is_regular_file(*p)) {
      throw ConfigError(field, fmt::format("file not found: {}", p->string()));
    }
  }
}

}  // namespace kgcp::cli

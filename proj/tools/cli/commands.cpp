#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <kgcp/baselines.hpp>
#include <kgcp/conformal.hpp>
#include <kgcp/eval.hpp>
#include <kgcp/kg.hpp>
#include <kgcp/predictor.hpp>
#include <kgcp/trainer.hpp>

#include "config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kgcp::cli {

namespace {

class EmptyCalibration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownName : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  bool filtered = false;
  bool unfiltered = false;
  std::optional<double> epsilon;

  std::optional<std::string> checkpoint;
  std::optional<std::string> calibration;
  std::string query;
  std::optional<std::string> predictor;
  int which = 0;
};

RunConfig resolve_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config", "required for this command");
  RunConfig cfg = load_run_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.model.train.seed = *o.seed;
  }
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.filtered) cfg.eval.filtered = true;
  if (o.unfiltered) cfg.eval.filtered = false;
  if (o.epsilon) {
    if (!(*o.epsilon > 0.0 && *o.epsilon < 1.0)) throw ConfigError("--epsilon", "must lie in (0, 1)");
    cfg.eval.epsilon = *o.epsilon;
  }
  return cfg;
}

KnowledgeGraph load_data(const RunConfig& cfg) {
  if (cfg.data.synthetic) return generate_synthetic_kg(*cfg.data.synthetic);
  try {
    return load_graph(cfg.data.train, cfg.data.valid, cfg.data.test);
  } catch (const GraphError& e) {
    throw ConfigError("data", e.what());
  }
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_file(const fs::path& path, const std::string& bytes) {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

std::string read_file(const fs::path& path, const std::string& field) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(field, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path checkpoint_path(const Options& o, const RunConfig* cfg) {
  if (o.checkpoint) return *o.checkpoint;
  if (cfg) return cfg->output_dir / "model.ckpt";
  throw ConfigError("--checkpoint", "required without --config");
}

fs::path calibration_path(const Options& o, const RunConfig* cfg) {
  if (o.calibration) return *o.calibration;
  if (cfg) return cfg->output_dir / "calibration.json";
  throw ConfigError("--calibration", "required without --config");
}

/// Throws unless the checkpoint was trained on this graph with this model.
void check_compatible(const Checkpoint& ckpt, const RunConfig& cfg, const KnowledgeGraph& kg) {
  if (ckpt.model.kind() != cfg.model.kind) {
    throw ConfigError("model.kind", fmt::format("checkpoint holds a {} model, config asks for {}",
                                                to_string(ckpt.model.kind()), to_string(cfg.model.kind)));
  }
  if (ckpt.model.dim() != cfg.model.dim) {
    throw ConfigError("model.dim",
                      fmt::format("checkpoint has dim {}, config asks for {}", ckpt.model.dim(), cfg.model.dim));
  }
  if (ckpt.entity_names != kg.entities.names() || ckpt.relation_names != kg.relations.names()) {
    throw ConfigError("data", "dictionaries differ from the ones stored in the checkpoint");
  }
}

Checkpoint train_model(const RunConfig& cfg, const KnowledgeGraph& kg, std::vector<double>* trace, std::ostream& err) {
  Trainer trainer(kg, cfg.model.kind, cfg.model.dim, cfg.model.train);
  std::vector<double> losses;
  for (std::size_t e = 0; e < cfg.model.train.epochs; ++e) losses.push_back(trainer.run_epoch());
  Checkpoint ckpt;
  ckpt.model = trainer.model();
  ckpt.entity_names = kg.entities.names();
  ckpt.relation_names = kg.relations.names();
  ckpt.train_config = train_config_json(cfg.model.train);
  ckpt.final_loss = losses.empty() ? 0.0 : losses.back();
  err << fmt::format("trained {} d={} for {} epochs, final loss {}\n", to_string(cfg.model.kind), cfg.model.dim,
                     losses.size(), ckpt.final_loss);
  if (trace) *trace = std::move(losses);
  return ckpt;
}

/// Loads the checkpoint from the output directory, training one first when
/// it is missing.
Checkpoint obtain_checkpoint(const Options& o, const RunConfig& cfg, const KnowledgeGraph& kg, std::ostream& err) {
  const fs::path path = checkpoint_path(o, &cfg);
  if (fs::exists(path)) {
    Checkpoint ckpt = load_checkpoint(path);
    check_compatible(ckpt, cfg, kg);
    return ckpt;
  }
  Checkpoint ckpt = train_model(cfg, kg, nullptr, err);
  ensure_parent(path);
  save_checkpoint(ckpt, path);
  err << "wrote " << path.string() << '\n';
  return ckpt;
}

std::optional<FilterIndex> make_filter(const RunConfig& cfg, const KnowledgeGraph& kg) {
  if (!cfg.eval.filtered) return std::nullopt;
  return build_filter_index(kg, cfg.eval.filter_splits);
}

double predictor_epsilon(const PredictorEntry& p, const RunConfig& cfg) {
  return p.epsilon.value_or(cfg.eval.epsilon);
}

// train ------------------------------------------------------------------------

int cmd_train(const Options& o, std::ostream&, std::ostream& err) {
  const RunConfig cfg = resolve_config(o);
  const KnowledgeGraph kg = load_data(cfg);
  std::vector<double> trace;
  const Checkpoint ckpt = train_model(cfg, kg, &trace, err);
  const fs::path path = checkpoint_path(o, &cfg);
  ensure_parent(path);
  save_checkpoint(ckpt, path);
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e) csv += fmt::format("{},{}\n", e + 1, trace[e]);
  write_file(cfg.output_dir / "loss_trace.csv", csv);
  write_file(cfg.output_dir / "dictionary.json", dictionary_json(kg));
  err << "wrote " << path.string() << '\n';
  return kExitOk;
}

// calibrate --------------------------------------------------------------------

json calibration_json(const RunConfig& cfg, const ScoredExamples& cal) {
  json j;
  j["n_cal"] = cal.size();
  j["profiles"] = json::array();
  std::vector<Measure> done;
  bool want_temperature = false;
  bool want_topk = false;
  for (const auto& p : cfg.predictors) {
    switch (p.spec.family) {
      case Family::Conformal: {
        if (std::find(done.begin(), done.end(), p.spec.measure) != done.end()) break;
        done.push_back(p.spec.measure);
        const auto fitted = fit_predictor(p.spec, cal, predictor_epsilon(p, cfg));
        j["profiles"].push_back(json::parse(profile_to_json(*fitted.profile())));
        break;
      }
      case Family::Platt: want_temperature = true; break;
      case Family::TopK: want_topk = true; break;
      default: break;
    }
  }
  if (want_temperature) {
    const Temperature t = fit_temperature(cal);
    j["temperature"] = {{"value", t.value}, {"nll", t.fit_nll}};
  }
  if (want_topk) {
    std::vector<std::size_t> ranks;
    for (std::size_t i = 0; i < cal.size(); ++i) ranks.push_back(order_position(cal.scores(i), cal.example(i).answer));
    std::sort(ranks.begin(), ranks.end());
    j["topk"] = {{"ranks", ranks}};
  }
  return j;
}

int cmd_calibrate(const Options& o, std::ostream&, std::ostream& err) {
  const RunConfig cfg = resolve_config(o);
  const KnowledgeGraph kg = load_data(cfg);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path(o, &cfg));
  check_compatible(ckpt, cfg, kg);
  if (kg.valid.empty()) throw EmptyCalibration("the validation split is empty");
  const auto cal = score_examples(ckpt.model, make_query_examples(kg.valid));
  const fs::path path = calibration_path(o, &cfg);
  write_file(path, calibration_json(cfg, cal).dump(2) + "\n");
  err << "wrote " << path.string() << " (n_cal=" << cal.size() << ")\n";
  return kExitOk;
}

// predict ----------------------------------------------------------------------

std::uint32_t resolve_name(const std::string& name, const std::vector<std::string>& dict, const char* what) {
  const auto it = std::find(dict.begin(), dict.end(), name);
  if (it != dict.end()) return static_cast<std::uint32_t>(it - dict.begin());
  const auto near = nearest_names(name, dict);
  std::string msg = fmt::format("unknown {} '{}'", what, name);
  if (!near.empty()) {
    msg += "; nearest:";
    for (const auto& n : near) msg += " " + n;
  }
  throw UnknownName(msg);
}

Query parse_query(const std::string& text, const Checkpoint& ckpt) {
  std::istringstream in(text);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  if (tok.size() != 3 || (tok[0] == "?") == (tok[2] == "?")) {
    throw ConfigError("--query", "expected 'head relation ?' or '? relation tail'");
  }
  const auto r = resolve_name(tok[1], ckpt.relation_names, "relation");
  if (tok[2] == "?") return {Direction::Tail, resolve_name(tok[0], ckpt.entity_names, "entity"), r};
  return {Direction::Head, resolve_name(tok[2], ckpt.entity_names, "entity"), r};
}

FittedPredictor predictor_from_calibration(const PredictorSpec& spec, double epsilon, const json* cal) {
  FittedPredictor fitted(spec, epsilon);
  if (!spec.needs_calibration()) return fitted;
  if (!cal) throw ConfigError("--calibration", fmt::format("predictor {} needs a calibration file", spec.name()));
  switch (spec.family) {
    case Family::Conformal:
      for (const auto& p : cal->at("profiles")) {
        auto profile = profile_from_json(p.dump());
        if (profile.kind.measure != spec.measure) continue;
        if (profile.scores.empty()) throw EmptyCalibration("calibration profile is empty");
        fitted.set_profile(std::move(profile));
        return fitted;
      }
      throw ConfigError("--predictor", fmt::format("calibration file has no {} profile", spec.name()));
    case Family::Platt:
      if (!cal->contains("temperature")) throw ConfigError("--predictor", "calibration file has no temperature");
      fitted.set_temperature({cal->at("temperature").at("value").get<double>(),
                              cal->at("temperature").at("nll").get<double>()});
      return fitted;
    case Family::TopK: {
      if (!cal->contains("topk")) throw ConfigError("--predictor", "calibration file has no topk ranks");
      auto ranks = cal->at("topk").at("ranks").get<std::vector<std::size_t>>();
      if (ranks.empty()) throw EmptyCalibration("topk ranks are empty");
      fitted.set_topk(select_topk_from_ranks(std::move(ranks), epsilon));
      return fitted;
    }
    default:
      return fitted;
  }
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream&) {
  std::optional<RunConfig> cfg;
  if (!o.config.empty()) cfg = resolve_config(o);
  if (!cfg && o.filtered) throw ConfigError("--filtered", "needs --config to know the graph");
  const RunConfig* cfgp = cfg ? &*cfg : nullptr;

  const Checkpoint ckpt = load_checkpoint(checkpoint_path(o, cfgp));
  const Query query = parse_query(o.query, ckpt);

  PredictorSpec spec;
  std::optional<double> entry_eps;
  std::optional<json> cal;
  const fs::path cal_path = o.calibration ? fs::path(*o.calibration)
                                          : (cfg ? cfg->output_dir / "calibration.json" : fs::path());
  if (!cal_path.empty() && fs::exists(cal_path)) {
    try {
      cal = json::parse(read_file(cal_path, "--calibration"));
    } catch (const json::exception& e) {
      throw ConfigError("--calibration", e.what());
    }
  } else if (o.calibration) {
    throw ConfigError("--calibration", fmt::format("file not found: {}", cal_path.string()));
  }
  if (o.predictor) {
    try {
      spec = parse_predictor(*o.predictor);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("--predictor", e.what());
    }
  } else if (cfg) {
    spec = cfg->predictors.front().spec;
    entry_eps = cfg->predictors.front().epsilon;
  } else if (cal && !cal->at("profiles").empty()) {
    spec = {Family::Conformal, parse_measure(cal->at("profiles").front().at("kind").get<std::string>())};
  } else {
    throw ConfigError("--predictor", "no predictor given and none configured");
  }
  const double epsilon = o.epsilon ? *o.epsilon : entry_eps ? *entry_eps : cfg ? cfg->eval.epsilon : 0.1;
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("--epsilon", "must lie in (0, 1)");

  const auto fitted = predictor_from_calibration(spec, epsilon, cal ? &*cal : nullptr);
  std::optional<FilterIndex> filter;
  if (cfg && cfg->eval.filtered) {
    const KnowledgeGraph kg = load_data(*cfg);
    check_compatible(ckpt, *cfg, kg);
    filter = make_filter(*cfg, kg);
  }
  const AnswerSet set = fitted.predict(ckpt.model, query, CandidateFilter{filter ? &*filter : nullptr, std::nullopt});

  std::vector<std::string> names;
  for (EntityId e : set.entities) names.push_back(ckpt.entity_names[e]);
  std::sort(names.begin(), names.end());
  for (const auto& n : names) out << n << '\n';
  out << fmt::format("size={} epsilon={} predictor={}\n", set.size(), epsilon, spec.name());
  return kExitOk;
}

// evaluate ---------------------------------------------------------------------

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(o);
  const KnowledgeGraph kg = load_data(cfg);
  const Checkpoint ckpt = obtain_checkpoint(o, cfg, kg, err);
  const auto filter = make_filter(cfg, kg);
  const auto test = score_examples(ckpt.model, make_query_examples(kg.test));
  const auto m = ranking_metrics(test, filter ? &*filter : nullptr);
  std::ostringstream csv;
  write_ranking_csv(csv, m);
  write_file(cfg.output_dir / "ranking.csv", csv.str());
  out << csv.str();
  return kExitOk;
}

// experiment -------------------------------------------------------------------

void write_report(const RunConfig& cfg, const std::string& stem, std::vector<PredictorRecord> records,
                  double mean_rank, std::ostream& out) {
  for (auto& r : records) r.mean_rank = mean_rank;
  std::ostringstream csv;
  write_report_csv(csv, records);
  EvalReport report;
  report.records = std::move(records);
  report.mean_rank = mean_rank;
  report.trials = cfg.eval.trials;
  report.epsilon = cfg.eval.epsilon;
  report.filtered = cfg.eval.filtered;
  write_file(cfg.output_dir / (stem + ".csv"), csv.str());
  write_file(cfg.output_dir / (stem + ".json"), report_json(report) + "\n");
  out << csv.str();
}

int cmd_experiment(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.which < 1 || o.which > 4) throw ConfigError("which", "expected 1, 2, 3 or 4");
  const RunConfig cfg = resolve_config(o);
  const KnowledgeGraph kg = load_data(cfg);
  const Checkpoint ckpt = obtain_checkpoint(o, cfg, kg, err);
  if (kg.valid.empty()) throw EmptyCalibration("the validation split is empty");
  const auto filter = make_filter(cfg, kg);
  const FilterIndex* fp = filter ? &*filter : nullptr;
  const auto pool = score_examples(ckpt.model, make_query_examples(kg.valid));
  const auto test = score_examples(ckpt.model, make_query_examples(kg.test));
  const double mr = ranking_metrics(test, fp).mean_rank;
  const CalibrationPlan plan{cfg.eval.n_cal, cfg.eval.cal_fraction};
  if (cfg.eval.n_cal > pool.size()) {
    throw ConfigError("eval.n_cal", fmt::format("exceeds the {} validation examples", pool.size()));
  }

  switch (o.which) {
    case 1: {
      std::vector<PredictorRecord> records;
      for (const auto& p : cfg.predictors) {
        records.push_back(evaluate_predictor(p.spec, pool, plan, test, fp, predictor_epsilon(p, cfg),
                                             cfg.eval.trials, cfg.seed));
      }
      write_report(cfg, "experiment1", std::move(records), mr, out);
      break;
    }
    case 2: {
      std::string summary = "predictor,spearman,overflow_count\n";
      for (const auto& p : cfg.predictors) {
        const auto fitted = fit_predictor(p.spec, pool, predictor_epsilon(p, cfg));
        const auto prof = adaptiveness(fitted, test, fp, cfg.eval.bin_width, cfg.eval.max_rank);
        std::ostringstream csv;
        write_adaptiveness_csv(csv, prof);
        write_file(cfg.output_dir / fmt::format("adaptiveness_{}.csv", p.spec.name()), csv.str());
        summary += fmt::format("{},{},{}\n", p.spec.name(), adaptiveness_correlation(prof), prof.overflow_count);
      }
      write_file(cfg.output_dir / "experiment2.csv", summary);
      out << summary;
      break;
    }
    case 3: {
      for (std::size_t i = 0; i < cfg.eval.calibration_sizes.size(); ++i) {
        if (cfg.eval.calibration_sizes[i] > pool.size()) {
          throw ConfigError(fmt::format("eval.calibration_sizes[{}]", i),
                            fmt::format("exceeds the {} validation examples", pool.size()));
        }
      }
      std::vector<PredictorRecord> records;
      for (const auto& p : cfg.predictors) {
        if (!p.spec.needs_calibration()) continue;
        auto rows = calibration_size_sweep(p.spec, pool, cfg.eval.calibration_sizes, test, fp,
                                           predictor_epsilon(p, cfg), cfg.eval.trials, cfg.seed);
        records.insert(records.end(), rows.begin(), rows.end());
      }
      write_report(cfg, "experiment3", std::move(records), mr, out);
      break;
    }
    case 4: {
      std::vector<PredictorSpec> specs;
      for (const auto& p : cfg.predictors) specs.push_back(p.spec);
      auto records = epsilon_sweep(specs, pool, plan, test, fp, cfg.eval.epsilons, cfg.eval.trials, cfg.seed);
      write_report(cfg, "experiment4", std::move(records), mr, out);
      break;
    }
  }
  return kExitOk;
}

// generate ---------------------------------------------------------------------

int cmd_generate(const Options& o, std::ostream&, std::ostream& err) {
  SyntheticConfig sc;
  fs::path dir = o.output_dir.value_or(".");
  if (!o.config.empty()) {
    const RunConfig cfg = resolve_config(o);
    if (!cfg.data.synthetic) throw ConfigError("data.synthetic", "missing");
    sc = *cfg.data.synthetic;
    dir = cfg.output_dir;
  }
  if (o.seed) sc.seed = *o.seed;
  const KnowledgeGraph kg = generate_synthetic_kg(sc);
  const std::pair<const char*, const std::vector<Triple>*> splits[] = {
      {"train.tsv", &kg.train}, {"valid.tsv", &kg.valid}, {"test.tsv", &kg.test}};
  for (const auto& [name, triples] : splits) {
    std::ostringstream ss;
    write_triples(ss, kg, *triples);
    write_file(dir / name, ss.str());
  }
  err << "wrote synthetic splits to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<std::string> nearest_names(std::string_view name, const std::vector<std::string>& dictionary,
                                       std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> d;
  d.reserve(dictionary.size());
  for (std::size_t i = 0; i < dictionary.size(); ++i) d.emplace_back(edit_distance(name, dictionary[i]), i);
  std::stable_sort(d.begin(), d.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, d.size()); ++i) out.push_back(dictionary[d[i].second]);
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformal answer sets for knowledge graph link prediction", "kgcp"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Run configuration (JSON)");
  app.add_option("--seed", o.seed, "Override the configured seed");
  app.add_option("--output-dir", o.output_dir, "Override the configured output directory");
  auto* f = app.add_flag("--filtered", o.filtered, "Filtered evaluation");
  auto* u = app.add_flag("--unfiltered", o.unfiltered, "Unfiltered evaluation");
  f->excludes(u);
  app.add_option("--epsilon", o.epsilon, "Error rate in (0, 1)");

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint path (default <output-dir>/model.ckpt)");

  auto* calibrate = app.add_subcommand("calibrate", "Write calibration profiles for the configured predictors");
  calibrate->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
  calibrate->add_option("--calibration", o.calibration, "Output path (default <output-dir>/calibration.json)");

  auto* predict = app.add_subcommand("predict", "Print the answer set of one query");
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
  predict->add_option("--calibration", o.calibration, "Calibration JSON");
  predict->add_option("--query", o.query, "'head relation ?' or '? relation tail'")->required();
  predict->add_option("--predictor", o.predictor, "negscore, softmax, naive, topk, top10, ...");

  auto* evaluate = app.add_subcommand("evaluate", "Ranking metrics on the test split");
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint path");

  auto* experiment = app.add_subcommand("experiment", "Run experiment 1, 2, 3 or 4");
  experiment->add_option("which", o.which, "Experiment number")->required()->check(CLI::Range(1, 4));
  experiment->add_option("--checkpoint", o.checkpoint, "Checkpoint path");

  auto* generate = app.add_subcommand("generate", "Write a synthetic graph as TSV splits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "kgcp: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(o, out, err);
    if (*calibrate) return cmd_calibrate(o, out, err);
    if (*predict) return cmd_predict(o, out, err);
    if (*evaluate) return cmd_evaluate(o, out, err);
    if (*experiment) return cmd_experiment(o, out, err);
    if (*generate) return cmd_generate(o, out, err);
  } catch (const ConfigError& e) {
    err << "kgcp: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrainingDiverged& e) {
    err << "kgcp: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const EmptyCalibration& e) {
    err << "kgcp: empty calibration: " << e.what() << '\n';
    return kExitEmptyCalibration;
  } catch (const UnknownName& e) {
    err << "kgcp: " << e.what() << '\n';
    return kExitUnknownName;
  } catch (const CheckpointError& e) {
    err << "kgcp: checkpoint: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const ParseError& e) {
    err << "kgcp: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "kgcp: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace kgcp::cli

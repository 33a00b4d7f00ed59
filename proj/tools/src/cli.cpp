#include "binfair/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "binfair/data.hpp"
#include "binfair/errors.hpp"
#include "binfair/info_theory.hpp"
#include "binfair/serialize.hpp"
#include "binfair/training.hpp"

namespace binfair::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string variant;
  std::optional<double> gamma;
  std::string data;
  std::string test;
  std::string model;
  std::string reps;
  std::string mode = "sampled";
  std::string probe_kind = "logistic";
  std::string group_column = "s";
  bool dump_reps = false;
  bool quiet = false;
  bool verbose = false;
};

// Shortest representation that round-trips.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

json load_config(const Options& o) { return o.config.empty() ? json::object() : parse_json(read_text(o.config), o.config); }

fs::path output_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown " + what + " key '" + key + "'");
}

TrainConfig resolve_train_config(const json& j, const Options& o) {
  TrainConfig cfg = j.is_null() ? TrainConfig{} : train_config_from_json(j.dump());
  if (o.seed) cfg.seed = *o.seed;
  if (!o.variant.empty()) cfg.variant = parse_variant(o.variant);
  if (o.gamma) cfg.gamma = *o.gamma;
  cfg.validate();
  return cfg;
}

json metrics_json(const MetricsReport& m) {
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["auc"] = m.auc;
  j["gpa"] = m.gpa;
  j["audc"] = m.audc;
  j["accuracy"] = m.accuracy;
  j["layer_mi_bound"] = m.layer_mi_bound;
  j["joint_mi"] = m.joint_mi;
  return j;
}

json epoch_json(const EpochRecord& r) {
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["type"] = "epoch";
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["mi_term"] = r.mi_term;
  j["ce_term"] = r.ce_term;
  j["layer_mi_bound"] = r.layer_mi_bound;
  j["train_auc"] = r.train_auc;
  return j;
}

// ---------------------------------------------------------------------------
// Representation dumps: CSV with columns t0..t{m-1} and a group column.

void write_reps_csv(const fs::path& path, const Matrix& reps, const std::vector<int>& groups) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < reps.cols(); ++i) out << "t" << i << ",";
  out << "s\n";
  for (Eigen::Index r = 0; r < reps.rows(); ++r) {
    for (Eigen::Index i = 0; i < reps.cols(); ++i) out << fmt(reps(r, i)) << ",";
    out << groups[static_cast<std::size_t>(r)] << "\n";
  }
  write_text(path, out.str());
}

std::pair<Matrix, std::vector<int>> read_reps_csv(const fs::path& path, const std::string& group_column) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty representation file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), group_column);
  if (it == header.end()) throw DataError(path.string() + ": group column '" + group_column + "' not found");
  const auto gcol = static_cast<std::size_t>(it - header.begin());
  if (header.size() < 2) throw DataError(path.string() + ": no representation columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    std::size_t c = 0;
    for (; std::getline(ss, cell, ','); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v))
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
      if (c == gcol) {
        if (v != std::floor(v) || v < 0) throw DataError(path.string() + ": line " + std::to_string(line_no) +
                                                         ": group must be a non-negative integer");
        groups.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
    if (c != header.size())
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(c) +
                      " fields, header has " + std::to_string(header.size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError(path.string() + ": no rows");
  Matrix reps(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t i = 0; i < rows[r].size(); ++i)
      reps(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = rows[r][i];
  return {std::move(reps), std::move(groups)};
}

RepresentationMode parse_mode(const std::string& s) {
  if (s == "sampled") return RepresentationMode::sampled;
  if (s == "expected") return RepresentationMode::expected;
  throw ConfigError("unknown representation mode '" + s + "' (expected sampled or expected)");
}

std::pair<Matrix, std::vector<int>> load_representations(const Options& o) {
  if (!o.reps.empty()) return read_reps_csv(o.reps, o.group_column);
  if (o.model.empty() || o.data.empty()) throw ConfigError("pass --reps, or --model together with --data");
  const Network net = load_network(o.model);
  const Dataset ds = load_dataset(o.data);
  return {extract_representations(net, ds, parse_mode(o.mode), o.seed.value_or(kEvaluationSeed)), ds.groups};
}

// ---------------------------------------------------------------------------
// Commands

std::string cmd_gen_data(const Options& o) {
  const json cfg = load_config(o);
  reject_unknown(cfg,
                 {"kind", "n", "d", "mi_ys", "label_signal", "group_signal", "seed", "classes", "side", "rho",
                  "train_size", "test_size", "flip_noise", "pixel_noise", "max_shift", "path", "schema",
                  "label_column", "group_column", "categorical_columns", "feature_columns", "group_range",
                  "standardize", "delimiter"},
                 "gen-data config");
  const auto kind = field<std::string>(cfg, "kind", "tabular");
  const fs::path dir = output_dir(o);
  auto save = [&](const std::string& stem, const Dataset& ds) {
    save_dataset(dir / (stem + ".bin"), ds);
    write_text(dir / (stem + ".json"), dataset_sidecar_json(ds));
  };

  if (kind == "tabular") {
    TabularSpec spec;
    spec.n = field(cfg, "n", spec.n);
    spec.d = field(cfg, "d", spec.d);
    spec.mi_ys = field(cfg, "mi_ys", spec.mi_ys);
    spec.label_signal = field(cfg, "label_signal", spec.label_signal);
    spec.group_signal = field(cfg, "group_signal", spec.group_signal);
    spec.seed = o.seed.value_or(field(cfg, "seed", spec.seed));
    const Dataset ds = gen_synthetic_tabular(spec);
    save("dataset", ds);
    return "gen-data: tabular n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dim()) + " -> " +
           (dir / "dataset.bin").string();
  }
  if (kind == "images") {
    BiasedImageSpec spec;
    spec.classes = field(cfg, "classes", spec.classes);
    spec.side = field(cfg, "side", spec.side);
    spec.rho = field(cfg, "rho", spec.rho);
    spec.train_size = field(cfg, "train_size", spec.train_size);
    spec.test_size = field(cfg, "test_size", spec.test_size);
    spec.flip_noise = field(cfg, "flip_noise", spec.flip_noise);
    spec.pixel_noise = field(cfg, "pixel_noise", spec.pixel_noise);
    spec.max_shift = field(cfg, "max_shift", spec.max_shift);
    spec.seed = o.seed.value_or(field(cfg, "seed", spec.seed));
    const auto [train, test] = gen_biased_images(spec);
    save("train", train);
    save("test", test);
    return "gen-data: images train=" + std::to_string(train.size()) + " test=" + std::to_string(test.size()) +
           " -> " + dir.string();
  }
  if (kind == "csv") {
    const auto path = field<std::string>(cfg, "path", "");
    if (path.empty()) throw ConfigError("csv data needs a 'path'");
    CsvSchema schema;
    const auto preset_name = field<std::string>(cfg, "schema", "");
    if (preset_name == "compas") schema = compas_schema();
    else if (preset_name == "adult") schema = adult_schema();
    else if (preset_name == "bank" || preset_name == "banks") schema = bank_schema();
    else if (!preset_name.empty()) throw ConfigError("unknown csv schema '" + preset_name + "'");
    schema.label_column = field(cfg, "label_column", schema.label_column);
    schema.group_column = field(cfg, "group_column", schema.group_column);
    schema.categorical_columns = field(cfg, "categorical_columns", schema.categorical_columns);
    schema.feature_columns = field(cfg, "feature_columns", schema.feature_columns);
    schema.standardize = field(cfg, "standardize", schema.standardize);
    if (cfg.contains("group_range")) {
      const auto range = field<std::vector<double>>(cfg, "group_range", {});
      if (range.size() != 2) throw ConfigError("'group_range' must be a [min, max] pair");
      schema.group_inside_range = std::pair{range[0], range[1]};
    }
    const auto delim = field<std::string>(cfg, "delimiter", std::string(1, schema.delimiter));
    if (delim.size() != 1) throw ConfigError("'delimiter' must be a single character");
    schema.delimiter = delim[0];
    if (schema.label_column.empty() || schema.group_column.empty())
      throw ConfigError("csv data needs 'label_column' and 'group_column' or a 'schema'");
    const Dataset ds = load_csv(path, schema);
    save("dataset", ds);
    return "gen-data: csv n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dim()) + " -> " +
           (dir / "dataset.bin").string();
  }
  throw ConfigError("unknown data kind '" + kind + "' (expected tabular, images or csv)");
}

std::string cmd_train(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw ConfigError("train needs --data");
  const Dataset ds = load_dataset(o.data);
  const TrainConfig cfg = resolve_train_config(o.config.empty() ? json() : load_config(o), o);
  const fs::path dir = output_dir(o);

  const FitResult result = fit(ds, cfg);
  save_network(dir / "model.bin", result.network);
  std::ostringstream log;
  for (const auto& rec : result.log) {
    log << epoch_json(rec).dump() << "\n";
    if (o.verbose)
      out << "epoch " << rec.epoch << " loss " << short_fmt(rec.loss) << " bound " << short_fmt(rec.layer_mi_bound)
          << " auc " << short_fmt(rec.train_auc) << "\n";
  }
  const bool held_out = !o.test.empty();
  const MetricsReport m = held_out ? evaluate(result.network, load_dataset(o.test)) : evaluate(result.network, ds);
  json summary = metrics_json(m);
  summary["type"] = "summary";
  summary["split"] = held_out ? "test" : "train";
  summary["config"] = json::parse(train_config_to_json(cfg));
  log << summary.dump() << "\n";
  write_text(dir / "log.jsonl", log.str());

  json metrics = metrics_json(m);
  metrics["split"] = held_out ? "test" : "train";
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_text(dir / "config.json", train_config_to_json(cfg) + "\n");
  return "train: " + std::string(to_string(cfg.variant)) + " gamma=" + short_fmt(cfg.gamma) + " auc=" +
         short_fmt(m.auc) + " gpa=" + short_fmt(m.gpa) + " audc=" + short_fmt(m.audc) + " -> " +
         (dir / "model.bin").string();
}

std::string cmd_evaluate(const Options& o) {
  if (o.model.empty() || o.data.empty()) throw ConfigError("evaluate needs --model and --data");
  const Network net = load_network(o.model);
  const Dataset ds = load_dataset(o.data);
  const auto seed = o.seed.value_or(kEvaluationSeed);
  const MetricsReport m = evaluate(net, ds, seed);
  const fs::path dir = output_dir(o);
  write_text(dir / "metrics.json", metrics_json(m).dump(2) + "\n");
  if (o.dump_reps)
    write_reps_csv(dir / "representations.csv", extract_representations(net, ds, parse_mode(o.mode), seed),
                   ds.groups);
  return "evaluate: auc=" + short_fmt(m.auc) + " gpa=" + short_fmt(m.gpa) + " audc=" + short_fmt(m.audc) +
         " joint_mi=" + short_fmt(m.joint_mi) + " -> " + (dir / "metrics.json").string();
}

std::string cmd_sweep(const Options& o) {
  if (o.data.empty()) throw ConfigError("sweep needs --data");
  const json cfg = load_config(o);
  reject_unknown(cfg, {"train", "gammas", "repeats", "folds"}, "sweep config");
  const Dataset ds = load_dataset(o.data);
  Options train_opts = o;
  train_opts.gamma.reset();
  const TrainConfig base = resolve_train_config(cfg.contains("train") ? cfg.at("train") : json(), train_opts);
  const auto gammas =
      field<std::vector<double>>(cfg, "gammas", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const auto repeats = field<std::size_t>(cfg, "repeats", 3);
  SweepOptions opts;
  opts.folds = field(cfg, "folds", opts.folds);
  opts.jobs = o.jobs;
  const SweepSummary s = gamma_sweep(ds, base, gammas, repeats, opts);

  const fs::path dir = output_dir(o);
  std::ostringstream csv, log;
  csv << "gamma,repeat,fold,seed,auc,one_minus_gpa,one_minus_audc,accuracy,layer_mi_bound,joint_mi\n";
  for (const auto& p : s.points) {
    csv << fmt(p.gamma) << "," << p.repeat << "," << p.fold << "," << p.seed << "," << fmt(p.auc) << ","
        << fmt(p.one_minus_gpa) << "," << fmt(p.one_minus_audc) << "," << fmt(p.accuracy) << ","
        << fmt(p.layer_mi_bound) << "," << fmt(p.joint_mi) << "\n";
    json rec;
    rec["schema_version"] = kArtifactSchemaVersion;
    rec["type"] = "trial";
    rec["gamma"] = p.gamma;
    rec["repeat"] = p.repeat;
    rec["fold"] = p.fold;
    rec["seed"] = p.seed;
    rec["auc"] = p.auc;
    rec["one_minus_gpa"] = p.one_minus_gpa;
    rec["one_minus_audc"] = p.one_minus_audc;
    rec["accuracy"] = p.accuracy;
    rec["layer_mi_bound"] = p.layer_mi_bound;
    rec["joint_mi"] = p.joint_mi;
    log << rec.dump() << "\n";
  }
  json summary;
  summary["schema_version"] = kArtifactSchemaVersion;
  summary["type"] = "summary";
  summary["corr_gamma_fairness"] = s.corr_gamma_fairness;
  summary["corr_gamma_auc"] = s.corr_gamma_auc;
  summary["kendall_gamma_fairness"] = s.kendall_gamma_fairness;
  summary["best"] = {{"gamma", s.best.gamma},
                     {"repeat", s.best.repeat},
                     {"fold", s.best.fold},
                     {"auc", s.best.auc},
                     {"one_minus_gpa", s.best.one_minus_gpa}};
  summary["config"] = json::parse(train_config_to_json(base));
  log << summary.dump() << "\n";
  write_text(dir / "tradeoff.csv", csv.str());
  write_text(dir / "log.jsonl", log.str());
  json metrics = summary;
  metrics.erase("type");
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  return "sweep: " + std::to_string(s.points.size()) + " trials corr(gamma,1-GPA)=" +
         short_fmt(s.corr_gamma_fairness) + " corr(gamma,AUC)=" + short_fmt(s.corr_gamma_auc) + " -> " +
         (dir / "tradeoff.csv").string();
}

std::string cmd_probe(const Options& o) {
  const auto [reps, groups] = load_representations(o);
  ProbeOptions opts;
  opts.kind = parse_probe_kind(o.probe_kind);
  opts.seed = o.seed.value_or(opts.seed);
  const ProbeReport r = probe_invariance(reps, groups, opts);
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["probe"] = std::string(to_string(r.kind));
  j["accuracy"] = r.accuracy;
  j["majority_rate"] = r.majority_rate;
  j["adrg"] = r.adrg;
  j["auc"] = r.auc;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  const fs::path dir = output_dir(o);
  write_text(dir / "probe.json", j.dump(2) + "\n");
  return "probe: " + std::string(to_string(r.kind)) + " accuracy=" + short_fmt(r.accuracy) +
         " majority=" + short_fmt(r.majority_rate) + " adrg=" + short_fmt(r.adrg) + " -> " +
         (dir / "probe.json").string();
}

std::string cmd_search(const Options& o) {
  if (o.data.empty()) throw ConfigError("search needs --data");
  const json cfg = load_config(o);
  reject_unknown(cfg, {"train", "space", "budget"}, "search config");
  const Dataset ds = load_dataset(o.data);
  Options train_opts = o;
  train_opts.gamma.reset();
  const TrainConfig base = resolve_train_config(cfg.contains("train") ? cfg.at("train") : json(), train_opts);
  const SearchSpace space = cfg.contains("space") ? search_space_from_json(cfg.at("space").dump()) : SearchSpace{};
  const auto budget = field<std::size_t>(cfg, "budget", 20);
  const SearchResult res = random_search(ds, base, space, budget, base.seed);

  const fs::path dir = output_dir(o);
  std::ostringstream log;
  for (const auto& t : res.trials) {
    json rec;
    rec["schema_version"] = kArtifactSchemaVersion;
    rec["type"] = "trial";
    rec["index"] = t.index;
    rec["auc"] = t.auc;
    rec["gpa"] = t.gpa;
    rec["audc"] = t.audc;
    rec["objective"] = t.objective;
    rec["config"] = json::parse(train_config_to_json(t.config));
    log << rec.dump() << "\n";
  }
  json summary;
  summary["schema_version"] = kArtifactSchemaVersion;
  summary["type"] = "summary";
  summary["best_objective"] = res.best_objective;
  summary["best"] = json::parse(train_config_to_json(res.best));
  log << summary.dump() << "\n";
  write_text(dir / "log.jsonl", log.str());
  write_text(dir / "best_config.json", train_config_to_json(res.best) + "\n");
  json metrics = summary;
  metrics.erase("type");
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  return "search: " + std::to_string(res.trials.size()) + " trials best objective=" + short_fmt(res.best_objective) +
         " -> " + (dir / "best_config.json").string();
}

std::string cmd_mi_audit(const Options& o, std::ostream& out) {
  const auto [reps, groups] = load_representations(o);
  const bool binary = (reps.array() * (1.0 - reps.array())).isZero(0.0);
  const GroupedThetas grouped(reps, groups);
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["rows"] = reps.rows();
  j["width"] = reps.cols();
  j["histogram"] = binary ? "hard" : "soft";
  json per = json::array();
  for (std::size_t i = 0; i < static_cast<std::size_t>(reps.cols()); ++i) {
    const double bits = neuron_mi(grouped, i).bits;
    per.push_back(bits);
    out << "neuron " << i << ": " << fmt(bits) << " bits\n";
  }
  const double bound = layer_mi_bound(grouped).bits;
  const double joint = joint_mi(reps, groups, binary ? HistogramKind::hard : HistogramKind::soft).bits;
  out << "per-neuron sum: " << fmt(bound) << " bits\n";
  out << "joint: " << fmt(joint) << " bits\n";
  j["neuron_mi"] = per;
  j["layer_mi_bound"] = bound;
  j["joint_mi"] = joint;
  if (!o.out.empty() && o.out != ".") write_text(output_dir(o) / "mi_audit.json", j.dump(2) + "\n");
  return "mi-audit: width=" + std::to_string(reps.cols()) + " sum=" + short_fmt(bound) + " joint=" + short_fmt(joint);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fair representation learning with stochastic binary layers.", "binfair"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  Options o;

  auto add_seed = [&](CLI::App* c, const std::string& what) {
    c->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed = s; }, what);
  };
  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory (created if missing)")->capture_default_str();
    c->add_flag("-q,--quiet", o.quiet, "Suppress the summary line");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset or convert a CSV file");
  gen->add_option("--config", o.config, "JSON spec: kind (tabular, images, csv) and its parameters");
  add_seed(gen, "Override the generator seed");
  add_common(gen);

  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--data", o.data, "Training dataset (.bin)")->required();
  train->add_option("--test", o.test, "Dataset for the reported metrics (default: training data)");
  train->add_option("--config", o.config, "Train config JSON");
  add_seed(train, "Override the training seed");
  train->add_option("--variant", o.variant, "MI term: bernoulli or mi")->check(CLI::IsMember({"bernoulli", "mi"}));
  train->add_option_function<double>("--gamma", [&](const double& g) { o.gamma = g; }, "Override gamma in [0, 1]");
  train->add_flag("-v,--verbose", o.verbose, "Print one line per epoch");
  add_common(train);

  auto* eval = app.add_subcommand("evaluate", "Evaluate a trained model on a dataset");
  eval->add_option("--model", o.model, "Model file (model.bin)")->required();
  eval->add_option("--data", o.data, "Dataset (.bin)")->required();
  add_seed(eval, "Seed of the sampled pass used for MI estimates");
  eval->add_flag("--dump-reps", o.dump_reps, "Also write representations.csv");
  eval->add_option("--mode", o.mode, "Representation mode for --dump-reps: sampled or expected")
      ->check(CLI::IsMember({"sampled", "expected"}))
      ->capture_default_str();
  add_common(eval);

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate over a grid of gamma values");
  sweep->add_option("--data", o.data, "Dataset (.bin)")->required();
  sweep->add_option("--config", o.config, "JSON with train, gammas, repeats and folds");
  add_seed(sweep, "Override the base seed");
  sweep->add_option("--jobs", o.jobs, "Trials run in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--variant", o.variant, "MI term: bernoulli or mi")->check(CLI::IsMember({"bernoulli", "mi"}));
  add_common(sweep);

  auto* probe = app.add_subcommand("probe", "Predict the group from representations");
  probe->add_option("--reps", o.reps, "Representation CSV (columns t0.., group column)");
  probe->add_option("--model", o.model, "Model file, used with --data instead of --reps");
  probe->add_option("--data", o.data, "Dataset, used with --model");
  probe->add_option("--mode", o.mode, "Representation mode: sampled or expected")
      ->check(CLI::IsMember({"sampled", "expected"}))
      ->capture_default_str();
  probe->add_option("--probe", o.probe_kind, "Classifier: logistic or extra_trees")
      ->check(CLI::IsMember({"logistic", "extra_trees"}))
      ->capture_default_str();
  probe->add_option("--group-column", o.group_column, "Group column of --reps")->capture_default_str();
  add_seed(probe, "Probe split and training seed");
  add_common(probe);

  auto* search = app.add_subcommand("search", "Seeded random hyperparameter search");
  search->add_option("--data", o.data, "Dataset (.bin)")->required();
  search->add_option("--config", o.config, "JSON with train, space and budget");
  add_seed(search, "Override the search seed");
  search->add_option("--variant", o.variant, "MI term of the base config: bernoulli or mi")
      ->check(CLI::IsMember({"bernoulli", "mi"}));
  add_common(search);

  auto* audit = app.add_subcommand("mi-audit", "Per-neuron and joint MI of representations");
  audit->add_option("--reps", o.reps, "Representation CSV (columns t0.., group column)");
  audit->add_option("--model", o.model, "Model file, used with --data instead of --reps");
  audit->add_option("--data", o.data, "Dataset, used with --model");
  audit->add_option("--mode", o.mode, "Representation mode: sampled or expected")
      ->check(CLI::IsMember({"sampled", "expected"}))
      ->capture_default_str();
  audit->add_option("--group-column", o.group_column, "Group column of --reps")->capture_default_str();
  add_seed(audit, "Seed of the sampled pass with --model");
  audit->add_option("--out", o.out, "Directory for mi_audit.json (optional)");
  audit->add_flag("-q,--quiet", o.quiet, "Suppress the summary line");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    if (e.get_exit_code() != 0) {
      err << app.help();
      return kExitUsage;
    }
    return kExitOk;
  }

  try {
    std::string summary;
    if (*gen) summary = cmd_gen_data(o);
    else if (*train) summary = cmd_train(o, out);
    else if (*eval) summary = cmd_evaluate(o);
    else if (*sweep) summary = cmd_sweep(o);
    else if (*probe) summary = cmd_probe(o);
    else if (*search) summary = cmd_search(o);
    else summary = cmd_mi_audit(o, out);
    if (!o.quiet) out << summary << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace binfair::cli

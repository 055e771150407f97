// Command-line front end: train generative flow models, sample synthetic
// traffic, score it against held-out data, check protocol rules, run
// downstream-task substitution curves, and reproduce the simulated-series
// experiment.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration/usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stan/bayes_net.hpp"
#include "stan/checkpoint.hpp"
#include "stan/error.hpp"
#include "stan/flow.hpp"
#include "stan/gmm.hpp"
#include "stan/metrics.hpp"
#include "stan/model.hpp"
#include "stan/rules.hpp"
#include "stan/sim.hpp"
#include "stan/table.hpp"
#include "stan/tasks.hpp"

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kConfigEnv = "STAN_CONFIG";

// ---------------------------------------------------------------------------
// Config file handling: flags win over config keys, config keys win over
// built-in defaults.
// ---------------------------------------------------------------------------
json load_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw stan::ConfigError("cannot open config file: " + path);
  json cfg = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (cfg.is_discarded())
    throw stan::ConfigError("config file is not valid JSON: " + path);
  if (!cfg.is_object())
    throw stan::ConfigError("config file must hold a JSON object: " + path);
  return cfg;
}

class ConfigMerge {
 public:
  explicit ConfigMerge(json cfg) : cfg_(std::move(cfg)) {}

  template <typename T>
  void merge(const CLI::Option* opt, const char* key, T& var) const {
    if (opt != nullptr && opt->count() > 0) return;  // flag wins
    if (!cfg_.contains(key)) return;
    try {
      var = cfg_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw stan::ConfigError(std::string("config key '") + key +
                              "': " + e.what());
    }
  }
  const json& raw() const { return cfg_; }

 private:
  json cfg_;
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------
std::vector<stan::FlowRecord> read_flows(const std::string& path,
                                         bool skip_bad_rows, size_t max_rows,
                                         std::ostream& log) {
  if (path.empty()) throw stan::ConfigError("no input CSV given");
  stan::CsvReadOptions opt;
  opt.skip_bad_rows = skip_bad_rows;
  opt.max_rows = max_rows;
  stan::CsvReadReport report;
  std::vector<stan::FlowRecord> flows = stan::read_flow_csv(path, opt, &report);
  log << path << ": " << report.parsed << " rows";
  if (report.skipped > 0) log << " (" << report.skipped << " skipped)";
  log << "\n";
  return flows;
}

stan::AttributeSchema load_schema(const std::string& path) {
  if (path.empty()) return stan::AttributeSchema::netflow();
  std::ifstream in(path);
  if (!in) throw stan::ConfigError("cannot open schema file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw stan::ConfigError("schema file is not valid JSON: " + path);
  return stan::AttributeSchema::from_json(j);
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw stan::IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw stan::IoError("failed writing " + path);
}

std::string checkpoint_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stan::IoError("cannot open checkpoint: " + path);
  char magic[8] = {0};
  in.read(magic, 8);
  if (in.gcount() != 8) throw stan::IoError("checkpoint too short: " + path);
  if (std::memcmp(magic, stan::kStanMagic, 8) == 0) return "stan";
  if (std::memcmp(magic, stan::kGmmMagic, 8) == 0) return "gmm";
  if (std::memcmp(magic, stan::kBnMagic, 8) == 0) return "bn";
  throw stan::IoError("unrecognized checkpoint format: " + path);
}

double parse_time(const std::string& s) {
  if (auto t = stan::parse_datetime(s)) return *t;
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (...) {
  }
  throw stan::ConfigError("cannot parse time value: " + s);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------
struct TrainArgs {
  std::string config, data, schema, model = "stan-b", out = "model.ckpt", log;
  std::string trunk;
  int k = 10, components = 10, epochs = 30, batch = 512, patience = 5;
  double lr_mdn = 1e-3, lr_softmax = 1e-2, val_fraction = 0.1;
  uint64_t seed = 1;
  int threads = 1;
  bool naive = false, skip_bad = false;
  size_t max_rows = 0;
  // dependence-model settings
  std::string bn_child = "byt", bn_parent = "pkt";
  int bn_parent_bins = 16, bn_value_bins = 64;
  bool bn_independent = false;

  std::map<std::string, CLI::Option*> opts;
};

int run_train(const TrainArgs& a0) {
  TrainArgs a = a0;
  const ConfigMerge cfg(load_config(a.config));
  auto m = [&](const char* key, auto& var) {
    auto it = a0.opts.find(key);
    cfg.merge(it == a0.opts.end() ? nullptr : it->second, key, var);
  };
  m("data", a.data);
  m("schema", a.schema);
  m("model", a.model);
  m("out", a.out);
  m("log", a.log);
  m("k", a.k);
  m("components", a.components);
  m("epochs", a.epochs);
  m("batch_size", a.batch);
  m("patience", a.patience);
  m("lr_mdn", a.lr_mdn);
  m("lr_softmax", a.lr_softmax);
  m("val_fraction", a.val_fraction);
  m("seed", a.seed);
  m("threads", a.threads);
  m("naive", a.naive);
  m("skip_bad_rows", a.skip_bad);
  m("max_rows", a.max_rows);
  m("bn_child", a.bn_child);
  m("bn_parent", a.bn_parent);
  m("bn_parent_bins", a.bn_parent_bins);
  m("bn_value_bins", a.bn_value_bins);
  m("bn_independent", a.bn_independent);

  if (a.model != "stan-a" && a.model != "stan-b" && a.model != "gmm" &&
      a.model != "bn")
    throw stan::ConfigError("unknown model kind: " + a.model +
                            " (expected stan-a, stan-b, gmm or bn)");

  const stan::AttributeSchema schema = load_schema(a.schema);
  const std::vector<stan::FlowRecord> flows =
      read_flows(a.data, a.skip_bad, a.max_rows, std::cerr);
  const stan::DataTable table = stan::flows_to_table(flows, schema);

  json log_json;
  log_json["model"] = a.model;
  log_json["rows"] = table.rows();

  if (a.model == "gmm") {
    std::vector<std::string> warnings;
    stan::GmmModel gmm =
        stan::GmmModel::fit(table, stan::EmConfig{.components = a.components},
                            &warnings);
    gmm.save(a.out);
    log_json["warnings"] = warnings;
  } else if (a.model == "bn") {
    stan::BnConfig bc;
    bc.child = a.bn_child;
    bc.parent = a.bn_parent;
    bc.parent_bins = a.bn_parent_bins;
    bc.value_bins = a.bn_value_bins;
    bc.dependence = !a.bn_independent;
    bc.em.components = a.components;
    std::vector<std::string> warnings;
    stan::BnModel bn = stan::BnModel::fit(table, bc, &warnings);
    bn.save(a.out);
    log_json["config"] = bc.to_json();
    log_json["warnings"] = warnings;
  } else {
    stan::TrainConfig tc;
    tc.mask = a.model == "stan-a" ? stan::MaskKind::kA : stan::MaskKind::kB;
    tc.k = a.k;
    tc.components = a.components;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.patience = a.patience;
    tc.lr_mdn = a.lr_mdn;
    tc.lr_softmax = a.lr_softmax;
    tc.val_fraction = a.val_fraction;
    tc.seed = a.seed;
    tc.threads = a.threads;
    tc.trunk.naive = a.naive;
    if (!a.trunk.empty()) {
      json tj = json::parse(a.trunk, nullptr, false);
      if (tj.is_discarded())
        throw stan::ConfigError("--trunk is not valid JSON: " + a.trunk);
      tc.trunk.blocks = tj.get<std::vector<std::vector<int>>>();
    } else if (cfg.raw().contains("trunk")) {
      const json& tj = cfg.raw().at("trunk");
      if (tj.is_array())
        tc.trunk.blocks = tj.get<std::vector<std::vector<int>>>();
      else
        tc.trunk = stan::TrunkConfig::from_json(tj);
      if (a.naive) tc.trunk.naive = true;
    }
    tc.validate();
    stan::TrainLog tlog;
    stan::StanModel model = stan::StanModel::train(table, tc, &tlog);
    model.save(a.out);
    std::cerr << "trained in " << tlog.seconds << "s\n";
    log_json["config"] = tc.to_json();
    log_json["training"] = tlog.to_json();
  }
  std::cerr << "checkpoint written to " << a.out << "\n";
  if (!a.log.empty()) write_json(a.log, log_json);
  return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------
struct GenerateArgs {
  std::string config, model, out, start, te_format = "datetime";
  size_t rows = 0;
  double horizon = 0;
  uint64_t seed = 1;
  size_t max_rows = 0;

  std::map<std::string, CLI::Option*> opts;
};

int run_generate(const GenerateArgs& a0) {
  GenerateArgs a = a0;
  const ConfigMerge cfg(load_config(a.config));
  auto m = [&](const char* key, auto& var) {
    auto it = a0.opts.find(key);
    cfg.merge(it == a0.opts.end() ? nullptr : it->second, key, var);
  };
  m("model", a.model);
  m("out", a.out);
  m("start_te", a.start);
  m("te_format", a.te_format);
  m("rows", a.rows);
  m("horizon", a.horizon);
  m("seed", a.seed);
  m("max_rows", a.max_rows);

  if (a.model.empty()) throw stan::ConfigError("generate: --model is required");
  if (a.out.empty()) throw stan::ConfigError("generate: --out is required");
  if (a.rows == 0 && a.horizon <= 0)
    throw stan::ConfigError("generate: need --rows and/or --horizon");
  if (a.te_format != "datetime" && a.te_format != "epoch")
    throw stan::ConfigError("generate: --te-format must be datetime or epoch");

  stan::GenerateOptions opt;
  opt.rows = a.rows;
  opt.horizon = a.horizon;
  opt.max_rows = a.max_rows;
  if (!a.start.empty()) opt.start_te = parse_time(a.start);

  stan::Rng rng(a.seed);
  std::vector<stan::FlowRecord> flows;
  const std::string kind = checkpoint_kind(a.model);
  if (kind == "stan") {
    const stan::StanModel model = stan::StanModel::load(a.model);
    flows = model.generate_flows(opt, rng);
  } else if (kind == "gmm") {
    const stan::GmmModel model = stan::GmmModel::load(a.model);
    flows = model.sample_flows(opt, rng);
  } else {
    const stan::BnModel model = stan::BnModel::load(a.model);
    flows = model.sample_flows(opt, rng);
  }
  const auto fmt = a.te_format == "epoch" ? stan::TimestampFormat::kEpochSeconds
                                          : stan::TimestampFormat::kDateTime;
  stan::write_flow_csv(a.out, flows, fmt);
  std::cerr << flows.size() << " rows written to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------
struct EvaluateArgs {
  std::string config, real, synth, out, hist_dir, model;
  int bins = 50, nll_bins = 100;
  bool skip_bad = false;
  size_t max_rows = 0;

  std::map<std::string, CLI::Option*> opts;
};

json port_share_json(const std::vector<stan::PortShare>& shares) {
  json arr = json::array();
  for (const auto& s : shares) arr.push_back({{"port", s.port}, {"share", s.share}});
  return arr;
}

json activity_summary(const stan::UserActivity& ua) {
  double peers = 0, bytes = 0;
  for (double v : ua.unique_peers) peers += v;
  for (double v : ua.byte_volume) bytes += v;
  const double n = ua.users.empty() ? 1.0 : double(ua.users.size());
  return {{"users", ua.users.size()},
          {"mean_unique_peers", peers / n},
          {"mean_byte_volume", bytes / n}};
}

void write_activity_csv(const std::string& path, const stan::UserActivity& ua) {
  std::ofstream out(path);
  if (!out) throw stan::IoError("cannot open " + path + " for writing");
  out << "ip,unique_peers,byte_volume\n";
  for (size_t i = 0; i < ua.users.size(); ++i)
    out << stan::ipv4_str(stan::ipv4_from_key(ua.users[i])) << ','
        << ua.unique_peers[i] << ',' << ua.byte_volume[i] << '\n';
}

void write_histograms(const std::string& dir, const stan::DataTable& real,
                      const stan::DataTable& synth, int bins) {
  std::filesystem::create_directories(dir);
  const stan::NllBinning binning = stan::make_nll_binning(real, synth, bins);
  const auto& schema = real.schema();
  for (int j = 0; j < schema.num_expanded(); ++j) {
    const auto& attr = schema.expanded()[size_t(j)];
    std::ofstream out(std::filesystem::path(dir) / (attr.name + ".csv"));
    if (!out) throw stan::IoError("cannot write histogram for " + attr.name);
    if (attr.cardinality == 0) {
      const auto& edges = binning.edges[size_t(j)];
      const auto rm = stan::histogram_mass(real.column(j), edges);
      const auto sm = stan::histogram_mass(synth.column(j), edges);
      out << "lo,hi,real,synth\n";
      for (size_t b = 0; b + 1 < edges.size(); ++b)
        out << edges[b] << ',' << edges[b + 1] << ',' << rm[b] << ',' << sm[b]
            << '\n';
    } else {
      const auto rm = stan::categorical_mass(real.column(j), attr.cardinality);
      const auto sm = stan::categorical_mass(synth.column(j), attr.cardinality);
      out << "category,real,synth\n";
      for (int c = 0; c < attr.cardinality; ++c)
        out << c << ',' << rm[size_t(c)] << ',' << sm[size_t(c)] << '\n';
    }
  }
}

int run_evaluate(const EvaluateArgs& a0) {
  EvaluateArgs a = a0;
  const ConfigMerge cfg(load_config(a.config));
  auto m = [&](const char* key, auto& var) {
    auto it = a0.opts.find(key);
    cfg.merge(it == a0.opts.end() ? nullptr : it->second, key, var);
  };
  m("real", a.real);
  m("synth", a.synth);
  m("out", a.out);
  m("hist_dir", a.hist_dir);
  m("model", a.model);
  m("bins", a.bins);
  m("nll_bins", a.nll_bins);
  m("skip_bad_rows", a.skip_bad);
  m("max_rows", a.max_rows);
  if (a.real.empty() || a.synth.empty())
    throw stan::ConfigError("evaluate: --real and --synth are required");

  const auto real_flows = read_flows(a.real, a.skip_bad, a.max_rows, std::cerr);
  const auto synth_flows =
      read_flows(a.synth, a.skip_bad, a.max_rows, std::cerr);
  const stan::AttributeSchema schema = stan::AttributeSchema::netflow();
  const stan::DataTable real = stan::flows_to_table(real_flows, schema);
  const stan::DataTable synth = stan::flows_to_table(synth_flows, schema);

  json report;

  json jsd = json::object();
  for (const auto& c : stan::compare_tables(real, synth, a.bins))
    jsd[c.attribute] = c.jsd;
  report["jsd"] = jsd;

  const stan::NllBinning binning =
      stan::make_nll_binning(real, synth, a.nll_bins);
  const stan::EmpiricalDensity synth_density(synth, binning);
  const stan::EmpiricalDensity real_density(real, binning);
  report["nll"] = {
      {"synthetic_on_real", stan::attribute_nll(synth_density, real, binning).to_json()},
      {"real_entropy", stan::attribute_nll(real_density, real, binning).to_json()}};

  if (!a.model.empty()) {
    const std::string kind = checkpoint_kind(a.model);
    if (kind == "stan") {
      const stan::StanModel model = stan::StanModel::load(a.model);
      const stan::StanDensity density(model, real);
      report["nll"]["model_on_real"] =
          stan::attribute_nll(density, real, binning).to_json();
    } else if (kind == "gmm") {
      const stan::GmmModel model = stan::GmmModel::load(a.model);
      report["nll"]["model_on_real"] =
          stan::attribute_nll(stan::GmmDensity(model), real, binning).to_json();
    } else {
      const stan::BnModel model = stan::BnModel::load(a.model);
      report["nll"]["model_on_real"] =
          stan::attribute_nll(stan::BnDensity(model), real, binning).to_json();
    }
    report["nll"]["model_checkpoint"] = a.model;
  }

  report["rules"] = {{"real", stan::check_rules(real_flows).to_json()},
                     {"synthetic", stan::check_rules(synth_flows).to_json()}};

  report["user_activity"] = {
      {"real", activity_summary(stan::user_activity(real_flows))},
      {"synthetic", activity_summary(stan::user_activity(synth_flows))}};

  json ports;
  for (const auto& [name, pr] :
       {std::pair{"tcp", stan::Protocol::kTcp},
        std::pair{"udp", stan::Protocol::kUdp}}) {
    ports[name] = {{"real", port_share_json(stan::top_ports(real_flows, pr))},
                   {"synthetic",
                    port_share_json(stan::top_ports(synth_flows, pr))}};
  }
  report["top_ports"] = ports;

  if (!a.hist_dir.empty()) {
    write_histograms(a.hist_dir, real, synth, a.nll_bins);
    write_activity_csv(
        (std::filesystem::path(a.hist_dir) / "user_activity_real.csv").string(),
        stan::user_activity(real_flows));
    write_activity_csv(
        (std::filesystem::path(a.hist_dir) / "user_activity_synth.csv").string(),
        stan::user_activity(synth_flows));
  }

  write_json(a.out, report);
  return 0;
}

// ---------------------------------------------------------------------------
// rules
// ---------------------------------------------------------------------------
struct RulesArgs {
  std::string config, data, out, annotate;
  bool skip_bad = false;
  size_t max_rows = 0;
  std::map<std::string, CLI::Option*> opts;
};

int run_rules(const RulesArgs& a0) {
  RulesArgs a = a0;
  const ConfigMerge cfg(load_config(a.config));
  auto m = [&](const char* key, auto& var) {
    auto it = a0.opts.find(key);
    cfg.merge(it == a0.opts.end() ? nullptr : it->second, key, var);
  };
  m("data", a.data);
  m("out", a.out);
  m("annotate", a.annotate);
  m("skip_bad_rows", a.skip_bad);
  m("max_rows", a.max_rows);

  const auto flows = read_flows(a.data, a.skip_bad, a.max_rows, std::cerr);
  stan::RuleOptions opt;
  opt.annotate = !a.annotate.empty();
  const stan::RuleReport report = stan::check_rules(flows, opt);
  if (!a.annotate.empty()) {
    std::ofstream out(a.annotate);
    if (!out) throw stan::IoError("cannot open " + a.annotate + " for writing");
    out << "row,first_failing_test\n";
    for (size_t i = 0; i < report.first_failure.size(); ++i)
      out << i << ',' << int(report.first_failure[i]) << '\n';
  }
  write_json(a.out, report.to_json());
  return 0;
}

// ---------------------------------------------------------------------------
// tasks
// ---------------------------------------------------------------------------
struct TasksArgs {
  std::string config, real, out, json_out, task = "protocol";
  std::vector<std::string> synth;
  std::vector<double> fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
  int folds = 5, lag = 8, trees = 50, depth = 12, hidden = 32, epochs = 50;
  uint64_t seed = 1;
  bool skip_bad = false;
  size_t max_rows = 0;
  std::map<std::string, CLI::Option*> opts;
};

int run_tasks(const TasksArgs& a0) {
  TasksArgs a = a0;
  const ConfigMerge cfg(load_config(a.config));
  auto m = [&](const char* key, auto& var) {
    auto it = a0.opts.find(key);
    cfg.merge(it == a0.opts.end() ? nullptr : it->second, key, var);
  };
  m("real", a.real);
  m("synth", a.synth);
  m("out", a.out);
  m("json", a.json_out);
  m("task", a.task);
  m("fractions", a.fractions);
  m("folds", a.folds);
  m("lag", a.lag);
  m("trees", a.trees);
  m("depth", a.depth);
  m("hidden", a.hidden);
  m("epochs", a.epochs);
  m("seed", a.seed);
  m("skip_bad_rows", a.skip_bad);
  m("max_rows", a.max_rows);

  if (a.task != "protocol" && a.task != "bytes")
    throw stan::ConfigError("tasks: --task must be protocol or bytes");
  if (a.real.empty()) throw stan::ConfigError("tasks: --real is required");
  if (a.synth.empty())
    throw stan::ConfigError("tasks: at least one --synth file is required");

  const auto real = read_flows(a.real, a.skip_bad, a.max_rows, std::cerr);
  std::vector<std::vector<stan::FlowRecord>> synth_sets;
  for (const auto& path : a.synth)
    synth_sets.push_back(read_flows(path, a.skip_bad, a.max_rows, std::cerr));

  stan::CurveConfig cc;
  cc.fractions = a.fractions;
  cc.folds = a.folds;
  cc.seed = a.seed;
  cc.task =
      a.task == "protocol" ? stan::TaskKind::kProtocol : stan::TaskKind::kBytes;
  cc.lag = a.lag;
  cc.forest.trees = a.trees;
  cc.forest.max_depth = a.depth;
  cc.mlp.hidden = a.hidden;
  cc.mlp.epochs = a.epochs;

  const std::vector<stan::CurvePoint> curve =
      stan::substitution_curve(real, synth_sets, cc);

  std::ostream* outp = &std::cout;
  std::ofstream file;
  if (!a.out.empty() && a.out != "-") {
    file.open(a.out);
    if (!file) throw stan::IoError("cannot open " + a.out + " for writing");
    outp = &file;
  }
  *outp << "fraction,mean,stddev";
  for (size_t s = 0; s < synth_sets.size(); ++s) *outp << ",set_" << s;
  *outp << "\n";
  for (const auto& p : curve) {
    *outp << p.fraction << ',' << p.mean << ',' << p.stddev;
    for (double v : p.per_set) *outp << ',' << v;
    *outp << "\n";
  }
  if (outp == &file && !file) throw stan::IoError("failed writing " + a.out);

  if (!a.json_out.empty()) {
    json arr = json::array();
    for (const auto& p : curve) arr.push_back(p.to_json());
    write_json(a.json_out, {{"task", a.task}, {"curve", arr}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------
struct SimulateArgs {
  std::string config, out, scatter_dir;
  size_t n = 10000;
  uint64_t seed = 1;
  int k = 3, components = 10, epochs = 200, batch = 128, threads = 1;
  bool full = false;
  std::map<std::string, CLI::Option*> opts;
};

int run_simulate(const SimulateArgs& a0) {
  SimulateArgs a = a0;
  const ConfigMerge cfg(load_config(a.config));
  auto m = [&](const char* key, auto& var) {
    auto it = a0.opts.find(key);
    cfg.merge(it == a0.opts.end() ? nullptr : it->second, key, var);
  };
  m("n", a.n);
  m("seed", a.seed);
  m("k", a.k);
  m("components", a.components);
  m("epochs", a.epochs);
  m("batch_size", a.batch);
  m("threads", a.threads);
  m("full", a.full);
  m("out", a.out);
  m("scatter_dir", a.scatter_dir);

  stan::SimExperimentConfig sc;
  sc.n = a.n;
  sc.seed = a.seed;
  sc.k = a.k;
  sc.components = a.components;
  sc.epochs = a.epochs;
  sc.batch_size = a.batch;
  sc.threads = a.threads;
  sc.naive = !a.full;
  sc.scatter_dir = a.scatter_dir;

  const stan::SimExperimentReport report = stan::run_sim_experiment(sc);
  std::cerr << "experiment completed in " << report.seconds << "s\n";
  write_json(a.out, report.to_json());
  return 0;
}

// ---------------------------------------------------------------------------
// schema infer
// ---------------------------------------------------------------------------
struct SchemaArgs {
  std::string data, out;
};

int run_schema_infer(const SchemaArgs& a) {
  if (a.data.empty()) throw stan::ConfigError("schema infer: --data required");
  std::ifstream in(a.data);
  if (!in) throw stan::IoError("cannot open " + a.data);
  std::string header;
  if (!std::getline(in, header))
    throw stan::IoError("empty CSV: " + a.data);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> cols;
  std::stringstream ss(header);
  std::string col;
  while (std::getline(ss, col, ',')) {
    size_t b = col.find_first_not_of(" \t");
    size_t e = col.find_last_not_of(" \t");
    cols.push_back(b == std::string::npos ? "" : col.substr(b, e - b + 1));
  }
  const std::vector<std::string> canonical = {"te", "td", "sa", "da", "sp",
                                              "dp", "pr", "flg", "pkt", "byt"};
  bool netflow = true;
  for (const auto& c : canonical)
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) netflow = false;

  stan::AttributeSchema schema;
  if (netflow) {
    schema = stan::AttributeSchema::netflow();
    std::cerr << "canonical flow columns found; using the netflow schema\n";
  } else {
    for (auto& c : cols)
      if (c.empty())
        throw stan::ConfigError("schema infer: blank column name in header");
    schema = stan::AttributeSchema::continuous(cols);
    std::cerr << "treating all " << cols.size()
              << " columns as continuous attributes\n";
  }
  write_json(a.out, schema.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic network-flow generation and evaluation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // train ------------------------------------------------------------------
  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Fit a model to a flow CSV");
  train->add_option("--config", ta.config, "JSON config file (flags win)");
  ta.opts["data"] = train->add_option("--data", ta.data, "training CSV");
  ta.opts["schema"] = train->add_option("--schema", ta.schema, "schema JSON");
  ta.opts["model"] =
      train->add_option("--model", ta.model, "stan-a | stan-b | gmm | bn");
  ta.opts["out"] = train->add_option("--out", ta.out, "checkpoint path");
  ta.opts["log"] = train->add_option("--log", ta.log, "training-log JSON path");
  ta.opts["k"] = train->add_option("-k,--k", ta.k, "context rows");
  ta.opts["components"] =
      train->add_option("-G,--components", ta.components, "mixture components");
  ta.opts["epochs"] = train->add_option("--epochs", ta.epochs);
  ta.opts["batch_size"] = train->add_option("--batch-size", ta.batch);
  ta.opts["patience"] = train->add_option("--patience", ta.patience);
  ta.opts["lr_mdn"] = train->add_option("--lr-mdn", ta.lr_mdn);
  ta.opts["lr_softmax"] = train->add_option("--lr-softmax", ta.lr_softmax);
  ta.opts["val_fraction"] =
      train->add_option("--val-fraction", ta.val_fraction);
  ta.opts["seed"] = train->add_option("--seed", ta.seed);
  ta.opts["threads"] = train->add_option("--threads", ta.threads);
  ta.opts["trunk"] = train->add_option(
      "--trunk", ta.trunk, "conv trunk blocks as JSON, e.g. [[8,8],[16,16]]");
  ta.opts["naive"] =
      train->add_flag("--naive", ta.naive, "no conv trunk (flattened window)");
  ta.opts["skip_bad_rows"] = train->add_flag("--skip-bad-rows", ta.skip_bad);
  ta.opts["max_rows"] = train->add_option("--max-rows", ta.max_rows);
  ta.opts["bn_child"] = train->add_option("--bn-child", ta.bn_child);
  ta.opts["bn_parent"] = train->add_option("--bn-parent", ta.bn_parent);
  ta.opts["bn_parent_bins"] =
      train->add_option("--bn-parent-bins", ta.bn_parent_bins);
  ta.opts["bn_value_bins"] =
      train->add_option("--bn-value-bins", ta.bn_value_bins);
  ta.opts["bn_independent"] =
      train->add_flag("--bn-independent", ta.bn_independent);

  // generate ----------------------------------------------------------------
  GenerateArgs ga;
  CLI::App* gen = app.add_subcommand("generate", "Sample synthetic flows");
  gen->add_option("--config", ga.config, "JSON config file (flags win)");
  ga.opts["model"] = gen->add_option("--model", ga.model, "checkpoint path");
  ga.opts["out"] = gen->add_option("--out", ga.out, "output CSV");
  ga.opts["rows"] = gen->add_option("--rows", ga.rows, "row-count stop");
  ga.opts["horizon"] =
      gen->add_option("--horizon", ga.horizon, "time-horizon stop (seconds)");
  ga.opts["start_te"] = gen->add_option(
      "--start-te", ga.start, "first-row time base (epoch or datetime)");
  ga.opts["seed"] = gen->add_option("--seed", ga.seed);
  ga.opts["te_format"] =
      gen->add_option("--te-format", ga.te_format, "datetime | epoch");
  ga.opts["max_rows"] = gen->add_option("--max-rows", ga.max_rows);

  // evaluate ----------------------------------------------------------------
  EvaluateArgs ea;
  CLI::App* eval = app.add_subcommand(
      "evaluate", "Score synthetic flows against a reference CSV");
  eval->add_option("--config", ea.config, "JSON config file (flags win)");
  ea.opts["real"] = eval->add_option("--real", ea.real, "reference CSV");
  ea.opts["synth"] = eval->add_option("--synth", ea.synth, "synthetic CSV");
  ea.opts["out"] = eval->add_option("--out", ea.out, "report JSON (- = stdout)");
  ea.opts["hist_dir"] =
      eval->add_option("--hist-dir", ea.hist_dir, "histogram CSV directory");
  ea.opts["model"] = eval->add_option(
      "--model", ea.model, "checkpoint for model-density scoring");
  ea.opts["bins"] = eval->add_option("--bins", ea.bins, "divergence bins");
  ea.opts["nll_bins"] = eval->add_option("--nll-bins", ea.nll_bins);
  ea.opts["skip_bad_rows"] = eval->add_flag("--skip-bad-rows", ea.skip_bad);
  ea.opts["max_rows"] = eval->add_option("--max-rows", ea.max_rows);

  // rules ---------------------------------------------------------------
  RulesArgs ra;
  CLI::App* rules =
      app.add_subcommand("rules", "Protocol-rule pass rates for a CSV");
  rules->add_option("--config", ra.config, "JSON config file (flags win)");
  ra.opts["data"] = rules->add_option("--data", ra.data, "flow CSV");
  ra.opts["out"] = rules->add_option("--out", ra.out, "report JSON");
  ra.opts["annotate"] = rules->add_option(
      "--annotate", ra.annotate, "per-row first-failing-test CSV");
  ra.opts["skip_bad_rows"] = rules->add_flag("--skip-bad-rows", ra.skip_bad);
  ra.opts["max_rows"] = rules->add_option("--max-rows", ra.max_rows);

  // tasks ---------------------------------------------------------------
  TasksArgs ka;
  CLI::App* tasks = app.add_subcommand(
      "tasks", "Downstream-task substitution curves (real vs synthetic)");
  tasks->add_option("--config", ka.config, "JSON config file (flags win)");
  ka.opts["real"] = tasks->add_option("--real", ka.real, "real CSV");
  ka.opts["synth"] = tasks->add_option("--synth", ka.synth,
                                       "synthetic CSV (repeatable)");
  ka.opts["out"] = tasks->add_option("--out", ka.out, "curve CSV (- = stdout)");
  ka.opts["json"] = tasks->add_option("--json", ka.json_out, "curve JSON");
  ka.opts["task"] = tasks->add_option("--task", ka.task, "protocol | bytes");
  ka.opts["fractions"] =
      tasks->add_option("--fractions", ka.fractions, "real-data fractions");
  ka.opts["folds"] = tasks->add_option("--folds", ka.folds);
  ka.opts["lag"] = tasks->add_option("--lag", ka.lag);
  ka.opts["trees"] = tasks->add_option("--trees", ka.trees);
  ka.opts["depth"] = tasks->add_option("--depth", ka.depth);
  ka.opts["hidden"] = tasks->add_option("--hidden", ka.hidden);
  ka.opts["epochs"] = tasks->add_option("--epochs", ka.epochs);
  ka.opts["seed"] = tasks->add_option("--seed", ka.seed);
  ka.opts["skip_bad_rows"] = tasks->add_flag("--skip-bad-rows", ka.skip_bad);
  ka.opts["max_rows"] = tasks->add_option("--max-rows", ka.max_rows);

  // simulate --------------------------------------------------------------
  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Two-variable autoregressive benchmark experiment");
  sim->add_option("--config", sa.config, "JSON config file (flags win)");
  sa.opts["n"] = sim->add_option("-n,--n", sa.n, "series length");
  sa.opts["seed"] = sim->add_option("--seed", sa.seed);
  sa.opts["k"] = sim->add_option("-k,--k", sa.k, "context rows");
  sa.opts["components"] = sim->add_option("-G,--components", sa.components);
  sa.opts["epochs"] = sim->add_option("--epochs", sa.epochs);
  sa.opts["batch_size"] = sim->add_option("--batch-size", sa.batch);
  sa.opts["threads"] = sim->add_option("--threads", sa.threads);
  sa.opts["full"] =
      sim->add_flag("--full", sa.full, "use the conv trunk (default naive)");
  sa.opts["out"] = sim->add_option("--out", sa.out, "report JSON (- = stdout)");
  sa.opts["scatter_dir"] =
      sim->add_option("--scatter-dir", sa.scatter_dir, "scatter CSV directory");

  // schema infer -----------------------------------------------------------
  SchemaArgs sca;
  CLI::App* schema = app.add_subcommand("schema", "Schema utilities");
  schema->require_subcommand(1);
  CLI::App* infer =
      schema->add_subcommand("infer", "Derive a schema JSON from a CSV header");
  infer->add_option("--data", sca.data, "CSV whose header to inspect");
  infer->add_option("--out", sca.out, "schema JSON path (- = stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return run_train(ta);
    if (*gen) return run_generate(ga);
    if (*eval) return run_evaluate(ea);
    if (*rules) return run_rules(ra);
    if (*tasks) return run_tasks(ka);
    if (*sim) return run_simulate(sa);
    if (*infer) return run_schema_infer(sca);
  } catch (const stan::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "drjcc/admm.hpp"
#include "drjcc/clustering.hpp"
#include "drjcc/config_io.hpp"
#include "drjcc/evaluate.hpp"
#include "drjcc/io_util.hpp"
#include "drjcc/profiles.hpp"
#include "drjcc/synthetic.hpp"

namespace fs = std::filesystem;
using namespace drjcc;

namespace {

constexpr const char* kVersion = "0.1.0";

struct StageClock {
  std::map<std::string, double> timings;
  std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();

  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings[stage] = std::chrono::duration<double>(now - mark).count();
    mark = now;
  }
};

struct OutputSink {
  fs::path dir;
  std::vector<std::string> files;

  explicit OutputSink(const std::string& d) : dir(d) {
    fs::create_directories(dir);
  }
  void write(const std::string& name, const std::string& content) {
    write_text_file((dir / name).string(), content);
    files.push_back(name);
  }
};

void write_manifest(OutputSink& sink, const std::string& command_line,
                    const std::string& hash_material, unsigned seed,
                    const StageClock& clock) {
  nlohmann::json j;
  j["command_line"] = command_line;
  j["config_hash"] = fnv1a_hex(hash_material);
  j["seeds"] = {{"seed", seed}};
  j["tool_version"] = kVersion;
  j["timings"] = clock.timings;
  auto files = sink.files;
  files.push_back("manifest.json");
  j["outputs"] = files;
  sink.write("manifest.json", j.dump(2) + "\n");
}

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

std::vector<double> parse_rho_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParseError("invalid --rho entry '" + item + "'");
    }
  }
  if (out.empty()) throw ParseError("empty --rho list");
  return out;
}

std::string schedules_csv(const CommunityConfig& config,
                          const std::vector<DecisionSchedule>& schedules,
                          const ScenarioSet& scenarios) {
  std::string out = "prosumer,hour,p,q_nominal,pb,ps,E,S,Pe\n";
  for (int n = 0; n < config.size(); ++n) {
    const auto& s = schedules[n];
    const Vec mean_dev =
        scenarios.prosumers[n].relative_deviations().colwise().mean();
    const Vec q_nominal = s.Q * mean_dev;
    for (int t = 0; t < config.horizon; ++t) {
      out += config.prosumers[n].id;
      out += ',' + std::to_string(t);
      out += ',' + format_sig12(s.p[t]);
      out += ',' + format_sig12(q_nominal[t]);
      out += ',' + format_sig12(s.pb[t]);
      out += ',' + format_sig12(s.ps[t]);
      out += ',' + format_sig12(s.E[t + 1]);
      out += ',' + format_sig12(s.S[t + 1]);
      out += ',' + format_sig12(s.Pe[t]);
      out += '\n';
    }
  }
  return out;
}

std::string trace_csv(const std::vector<AdmmTraceRow>& trace) {
  std::string out = "iter,primal_residual,aux_residual,objective,seconds\n";
  for (const auto& row : trace) {
    out += std::to_string(row.iter);
    out += ',' + format_sig12(row.primal_residual);
    out += ',' + format_sig12(row.aux_residual);
    out += ',' + format_sig12(row.objective);
    out += ',' + format_sig12(row.seconds);
    out += '\n';
  }
  return out;
}

struct CommonOptions {
  std::string config_path;
  std::string profiles_path;
  std::string rho_text;
  double epsilon = -1;
  double sigma = -1;
  double tol_primal = -1;
  double tol_dual = -1;
  int max_iters = -1;
  double train_fraction = 0.7;
  unsigned seed = 1;
  std::string output_dir = "out";

  void apply_overrides(CommunityConfig& config) const {
    if (!rho_text.empty()) {
      auto list = parse_rho_list(rho_text);
      if (list.size() == 1) config.ambiguity.rho = list[0];
    }
    if (epsilon > 0) config.risk.epsilon = epsilon;
    if (sigma > 0) config.admm.sigma = sigma;
    if (tol_primal > 0) config.admm.tol_primal = tol_primal;
    if (tol_dual > 0) config.admm.tol_dual = tol_dual;
    if (max_iters > 0) config.admm.max_iter = max_iters;
    config.validate();
  }

  std::string hash_material(const std::string& args) const {
    std::string material = args;
    if (!config_path.empty()) material += read_text_file(config_path);
    if (!profiles_path.empty()) material += read_text_file(profiles_path);
    return material;
  }
};

void add_common_inputs(CLI::App* cmd, CommonOptions& opt, bool need_profiles) {
  cmd->add_option("--config", opt.config_path, "community config JSON")
      ->required();
  auto* p = cmd->add_option("--profiles", opt.profiles_path, "profile CSV");
  if (need_profiles) p->required();
  cmd->add_option("--rho", opt.rho_text, "Wasserstein radius (or comma list)");
  cmd->add_option("--epsilon", opt.epsilon, "joint risk tolerance");
  cmd->add_option("--sigma", opt.sigma, "consensus penalty");
  cmd->add_option("--tol-primal", opt.tol_primal, "primal residual tolerance");
  cmd->add_option("--tol-dual", opt.tol_dual, "auxiliary residual tolerance");
  cmd->add_option("--max-iters", opt.max_iters, "coordination iteration cap");
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--output-dir", opt.output_dir, "output directory");
}

ClusterModel cluster_prosumers(const CommunityConfig& config,
                               const ScenarioSet& scenarios, int restarts,
                               unsigned seed, ElbowResult* elbow_out) {
  std::vector<FeatureVector> features;
  for (const auto& p : scenarios.prosumers)
    features.push_back(extract_features(p.nominal_load));
  const int n = config.size();
  int k = std::min(4, n);
  ElbowResult elbow;
  if (n >= 3) {
    elbow = elbow_select_k(features, 1, std::min(8, n), restarts, seed);
    k = elbow.k_star;
  }
  if (elbow_out) *elbow_out = elbow;
  ClusterModel model = kmeans(features, k, restarts, seed);
  if (k <= 4) model = label_clusters(model, features);
  return model;
}

int cmd_generate(const std::string& args, int prosumers, int samples,
                 const std::string& shares_text, int horizon,
                 const CommonOptions& opt) {
  StageClock clock;
  GeneratorSpec spec;
  spec.prosumers = prosumers;
  spec.samples = samples;
  spec.horizon = horizon;
  if (!opt.rho_text.empty()) spec.rho = parse_rho_list(opt.rho_text)[0];
  if (opt.epsilon > 0) spec.epsilon = opt.epsilon;
  if (!shares_text.empty()) {
    auto shares = parse_rho_list(shares_text);
    if (shares.size() != 4)
      throw ParseError("--shares needs 4 comma-separated values");
    for (int a = 0; a < 4; ++a) spec.shares[a] = shares[a];
  }
  auto [config, scenarios] = generate_synthetic_community(spec, opt.seed);
  clock.lap("generate");

  OutputSink sink(opt.output_dir);
  sink.write("community.json", community_config_to_json_text(config));
  sink.write("profiles.csv", profiles_to_csv_text(scenarios));
  clock.lap("write");
  write_manifest(sink, args, args, opt.seed, clock);
  return 0;
}

int cmd_cluster(const std::string& args, int restarts, const CommonOptions& opt) {
  StageClock clock;
  auto config = load_community_config(opt.config_path);
  auto scenarios = load_profiles(opt.profiles_path, config);
  clock.lap("load");

  ElbowResult elbow;
  ClusterModel model = cluster_prosumers(config, scenarios, restarts, opt.seed, &elbow);
  clock.lap("cluster");

  OutputSink sink(opt.output_dir);
  std::string clusters = "prosumer_id,cluster,label\n";
  for (int n = 0; n < config.size(); ++n) {
    const int c = model.assignment[n];
    const std::string label =
        model.labels.empty() ? "cluster" + std::to_string(c) : model.labels[c];
    clusters += config.prosumers[n].id + ',' + std::to_string(c) + ',' + label + '\n';
  }
  sink.write("clusters.csv", clusters);
  std::string curve = "k,wcss\n";
  for (size_t i = 0; i < elbow.ks.size(); ++i)
    curve += std::to_string(elbow.ks[i]) + ',' + format_sig12(elbow.wcss[i]) + '\n';
  sink.write("wcss_curve.csv", curve);
  clock.lap("write");
  write_manifest(sink, args, opt.hash_material(args), opt.seed, clock);
  return 0;
}

int cmd_run(const std::string& args, const CommonOptions& opt, bool baseline) {
  StageClock clock;
  auto config = load_community_config(opt.config_path);
  opt.apply_overrides(config);
  auto scenarios = load_profiles(opt.profiles_path, config);
  clock.lap("load");

  OutputSink sink(opt.output_dir);
  int exit_code = 0;
  if (baseline) {
    auto result = run_baseline(config, scenarios, config.ambiguity, config.risk);
    clock.lap("baseline");
    sink.write("schedules.csv", schedules_csv(config, result.schedules, scenarios));
    nlohmann::json j;
    j["objective"] = result.objective;
    sink.write("summary.json", j.dump(2) + "\n");
  } else {
    auto result = run_admm(config, scenarios, config.ambiguity, config.risk,
                           config.admm);
    clock.lap("run");
    sink.write("trace.csv", trace_csv(result.trace));
    sink.write("schedules.csv", schedules_csv(config, result.schedules, scenarios));
    if (!result.converged) {
      std::cerr << "error: coordination did not converge within "
                << config.admm.max_iter << " iterations (residuals "
                << result.primal_residual << ", " << result.aux_residual << ")\n";
      exit_code = 2;
    }
  }
  clock.lap("write");
  write_manifest(sink, args, opt.hash_material(args), opt.seed, clock);
  return exit_code;
}

int cmd_evaluate(const std::string& args, const CommonOptions& opt) {
  StageClock clock;
  auto config = load_community_config(opt.config_path);
  opt.apply_overrides(config);
  auto scenarios = load_profiles(opt.profiles_path, config);
  auto [train, test] = split_train_test(scenarios, opt.train_fraction, opt.seed);
  clock.lap("load");

  auto report = evaluate_instance(config, train, test, config.ambiguity,
                                  config.risk, config.admm);
  report.seed = opt.seed;
  clock.lap("evaluate");

  OutputSink sink(opt.output_dir);
  sink.write("report.json", evaluation_report_to_json(report));
  clock.lap("write");
  write_manifest(sink, args, opt.hash_material(args), opt.seed, clock);
  return 0;
}

int cmd_sweep(const std::string& args, int restarts, const CommonOptions& opt) {
  StageClock clock;
  auto config = load_community_config(opt.config_path);
  opt.apply_overrides(config);
  auto scenarios = load_profiles(opt.profiles_path, config);
  auto [train, test] = split_train_test(scenarios, opt.train_fraction, opt.seed);
  clock.lap("load");

  std::vector<double> rho_list = opt.rho_text.empty()
                                     ? std::vector<double>{0.2, 0.1, 0.03, 0.01, 0.001}
                                     : parse_rho_list(opt.rho_text);
  ClusterModel clusters;
  bool have_clusters = false;
  if (config.horizon == 24 && config.size() >= 2) {
    clusters = cluster_prosumers(config, train, restarts, opt.seed, nullptr);
    have_clusters = true;
  }
  clock.lap("cluster");

  auto rows = sweep_rho(config, train, test, rho_list, config.risk, config.admm,
                        have_clusters ? &clusters : nullptr);
  clock.lap("sweep");

  EvaluationReport report;
  report.seed = opt.seed;
  report.train_samples = train.sample_count();
  report.test_samples = test.sample_count();
  report.sweep = rows;

  if (have_clusters) {
    auto label_of = [&](int c) {
      return clusters.labels.empty() ? "cluster" + std::to_string(c)
                                     : clusters.labels[c];
    };
    std::map<int, std::map<double, double>> table;
    for (const auto& row : rows)
      for (int c = 0; c < clusters.k; ++c) {
        auto it = row.cluster_cost.find(label_of(c));
        if (it != row.cluster_cost.end()) table[c][row.rho] = it->second;
      }
    bool complete = static_cast<int>(table.size()) == clusters.k;
    for (const auto& [c, m] : table) complete = complete && m.size() >= 2;
    if (complete)
      for (const auto& [c, rho] : assign_cluster_radius(clusters, table))
        report.cluster_rho[label_of(c)] = rho;
  }

  std::vector<std::string> labels;
  for (const auto& row : rows)
    for (const auto& [label, cost] : row.cluster_cost)
      if (std::find(labels.begin(), labels.end(), label) == labels.end())
        labels.push_back(label);
  std::sort(labels.begin(), labels.end());

  std::string sweep = "rho,in_sample_cost,oos_cost,violation";
  for (const auto& l : labels) sweep += ",cost_" + l;
  sweep += '\n';
  std::string fig11 = "rho,cost,violation\n";
  for (const auto& row : rows) {
    sweep += format_sig12(row.rho);
    sweep += ',' + format_sig12(row.in_sample_objective);
    sweep += ',' + format_sig12(row.oos_cost_saa);
    sweep += ',' + format_sig12(row.violation);
    for (const auto& l : labels) {
      auto it = row.cluster_cost.find(l);
      sweep += ',' + format_sig12(it == row.cluster_cost.end() ? 0.0 : it->second);
    }
    sweep += '\n';
    fig11 += format_sig12(row.rho) + ',' + format_sig12(row.oos_cost_saa) + ',' +
             format_sig12(row.violation) + '\n';
  }

  OutputSink sink(opt.output_dir);
  sink.write("sweep.csv", sweep);
  sink.write("fig11.csv", fig11);
  sink.write("report.json", evaluation_report_to_json(report));
  clock.lap("write");
  write_manifest(sink, args, opt.hash_material(args), opt.seed, clock);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string args = join_args(argc, argv);
  CLI::App app{"peer-to-peer energy community coordination under uncertainty"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOptions opt;
  int prosumers = 10, samples = 30, horizon = 24, restarts = 10;
  std::string shares_text;

  auto* generate = app.add_subcommand("generate", "synthesize a community");
  generate->add_option("--prosumers", prosumers, "prosumer count");
  generate->add_option("--samples", samples, "scenario day count");
  generate->add_option("--horizon", horizon, "hours per day");
  generate->add_option("--shares", shares_text,
                       "archetype shares res,com,ind,pub (sum 1)");
  generate->add_option("--rho", opt.rho_text, "Wasserstein radius");
  generate->add_option("--epsilon", opt.epsilon, "joint risk tolerance");
  generate->add_option("--seed", opt.seed, "random seed");
  generate->add_option("--output-dir", opt.output_dir, "output directory");

  auto* cluster = app.add_subcommand("cluster", "cluster load profiles");
  add_common_inputs(cluster, opt, true);
  cluster->add_option("--restarts", restarts, "k-means restarts");

  auto* run = app.add_subcommand("run", "coordinate trades");
  add_common_inputs(run, opt, true);

  auto* baseline = app.add_subcommand("baseline", "standalone optimization");
  add_common_inputs(baseline, opt, true);

  auto* evaluate = app.add_subcommand("evaluate", "baseline-vs-proposed report");
  add_common_inputs(evaluate, opt, true);
  evaluate->add_option("--train-fraction", opt.train_fraction, "train share");

  auto* sweep = app.add_subcommand("sweep", "radius sweep");
  add_common_inputs(sweep, opt, true);
  sweep->add_option("--train-fraction", opt.train_fraction, "train share");
  sweep->add_option("--restarts", restarts, "k-means restarts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed())
      return cmd_generate(args, prosumers, samples, shares_text, horizon, opt);
    if (cluster->parsed()) return cmd_cluster(args, restarts, opt);
    if (run->parsed()) return cmd_run(args, opt, false);
    if (baseline->parsed()) return cmd_run(args, opt, true);
    if (evaluate->parsed()) return cmd_evaluate(args, opt);
    if (sweep->parsed()) return cmd_sweep(args, restarts, opt);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

// cascademix: infer two-component IC diffusion mixtures from engagement
// cascades and apply them to clustering, influencer selection and
// intervention evaluation.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascademix/analysis.hpp"
#include "cascademix/cascade.hpp"
#include "cascademix/diffusion.hpp"
#include "cascademix/graph.hpp"
#include "cascademix/indexing.hpp"
#include "cascademix/inference.hpp"
#include "cascademix/influence.hpp"
#include "cascademix/intervention.hpp"
#include "cascademix/params.hpp"
#include "cascademix/reports.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cascademix;

namespace {

struct CommonOpts {
  std::string cascades_path;
  std::string followers_path;
  std::string model_path;
  std::string window = "events:10";
  double tol = 0.01;
  unsigned max_iters = 200;
  unsigned restarts = 5;
  unsigned k = 2;
  unsigned rounds = 1000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
  unsigned threads = 0;
  bool force = false;
  double time_scale = 1.0;
  std::size_t min_engagements = 1;
};

std::uint64_t resolve_seed(const CommonOpts& opts) {
  if (opts.seed_given) return opts.seed;
  if (const char* env = std::getenv("CASCADEMIX_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw CLI::ValidationError("CASCADEMIX_SEED", "not a valid unsigned integer");
    }
  }
  return opts.seed;
}

fs::path prepare_out_dir(const CommonOpts& opts) {
  if (opts.out_dir.empty()) throw CLI::ValidationError("--out", "output directory required");
  fs::path dir(opts.out_dir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !opts.force) {
    throw std::runtime_error("output directory " + dir.string() +
                             " is not empty; pass --force to write into it");
  }
  fs::create_directories(dir);
  return dir;
}

CascadeSet load_cascades(const CommonOpts& opts) {
  if (opts.cascades_path.empty()) {
    throw CLI::ValidationError("--cascades", "cascade file required");
  }
  std::ifstream in(opts.cascades_path);
  if (!in) throw std::runtime_error("cannot open cascade file: " + opts.cascades_path);
  CascadeSet set = parse_cascades(in, opts.time_scale);
  if (opts.min_engagements > 1) {
    auto filtered = filter_min_engagements(set, opts.min_engagements);
    std::cerr << "retained " << filtered.retained_users.size() << " of " << set.users.size()
              << " users with >= " << opts.min_engagements << " engagements\n";
    set = std::move(filtered.set);
  }
  return set;
}

class Manifest {
 public:
  Manifest(const std::string& command, const fs::path& dir)
      : dir_(dir), start_(std::chrono::steady_clock::now()) {
    doc_["command"] = command;
    doc_["version"] = kVersion;
  }

  json& config() { return doc_["config"]; }

  void add_output(const std::string& name) { outputs_.push_back(name); }

  void write(std::uint64_t seed) {
    doc_["seed"] = seed;
    doc_["outputs"] = outputs_;
    auto elapsed = std::chrono::steady_clock::now() - start_;
    doc_["wall_time_s"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
    std::ofstream out(dir_ / "manifest.json");
    out << doc_.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  json doc_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<CascadeLabel> labels_of(const CascadeSet& set) {
  std::vector<CascadeLabel> labels;
  labels.reserve(set.cascades.size());
  for (const Cascade& c : set.cascades) labels.push_back(c.label);
  return labels;
}

bool has_both_labels(const std::vector<CascadeLabel>& labels) {
  bool t = false, f = false;
  for (CascadeLabel l : labels) {
    t |= l == CascadeLabel::kTrue;
    f |= l == CascadeLabel::kFake;
  }
  return t && f;
}

// Per-cascade responsibilities under a loaded model, via the from-scratch
// likelihood evaluator.
PosteriorAssignment posterior_under_model(const CascadeSet& set, const MixtureParams& params) {
  std::vector<std::vector<double>> loglik(set.cascades.size());
  for (std::size_t s = 0; s < set.cascades.size(); ++s) {
    loglik[s].resize(params.k());
    for (std::size_t m = 0; m < params.k(); ++m) {
      loglik[s][m] = cascade_log_likelihood(set.cascades[s], params.window, params.components[m]);
    }
  }
  return e_step(params.pi, loglik);
}

int cmd_generate(const CommonOpts& opts, const BenchmarkSpec& spec_in) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("generate", dir);
  BenchmarkSpec spec = spec_in;
  spec.rng_seed = resolve_seed(opts);
  manifest.config() = {{"nodes", spec.n_nodes},
                       {"edges", spec.n_edges},
                       {"sizes", spec.sample_sizes},
                       {"mixtures", spec.mixtures},
                       {"seed_exponent", spec.seed_exponent}};
  BenchmarkBundle bundle = generate_synthetic_benchmark(spec);
  double total_events = 0.0;
  std::size_t total_cascades = 0;
  for (const auto& block : bundle.blocks) {
    for (const Cascade& c : block.cascades.cascades) total_events += c.events.size();
    total_cascades += block.cascades.cascades.size();
  }
  for (const std::string& name : save_benchmark_bundle(bundle, dir)) {
    manifest.add_output(name);
  }
  manifest.config()["achieved_mean_cascade_size"] = total_events / total_cascades;
  manifest.write(spec.rng_seed);
  std::cout << "benchmark written to " << dir.string() << " (mean cascade size "
            << total_events / total_cascades << ")\n";
  return 0;
}

int cmd_infer(const CommonOpts& opts, bool hic) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("infer", dir);
  std::uint64_t seed = resolve_seed(opts);
  CascadeSet set = load_cascades(opts);
  WindowSpec window = WindowSpec::parse(opts.window);

  ActivationIndex index = index_cascades(set, window);
  CandidateEdgeIndex edges = derive_candidate_edges(set, index);

  EmConfig config;
  config.k = opts.k;
  config.init_seed = seed;
  config.max_iters = opts.max_iters;
  config.tol = opts.tol;
  config.restarts = opts.restarts;
  config.threads = opts.threads;
  manifest.config() = {{"cascades", opts.cascades_path}, {"window", window.to_text()},
                       {"tol", opts.tol},                {"max_iters", opts.max_iters},
                       {"restarts", opts.restarts},      {"k", opts.k},
                       {"hic", hic},                     {"min_engagements", opts.min_engagements}};

  FitResult result = hic ? fit_hic(set, index, edges, config) : fit(set, index, edges, config);
  if (!result.state.converged) {
    std::cerr << "warning: EM did not converge within " << opts.max_iters << " iterations\n";
  }
  if (result.state.degenerate_cascades > 0) {
    std::cerr << "warning: " << result.state.degenerate_cascades
              << " cascade evaluations had -inf likelihood under every component\n";
  }
  save_model(result.params, set.users, dir / "model.json", result.state.converged,
             result.state.nll_trace);
  manifest.add_output("model.json");
  manifest.write(seed);
  std::cout << "model written to " << (dir / "model.json").string() << " (pi =";
  for (double w : result.params.pi) std::cout << ' ' << w;
  std::cout << ", " << result.state.iterations << " iterations, final NLL/cascade "
            << result.state.nll_trace.back() << ")\n";
  return 0;
}

int cmd_cluster(const CommonOpts& opts, double holdout_fraction) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("cluster", dir);
  std::uint64_t seed = resolve_seed(opts);
  CascadeSet set = load_cascades(opts);
  if (opts.model_path.empty()) throw CLI::ValidationError("--model", "model file required");
  LoadedModel model = load_model(opts.model_path, set.users);
  manifest.config() = {{"cascades", opts.cascades_path},
                       {"model", opts.model_path},
                       {"holdout_fraction", holdout_fraction}};

  PosteriorAssignment posterior = posterior_under_model(set, model.params);
  ClusterAssignment clusters = assign_clusters(posterior);

  std::vector<CascadeLabel> truth = labels_of(set);
  ClusterLabelMap label_map;  // identity (cluster i -> component i) by default
  bool mapped = false;
  if (has_both_labels(truth)) {
    auto holdout = stratified_holdout(truth, holdout_fraction, seed);
    label_map = map_clusters_to_labels(clusters.cluster, truth, holdout);
    mapped = true;
  }

  std::vector<ClusterReportRow> rows(set.cascades.size());
  std::vector<CascadeLabel> predicted(set.cascades.size());
  for (std::size_t s = 0; s < set.cascades.size(); ++s) {
    predicted[s] = label_map.label_of_cluster[clusters.cluster[s]];
    rows[s] = {set.cascades[s].id, posterior.gamma[s][0], predicted[s], truth[s]};
  }
  write_cluster_report(rows, dir / "cluster_report.csv");
  manifest.add_output("cluster_report.csv");

  if (mapped) {
    // pi ordered as (true, fake) to match the label frequencies.
    std::vector<double> pi_tf(2);
    for (std::size_t m = 0; m < 2; ++m) {
      pi_tf[label_map.label_of_cluster[m] == CascadeLabel::kFake ? 1 : 0] = model.params.pi[m];
    }
    ClusteringMetrics metrics = clustering_metrics(predicted, truth, pi_tf);
    std::ofstream out(dir / "metrics.csv");
    out << "accuracy,f1,mae_pi,holdout_accuracy\n"
        << format_double(metrics.accuracy) << ',' << format_double(metrics.f1) << ','
        << format_double(metrics.mae_pi) << ',' << format_double(label_map.holdout_accuracy)
        << '\n';
    manifest.add_output("metrics.csv");
    std::cout << "accuracy " << metrics.accuracy << ", f1 " << metrics.f1 << ", pi MAE "
              << metrics.mae_pi << '\n';
  } else {
    std::cerr << "cascades carry no labels; cluster ids map to model components directly\n";
  }
  manifest.write(seed);
  return 0;
}

int cmd_stats(const CommonOpts& opts) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("stats", dir);
  CascadeSet set = load_cascades(opts);
  manifest.config() = {{"cascades", opts.cascades_path}, {"followers", opts.followers_path}};

  // The temporal test needs >= 2 events and a positive time span per
  // cascade; everything else carries no delay signal and is skipped.
  std::vector<Cascade> fake, tru;
  std::size_t skipped = 0;
  for (const Cascade& c : set.cascades) {
    if (c.label == CascadeLabel::kUnknown) continue;
    if (c.events.size() < 2 || !(c.events.back().time > c.events.front().time)) {
      ++skipped;
      continue;
    }
    (c.label == CascadeLabel::kFake ? fake : tru).push_back(c);
  }
  if (skipped > 0) {
    std::cerr << "skipped " << skipped << " cascades without usable delays\n";
  }
  if (fake.size() < 2 || tru.size() < 2) {
    throw std::runtime_error("stats needs >= 2 labeled cascades of each type with >= 2 events");
  }

  std::vector<TestResult> tests;
  tests.push_back(temporal_test(fake, tru));

  if (!opts.followers_path.empty()) {
    std::ifstream in(opts.followers_path);
    if (!in) throw std::runtime_error("cannot open follower graph: " + opts.followers_path);
    DirectedGraph followers = load_edge_list(in);
    auto r_of = [&](const std::vector<Cascade>& group) {
      std::vector<double> rs;
      for (const Cascade& c : group) {
        RetweetGraph rg = build_retweet_graph(c, set.users, followers);
        rs.push_back(weak_component_stats(rg, c.events.size()).proportion);
      }
      return rs;
    };
    std::vector<double> fake_r = r_of(fake), true_r = r_of(tru);
    tests.push_back(structural_test(fake_r, true_r));
    write_ecdf(empirical_cdf(fake_r), dir / "ecdf_fake.csv");
    write_ecdf(empirical_cdf(true_r), dir / "ecdf_true.csv");
    manifest.add_output("ecdf_fake.csv");
    manifest.add_output("ecdf_true.csv");
  }

  write_stats_report(tests, dir / "stats_report.csv");
  manifest.add_output("stats_report.csv");
  manifest.write(resolve_seed(opts));
  for (const TestResult& t : tests) {
    std::cout << t.name << ": statistic " << t.statistic << ", p " << t.p_value << '\n';
  }
  return 0;
}

int cmd_influencers(const CommonOpts& opts, unsigned top_k, const std::string& component) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("influencers", dir);
  std::uint64_t seed = resolve_seed(opts);
  if (opts.model_path.empty()) throw CLI::ValidationError("--model", "model file required");
  Interner names;
  LoadedModel model = load_model(opts.model_path, names);
  manifest.config() = {{"model", opts.model_path},
                       {"k", top_k},
                       {"rounds", opts.rounds},
                       {"component", component}};

  std::vector<std::size_t> which;
  for (std::size_t m = 0; m < model.params.k(); ++m) {
    if (component == "both" || component == model.params.component_names[m]) which.push_back(m);
  }
  if (which.empty()) {
    throw CLI::ValidationError("--component", "no component named '" + component + "'");
  }
  for (std::size_t m : which) {
    DirectedGraph skeleton = skeleton_from_component(model.params.components[m], names);
    InfluencerRanking ranking =
        greedy_influencers(skeleton, model.params.components[m], top_k, opts.rounds,
                           seed, opts.threads, model.params.component_names[m]);
    if (ranking.truncated) {
      std::cerr << "warning: K exceeds the node count; ranking truncated to "
                << ranking.nodes.size() << '\n';
    }
    // Ranked node ids are interner ids; re-emit as names.
    std::string file = "influencers_" + model.params.component_names[m] + ".csv";
    std::ofstream out(dir / file);
    out << "rank,node,marginal_gain,cumulative_sigma\n";
    for (std::size_t i = 0; i < ranking.nodes.size(); ++i) {
      out << (i + 1) << ',' << names.name(ranking.nodes[i]) << ','
          << format_double(ranking.marginal_gains[i]) << ','
          << format_double(ranking.cumulative_sigma[i]) << '\n';
    }
    manifest.add_output(file);
  }
  manifest.write(seed);
  return 0;
}

int cmd_intervene(const CommonOpts& opts, const std::string& mode,
                  std::vector<std::uint32_t> k_values, unsigned top_k) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("intervene", dir);
  std::uint64_t seed = resolve_seed(opts);
  CascadeSet set = load_cascades(opts);
  if (opts.model_path.empty()) throw CLI::ValidationError("--model", "model file required");
  LoadedModel model = load_model(opts.model_path, set.users);
  if (model.params.k() != 2) throw std::runtime_error("intervention needs a k=2 model");
  manifest.config() = {{"cascades", opts.cascades_path},
                       {"model", opts.model_path},
                       {"mode", mode},
                       {"k_values", k_values},
                       {"rounds", opts.rounds}};

  // Evaluation set: ground-truth fake cascades when labels exist, otherwise
  // the cascades the model assigns to the fake component.
  std::vector<Cascade> fake_cascades;
  std::vector<CascadeLabel> truth = labels_of(set);
  if (has_both_labels(truth)) {
    for (std::size_t s = 0; s < set.cascades.size(); ++s) {
      if (truth[s] == CascadeLabel::kFake) fake_cascades.push_back(set.cascades[s]);
    }
  } else {
    PosteriorAssignment posterior = posterior_under_model(set, model.params);
    ClusterAssignment clusters = assign_clusters(posterior);
    for (std::size_t s = 0; s < set.cascades.size(); ++s) {
      if (clusters.cluster[s] == 1) fake_cascades.push_back(set.cascades[s]);
    }
  }
  if (fake_cascades.empty()) throw std::runtime_error("no fake cascades to evaluate against");

  const ComponentParams& fake_params = model.params.components[1];
  std::vector<InterventionReport> reports;

  if (mode == "node") {
    DirectedGraph skeleton = skeleton_from_component(fake_params, set.users);
    InfluencerRanking ranking = greedy_influencers(
        skeleton, fake_params, top_k, opts.rounds, seed, opts.threads, "fake");
    std::vector<NodeId> mic_nodes = node_strategy_mic(ranking);
    std::vector<NodeId> topu_nodes = node_strategy_topu(set);
    auto capped = [&](std::size_t available) {
      std::vector<std::uint32_t> ks;
      for (std::uint32_t k : k_values) {
        if (k <= available) ks.push_back(k);
      }
      if (ks.size() < k_values.size()) {
        std::cerr << "warning: strategy list shorter than some K values; truncated\n";
      }
      return ks;
    };
    reports.push_back(
        node_intervention_eval(fake_cascades, mic_nodes, capped(mic_nodes.size()), "mic"));
    reports.push_back(
        node_intervention_eval(fake_cascades, topu_nodes, capped(topu_nodes.size()), "topu"));
    write_intervention_report(reports, dir / "intervention_node.csv");
    manifest.add_output("intervention_node.csv");
  } else if (mode == "edge") {
    DirectedGraph skeleton = skeleton_from_component(fake_params, set.users);
    std::vector<NodeId> seed_pool = cascade_head_users(fake_cascades);
    auto mic_edges = edge_strategy_mic(fake_params);
    auto random_edges = edge_strategy_random(skeleton, seed);
    std::vector<std::uint32_t> ks;
    for (std::uint32_t k : k_values) {
      if (k <= mic_edges.size()) ks.push_back(k);
    }
    if (ks.empty()) throw std::runtime_error("all K values exceed the edge count");
    reports.push_back(edge_intervention_eval(skeleton, fake_params, mic_edges, ks, opts.rounds,
                                             seed_pool, seed, 1, opts.threads, "mic"));
    reports.push_back(edge_intervention_eval(skeleton, fake_params, random_edges, ks, opts.rounds,
                                             seed_pool, seed, 1, opts.threads, "random"));
    write_intervention_report(reports, dir / "intervention_edge.csv");
    manifest.add_output("intervention_edge.csv");
  } else {
    throw CLI::ValidationError("--mode", "must be 'node' or 'edge'");
  }

  manifest.write(seed);
  for (const auto& report : reports) {
    std::cout << report.strategy << ':';
    for (std::size_t i = 0; i < report.k_values.size(); ++i) {
      std::cout << " K=" << report.k_values[i] << " -> "
                << report.mean_reduction_pct[i] << '%';
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_dump(const CommonOpts& opts) {
  fs::path dir = prepare_out_dir(opts);
  Manifest manifest("dump", dir);
  CascadeSet set = load_cascades(opts);
  std::ofstream out(dir / "cascades.jsonl");
  dump_cascades(set, out);
  manifest.config() = {{"cascades", opts.cascades_path}, {"time_scale", opts.time_scale}};
  manifest.add_output("cascades.jsonl");
  manifest.write(resolve_seed(opts));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascademix: diffusion mixture inference for fake/true cascade analysis"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--cascades", opts.cascades_path, "cascade JSONL file");
    cmd->add_option("--followers", opts.followers_path, "follower edge list (TSV)");
    cmd->add_option("--model", opts.model_path, "model JSON file");
    cmd->add_option("--window", opts.window, "lookback window, events:N or time:W");
    cmd->add_option("--tol", opts.tol, "EM convergence tolerance on NLL per cascade");
    cmd->add_option("--max-iters", opts.max_iters, "EM iteration cap");
    cmd->add_option("--restarts", opts.restarts, "EM random restarts");
    cmd->add_option("--k", opts.k, "mixture components");
    cmd->add_option("--rounds", opts.rounds, "Monte Carlo rounds");
    cmd->add_option("--seed", opts.seed, "master rng seed (fallback: CASCADEMIX_SEED)")
        ->each([&](const std::string&) { opts.seed_given = true; });
    cmd->add_option("--out", opts.out_dir, "output directory")->required();
    cmd->add_option("--threads", opts.threads, "worker thread cap (0 = cores)");
    cmd->add_flag("--force", opts.force, "write into a non-empty output directory");
    cmd->add_option("--time-scale", opts.time_scale,
                    "divide input timestamps by this factor (3600: seconds to hours)");
    cmd->add_option("--min-engagements", opts.min_engagements,
                    "drop users with fewer engagements across the cascade set");
  };

  // generate
  BenchmarkSpec spec;
  std::vector<std::string> mixture_args;
  auto* generate = app.add_subcommand("generate", "write a synthetic benchmark bundle");
  add_common(generate);
  generate->add_option("--nodes", spec.n_nodes, "graph node count");
  generate->add_option("--edges", spec.n_edges, "graph edge count");
  generate->add_option("--sizes", spec.sample_sizes, "cascade sample sizes")->delimiter(',');
  generate->add_option("--mixtures", mixture_args,
                       "mixture weights as piT:piF pairs, e.g. 0.5:0.5")
      ->delimiter(',');
  generate->add_option("--seed-exponent", spec.seed_exponent, "power-law seed size exponent");

  // infer
  bool hic = false;
  auto* infer = app.add_subcommand("infer", "fit the diffusion mixture with EM");
  add_common(infer);
  infer->add_flag("--hic", hic, "tie all edges of a component to one scalar");

  // cluster
  double holdout_fraction = 0.2;
  auto* cluster = app.add_subcommand("cluster", "assign cascades to components");
  add_common(cluster);
  cluster->add_option("--holdout-fraction", holdout_fraction,
                      "labeled fraction used to name the clusters");

  // stats
  auto* stats = app.add_subcommand("stats", "temporal and structural diffusion tests");
  add_common(stats);

  // influencers
  unsigned top_k = 100;
  std::string component = "both";
  auto* influencers = app.add_subcommand("influencers", "greedy influence maximization");
  add_common(influencers);
  influencers->add_option("--top-k", top_k, "ranking length");
  influencers->add_option("--component", component, "'true', 'fake' or 'both'");

  // intervene
  std::string mode = "node";
  std::vector<std::uint32_t> k_values = {1, 5, 10, 20};
  auto* intervene = app.add_subcommand("intervene", "node/edge intervention evaluation");
  add_common(intervene);
  intervene->add_option("--mode", mode, "'node' or 'edge'");
  intervene->add_option("--k-values", k_values, "intervention budgets")->delimiter(',');
  intervene->add_option("--top-k", top_k, "influencer ranking length for node mode");

  // dump
  auto* dump = app.add_subcommand("dump", "canonical cascade re-emission");
  add_common(dump);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!mixture_args.empty()) {
      spec.mixtures.clear();
      for (const std::string& arg : mixture_args) {
        auto colon = arg.find(':');
        if (colon == std::string::npos) {
          throw CLI::ValidationError("--mixtures", "expected piT:piF, got '" + arg + "'");
        }
        double t = std::stod(arg.substr(0, colon));
        double f = std::stod(arg.substr(colon + 1));
        spec.mixtures.push_back({t, f});
      }
    }
    if (generate->parsed()) return cmd_generate(opts, spec);
    if (infer->parsed()) return cmd_infer(opts, hic);
    if (cluster->parsed()) return cmd_cluster(opts, holdout_fraction);
    if (stats->parsed()) return cmd_stats(opts);
    if (influencers->parsed()) return cmd_influencers(opts, top_k, component);
    if (intervene->parsed()) return cmd_intervene(opts, mode, k_values, top_k);
    if (dump->parsed()) return cmd_dump(opts);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

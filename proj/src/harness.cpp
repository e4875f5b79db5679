#include "tokenopt/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace tokenopt {

namespace fs = std::filesystem;

Graph build_graph(const GraphConfig& cfg) {
  if (cfg.family == "cycle") return build_cycle(cfg.n);
  if (cfg.family == "torus") return build_torus(cfg.side, cfg.dim);
  if (cfg.family == "complete") return build_complete(cfg.n);
  if (cfg.family == "geometric") return build_random_geometric(cfg.n, cfg.radius, cfg.seed);
  if (cfg.family == "file") return load_edge_list(cfg.path);
  throw config_error("graph.family: unknown value '" + cfg.family + "'");
}

MarkovChain build_chain(const ChainConfig& cfg, const Graph* graph) {
  if (cfg.kind == "two_state") return chain_two_state(cfg.p);
  if (graph == nullptr) throw config_error("chain.kind: '" + cfg.kind + "' requires a graph block");
  if (cfg.kind == "srw") return chain_simple_rw(*graph);
  if (cfg.kind == "lazy") return chain_lazy_maxdeg(*graph);
  if (cfg.kind == "metropolis") return chain_metropolis_uniform(*graph);
  throw config_error("chain.kind: unknown value '" + cfg.kind + "'");
}

ObjectivePtr build_objective(const ObjectiveConfig& cfg, int n) {
  if (cfg.family == "sigmoid") {
    const SigmoidData mode = cfg.data_mode == "homogeneous" ? SigmoidData::homogeneous
                                                            : SigmoidData::two_hot_heterogeneous;
    return sigmoid_loss(n, cfg.dim, mode, cfg.seed, cfg.samples_per_node);
  }
  if (cfg.family == "quadratic_interpolation")
    return quadratic_interpolation(n, cfg.dim, cfg.seed, cfg.condition);
  if (cfg.family == "quadratic_heterogeneous") {
    QuadraticHetOptions o;
    o.condition = cfg.condition;
    o.spread = cfg.spread;
    o.shared_matrix = cfg.shared_matrix;
    o.linear_spectrum = cfg.linear_spectrum;
    return quadratic_heterogeneous(n, cfg.dim, cfg.seed, o);
  }
  if (cfg.family == "two_point") {
    if (n != 2) throw config_error("objective.family: two_point requires n = 2");
    return two_point_disagreement();
  }
  if (cfg.family == "worst_case") {
    const int node_w = cfg.node_w >= 0 ? cfg.node_w : n / 2;
    return worst_case_chain(cfg.K, cfg.alpha, cfg.b, cfg.node_v, node_w, n);
  }
  throw config_error("objective.family: unknown value '" + cfg.family + "'");
}

namespace {

AlgorithmKind algorithm_kind(const std::string& name) {
  if (name == "mc_sgd") return AlgorithmKind::mc_sgd;
  if (name == "mc_sgd_noisy") return AlgorithmKind::mc_sgd_noisy;
  if (name == "mc_sag") return AlgorithmKind::mc_sag;
  if (name == "sag_iid") return AlgorithmKind::sag_iid;
  if (name == "sgd_iid") return AlgorithmKind::sgd_iid;
  if (name == "sgd_reshuffle") return AlgorithmKind::sgd_reshuffle;
  if (name == "mc_sgd_wait_mix") return AlgorithmKind::mc_sgd_wait_mix;
  if (name == "dsgd_fixed") return AlgorithmKind::dsgd_fixed;
  if (name == "dsgd_randomized") return AlgorithmKind::dsgd_randomized;
  throw config_error("algorithm.name: unknown value '" + name + "'");
}

NoiseSpec noise_spec(const NoiseConfig& cfg) {
  NoiseSpec n;
  if (cfg.kind == "gaussian") {
    n.kind = NoiseSpec::Kind::gaussian;
    n.sd = cfg.sd;
  } else if (cfg.kind == "minibatch") {
    n.kind = NoiseSpec::Kind::minibatch;
    n.batch = cfg.batch;
  }
  return n;
}

}  // namespace

Problem build_problem(const RunConfig& cfg) {
  Problem p{std::nullopt,
            MarkovChain::from_matrix(Eigen::MatrixXd::Identity(1, 1)),
            nullptr,
            {},
            {},
            StartSpec::stationary(),
            0.0,
            "none"};
  const bool needs_graph = cfg.chain.kind != "two_state";
  if (needs_graph) p.graph = build_graph(cfg.graph);
  p.chain = build_chain(cfg.chain, p.graph ? &*p.graph : nullptr);
  const int n = p.chain.state_count();
  p.objective = build_objective(cfg.objective, n);
  p.start = cfg.chain.start_stationary ? StartSpec::stationary() : StartSpec::at(cfg.chain.start_node);

  if (cfg.algorithm.x0.empty()) {
    p.x0 = Eigen::VectorXd::Zero(p.objective->dim());
  } else {
    if (static_cast<int>(cfg.algorithm.x0.size()) != p.objective->dim())
      throw config_error("algorithm.x0: length must equal objective dimension");
    p.x0 = Eigen::Map<const Eigen::VectorXd>(cfg.algorithm.x0.data(),
                                             static_cast<Eigen::Index>(cfg.algorithm.x0.size()));
  }

  if (p.objective->minimum_value()) {
    p.f_star_ref = *p.objective->minimum_value();
    p.f_star_provenance = "exact";
  }

  AlgorithmSpec algo;
  algo.kind = algorithm_kind(cfg.algorithm.name);
  algo.noise = noise_spec(cfg.algorithm.noise);
  algo.sag_init = cfg.algorithm.sag_init == "zero" ? SagInit::zero : SagInit::perfect;
  algo.momentum = cfg.algorithm.momentum;

  const double L = p.objective->smoothness();
  if (cfg.algorithm.gamma_policy == "constant") {
    algo.gamma = GammaPolicy::constant(cfg.algorithm.gamma);
  } else if (cfg.algorithm.gamma_policy == "adaptive_eq7") {
    const double tau_hit =
        cfg.algorithm.tau_hit > 0.0 ? cfg.algorithm.tau_hit : tau_hit_exact(p.chain);
    algo.gamma = GammaPolicy::adaptive(L, tau_hit, cfg.algorithm.halved);
  } else {  // theorem51
    const std::int64_t tau_mix = mixing_time_exact(p.chain, p.chain.pi_min() / 2.0);
    double sigma_bar_sq = cfg.algorithm.sigma_bar_sq;
    if (sigma_bar_sq < 0.0)
      sigma_bar_sq = dissimilarity_stats(*p.objective, p.x0, 64, cfg.objective.seed).sigma_bar_sq;
    double f0 = p.objective->value(p.x0) - p.f_star_ref;
    if (f0 <= 0.0) f0 = 1.0;
    algo.gamma = GammaPolicy::constant(
        theorem51_stepsize(L, tau_mix, f0, sigma_bar_sq, std::max<std::int64_t>(1, cfg.replication.T)));
  }
  if (algo.kind == AlgorithmKind::mc_sgd_wait_mix) {
    algo.wait_k = cfg.algorithm.wait_k > 0
                      ? cfg.algorithm.wait_k
                      : static_cast<int>(mixing_time_exact(p.chain, p.chain.pi_min() / 2.0));
  }
  p.algo = algo;
  return p;
}

int worker_cap() {
  if (const char* env = std::getenv("TOKEN_OPT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<Trace> run_replicated(const Problem& problem, const std::vector<std::uint64_t>& seeds,
                                  std::int64_t T, std::int64_t log_every) {
  std::vector<Trace> traces(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::min<int>(worker_cap(), static_cast<int>(seeds.size()));
  const auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1)) {
      try {
        RunInputs in;
        in.chain = &problem.chain;
        in.objective = problem.objective;
        in.x0 = problem.x0;
        in.start = problem.start;
        in.T = T;
        in.log_every = log_every;
        in.seed = seeds[i];
        in.f_star_ref = problem.f_star_ref;
        in.f_star_provenance = problem.f_star_provenance;
        traces[i] = run(problem.algo, in);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!errors[i].empty())
      throw divergence_error("seed " + std::to_string(seeds[i]) + ": " + errors[i],
                             static_cast<std::int64_t>(i));
  return traces;
}

namespace {

void write_value(std::ostream& out, double v) {
  out << std::setprecision(17) << v;
}

}  // namespace

void write_trace_csv(const std::string& path, const Trace& trace, const std::string& config_line) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.imbue(std::locale::classic());
  if (!config_line.empty()) out << "# config: " << config_line << '\n';
  out << "# seed: " << trace.seed << '\n';
  out << "# f_star: ";
  write_value(out, trace.f_star_ref);
  out << " (" << trace.f_star_provenance << ")\n";
  out << "t,comms,f_gap,grad_norm_sq,node\n";
  for (const auto& r : trace.records) {
    out << r.t << ',' << r.comms << ',';
    write_value(out, r.f_gap);
    out << ',';
    write_value(out, r.grad_norm_sq);
    out << ',' << r.node << '\n';
  }
}

void write_aggregate_csv(const std::string& path, const AggregateStats& agg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.imbue(std::locale::classic());
  out << "t,comms,f_gap_mean,f_gap_sd,grad_mean,grad_sd\n";
  for (const auto& r : agg.rows) {
    out << r.t << ',' << r.comms << ',';
    write_value(out, r.f_gap_mean);
    out << ',';
    write_value(out, r.f_gap_sd);
    out << ',';
    write_value(out, r.grad_mean);
    out << ',';
    write_value(out, r.grad_sd);
    out << '\n';
  }
}

std::vector<std::string> cli_run(const std::string& config_path) {
  const RunConfig cfg = parse_config_file(config_path);
  const Problem problem = build_problem(cfg);
  const auto seeds = cfg.resolved_seeds();
  std::vector<std::string> written;
  try {
    fs::create_directories(cfg.output_dir);
    const std::string config_line = serialize_config(cfg).dump();
    const auto traces = run_replicated(problem, seeds, cfg.replication.T, cfg.replication.log_every);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const std::string path =
          (fs::path(cfg.output_dir) / ("trace_seed" + std::to_string(seeds[i]) + ".csv")).string();
      write_trace_csv(path, traces[i], config_line);
      written.push_back(path);
    }
    const std::string agg_path = (fs::path(cfg.output_dir) / "aggregate.csv").string();
    write_aggregate_csv(agg_path, aggregate_traces(traces));
    written.push_back(agg_path);
    return written;
  } catch (...) {
    for (const auto& path : written) {
      std::error_code ec;
      fs::remove(path, ec);
    }
    throw;
  }
}

// ---------------------------------------------------------------------------
// canned reproductions
// ---------------------------------------------------------------------------

namespace {

struct Fig1Setup {
  MarkovChain chain;
  ObjectivePtr objective;
  double f_star_ref;
  std::string f_star_provenance;
  std::int64_t edge_count;
};

Fig1Setup fig1_setup(const std::string& variant) {
  constexpr std::uint64_t kGraphSeed = 20230301;
  constexpr std::uint64_t kDataSeed = 42;
  if (variant == "homogeneous") {
    Graph g = build_random_geometric(50, 0.3, kGraphSeed);
    MarkovChain chain = chain_metropolis_uniform(g);
    ObjectivePtr obj = sigmoid_loss(50, 10, SigmoidData::homogeneous, kDataSeed);
    const double f_star =
        estimate_f_star(*obj, Eigen::VectorXd::Zero(obj->dim()), 1'000'000, 10, kDataSeed);
    return {std::move(chain), std::move(obj), f_star, "estimated", g.edge_count()};
  }
  if (variant == "heterogeneous") {
    Graph g = build_cycle(50);
    MarkovChain chain = chain_lazy_maxdeg(g);
    ObjectivePtr obj = sigmoid_loss(50, 10, SigmoidData::two_hot_heterogeneous, kDataSeed);
    double f_star = 0.0;
    std::string prov = "exact";
    if (obj->minimum_value()) {
      f_star = *obj->minimum_value();
    } else {
      f_star = estimate_f_star(*obj, Eigen::VectorXd::Zero(obj->dim()), 1'000'000, 10, kDataSeed);
      prov = "estimated";
    }
    return {std::move(chain), std::move(obj), f_star, prov, g.edge_count()};
  }
  throw config_error("reproduce-fig1 variant must be 'homogeneous' or 'heterogeneous'");
}

// stepsize selection frozen by procedure: start at 1/(2L) and halve until no
// seed trips the divergence guard
double tuned_gamma(const AlgorithmSpec& base, const Fig1Setup& setup,
                   const std::vector<std::uint64_t>& seeds, std::int64_t T,
                   std::int64_t log_every) {
  double gamma = 1.0 / (2.0 * setup.objective->smoothness());
  for (int k = 0; k < 30; ++k) {
    AlgorithmSpec algo = base;
    algo.gamma = GammaPolicy::constant(gamma);
    bool ok = true;
    for (const auto seed : seeds) {
      RunInputs in;
      in.chain = &setup.chain;
      in.objective = setup.objective;
      in.x0 = Eigen::VectorXd::Zero(setup.objective->dim());
      in.T = T;
      in.log_every = log_every;
      in.seed = seed;
      in.f_star_ref = setup.f_star_ref;
      in.f_star_provenance = setup.f_star_provenance;
      try {
        run(algo, in);
      } catch (const divergence_error&) {
        ok = false;
        break;
      }
    }
    if (ok) return gamma;
    gamma *= 0.5;
  }
  return gamma;
}

}  // namespace

std::vector<std::string> reproduce_fig1(const std::string& variant, const std::string& out_dir,
                                        const Fig1Options& opt) {
  Fig1Setup setup = fig1_setup(variant);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(opt.seeds));
  for (int i = 0; i < opt.seeds; ++i) seeds[static_cast<std::size_t>(i)] = 1000 + i;

  const double tau_hit = tau_hit_exact(setup.chain);
  const double L = setup.objective->smoothness();

  struct Entry {
    std::string name;
    AlgorithmSpec algo;
    std::int64_t T;
    std::int64_t log_every;
  };
  std::vector<Entry> entries;

  const std::int64_t budget = opt.comm_budget;
  {
    AlgorithmSpec a;
    a.kind = AlgorithmKind::mc_sgd;
    a.gamma = GammaPolicy::constant(tuned_gamma(a, setup, seeds, budget, budget));
    entries.push_back({"mc_sgd", a, budget, opt.log_every});
  }
  {
    AlgorithmSpec a;
    a.kind = AlgorithmKind::mc_sag;
    a.gamma = GammaPolicy::adaptive(L, tau_hit);
    entries.push_back({"mc_sag", a, budget, opt.log_every});
  }
  {
    AlgorithmSpec a;
    a.kind = AlgorithmKind::dsgd_fixed;
    const std::int64_t rounds = std::max<std::int64_t>(1, budget / setup.edge_count);
    a.gamma = GammaPolicy::constant(
        tuned_gamma(a, setup, seeds, rounds, std::max<std::int64_t>(1, rounds / 50)));
    entries.push_back({"dsgd_fixed", a, rounds, std::max<std::int64_t>(1, rounds / 100)});
  }
  {
    AlgorithmSpec a;
    a.kind = AlgorithmKind::dsgd_randomized;
    a.gamma = GammaPolicy::constant(tuned_gamma(a, setup, seeds, budget, budget));
    entries.push_back({"dsgd_randomized", a, budget, opt.log_every});
  }

  std::vector<std::string> written;
  fs::create_directories(out_dir);
  try {
    for (const auto& entry : entries) {
      Problem problem{std::nullopt,       setup.chain,
                      setup.objective,    entry.algo,
                      Eigen::VectorXd::Zero(setup.objective->dim()),
                      StartSpec::stationary(),
                      setup.f_star_ref,   setup.f_star_provenance};
      const auto traces = run_replicated(problem, seeds, entry.T, entry.log_every);
      for (std::size_t i = 0; i < traces.size(); ++i) {
        const std::string path =
            (fs::path(out_dir) /
             (variant + "_" + entry.name + "_seed" + std::to_string(seeds[i]) + ".csv"))
                .string();
        write_trace_csv(path, traces[i], variant + "/" + entry.name);
        written.push_back(path);
      }
      const std::string agg =
          (fs::path(out_dir) / (variant + "_" + entry.name + "_aggregate.csv")).string();
      write_aggregate_csv(agg, aggregate_traces(traces));
      written.push_back(agg);
    }
    return written;
  } catch (...) {
    for (const auto& path : written) {
      std::error_code ec;
      fs::remove(path, ec);
    }
    throw;
  }
}

ScalingResult scaling_study(const std::string& family, const std::vector<int>& sizes,
                            const std::string& chain_kind) {
  if (sizes.size() < 3) throw config_error("scaling: need at least 3 sizes");
  ScalingResult result;
  for (const int size : sizes) {
    Graph g = [&] {
      if (family == "cycle") return build_cycle(size);
      if (family == "torus2d") return build_torus(size, 2);
      if (family == "complete") return build_complete(size);
      throw config_error("scaling family must be cycle, torus2d or complete");
    }();
    ChainConfig cc;
    cc.kind = chain_kind;
    MarkovChain chain = build_chain(cc, &g);
    ScalingRow row;
    row.n = g.node_count();
    row.tau_hit = tau_hit_exact(chain);
    row.n_tau_mix = static_cast<double>(g.node_count()) *
                    static_cast<double>(mixing_time_exact(chain, chain.pi_min() / 2.0));
    result.rows.push_back(row);
  }
  std::vector<double> ns, hits, mixes;
  for (const auto& r : result.rows) {
    ns.push_back(r.n);
    hits.push_back(r.tau_hit);
    mixes.push_back(r.n_tau_mix);
  }
  result.tau_hit_fit = fit_loglog_slope(ns, hits);
  result.n_tau_mix_fit = fit_loglog_slope(ns, mixes);
  return result;
}

void write_scaling_csv(const std::string& path, const ScalingResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.imbue(std::locale::classic());
  out << "n,tau_hit,n_tau_mix\n";
  for (const auto& r : result.rows) {
    out << r.n << ',';
    out << std::setprecision(17) << r.tau_hit << ',' << r.n_tau_mix << '\n';
  }
  out << "# tau_hit slope: " << std::setprecision(17) << result.tau_hit_fit.slope
      << " stderr: " << result.tau_hit_fit.stderr_slope << " r2: " << result.tau_hit_fit.r2 << '\n';
  out << "# n_tau_mix slope: " << result.n_tau_mix_fit.slope
      << " stderr: " << result.n_tau_mix_fit.stderr_slope << " r2: " << result.n_tau_mix_fit.r2
      << '\n';
}

std::string chain_times_csv_header() {
  return "n,tau_mix_quarter,tau_mix,tau_rel,tau_hit,tau_cov_mc,tau_cov_half_width,tau_cov_matthews";
}

std::string chain_times_csv_row(int n, const ChainTimes& t) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << n << ',' << t.tau_mix_quarter << ',' << t.tau_mix << ',' << std::setprecision(17)
      << t.tau_rel << ',' << t.tau_hit << ',' << t.tau_cov_mc << ',' << t.tau_cov_half_width << ','
      << t.tau_cov_matthews;
  return out.str();
}

}  // namespace tokenopt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tokenopt/config.hpp"
#include "tokenopt/graph.hpp"
#include "tokenopt/markov_chain.hpp"
#include "tokenopt/objective.hpp"
#include "tokenopt/optimizers.hpp"
#include "tokenopt/stats.hpp"

namespace tokenopt {

Graph build_graph(const GraphConfig& cfg);
MarkovChain build_chain(const ChainConfig& cfg, const Graph* graph);
ObjectivePtr build_objective(const ObjectiveConfig& cfg, int n);

// A config resolved into runnable pieces: chain built, stepsize policy and
// f* reference fixed, x0 materialized.
struct Problem {
  std::optional<Graph> graph;
  MarkovChain chain;
  ObjectivePtr objective;
  AlgorithmSpec algo;
  Eigen::VectorXd x0;
  StartSpec start = StartSpec::stationary();
  double f_star_ref = 0.0;
  std::string f_star_provenance = "none";
};

Problem build_problem(const RunConfig& cfg);

// worker cap from TOKEN_OPT_THREADS (defaults to hardware concurrency)
int worker_cap();

// One independent deterministic run per seed, fanned out across workers.
std::vector<Trace> run_replicated(const Problem& problem, const std::vector<std::uint64_t>& seeds,
                                  std::int64_t T, std::int64_t log_every);

void write_trace_csv(const std::string& path, const Trace& trace, const std::string& config_line);
void write_aggregate_csv(const std::string& path, const AggregateStats& agg);

// `token-opt run`: one CSV per seed plus an aggregate CSV; partial outputs
// are removed on failure.
std::vector<std::string> cli_run(const std::string& config_path);

// Canned experiment: geometric graph with homogeneous sigmoid losses, or the
// 50-cycle with two-hot heterogeneous losses; runs mc_sgd, mc_sag, dsgd_fixed
// and dsgd_randomized over one shared communication budget.
struct Fig1Options {
  int seeds = 10;
  std::int64_t comm_budget = 200'000;
  std::int64_t log_every = 2'000;
};
std::vector<std::string> reproduce_fig1(const std::string& variant, const std::string& out_dir,
                                        const Fig1Options& opt = {});

struct ScalingRow {
  int n = 0;
  double tau_hit = 0.0;
  double n_tau_mix = 0.0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  LinearFit tau_hit_fit;
  LinearFit n_tau_mix_fit;
};

// Exact chain times across sizes with fitted log-log slopes. For the torus
// family the sizes are grid sides; otherwise node counts.
ScalingResult scaling_study(const std::string& family, const std::vector<int>& sizes,
                            const std::string& chain_kind);
void write_scaling_csv(const std::string& path, const ScalingResult& result);

std::string chain_times_csv_header();
std::string chain_times_csv_row(int n, const ChainTimes& times);

}  // namespace tokenopt

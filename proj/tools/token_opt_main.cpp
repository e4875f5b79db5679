// token-opt: random-walk stochastic gradient experiments and Markov-chain
// time computations, front-end over the C API in token_opt.h.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "token_opt.h"

namespace {

int exit_code_for(topt_status status) {
  switch (status) {
    case TOPT_OK:
      return 0;
    case TOPT_ERR_CONFIG:
      return 2;
    case TOPT_ERR_DIVERGENCE:
      return 3;
    default:
      return 1;
  }
}

int fail(topt_status status) {
  std::fprintf(stderr, "error: %s\n", topt_last_error());
  return exit_code_for(status);
}

struct GraphArgs {
  std::string family = "cycle";
  int n = 50;
  int side = 4;
  int dim = 2;
  double radius = 0.3;
  std::uint64_t seed = 0;
  std::string file;
};

void add_graph_options(CLI::App* cmd, GraphArgs& args) {
  cmd->add_option("--graph", args.family, "cycle|torus|complete|geometric|file")
      ->check(CLI::IsMember({"cycle", "torus", "complete", "geometric", "file"}));
  cmd->add_option("--n", args.n, "node count (cycle/complete/geometric)");
  cmd->add_option("--side", args.side, "torus side");
  cmd->add_option("--dim", args.dim, "torus dimension");
  cmd->add_option("--radius", args.radius, "geometric connection radius");
  cmd->add_option("--graph-seed", args.seed, "geometric graph seed");
  cmd->add_option("--graph-file", args.file, "edge-list file (family 'file')");
}

topt_status build_graph(const GraphArgs& args, topt_graph** out) {
  if (args.family == "cycle") return topt_graph_cycle(args.n, out);
  if (args.family == "torus") return topt_graph_torus(args.side, args.dim, out);
  if (args.family == "complete") return topt_graph_complete(args.n, out);
  if (args.family == "geometric")
    return topt_graph_geometric(args.n, args.radius, args.seed, out);
  return topt_graph_load(args.file.c_str(), out);
}

topt_status build_chain(const std::string& kind, double p, const topt_graph* g, topt_chain** out) {
  if (kind == "two-state" || kind == "two_state") return topt_chain_two_state(p, out);
  if (kind == "srw") return topt_chain_simple_rw(g, out);
  if (kind == "lazy") return topt_chain_lazy(g, out);
  return topt_chain_metropolis(g, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"token algorithms on Markov chains: chain times, optimizer runs, reproductions"};
  app.require_subcommand(1);

  // chain-times
  auto* times_cmd = app.add_subcommand("chain-times", "print chain time summary as one CSV row");
  GraphArgs graph_args;
  add_graph_options(times_cmd, graph_args);
  std::string chain_kind = "srw";
  double two_state_p = 0.5;
  double eps = 0.25;
  int mc_reps = 200;
  std::uint64_t seed = 1;
  times_cmd->add_option("--chain", chain_kind, "srw|lazy|metropolis|two-state")
      ->check(CLI::IsMember({"srw", "lazy", "metropolis", "two-state", "two_state"}));
  times_cmd->add_option("--p", two_state_p, "two-state cross probability");
  times_cmd->add_option("--eps", eps, "TV accuracy for the tau_mix_quarter column");
  times_cmd->add_option("--mc-reps", mc_reps, "cover-time Monte Carlo replicas per start");
  times_cmd->add_option("--seed", seed, "Monte Carlo seed");

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a JSON run config");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "path to JSON config")->required();

  // reproduce-fig1
  auto* fig_cmd = app.add_subcommand("reproduce-fig1", "canned comparison experiments");
  std::string variant = "homogeneous";
  int fig_seeds = 10;
  long long budget = 200000;
  std::string out_dir = "fig1_out";
  fig_cmd->add_option("--variant", variant, "homogeneous|heterogeneous")
      ->check(CLI::IsMember({"homogeneous", "heterogeneous"}));
  fig_cmd->add_option("--seeds", fig_seeds, "number of seeds");
  fig_cmd->add_option("--budget", budget, "total communication budget");
  fig_cmd->add_option("--out", out_dir, "output directory")->required();

  // scaling
  auto* scale_cmd = app.add_subcommand("scaling", "chain-time scaling across graph sizes");
  std::string family = "cycle";
  std::string sizes_arg = "16,32,64,128";
  std::string scale_chain = "lazy";
  std::string out_csv;
  scale_cmd->add_option("--family", family, "cycle|torus2d|complete")
      ->check(CLI::IsMember({"cycle", "torus2d", "complete"}));
  scale_cmd->add_option("--sizes", sizes_arg, "comma-separated sizes (torus2d: grid sides)");
  scale_cmd->add_option("--chain", scale_chain, "srw|lazy|metropolis")
      ->check(CLI::IsMember({"srw", "lazy", "metropolis"}));
  scale_cmd->add_option("--out", out_csv, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  if (times_cmd->parsed()) {
    topt_graph* graph = nullptr;
    const bool needs_graph = chain_kind != "two-state" && chain_kind != "two_state";
    if (needs_graph) {
      const topt_status st = build_graph(graph_args, &graph);
      if (st != TOPT_OK) return fail(st);
    }
    topt_chain* chain = nullptr;
    topt_status st = build_chain(chain_kind, two_state_p, graph, &chain);
    if (st != TOPT_OK) {
      topt_graph_free(graph);
      return fail(st);
    }
    topt_chain_times times;
    st = topt_chain_compute_times(chain, mc_reps, seed, eps, &times);
    if (st != TOPT_OK) {
      topt_chain_free(chain);
      topt_graph_free(graph);
      return fail(st);
    }
    std::printf("n,tau_mix_quarter,tau_mix,tau_rel,tau_hit,tau_cov_mc,tau_cov_half_width,tau_cov_matthews\n");
    std::printf("%d,%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n", topt_chain_states(chain),
                times.tau_mix_quarter, times.tau_mix, times.tau_rel, times.tau_hit,
                times.tau_cov_mc, times.tau_cov_half_width, times.tau_cov_matthews);
    topt_chain_free(chain);
    topt_graph_free(graph);
    return 0;
  }

  if (run_cmd->parsed()) {
    const topt_status st = topt_run_config_file(config_path.c_str());
    if (st != TOPT_OK) return fail(st);
    return 0;
  }

  if (fig_cmd->parsed()) {
    const topt_status st = topt_reproduce_fig1(variant.c_str(), fig_seeds, budget, out_dir.c_str());
    if (st != TOPT_OK) return fail(st);
    return 0;
  }

  if (scale_cmd->parsed()) {
    std::vector<int> sizes;
    std::stringstream ss(sizes_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        sizes.push_back(std::stoi(item));
      } catch (...) {
        std::fprintf(stderr, "error: bad size '%s'\n", item.c_str());
        return 2;
      }
    }
    const topt_status st =
        topt_scaling(family.c_str(), sizes.data(), static_cast<int>(sizes.size()),
                     scale_chain.c_str(), out_csv.c_str());
    if (st != TOPT_OK) return fail(st);
    return 0;
  }

  return 0;
}

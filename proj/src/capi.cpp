#include "token_opt.h"

#include <cstring>
#include <string>

#include "tokenopt/config.hpp"
#include "tokenopt/graph.hpp"
#include "tokenopt/harness.hpp"
#include "tokenopt/markov_chain.hpp"
#include "tokenopt/optimizers.hpp"

struct topt_graph {
  tokenopt::Graph g;
};

struct topt_chain {
  tokenopt::MarkovChain c;
};

namespace {

thread_local std::string g_last_error;

topt_status record_error(topt_status status, const char* what) {
  g_last_error = what != nullptr ? what : "unknown error";
  return status;
}

template <typename Fn>
topt_status guarded(Fn&& fn) {
  try {
    fn();
    return TOPT_OK;
  } catch (const tokenopt::config_error& e) {
    return record_error(TOPT_ERR_CONFIG, e.what());
  } catch (const tokenopt::divergence_error& e) {
    return record_error(TOPT_ERR_DIVERGENCE, e.what());
  } catch (const tokenopt::mixing_cap_error& e) {
    return record_error(TOPT_ERR_NUMERICAL, e.what());
  } catch (const std::invalid_argument& e) {
    return record_error(TOPT_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::ios_base::failure& e) {
    return record_error(TOPT_ERR_IO, e.what());
  } catch (const std::runtime_error& e) {
    return record_error(TOPT_ERR_NUMERICAL, e.what());
  } catch (const std::exception& e) {
    return record_error(TOPT_ERR_INTERNAL, e.what());
  } catch (...) {
    return record_error(TOPT_ERR_INTERNAL, "unknown exception");
  }
}

topt_status require_out(void* out) {
  if (out == nullptr) return record_error(TOPT_ERR_INVALID_ARGUMENT, "null output pointer");
  return TOPT_OK;
}

}  // namespace

extern "C" {

const char* topt_last_error(void) { return g_last_error.c_str(); }

/* ----- graphs ----- */

topt_status topt_graph_cycle(int n, topt_graph** out) {
  if (require_out(out) != TOPT_OK) return TOPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = new topt_graph{tokenopt::build_cycle(n)}; });
}

topt_status topt_graph_torus(int side, int dim, topt_graph** out) {
  if (require_out(out) != TOPT_OK) return TOPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = new topt_graph{tokenopt::build_torus(side, dim)}; });
}

topt_status topt_graph_complete(int n, topt_graph** out) {
  if (require_out(out) != TOPT_OK) return TOPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = new topt_graph{tokenopt::build_complete(n)}; });
}

topt_status topt_graph_geometric(int n, double radius, uint64_t seed, topt_graph** out) {
  if (require_out(out) != TOPT_OK) return TOPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = new topt_graph{tokenopt::build_random_geometric(n, radius, seed)}; });
}

topt_status topt_graph_load(const char* path, topt_graph** out) {
  if (require_out(out) != TOPT_OK || path == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new topt_graph{tokenopt::load_edge_list(std::string(path))}; });
}

topt_status topt_graph_save(const topt_graph* g, const char* path) {
  if (g == nullptr || path == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { tokenopt::save_edge_list(g->g, std::string(path)); });
}

int topt_graph_nodes(const topt_graph* g) { return g == nullptr ? -1 : g->g.node_count(); }

long long topt_graph_edges(const topt_graph* g) {
  return g == nullptr ? -1 : static_cast<long long>(g->g.edge_count());
}

int topt_graph_degree(const topt_graph* g, int v) {
  if (g == nullptr || v < 0 || v >= g->g.node_count()) return -1;
  return g->g.degree(v);
}

int topt_graph_diameter(const topt_graph* g) {
  return g == nullptr ? -1 : tokenopt::diameter(g->g);
}

void topt_graph_free(topt_graph* g) { delete g; }

/* ----- chains ----- */

topt_status topt_chain_simple_rw(const topt_graph* g, topt_chain** out) {
  if (require_out(out) != TOPT_OK || g == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new topt_chain{tokenopt::chain_simple_rw(g->g)}; });
}

topt_status topt_chain_lazy(const topt_graph* g, topt_chain** out) {
  if (require_out(out) != TOPT_OK || g == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new topt_chain{tokenopt::chain_lazy_maxdeg(g->g)}; });
}

topt_status topt_chain_metropolis(const topt_graph* g, topt_chain** out) {
  if (require_out(out) != TOPT_OK || g == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new topt_chain{tokenopt::chain_metropolis_uniform(g->g)}; });
}

topt_status topt_chain_two_state(double p, topt_chain** out) {
  if (require_out(out) != TOPT_OK) return TOPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = new topt_chain{tokenopt::chain_two_state(p)}; });
}

int topt_chain_states(const topt_chain* c) { return c == nullptr ? -1 : c->c.state_count(); }

double topt_chain_prob(const topt_chain* c, int v, int w) {
  if (c == nullptr || v < 0 || w < 0 || v >= c->c.state_count() || w >= c->c.state_count())
    return -1.0;
  return c->c.transition()(v, w);
}

double topt_chain_stationary(const topt_chain* c, int v) {
  if (c == nullptr || v < 0 || v >= c->c.state_count()) return -1.0;
  return c->c.stationary()[v];
}

int topt_chain_reversible(const topt_chain* c) {
  return c == nullptr ? -1 : (c->c.reversible() ? 1 : 0);
}

void topt_chain_free(topt_chain* c) { delete c; }

topt_status topt_chain_hitting_time(const topt_chain* c, int v, int w, double* out) {
  if (c == nullptr || out == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  if (v < 0 || w < 0 || v >= c->c.state_count() || w >= c->c.state_count())
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "node out of range");
  return guarded([&] { *out = tokenopt::hitting_times_exact(c->c)(v, w); });
}

topt_status topt_chain_sample_trajectory(const topt_chain* c, int v0, long long T, uint64_t seed,
                                         int* out_nodes) {
  if (c == nullptr || out_nodes == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto start = v0 < 0 ? tokenopt::StartSpec::stationary() : tokenopt::StartSpec::at(v0);
    const auto path = tokenopt::sample_trajectory(c->c, start, T, seed);
    std::memcpy(out_nodes, path.data(), path.size() * sizeof(int));
  });
}

topt_status topt_chain_compute_times(const topt_chain* c, int mc_reps, uint64_t seed,
                                     double eps_quarter, topt_chain_times* out) {
  if (c == nullptr || out == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    tokenopt::ChainTimes t = tokenopt::chain_times(c->c, mc_reps, seed);
    if (eps_quarter > 0.0 && eps_quarter != 0.25)
      t.tau_mix_quarter = tokenopt::mixing_time_exact(c->c, eps_quarter);
    out->tau_mix_quarter = t.tau_mix_quarter;
    out->tau_mix = t.tau_mix;
    out->tau_rel = t.tau_rel;
    out->tau_hit = t.tau_hit;
    out->tau_cov_mc = t.tau_cov_mc;
    out->tau_cov_half_width = t.tau_cov_half_width;
    out->tau_cov_matthews = t.tau_cov_matthews;
  });
}

/* ----- harness ----- */

topt_status topt_run_config_file(const char* config_path) {
  if (config_path == nullptr) return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { tokenopt::cli_run(std::string(config_path)); });
}

topt_status topt_reproduce_fig1(const char* variant, int seeds, long long comm_budget,
                                const char* out_dir) {
  if (variant == nullptr || out_dir == nullptr)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    tokenopt::Fig1Options opt;
    if (seeds > 0) opt.seeds = seeds;
    if (comm_budget > 0) opt.comm_budget = comm_budget;
    tokenopt::reproduce_fig1(std::string(variant), std::string(out_dir), opt);
  });
}

topt_status topt_scaling(const char* family, const int* sizes, int n_sizes,
                         const char* chain_kind, const char* out_csv) {
  if (family == nullptr || sizes == nullptr || out_csv == nullptr || n_sizes <= 0)
    return record_error(TOPT_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::vector<int> sz(sizes, sizes + n_sizes);
    const std::string kind = chain_kind == nullptr ? "lazy" : chain_kind;
    const auto result = tokenopt::scaling_study(std::string(family), sz, kind);
    tokenopt::write_scaling_csv(std::string(out_csv), result);
  });
}

}  // extern "C"

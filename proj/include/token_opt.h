/* C API for the token-opt library: random-walk (token) stochastic gradient
 * methods and Markov-chain mixing/hitting/cover time machinery.
 *
 * All functions return a topt_status; on failure topt_last_error() gives a
 * thread-local human-readable message. Objects are opaque handles released
 * with their _free function. */

#ifndef TOKEN_OPT_H
#define TOKEN_OPT_H

#include <stdint.h>

#if defined(_WIN32)
#define TOPT_API __declspec(dllexport)
#else
#define TOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum topt_status {
  TOPT_OK = 0,
  TOPT_ERR_INVALID_ARGUMENT = 1,
  TOPT_ERR_CONFIG = 2,     /* config schema violation (CLI exit code 2) */
  TOPT_ERR_DIVERGENCE = 3, /* numerical divergence (CLI exit code 3) */
  TOPT_ERR_NUMERICAL = 4,  /* non-convergent solve, mixing cap, ... */
  TOPT_ERR_IO = 5,
  TOPT_ERR_INTERNAL = 6
} topt_status;

typedef struct topt_graph topt_graph;
typedef struct topt_chain topt_chain;

TOPT_API const char* topt_last_error(void);

/* ----- graphs ----- */

TOPT_API topt_status topt_graph_cycle(int n, topt_graph** out);
TOPT_API topt_status topt_graph_torus(int side, int dim, topt_graph** out);
TOPT_API topt_status topt_graph_complete(int n, topt_graph** out);
TOPT_API topt_status topt_graph_geometric(int n, double radius, uint64_t seed, topt_graph** out);
TOPT_API topt_status topt_graph_load(const char* path, topt_graph** out);
TOPT_API topt_status topt_graph_save(const topt_graph* g, const char* path);
TOPT_API int topt_graph_nodes(const topt_graph* g);
TOPT_API long long topt_graph_edges(const topt_graph* g);
TOPT_API int topt_graph_degree(const topt_graph* g, int v);
TOPT_API int topt_graph_diameter(const topt_graph* g);
TOPT_API void topt_graph_free(topt_graph* g);

/* ----- Markov chains ----- */

TOPT_API topt_status topt_chain_simple_rw(const topt_graph* g, topt_chain** out);
TOPT_API topt_status topt_chain_lazy(const topt_graph* g, topt_chain** out);
TOPT_API topt_status topt_chain_metropolis(const topt_graph* g, topt_chain** out);
TOPT_API topt_status topt_chain_two_state(double p, topt_chain** out);
TOPT_API int topt_chain_states(const topt_chain* c);
TOPT_API double topt_chain_prob(const topt_chain* c, int v, int w);
TOPT_API double topt_chain_stationary(const topt_chain* c, int v);
TOPT_API int topt_chain_reversible(const topt_chain* c);
TOPT_API void topt_chain_free(topt_chain* c);

/* Entry (v,w): expected first time the walk started at v reaches w (returns
 * to w when v == w). */
TOPT_API topt_status topt_chain_hitting_time(const topt_chain* c, int v, int w, double* out);

/* Nodes v_0..v_{T-1}; v0 < 0 draws the start from the stationary law. */
TOPT_API topt_status topt_chain_sample_trajectory(const topt_chain* c, int v0, long long T,
                                                  uint64_t seed, int* out_nodes);

typedef struct topt_chain_times {
  long long tau_mix_quarter; /* tau_mix(eps_quarter), default eps 1/4 */
  long long tau_mix;         /* tau_mix(pi_min / 2) */
  double tau_rel;            /* 1/lambda_P; NaN for non-reversible chains */
  double tau_hit;
  double tau_cov_mc;
  double tau_cov_half_width;
  double tau_cov_matthews;
} topt_chain_times;

TOPT_API topt_status topt_chain_compute_times(const topt_chain* c, int mc_reps, uint64_t seed,
                                              double eps_quarter, topt_chain_times* out);

/* ----- harness entry points ----- */

/* Runs the JSON config at config_path: one trace CSV per seed plus an
 * aggregate CSV in the configured output directory. */
TOPT_API topt_status topt_run_config_file(const char* config_path);

/* variant: "homogeneous" | "heterogeneous" */
TOPT_API topt_status topt_reproduce_fig1(const char* variant, int seeds, long long comm_budget,
                                         const char* out_dir);

/* family: "cycle" | "torus2d" | "complete"; sizes are node counts (grid
 * sides for torus2d); chain_kind: "srw" | "lazy" | "metropolis". */
TOPT_API topt_status topt_scaling(const char* family, const int* sizes, int n_sizes,
                                  const char* chain_kind, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* TOKEN_OPT_H */

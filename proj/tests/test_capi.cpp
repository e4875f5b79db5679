#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "token_opt.h"

namespace fs = std::filesystem;

TEST_CASE("graph handles") {
  topt_graph* g = nullptr;
  REQUIRE(topt_graph_cycle(50, &g) == TOPT_OK);
  CHECK(topt_graph_nodes(g) == 50);
  CHECK(topt_graph_edges(g) == 50);
  CHECK(topt_graph_degree(g, 7) == 2);
  CHECK(topt_graph_diameter(g) == 25);
  topt_graph_free(g);

  g = nullptr;
  CHECK(topt_graph_cycle(2, &g) == TOPT_ERR_INVALID_ARGUMENT);
  CHECK(g == nullptr);
  CHECK(std::strlen(topt_last_error()) > 0);

  REQUIRE(topt_graph_torus(4, 2, &g) == TOPT_OK);
  CHECK(topt_graph_nodes(g) == 16);
  CHECK(topt_graph_degree(g, 3) == 4);
  topt_graph_free(g);

  REQUIRE(topt_graph_geometric(30, 0.35, 7, &g) == TOPT_OK);
  const fs::path path = fs::temp_directory_path() / "topt_capi_graph.txt";
  REQUIRE(topt_graph_save(g, path.string().c_str()) == TOPT_OK);
  topt_graph* loaded = nullptr;
  REQUIRE(topt_graph_load(path.string().c_str(), &loaded) == TOPT_OK);
  CHECK(topt_graph_nodes(loaded) == 30);
  CHECK(topt_graph_edges(loaded) == topt_graph_edges(g));
  topt_graph_free(loaded);
  topt_graph_free(g);
  fs::remove(path);
}

TEST_CASE("chain handles and times") {
  topt_chain* chain = nullptr;
  REQUIRE(topt_chain_two_state(0.05, &chain) == TOPT_OK);
  CHECK(topt_chain_states(chain) == 2);
  CHECK(topt_chain_prob(chain, 0, 1) == doctest::Approx(0.05));
  CHECK(topt_chain_stationary(chain, 0) == doctest::Approx(0.5));
  CHECK(topt_chain_reversible(chain) == 1);

  double h = 0.0;
  REQUIRE(topt_chain_hitting_time(chain, 0, 1, &h) == TOPT_OK);
  CHECK(h == doctest::Approx(20.0));

  topt_chain_times times;
  REQUIRE(topt_chain_compute_times(chain, 200, 3, 0.25, &times) == TOPT_OK);
  CHECK(times.tau_mix_quarter == 7);
  CHECK(times.tau_mix == 7);
  CHECK(times.tau_rel == doctest::Approx(10.0));
  CHECK(times.tau_hit == doctest::Approx(20.0));
  CHECK(times.tau_cov_mc <= times.tau_cov_matthews + 3.0 * times.tau_cov_half_width);

  std::vector<int> nodes(100);
  REQUIRE(topt_chain_sample_trajectory(chain, 0, 100, 5, nodes.data()) == TOPT_OK);
  CHECK(nodes[0] == 0);
  for (int v : nodes) CHECK((v == 0 || v == 1));
  topt_chain_free(chain);

  CHECK(topt_chain_two_state(1.5, &chain) == TOPT_ERR_INVALID_ARGUMENT);

  // graph-backed chains
  topt_graph* g = nullptr;
  REQUIRE(topt_graph_complete(16, &g) == TOPT_OK);
  topt_chain* srw = nullptr;
  REQUIRE(topt_chain_simple_rw(g, &srw) == TOPT_OK);
  REQUIRE(topt_chain_hitting_time(srw, 0, 1, &h) == TOPT_OK);
  CHECK(h == doctest::Approx(15.0));
  REQUIRE(topt_chain_hitting_time(srw, 1, 1, &h) == TOPT_OK);
  CHECK(h == doctest::Approx(16.0));
  topt_chain_free(srw);

  topt_chain* lazy = nullptr;
  REQUIRE(topt_chain_lazy(g, &lazy) == TOPT_OK);
  CHECK(topt_chain_prob(lazy, 0, 0) == doctest::Approx(1.0 / 16));
  topt_chain_free(lazy);

  topt_chain* met = nullptr;
  REQUIRE(topt_chain_metropolis(g, &met) == TOPT_OK);
  CHECK(topt_chain_stationary(met, 3) == doctest::Approx(1.0 / 16));
  topt_chain_free(met);
  topt_graph_free(g);
}

TEST_CASE("run config through the C API") {
  const fs::path dir = fs::temp_directory_path() / "topt_capi_run";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream out(cfg);
    out << R"({
      "graph": {"family": "cycle", "n": 8},
      "chain": {"kind": "lazy"},
      "objective": {"family": "quadratic_interpolation", "dim": 3, "seed": 4, "condition": 4.0},
      "algorithm": {"name": "mc_sag", "gamma_policy": "adaptive_eq7"},
      "replication": {"seeds": [11, 12, 13], "T": 200, "log_every": 50},
      "output_dir": ")" << (dir / "out").string() << R"("
    })";
  }
  REQUIRE(topt_run_config_file(cfg.string().c_str()) == TOPT_OK);
  CHECK(fs::exists(dir / "out" / "trace_seed11.csv"));
  CHECK(fs::exists(dir / "out" / "trace_seed12.csv"));
  CHECK(fs::exists(dir / "out" / "trace_seed13.csv"));
  CHECK(fs::exists(dir / "out" / "aggregate.csv"));

  // schema violations surface as TOPT_ERR_CONFIG (CLI exit code 2)
  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"graph": {"family": "cycle", "n": 8}, "chain": {"kind": "lazy"},
               "objective": {"family": "quadratic_interpolation", "dim": 3},
               "algorithm": {"name": "nonsense", "gamma": 0.1}})";
  }
  CHECK(topt_run_config_file(bad.string().c_str()) == TOPT_ERR_CONFIG);
  CHECK(std::string(topt_last_error()).find("algorithm.name") != std::string::npos);

  // divergence surfaces as TOPT_ERR_DIVERGENCE (CLI exit code 3)
  const fs::path diverge = dir / "diverge.json";
  {
    std::ofstream out(diverge);
    out << R"({
      "graph": {"family": "cycle", "n": 8},
      "chain": {"kind": "lazy"},
      "objective": {"family": "quadratic_interpolation", "dim": 3, "seed": 4, "condition": 4.0},
      "algorithm": {"name": "mc_sgd", "gamma": 100.0,
                    "x0": [1.0, 1.0, 1.0]},
      "replication": {"seeds": [1], "T": 100000, "log_every": 100000},
      "output_dir": ")" << (dir / "out2").string() << R"("
    })";
  }
  CHECK(topt_run_config_file(diverge.string().c_str()) == TOPT_ERR_DIVERGENCE);
  // partial outputs are cleaned up
  CHECK(!fs::exists(dir / "out2" / "trace_seed1.csv"));
  fs::remove_all(dir);
}

TEST_CASE("scaling through the C API") {
  const fs::path out = fs::temp_directory_path() / "topt_capi_scaling.csv";
  const int sizes[] = {8, 12, 16};
  REQUIRE(topt_scaling("cycle", sizes, 3, "lazy", out.string().c_str()) == TOPT_OK);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header == "n,tau_hit,n_tau_mix");
  fs::remove(out);

  CHECK(topt_scaling("petersen", sizes, 3, "lazy", out.string().c_str()) == TOPT_ERR_CONFIG);
}

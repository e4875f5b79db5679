#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace tokenopt {

// schema violation; the message names the offending field path
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphConfig {
  std::string family = "cycle";  // cycle | torus | complete | geometric | file
  int n = 0;
  int side = 0;
  int dim = 2;
  double radius = 0.3;
  std::uint64_t seed = 0;
  std::string path;
};

struct ChainConfig {
  std::string kind = "lazy";  // srw | lazy | metropolis | two_state
  double p = 0.5;             // two_state only
  bool start_stationary = true;
  int start_node = 0;
};

struct ObjectiveConfig {
  std::string family = "sigmoid";  // sigmoid | quadratic_interpolation |
                                   // quadratic_heterogeneous | two_point | worst_case
  int dim = 10;
  std::uint64_t seed = 0;
  std::string data_mode = "homogeneous";  // sigmoid: homogeneous | two_hot
  int samples_per_node = 1;
  double condition = 10.0;
  double spread = 1.0;
  bool shared_matrix = false;
  bool linear_spectrum = false;
  int K = 20;  // worst_case
  double alpha = 0.1;
  double b = 1.0;
  int node_v = 0;
  int node_w = -1;  // -1: floor(n/2)
};

struct NoiseConfig {
  std::string kind = "none";  // none | gaussian | minibatch
  double sd = 0.0;
  int batch = 0;
};

struct AlgorithmConfig {
  std::string name = "mc_sgd";
  std::string gamma_policy = "constant";  // constant | theorem51 | adaptive_eq7
  double gamma = 0.0;
  NoiseConfig noise;
  std::string sag_init = "perfect";  // perfect | zero
  bool halved = false;               // adaptive_eq7 arbitrary-init variant
  double momentum = 0.0;
  int wait_k = 0;            // 0: use tau_mix
  double tau_hit = 0.0;      // 0: compute exactly
  double sigma_bar_sq = -1;  // <0: estimate
  std::vector<double> x0;    // empty: zeros
};

struct ReplicationConfig {
  std::vector<std::uint64_t> seeds;  // explicit list; else count + base_seed
  int seed_count = 1;
  std::uint64_t base_seed = 1;
  std::int64_t T = 1000;
  std::int64_t log_every = 1;
};

struct RunConfig {
  GraphConfig graph;
  ChainConfig chain;
  ObjectiveConfig objective;
  AlgorithmConfig algorithm;
  ReplicationConfig replication;
  std::string output_dir = "out";

  std::vector<std::uint64_t> resolved_seeds() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);
nlohmann::json serialize_config(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace tokenopt

#include "tokenopt/config.hpp"

#include <fstream>
#include <set>

namespace tokenopt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw config_error(path + ": " + what);
}

const json& require(const json& j, const std::string& parent, const std::string& key) {
  if (!j.contains(key)) fail(parent.empty() ? key : parent + "." + key, "missing required field");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const std::string& parent, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  const std::string path = parent.empty() ? key : parent + "." + key;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path, "wrong type");
  }
}

std::string get_enum(const json& j, const std::string& parent, const std::string& key,
                     const std::set<std::string>& allowed, const std::string& fallback) {
  const std::string value = get_or<std::string>(j, parent, key, fallback);
  if (!allowed.count(value))
    fail(parent.empty() ? key : parent + "." + key, "unknown value '" + value + "'");
  return value;
}

GraphConfig parse_graph(const json& j) {
  GraphConfig g;
  g.family = get_enum(j, "graph", "family", {"cycle", "torus", "complete", "geometric", "file"},
                      g.family);
  g.n = get_or(j, "graph", "n", g.n);
  g.side = get_or(j, "graph", "side", g.side);
  g.dim = get_or(j, "graph", "dim", g.dim);
  g.radius = get_or(j, "graph", "radius", g.radius);
  g.seed = get_or(j, "graph", "seed", g.seed);
  g.path = get_or<std::string>(j, "graph", "path", g.path);
  if (g.family == "file" && g.path.empty()) fail("graph.path", "required for family 'file'");
  if ((g.family == "cycle" || g.family == "complete" || g.family == "geometric") && g.n <= 0)
    fail("graph.n", "must be positive");
  if (g.family == "torus" && g.side <= 0) fail("graph.side", "must be positive");
  return g;
}

ChainConfig parse_chain(const json& j) {
  ChainConfig c;
  c.kind = get_enum(j, "chain", "kind", {"srw", "lazy", "metropolis", "two_state"}, c.kind);
  c.p = get_or(j, "chain", "p", c.p);
  if (j.contains("start")) {
    const auto& s = j.at("start");
    if (s.is_string() && s.get<std::string>() == "stationary") {
      c.start_stationary = true;
    } else if (s.is_number_integer()) {
      c.start_stationary = false;
      c.start_node = s.get<int>();
    } else {
      fail("chain.start", "must be 'stationary' or a node index");
    }
  }
  if (c.kind == "two_state" && !(c.p > 0.0 && c.p < 1.0)) fail("chain.p", "must lie in (0,1)");
  return c;
}

ObjectiveConfig parse_objective(const json& j) {
  ObjectiveConfig o;
  o.family = get_enum(j, "objective", "family",
                      {"sigmoid", "quadratic_interpolation", "quadratic_heterogeneous",
                       "two_point", "worst_case"},
                      o.family);
  o.dim = get_or(j, "objective", "dim", o.dim);
  o.seed = get_or(j, "objective", "seed", o.seed);
  o.data_mode = get_enum(j, "objective", "data_mode", {"homogeneous", "two_hot"}, o.data_mode);
  o.samples_per_node = get_or(j, "objective", "samples_per_node", o.samples_per_node);
  o.condition = get_or(j, "objective", "condition", o.condition);
  o.spread = get_or(j, "objective", "spread", o.spread);
  o.shared_matrix = get_or(j, "objective", "shared_matrix", o.shared_matrix);
  o.linear_spectrum = get_or(j, "objective", "linear_spectrum", o.linear_spectrum);
  o.K = get_or(j, "objective", "K", o.K);
  o.alpha = get_or(j, "objective", "alpha", o.alpha);
  o.b = get_or(j, "objective", "b", o.b);
  o.node_v = get_or(j, "objective", "node_v", o.node_v);
  o.node_w = get_or(j, "objective", "node_w", o.node_w);
  if (o.dim <= 0) fail("objective.dim", "must be positive");
  if (o.samples_per_node < 1) fail("objective.samples_per_node", "must be >= 1");
  if (o.condition < 1.0) fail("objective.condition", "must be >= 1");
  if (o.family == "worst_case" && o.K < 1) fail("objective.K", "must be >= 1");
  return o;
}

NoiseConfig parse_noise(const json& j, const std::string& parent) {
  NoiseConfig n;
  if (!j.contains("noise")) return n;
  const auto& jn = j.at("noise");
  n.kind = get_enum(jn, parent + ".noise", "kind", {"none", "gaussian", "minibatch"}, n.kind);
  n.sd = get_or(jn, parent + ".noise", "sd", n.sd);
  n.batch = get_or(jn, parent + ".noise", "batch", n.batch);
  if (n.kind == "gaussian" && n.sd < 0.0) fail("algorithm.noise.sd", "must be >= 0");
  if (n.kind == "minibatch" && n.batch < 1) fail("algorithm.noise.batch", "must be >= 1");
  return n;
}

AlgorithmConfig parse_algorithm(const json& j) {
  AlgorithmConfig a;
  a.name = get_enum(j, "algorithm", "name",
                    {"mc_sgd", "mc_sgd_noisy", "mc_sag", "sag_iid", "sgd_iid", "sgd_reshuffle",
                     "mc_sgd_wait_mix", "dsgd_fixed", "dsgd_randomized"},
                    a.name);
  a.gamma_policy =
      get_enum(j, "algorithm", "gamma_policy", {"constant", "theorem51", "adaptive_eq7"},
               a.gamma_policy);
  a.gamma = get_or(j, "algorithm", "gamma", a.gamma);
  a.noise = parse_noise(j, "algorithm");
  a.sag_init = get_enum(j, "algorithm", "sag_init", {"perfect", "zero"}, a.sag_init);
  a.halved = get_or(j, "algorithm", "halved", a.halved);
  a.momentum = get_or(j, "algorithm", "momentum", a.momentum);
  a.wait_k = get_or(j, "algorithm", "wait_k", a.wait_k);
  a.tau_hit = get_or(j, "algorithm", "tau_hit", a.tau_hit);
  a.sigma_bar_sq = get_or(j, "algorithm", "sigma_bar_sq", a.sigma_bar_sq);
  a.x0 = get_or(j, "algorithm", "x0", a.x0);
  if (a.gamma_policy == "constant" && !(a.gamma > 0.0))
    fail("algorithm.gamma", "must be positive for the constant policy");
  if (a.name == "mc_sgd_noisy" && a.noise.kind == "none")
    fail("algorithm.noise", "mc_sgd_noisy requires a noise block");
  return a;
}

ReplicationConfig parse_replication(const json& j) {
  ReplicationConfig r;
  if (j.contains("seeds")) {
    r.seeds = get_or(j, "replication", "seeds", r.seeds);
    if (r.seeds.empty()) fail("replication.seeds", "must be non-empty");
    r.seed_count = static_cast<int>(r.seeds.size());
  } else {
    r.seed_count = get_or(j, "replication", "seed_count", r.seed_count);
    r.base_seed = get_or(j, "replication", "base_seed", r.base_seed);
    if (r.seed_count < 1) fail("replication.seed_count", "must be >= 1");
  }
  r.T = get_or(j, "replication", "T", r.T);
  r.log_every = get_or(j, "replication", "log_every", r.log_every);
  if (r.T < 0) fail("replication.T", "must be >= 0");
  if (r.log_every < 1) fail("replication.log_every", "must be >= 1");
  return r;
}

}  // namespace

std::vector<std::uint64_t> RunConfig::resolved_seeds() const {
  if (!replication.seeds.empty()) return replication.seeds;
  std::vector<std::uint64_t> seeds(replication.seed_count);
  for (int i = 0; i < replication.seed_count; ++i)
    seeds[i] = replication.base_seed + static_cast<std::uint64_t>(i);
  return seeds;
}

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("config root must be a JSON object");
  RunConfig cfg;
  cfg.chain = parse_chain(j.contains("chain") ? j.at("chain") : json::object());
  if (cfg.chain.kind != "two_state")
    cfg.graph = parse_graph(require(j, "", "graph"));
  else if (j.contains("graph"))
    cfg.graph = parse_graph(j.at("graph"));
  cfg.objective = parse_objective(require(j, "", "objective"));
  cfg.algorithm = parse_algorithm(require(j, "", "algorithm"));
  cfg.replication = parse_replication(j.contains("replication") ? j.at("replication") : json::object());
  cfg.output_dir = get_or<std::string>(j, "", "output_dir", cfg.output_dir);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json serialize_config(const RunConfig& cfg) {
  nlohmann::json j;
  j["graph"] = {{"family", cfg.graph.family}, {"n", cfg.graph.n},     {"side", cfg.graph.side},
                {"dim", cfg.graph.dim},       {"radius", cfg.graph.radius},
                {"seed", cfg.graph.seed},     {"path", cfg.graph.path}};
  j["chain"] = {{"kind", cfg.chain.kind}, {"p", cfg.chain.p}};
  if (cfg.chain.start_stationary)
    j["chain"]["start"] = "stationary";
  else
    j["chain"]["start"] = cfg.chain.start_node;
  j["objective"] = {{"family", cfg.objective.family},
                    {"dim", cfg.objective.dim},
                    {"seed", cfg.objective.seed},
                    {"data_mode", cfg.objective.data_mode},
                    {"samples_per_node", cfg.objective.samples_per_node},
                    {"condition", cfg.objective.condition},
                    {"spread", cfg.objective.spread},
                    {"shared_matrix", cfg.objective.shared_matrix},
                    {"linear_spectrum", cfg.objective.linear_spectrum},
                    {"K", cfg.objective.K},
                    {"alpha", cfg.objective.alpha},
                    {"b", cfg.objective.b},
                    {"node_v", cfg.objective.node_v},
                    {"node_w", cfg.objective.node_w}};
  j["algorithm"] = {{"name", cfg.algorithm.name},
                    {"gamma_policy", cfg.algorithm.gamma_policy},
                    {"gamma", cfg.algorithm.gamma},
                    {"noise",
                     {{"kind", cfg.algorithm.noise.kind},
                      {"sd", cfg.algorithm.noise.sd},
                      {"batch", cfg.algorithm.noise.batch}}},
                    {"sag_init", cfg.algorithm.sag_init},
                    {"halved", cfg.algorithm.halved},
                    {"momentum", cfg.algorithm.momentum},
                    {"wait_k", cfg.algorithm.wait_k},
                    {"tau_hit", cfg.algorithm.tau_hit},
                    {"sigma_bar_sq", cfg.algorithm.sigma_bar_sq},
                    {"x0", cfg.algorithm.x0}};
  j["replication"] = {{"seeds", cfg.resolved_seeds()},
                      {"T", cfg.replication.T},
                      {"log_every", cfg.replication.log_every}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace tokenopt

#include "plsgd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "plsgd/errors.hpp"
#include "plsgd/theory.hpp"

namespace plsgd {

namespace {

void reject_unknown(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError("section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& key, T& out, const std::string& section) {
  if (!node || !node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError("bad value for '" + section + "." + key + "': " + e.what());
  }
}

bool is_auto(const YAML::Node& n) { return n && n.IsScalar() && n.Scalar() == "auto"; }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping with sections");
  reject_unknown(root, "config", {"problem", "schedule", "experiment", "audits", "output"});

  ExperimentConfig cfg;
  const YAML::Node p = root["problem"];
  if (!p) throw ConfigError("config needs a 'problem' section");
  read(p, "kind", cfg.problem.kind, "problem");
  read(p, "x0", cfg.problem.x0, "problem");
  if (cfg.problem.kind == "token") {
    reject_unknown(p, "problem", {"kind", "x0", "nodes", "dim", "rows", "graph", "degree", "noise", "laziness", "seed", "start"});
    TokenSpec& t = cfg.problem.token;
    read(p, "nodes", t.nodes, "problem");
    read(p, "dim", t.dim, "problem");
    read(p, "rows", t.rows, "problem");
    read(p, "graph", t.graph, "problem");
    read(p, "degree", t.degree, "problem");
    read(p, "noise", t.noise, "problem");
    read(p, "laziness", t.laziness, "problem");
    read(p, "seed", t.seed, "problem");
    read(p, "start", cfg.problem.start, "problem");
  } else if (cfg.problem.kind == "subsample") {
    reject_unknown(p, "problem", {"kind", "x0", "N", "dim", "b", "rho", "noise", "seed"});
    SubsampleSpec& s = cfg.problem.subsample;
    read(p, "N", s.N, "problem");
    read(p, "dim", s.dim, "problem");
    read(p, "b", s.b, "problem");
    read(p, "rho", s.rho, "problem");
    read(p, "noise", s.noise, "problem");
    read(p, "seed", s.seed, "problem");
  } else if (cfg.problem.kind == "sysid") {
    reject_unknown(p, "problem", {"kind", "x0", "eigenvalues", "noise_bound", "z0", "tmix_factor", "seed"});
    SysIdSpec& s = cfg.problem.sysid;
    read(p, "eigenvalues", s.eigenvalues, "problem");
    read(p, "noise_bound", s.noise_bound, "problem");
    read(p, "z0", s.z0, "problem");
    read(p, "tmix_factor", s.tmix_factor, "problem");
    read(p, "seed", s.seed, "problem");
  } else {
    throw ConfigError("unknown problem kind '" + cfg.problem.kind + "'");
  }

  const YAML::Node s = root["schedule"];
  reject_unknown(s, "schedule", {"a", "K0"});
  if (s && s["a"] && !is_auto(s["a"])) {
    double a = 0.0;
    read(s, "a", a, "schedule");
    cfg.schedule.a = a;
  }
  if (s && s["K0"]) {
    const YAML::Node k = s["K0"];
    if (is_auto(k)) {
      cfg.schedule.K0_mode = K0Mode::HighProbability;
    } else if (k.IsScalar() && k.Scalar() == "auto_expected") {
      cfg.schedule.K0_mode = K0Mode::Expected;
    } else {
      cfg.schedule.K0_mode = K0Mode::Explicit;
      read(s, "K0", cfg.schedule.K0, "schedule");
    }
  }

  const YAML::Node e = root["experiment"];
  reject_unknown(e, "experiment", {"horizon", "trials", "delta", "seed", "record_noise"});
  read(e, "horizon", cfg.horizon, "experiment");
  read(e, "trials", cfg.trials, "experiment");
  read(e, "delta", cfg.delta, "experiment");
  read(e, "seed", cfg.seed, "experiment");
  read(e, "record_noise", cfg.record_noise, "experiment");

  const YAML::Node a = root["audits"];
  reject_unknown(a, "audits", {"rate", "k_min", "envelope", "inverted_envelope", "inverted_scale", "expected"});
  read(a, "rate", cfg.audits.rate, "audits");
  if (a && a["k_min"] && !is_auto(a["k_min"])) {
    std::size_t k = 0;
    read(a, "k_min", k, "audits");
    cfg.audits.k_min = k;
  }
  read(a, "envelope", cfg.audits.envelope, "audits");
  read(a, "inverted_envelope", cfg.audits.inverted_envelope, "audits");
  read(a, "inverted_scale", cfg.audits.inverted_scale, "audits");
  read(a, "expected", cfg.audits.expected, "audits");

  const YAML::Node o = root["output"];
  reject_unknown(o, "output", {"csv", "json"});
  read(o, "csv", cfg.output.csv, "output");
  read(o, "json", cfg.output.json, "output");

  if (cfg.trials < 1) throw ConfigError("experiment.trials must be at least 1");
  if (cfg.horizon < 10) throw ConfigError("experiment.horizon must be at least 10");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("experiment.delta must lie in (0, 1)");
  if (cfg.schedule.a && !(*cfg.schedule.a > 0.0)) throw ConfigError("schedule.a must be positive");
  if (cfg.schedule.K0_mode == K0Mode::Explicit && !(cfg.schedule.K0 > 0.0)) {
    throw ConfigError("schedule.K0 must be positive");
  }
  if (!(cfg.audits.inverted_scale > 0.0)) throw ConfigError("audits.inverted_scale must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json p;
  p["kind"] = problem.kind;
  p["x0"] = problem.x0;
  if (problem.kind == "token") {
    const TokenSpec& t = problem.token;
    p["nodes"] = t.nodes;
    p["dim"] = t.dim;
    p["rows"] = t.rows;
    p["graph"] = t.graph;
    p["degree"] = t.degree;
    p["noise"] = t.noise;
    p["laziness"] = t.laziness;
    p["seed"] = t.seed;
    p["start"] = problem.start;
  } else if (problem.kind == "subsample") {
    const SubsampleSpec& s = problem.subsample;
    p["N"] = s.N;
    p["dim"] = s.dim;
    p["b"] = s.b;
    p["rho"] = s.rho;
    p["noise"] = s.noise;
    p["seed"] = s.seed;
  } else {
    const SysIdSpec& s = problem.sysid;
    p["eigenvalues"] = s.eigenvalues;
    p["noise_bound"] = s.noise_bound;
    p["z0"] = s.z0;
    p["tmix_factor"] = s.tmix_factor;
    p["seed"] = s.seed;
  }
  nlohmann::json j;
  j["problem"] = p;
  j["schedule"]["a"] = schedule.a ? nlohmann::json(*schedule.a) : nlohmann::json("auto");
  switch (schedule.K0_mode) {
    case K0Mode::Explicit: j["schedule"]["K0"] = schedule.K0; break;
    case K0Mode::HighProbability: j["schedule"]["K0"] = "auto"; break;
    case K0Mode::Expected: j["schedule"]["K0"] = "auto_expected"; break;
  }
  j["experiment"] = {{"horizon", horizon}, {"trials", trials}, {"delta", delta}, {"seed", seed}, {"record_noise", record_noise}};
  j["audits"] = {{"rate", audits.rate},
                 {"k_min", audits.k_min ? nlohmann::json(*audits.k_min) : nlohmann::json("auto")},
                 {"envelope", audits.envelope},
                 {"inverted_envelope", audits.inverted_envelope},
                 {"inverted_scale", audits.inverted_scale},
                 {"expected", audits.expected}};
  return j;
}

std::shared_ptr<Problem> build_problem(const ProblemConfig& config) {
  std::shared_ptr<Problem> out;
  if (config.kind == "token") {
    auto built = make_token_problem(config.token);
    if (config.start != "stationary") {
      std::size_t z = 0;
      try {
        z = static_cast<std::size_t>(std::stoul(config.start));
      } catch (const std::exception&) {
        throw ConfigError("problem.start must be 'stationary' or a node index");
      }
      built.problem->set_start_state(z);
    }
    out = built.problem;
  } else if (config.kind == "subsample") {
    out = make_subsample_problem(config.subsample);
  } else if (config.kind == "sysid") {
    out = make_sysid_problem(config.sysid);
  } else {
    throw ConfigError("unknown problem kind '" + config.kind + "'");
  }
  if (!config.x0.empty()) {
    out->set_initial_point(Eigen::Map<const Vector>(config.x0.data(), static_cast<Eigen::Index>(config.x0.size())));
  }
  return out;
}

StepSchedule resolve_schedule(const ExperimentConfig& config, const Problem& problem) {
  const double a = config.schedule.a ? *config.schedule.a : 2.0 / problem.constants().mu;
  if (config.schedule.K0_mode == K0Mode::Explicit) return StepSchedule(a, config.schedule.K0);
  // The requirements do not depend on K0; any placeholder value works.
  TheoryInputs in = theory_inputs(problem, StepSchedule(a, 1.0), config.delta);
  const double K0 =
      config.schedule.K0_mode == K0Mode::HighProbability ? k0_lower_bound(in) : expected_k0_lower_bound(in);
  return StepSchedule(a, K0);
}

}  // namespace plsgd

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plsgd/engine.hpp"
#include "plsgd/subsample.hpp"
#include "plsgd/sysid.hpp"
#include "plsgd/token.hpp"

namespace plsgd {

struct ProblemConfig {
  std::string kind = "token";  // token | subsample | sysid
  TokenSpec token;
  SubsampleSpec subsample;
  SysIdSpec sysid;
  /// Token only: "stationary" or a node index for Z_0.
  std::string start = "stationary";
  /// Initial iterate; empty for the origin.
  std::vector<double> x0;
};

enum class K0Mode { Explicit, HighProbability, Expected };

struct ScheduleConfig {
  std::optional<double> a;  // empty: 2/mu
  K0Mode K0_mode = K0Mode::HighProbability;
  double K0 = 0.0;          // used when K0_mode == Explicit
};

struct AuditConfig {
  bool rate = false;
  std::optional<std::size_t> k_min;  // empty: max(100, 5 K0)
  bool envelope = false;
  bool inverted_envelope = false;
  double inverted_scale = 0.01;
  bool expected = false;
};

struct OutputConfig {
  std::string csv;
  std::string json;
};

struct ExperimentConfig {
  ProblemConfig problem;
  ScheduleConfig schedule;
  std::size_t horizon = 1000;
  std::size_t trials = 1;
  double delta = 0.5;
  std::uint64_t seed = 1;
  bool record_noise = false;
  AuditConfig audits;
  OutputConfig output;

  /// Normalized echo of every field, used in the JSON summary.
  nlohmann::json to_json() const;
};

/// YAML with sections problem, schedule, experiment, audits and output.
/// Throws ConfigError on unknown keys, bad types or violated invariants
/// (trials >= 1, horizon >= 10, delta in (0,1)).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::shared_ptr<Problem> build_problem(const ProblemConfig& config);

/// a = 2/mu unless given; K0 from the selected rule. Explicit K0 values are
/// taken as given: bound curves are emitted only when they are feasible.
StepSchedule resolve_schedule(const ExperimentConfig& config, const Problem& problem);

}  // namespace plsgd

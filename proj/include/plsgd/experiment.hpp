#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plsgd/config.hpp"
#include "plsgd/engine.hpp"
#include "plsgd/theory.hpp"

namespace plsgd {

/// Worker count from PLSGD_THREADS, else the hardware concurrency.
std::size_t thread_count();

struct TrialBatch {
  std::vector<Trajectory> trials;        // surviving trials, in trial order
  std::vector<std::size_t> diverged;     // indices of trials that hit NonFinite
};

/// Runs trials 0..count-1 on `threads` workers. Trial i uses stream i of
/// `seed`, so the batch does not depend on the worker count. Throws the
/// first NonFinite (with its trial id) when more than 1% of trials diverge.
TrialBatch run_trials(const Problem& problem, const StepSchedule& schedule, std::size_t horizon,
                      std::size_t count, std::uint64_t seed, const RunOptions& options = {},
                      std::size_t threads = 0);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t k_min = 0;
  std::size_t points = 0;
};

/// OLS of log(curve[k]) on log(k) over k >= k_min (k >= 1).
/// Throws NonPositiveValues on a value <= 0 in the window.
RateFit fit_rate(const std::vector<double>& curve, std::size_t k_min);

/// Per-k nearest-rank order statistic at level q in (0,1).
/// Throws TooFewTrials below 20 trajectories.
std::vector<double> quantile_curve(const std::vector<std::vector<double>>& curves, double q);

/// Per-k mean and standard error.
std::vector<double> mean_curve(const std::vector<std::vector<double>>& curves);
std::vector<double> standard_error_curve(const std::vector<std::vector<double>>& curves);

struct EnvelopeAudit {
  double scale = 1.0;
  std::size_t trials = 0;
  std::size_t violating = 0;       // trajectories leaving the envelope at some k
  double fraction = 0.0;
  double threshold = 0.0;          // delta + 2 sqrt(delta(1-delta)/trials)
  std::vector<long long> first_violation;  // per trial, -1 when none

  bool passed() const { return fraction <= threshold; }
};

/// Uniform-in-time audit: trajectory i violates when Delta_k exceeds the
/// good-event bound (times `scale`) for ANY k. Throws InfeasibleK0.
EnvelopeAudit envelope_audit(const std::vector<std::vector<double>>& curves, const TheoryConstants& tc,
                             double scale = 1.0);

struct ExpectedAudit {
  std::size_t worst_k = 0;
  double worst_lhs = 0.0;   // mean + 3 SE at worst_k
  double worst_rhs = 0.0;   // bound at worst_k
  std::size_t violations = 0;

  bool passed() const { return violations == 0; }
};

/// mean + 3 SE <= expected_bound(k) for every k >= 1. Throws InfeasibleK0.
ExpectedAudit expected_audit(const std::vector<std::vector<double>>& curves, const TheoryConstants& tc);

struct ExperimentSummary {
  nlohmann::json config;
  nlohmann::json problem;
  ProblemConstants constants;
  MixingInfo mixing;
  StepSchedule schedule;
  std::optional<TheoryConstants> theory;  // empty when 2 mu a <= 3
  std::size_t trials = 0;
  std::vector<std::size_t> diverged;
  double delta = 0.5;

  std::vector<double> mean;
  std::vector<double> quantile;          // empty below 20 trials
  std::vector<double> hp_envelope;       // empty when K0 is infeasible
  std::vector<double> expected_bound;    // empty when K0 is infeasible

  std::optional<RateFit> fit;
  std::optional<EnvelopeAudit> envelope;
  std::optional<EnvelopeAudit> inverted;
  std::optional<ExpectedAudit> expected;
  /// Enabled audits that could not run, with the reason.
  std::vector<std::string> skipped;

  /// Every enabled audit ran and passed; the inverted audit passes when the
  /// scaled envelope is rejected.
  bool passed() const;
  nlohmann::json audits_json() const;
};

/// Rate-audit acceptance window.
inline constexpr double kSlopeMin = -1.25;
inline constexpr double kSlopeMax = -0.80;
inline constexpr double kMinR2 = 0.98;

ExperimentSummary run_experiment(const ExperimentConfig& config, std::size_t threads = 0);

/// Columns k,mean_delta,q_delta,hp_envelope,expected_bound; 17 significant
/// digits, "nan" where a column is unavailable.
void write_summary_csv(std::ostream& out, const ExperimentSummary& summary);
nlohmann::json summary_to_json(const ExperimentSummary& summary);

enum class EmitFormat { Csv, Json };
/// Throws IoFailure.
void emit(const ExperimentSummary& summary, EmitFormat format, const std::filesystem::path& path);

/// Reads a summary CSV back into its mean curve (column mean_delta).
std::vector<double> read_mean_curve(std::istream& in);

}  // namespace plsgd

// Command-line front end: run, constants, verify, rate.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "plsgd/errors.hpp"
#include "plsgd/experiment.hpp"
#include "plsgd/verify.hpp"

namespace {

constexpr int kAuditFailed = 1;
constexpr int kError = 2;

int cmd_run(const std::string& path, const std::string& csv, const std::string& json) {
  plsgd::ExperimentConfig cfg = plsgd::load_config(path);
  if (!csv.empty()) cfg.output.csv = csv;
  if (!json.empty()) cfg.output.json = json;
  const plsgd::ExperimentSummary s = plsgd::run_experiment(cfg);
  if (!cfg.output.csv.empty()) plsgd::emit(s, plsgd::EmitFormat::Csv, cfg.output.csv);
  if (!cfg.output.json.empty()) plsgd::emit(s, plsgd::EmitFormat::Json, cfg.output.json);

  std::cout << "problem " << cfg.problem.kind << "  trials " << s.trials << "  horizon " << cfg.horizon
            << "  a " << s.schedule.a << "  K0 " << s.schedule.K0 << '\n';
  if (!s.mean.empty()) std::cout << "final mean delta " << s.mean.back() << '\n';
  std::cout << s.audits_json().dump(2) << '\n';
  return s.passed() ? 0 : kAuditFailed;
}

int cmd_constants(const std::string& path) {
  const plsgd::ExperimentConfig cfg = plsgd::load_config(path);
  const auto problem = plsgd::build_problem(cfg.problem);
  const plsgd::StepSchedule schedule = plsgd::resolve_schedule(cfg, *problem);
  const plsgd::TheoryInputs in = plsgd::theory_inputs(*problem, schedule, cfg.delta);
  nlohmann::json j;
  j["problem"] = problem->describe();
  j["constants"] = plsgd::to_json(problem->constants());
  const plsgd::MixingInfo mix = problem->mixing();
  j["mixing"] = {{"tmix", mix.tmix}, {"certified", mix.certified}, {"method", mix.method}};
  j["schedule"] = {{"a", schedule.a}, {"K0", schedule.K0}};
  j["theory"] = plsgd::compute_theory(in).to_json();
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_verify(const std::string& path, const plsgd::VerifyOptions& opts) {
  const plsgd::ExperimentConfig cfg = plsgd::load_config(path);
  const auto problem = plsgd::build_problem(cfg.problem);
  const plsgd::Report report = plsgd::verify_problem(*problem, opts);
  for (const plsgd::Check& c : report.checks()) {
    std::printf("%-4s %-36s samples %-8zu violations %-6zu worst %.6g <= %.6g\n", c.passed() ? "ok" : "FAIL",
                c.name.c_str(), c.samples, c.violations, c.lhs, c.rhs + c.tolerance);
  }
  std::printf("%s\n", report.passed() ? "all checks passed" : "some checks failed");
  return report.passed() ? 0 : kAuditFailed;
}

int cmd_rate(const std::string& path, std::size_t k_min) {
  std::ifstream in(path);
  if (!in) throw plsgd::IoFailure("cannot open " + path);
  const std::vector<double> curve = plsgd::read_mean_curve(in);
  const plsgd::RateFit fit = plsgd::fit_rate(curve, k_min);
  const bool ok = fit.slope >= plsgd::kSlopeMin && fit.slope <= plsgd::kSlopeMax && fit.r2 >= plsgd::kMinR2;
  nlohmann::json j = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2},
                      {"k_min", fit.k_min}, {"points", fit.points},       {"passed", ok}};
  std::cout << j.dump(2) << '\n';
  return ok ? 0 : kAuditFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markovian SGD under PL: experiments, constants and invariant checks"};
  app.require_subcommand(1);

  std::string config, csv, json;
  auto* run = app.add_subcommand("run", "run the configured experiment and its audits");
  run->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);
  run->add_option("--csv", csv, "override output.csv");
  run->add_option("--json", json, "override output.json");

  auto* constants = app.add_subcommand("constants", "print certified and theory constants");
  constants->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);

  plsgd::VerifyOptions vopts;
  auto* verify = app.add_subcommand("verify", "run the lemma and invariant suite for the configured problem");
  verify->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);
  verify->add_option("--samples", vopts.samples, "random points per sampled check");
  verify->add_option("--path-length", vopts.path_length, "steps per pathwise check");
  verify->add_option("--seed", vopts.seed, "verification seed");

  std::string csv_in;
  std::size_t k_min = 100;
  auto* rate = app.add_subcommand("rate", "fit a log-log slope to the mean curve of a summary CSV");
  rate->add_option("csv", csv_in, "summary CSV")->required()->check(CLI::ExistingFile);
  rate->add_option("--k-min", k_min, "first k in the fit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, csv, json);
    if (*constants) return cmd_constants(config);
    if (*verify) return cmd_verify(config, vopts);
    if (*rate) return cmd_rate(csv_in, k_min);
  } catch (const plsgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}

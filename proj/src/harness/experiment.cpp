#include "plsgd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "plsgd/errors.hpp"

namespace plsgd {

std::size_t thread_count() {
  if (const char* env = std::getenv("PLSGD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw ConfigError(std::string("PLSGD_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

TrialBatch run_trials(const Problem& problem, const StepSchedule& schedule, std::size_t horizon,
                      std::size_t count, std::uint64_t seed, const RunOptions& options, std::size_t threads) {
  if (count == 0) throw InvalidArgument("need at least one trial");
  if (threads == 0) threads = thread_count();
  threads = std::min(threads, count);

  std::vector<std::optional<Trajectory>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::vector<char> diverged(count, 0);
  std::vector<std::size_t> steps(count, 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        slots[i] = run(problem, schedule, horizon, seed, options, i);
      } catch (const NonFinite& e) {
        diverged[i] = 1;
        steps[i] = e.step();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  TrialBatch batch;
  for (std::size_t i = 0; i < count; ++i) {
    if (diverged[i]) {
      batch.diverged.push_back(i);
    } else {
      batch.trials.push_back(std::move(*slots[i]));
    }
  }
  if (static_cast<double>(batch.diverged.size()) > 0.01 * static_cast<double>(count)) {
    const std::size_t first = batch.diverged.front();
    throw NonFinite(std::to_string(batch.diverged.size()) + " of " + std::to_string(count) +
                        " trials diverged; first is trial " + std::to_string(first),
                    steps[first]);
  }
  return batch;
}

RateFit fit_rate(const std::vector<double>& curve, std::size_t k_min) {
  RateFit fit;
  fit.k_min = std::max<std::size_t>(k_min, 1);
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (std::size_t k = fit.k_min; k < curve.size(); ++k) {
    if (!(curve[k] > 0.0)) {
      throw NonPositiveValues("value at k = " + std::to_string(k) + " is not positive");
    }
    sx += std::log(static_cast<double>(k));
    sy += std::log(curve[k]);
    ++n;
  }
  if (n < 2) throw InvalidArgument("fit_rate needs at least two points with k >= k_min");
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = fit.k_min; k < curve.size(); ++k) {
    const double dx = std::log(static_cast<double>(k)) - mx;
    const double dy = std::log(curve[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A constant sequence is fitted exactly.
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

namespace {

std::size_t common_length(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) return 0;
  const std::size_t n = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != n) throw DimensionMismatch("trajectories have different horizons");
  }
  return n;
}

}  // namespace

std::vector<double> quantile_curve(const std::vector<std::vector<double>>& curves, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  if (curves.size() < 20) {
    throw TooFewTrials("quantile curves need at least 20 trajectories, got " + std::to_string(curves.size()));
  }
  const std::size_t n = common_length(curves);
  const std::size_t m = curves.size();
  // Nearest rank: the ceil(q m)-th smallest value.
  const std::size_t rank = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(m))));
  std::vector<double> out(n), column(m);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) column[i] = curves[i][k];
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(rank - 1), column.end());
    out[k] = column[rank - 1];
  }
  return out;
}

std::vector<double> mean_curve(const std::vector<std::vector<double>>& curves) {
  const std::size_t n = common_length(curves);
  std::vector<double> out(n, 0.0);
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < n; ++k) out[k] += c[k];
  }
  for (double& v : out) v /= static_cast<double>(curves.size());
  return out;
}

std::vector<double> standard_error_curve(const std::vector<std::vector<double>>& curves) {
  const std::size_t n = common_length(curves);
  const std::size_t m = curves.size();
  if (m < 2) throw TooFewTrials("standard errors need at least two trajectories");
  const std::vector<double> mean = mean_curve(curves);
  std::vector<double> out(n, 0.0);
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < n; ++k) out[k] += (c[k] - mean[k]) * (c[k] - mean[k]);
  }
  for (double& v : out) v = std::sqrt(v / static_cast<double>(m - 1) / static_cast<double>(m));
  return out;
}

EnvelopeAudit envelope_audit(const std::vector<std::vector<double>>& curves, const TheoryConstants& tc,
                             double scale) {
  if (curves.empty()) throw TooFewTrials("envelope audit needs at least one trajectory");
  const std::size_t n = common_length(curves);
  std::vector<double> bound(n);
  for (std::size_t k = 0; k < n; ++k) bound[k] = good_event_bound(tc, k, scale);

  EnvelopeAudit audit;
  audit.scale = scale;
  audit.trials = curves.size();
  audit.first_violation.assign(curves.size(), -1);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (curves[i][k] > bound[k]) {
        audit.first_violation[i] = static_cast<long long>(k);
        ++audit.violating;
        break;
      }
    }
  }
  const double m = static_cast<double>(audit.trials);
  const double delta = tc.inputs.delta;
  audit.fraction = static_cast<double>(audit.violating) / m;
  audit.threshold = delta + 2.0 * std::sqrt(delta * (1.0 - delta) / m);
  return audit;
}

ExpectedAudit expected_audit(const std::vector<std::vector<double>>& curves, const TheoryConstants& tc) {
  const std::vector<double> mean = mean_curve(curves);
  const std::vector<double> se = standard_error_curve(curves);
  ExpectedAudit audit;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < mean.size(); ++k) {
    const double lhs = mean[k] + 3.0 * se[k];
    const double rhs = expected_bound(tc, k);
    if (lhs > rhs) ++audit.violations;
    const double slack = (rhs - lhs) / rhs;
    if (slack < worst) {
      worst = slack;
      audit.worst_k = k;
      audit.worst_lhs = lhs;
      audit.worst_rhs = rhs;
    }
  }
  return audit;
}

bool ExperimentSummary::passed() const {
  if (!skipped.empty()) return false;
  if (fit && !(fit->slope >= kSlopeMin && fit->slope <= kSlopeMax && fit->r2 >= kMinR2)) return false;
  if (envelope && !envelope->passed()) return false;
  if (inverted && inverted->passed()) return false;
  if (expected && !expected->passed()) return false;
  return true;
}

ExperimentSummary run_experiment(const ExperimentConfig& config, std::size_t threads) {
  const std::shared_ptr<Problem> problem = build_problem(config.problem);
  ExperimentSummary s;
  s.config = config.to_json();
  s.problem = problem->describe();
  s.constants = problem->constants();
  s.mixing = problem->mixing();
  s.schedule = resolve_schedule(config, *problem);
  s.delta = config.delta;

  const TheoryInputs in = theory_inputs(*problem, s.schedule, config.delta);
  if (2.0 * in.mu * in.a > 3.0) s.theory = compute_theory(in);

  TrialBatch batch = run_trials(*problem, s.schedule, config.horizon, config.trials, config.seed, {}, threads);
  s.trials = batch.trials.size();
  s.diverged = batch.diverged;
  std::vector<std::vector<double>> curves;
  curves.reserve(batch.trials.size());
  for (Trajectory& t : batch.trials) curves.push_back(std::move(t.suboptimality));
  batch.trials.clear();

  s.mean = mean_curve(curves);
  if (curves.size() >= 20) s.quantile = quantile_curve(curves, 1.0 - config.delta);

  const std::size_t n = s.mean.size();
  if (s.theory && s.theory->hypotheses.k0_feasible) {
    s.hp_envelope.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 1; k < n; ++k) s.hp_envelope[k] = hp_envelope(*s.theory, k);
  }
  if (s.theory && s.theory->hypotheses.k0_feasible_expected) {
    s.expected_bound.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 1; k < n; ++k) s.expected_bound[k] = expected_bound(*s.theory, k);
  }

  const AuditConfig& audits = config.audits;
  if (audits.rate) {
    const std::size_t k_min =
        audits.k_min ? *audits.k_min
                     : std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(5.0 * s.schedule.K0)));
    if (k_min + 2 > n) {
      s.skipped.push_back("rate: k_min = " + std::to_string(k_min) + " leaves no fitting window");
    } else {
      s.fit = fit_rate(s.mean, k_min);
    }
  }
  const bool hp_ready = s.theory && s.theory->hypotheses.k0_feasible;
  if (audits.envelope) {
    if (hp_ready) {
      s.envelope = envelope_audit(curves, *s.theory, 1.0);
    } else {
      s.skipped.push_back("envelope: K0 is below the high-probability requirement");
    }
  }
  if (audits.inverted_envelope) {
    if (hp_ready) {
      s.inverted = envelope_audit(curves, *s.theory, audits.inverted_scale);
    } else {
      s.skipped.push_back("inverted_envelope: K0 is below the high-probability requirement");
    }
  }
  if (audits.expected) {
    if (s.theory && s.theory->hypotheses.k0_feasible_expected && curves.size() >= 2) {
      s.expected = expected_audit(curves, *s.theory);
    } else {
      s.skipped.push_back("expected: needs a feasible K0 and at least two trials");
    }
  }
  return s;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double at(const std::vector<double>& v, std::size_t k) {
  return k < v.size() ? v[k] : std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json fit_json(const RateFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"k_min", f.k_min}, {"points", f.points}};
}

nlohmann::json envelope_json(const EnvelopeAudit& a) {
  return {{"scale", a.scale},         {"trials", a.trials},       {"violating", a.violating},
          {"fraction", a.fraction},   {"threshold", a.threshold}, {"passed", a.passed()}};
}

}  // namespace

nlohmann::json ExperimentSummary::audits_json() const {
  nlohmann::json j = nlohmann::json::object();
  if (fit) {
    j["rate"] = fit_json(*fit);
    j["rate"]["window"] = {kSlopeMin, kSlopeMax};
    j["rate"]["min_r2"] = kMinR2;
    j["rate"]["passed"] = fit->slope >= kSlopeMin && fit->slope <= kSlopeMax && fit->r2 >= kMinR2;
  }
  if (envelope) j["envelope"] = envelope_json(*envelope);
  if (inverted) {
    j["inverted_envelope"] = envelope_json(*inverted);
    j["inverted_envelope"]["rejected"] = !inverted->passed();
  }
  if (expected) {
    j["expected"] = {{"violations", expected->violations},
                     {"worst_k", expected->worst_k},
                     {"worst_lhs", expected->worst_lhs},
                     {"worst_rhs", expected->worst_rhs},
                     {"passed", expected->passed()}};
  }
  j["skipped"] = skipped;
  j["passed"] = passed();
  return j;
}

void write_summary_csv(std::ostream& out, const ExperimentSummary& s) {
  out << "k,mean_delta,q_delta,hp_envelope,expected_bound\n";
  for (std::size_t k = 0; k < s.mean.size(); ++k) {
    out << k << ',' << fmt(s.mean[k]) << ',' << fmt(at(s.quantile, k)) << ',' << fmt(at(s.hp_envelope, k))
        << ',' << fmt(at(s.expected_bound, k)) << '\n';
  }
}

nlohmann::json summary_to_json(const ExperimentSummary& s) {
  nlohmann::json j;
  j["config"] = s.config;
  j["problem"] = s.problem;
  j["constants"] = to_json(s.constants);
  j["mixing"] = {{"tmix", s.mixing.tmix}, {"certified", s.mixing.certified}, {"method", s.mixing.method}};
  j["schedule"] = {{"a", s.schedule.a}, {"K0", s.schedule.K0}};
  j["theory"] = s.theory ? s.theory->to_json() : nlohmann::json(nullptr);
  j["trials"] = s.trials;
  j["diverged"] = s.diverged;
  j["delta"] = s.delta;
  j["horizon"] = s.mean.empty() ? 0 : s.mean.size() - 1;
  j["final_mean_delta"] = s.mean.empty() ? nlohmann::json(nullptr) : nlohmann::json(s.mean.back());
  j["audits"] = s.audits_json();
  return j;
}

void emit(const ExperimentSummary& summary, EmitFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  if (format == EmitFormat::Csv) {
    write_summary_csv(out, summary);
  } else {
    out << summary_to_json(summary).dump(2) << '\n';
  }
  if (!out) throw IoFailure("write to " + path.string() + " failed");
}

std::vector<double> read_mean_curve(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoFailure("empty CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto k_col = std::find(header.begin(), header.end(), "k");
  auto v_col = std::find(header.begin(), header.end(), "mean_delta");
  if (v_col == header.end()) v_col = std::find(header.begin(), header.end(), "delta");
  if (k_col == header.end() || v_col == header.end()) throw IoFailure("CSV needs columns k and mean_delta");
  const auto ki = static_cast<std::size_t>(k_col - header.begin());
  const auto vi = static_cast<std::size_t>(v_col - header.begin());

  std::vector<double> curve;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() <= std::max(ki, vi)) throw IoFailure("short CSV row " + std::to_string(row));
    try {
      const auto k = static_cast<std::size_t>(std::stoull(cells[ki]));
      if (k != curve.size()) throw IoFailure("CSV rows must list k = 0, 1, 2, ... in order");
      curve.push_back(std::stod(cells[vi]));
    } catch (const std::logic_error&) {
      throw IoFailure("malformed CSV row " + std::to_string(row));
    }
  }
  return curve;
}

}  // namespace plsgd

#include "plsgd/report.hpp"

#include <algorithm>
#include <cmath>

namespace plsgd {

void Report::record(const std::string& name, double lhs, double rhs, double tolerance) {
  auto it = std::find_if(checks_.begin(), checks_.end(),
                         [&](const Check& c) { return c.name == name; });
  if (it == checks_.end()) {
    checks_.push_back(Check{name, lhs, rhs, tolerance, 0, 0});
    it = std::prev(checks_.end());
  }
  Check& c = *it;
  const double slack = rhs + tolerance - lhs;
  const bool ok = std::isfinite(lhs) && !std::isnan(rhs) && slack >= 0.0;
  if (!ok) ++c.violations;
  // Keep the sample with the least slack; NaN always counts as worst.
  if (c.samples == 0 || !(slack >= c.slack())) {
    c.lhs = lhs;
    c.rhs = rhs;
    c.tolerance = tolerance;
  }
  ++c.samples;
}

void Report::record_flag(const std::string& name, bool ok) { record(name, ok ? 0.0 : 1.0, 0.0); }

void Report::merge(const Report& other, const std::string& prefix) {
  for (Check c : other.checks_) {
    c.name = prefix + c.name;
    auto it = std::find_if(checks_.begin(), checks_.end(), [&](const Check& x) { return x.name == c.name; });
    if (it == checks_.end()) {
      checks_.push_back(std::move(c));
      continue;
    }
    // Same check from another run: pool the counts, keep the tighter sample.
    const bool tighter = !(c.slack() >= it->slack());
    it->samples += c.samples;
    it->violations += c.violations;
    if (tighter) {
      it->lhs = c.lhs;
      it->rhs = c.rhs;
      it->tolerance = c.tolerance;
    }
  }
}

bool Report::passed() const {
  return !checks_.empty() &&
         std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.passed(); });
}

const Check* Report::find(const std::string& name) const {
  auto it = std::find_if(checks_.begin(), checks_.end(),
                         [&](const Check& c) { return c.name == name; });
  return it == checks_.end() ? nullptr : &*it;
}

nlohmann::json Report::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const Check& c : checks_) {
    out.push_back({{"name", c.name},
                   {"lhs", c.lhs},
                   {"rhs", c.rhs},
                   {"tolerance", c.tolerance},
                   {"slack", c.slack()},
                   {"samples", c.samples},
                   {"violations", c.violations},
                   {"passed", c.passed()}});
  }
  return out;
}

}  // namespace plsgd

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace plsgd {

/// One inequality `lhs <= rhs + tolerance`, aggregated over many samples.
/// `lhs`/`rhs` hold the sample with the smallest slack seen so far.
struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;

  double slack() const { return rhs + tolerance - lhs; }
  bool passed() const { return violations == 0 && samples > 0; }
};

/// Pass/fail ledger for a verification suite.
class Report {
 public:
  /// Records one evaluation of `name`: lhs <= rhs + tolerance.
  void record(const std::string& name, double lhs, double rhs, double tolerance = 0.0);
  /// Records a boolean property as 0 <= 0 (pass) or 1 <= 0 (fail).
  void record_flag(const std::string& name, bool ok);
  /// Appends all checks of `other`, prefixing their names.
  void merge(const Report& other, const std::string& prefix = "");

  bool passed() const;
  const std::vector<Check>& checks() const { return checks_; }
  const Check* find(const std::string& name) const;

  nlohmann::json to_json() const;

 private:
  std::vector<Check> checks_;
};

}  // namespace plsgd

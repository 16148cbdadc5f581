#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace mergesplit {

struct CriterionResult {
  std::string id;  // "1".."13", or a named quick check
  std::string title;
  bool passed = false;
  std::string measured;  // the numbers behind the verdict
  double seconds = 0.0;
  double time_limit = 0.0;
};

struct AcceptanceOptions {
  bool quick = false;  // parameter identities, short series, logistic m0
  std::uint64_t seed = 20240611;
  std::set<std::string> only;  // empty runs everything
};

/// Runs the criteria in order. Each result is handed to `report` as soon as
/// it is available. An exception inside a criterion turns into a failed
/// line carrying the message.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& report = {});

/// "PASS 5  self-similar orbit ...  [measured]  (1.2 s / 30 s)"
std::string format_result(const CriterionResult& r);

}  // namespace mergesplit

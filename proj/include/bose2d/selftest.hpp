#pragma once

#include <string>
#include <vector>

namespace bose2d {

struct SelftestCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SelftestOptions {
  // Test hook: shifts the single-mode counterterm by 1e-3.
  bool counterterm_fault = false;
};

/// Fast identity checks and closed-form oracles, in a fixed order.
std::vector<SelftestCheck> run_selftest(const SelftestOptions& options = {});

/// One "PASS|FAIL name: detail" line per check.
std::string format_selftest(const std::vector<SelftestCheck>& checks);

}  // namespace bose2d

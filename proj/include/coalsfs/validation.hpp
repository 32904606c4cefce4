#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "coalsfs/closed_form_oracles.hpp"

namespace coalsfs {

enum class ValidationLevel { quick, full };

ValidationLevel parse_level(const std::string& s);
std::string to_string(ValidationLevel level);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Point estimate with its uncertainty scale, compared across step sizes.
struct Estimate {
  std::string label;
  double value = 0.0;
  double half_width = 0.0;
};

struct ValidationOptions {
  ValidationLevel level = ValidationLevel::full;
  int workers = 1;
  std::uint64_t seed = 20240611;
  std::vector<int> only;            // criterion ids to run; empty runs all
  std::ostream* progress = nullptr; // one line per finished criterion

  // Expected values come from here; a test swaps in a broken oracle to make
  // sure the suite notices.
  std::function<double(double, double)> exit_oracle = expected_two_sided_exit;
  std::function<double(double, double, double)> external_oracle = expected_external_branch;
  std::function<double(int, int)> interior_oracle = expected_interior_branch;
};

/// Replicate counts per criterion at a level.
struct ValidationPlan {
  std::size_t exit_runs, external_runs, interior_runs, pair_runs, triple_runs;
  std::size_t lln_runs, scan_logs, exchange_runs, poisson_draws, coupling_runs;
};

ValidationPlan plan_for(ValidationLevel level);

std::vector<CriterionResult> run_validation(const ValidationOptions& options);

// "PASS  3 name: detail" per criterion.
void print_results(std::ostream& out, const std::vector<CriterionResult>& results);

// CSV: criterion,name,status,detail.
void write_validation_report(std::ostream& out, const std::vector<CriterionResult>& results,
                             const ValidationOptions& options);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace coalsfs

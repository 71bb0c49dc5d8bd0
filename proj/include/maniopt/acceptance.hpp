#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maniopt {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the release gate end to end; `only` restricts to a single criterion
// (0 runs everything). Each criterion is self-contained and seeded, so the
// results are reproducible byte for byte.
std::vector<CriterionResult> run_acceptance(int only = 0);

// Prints one PASS/FAIL line per criterion; returns true when all pass.
bool report_acceptance(const std::vector<CriterionResult>& results,
                       std::ostream& out);

}  // namespace maniopt

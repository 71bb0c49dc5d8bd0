#include <iostream>

#include "maniopt/acceptance.hpp"

int main() {
  auto results = maniopt::run_acceptance();
  bool ok = maniopt::report_acceptance(results, std::cout);
  return ok ? 0 : 1;
}

// One line per acceptance criterion; nonzero exit if any fails.
#include <iostream>

#include "brwlab/acceptance.hpp"

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  bool all = true;
  brw::acceptance::run(filter, [&](const brw::acceptance::CriterionResult& r) {
    all = all && r.passed;
    std::cout << (r.passed ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.title << ", " << r.seconds
              << " s): " << r.measured << std::endl;
  });
  return all ? 0 : 1;
}

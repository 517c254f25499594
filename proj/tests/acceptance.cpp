// Acceptance suite: one line per criterion. Exits non-zero only on failures that are not known gaps.
#include <iostream>

#include "vmm/acceptance.hpp"

int main() {
  const auto rows = vmm::run_acceptance({}, &std::cout);
  int pass = 0, gaps = 0;
  for (const auto& r : rows) {
    pass += r.pass;
    gaps += !r.pass && r.known_gap;
  }
  std::cout << pass << "/" << rows.size() << " criteria passed";
  if (gaps) std::cout << ", " << gaps << " known gap" << (gaps > 1 ? "s" : "");
  std::cout << "\n";
  return vmm::only_known_gaps(rows) ? 0 : 1;
}

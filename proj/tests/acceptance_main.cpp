// Prints one PASS/FAIL line per acceptance criterion for the reference
// shock. Exit status reflects completion, not the verdicts.
#include "relax/acceptance.hpp"

#include <cstdio>
#include <thread>

int main() {
  using namespace relax;
  try {
    Instance inst(reference_config(), static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    const auto lines = run_criteria(default_criteria("verify-all"), inst, true);
    int failed = 0;
    for (const auto& l : lines) failed += l.failed();
    std::printf("%d of %zu criteria failed\n", failed, lines.size());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 1;
  }
}

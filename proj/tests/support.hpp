#ifndef ANRSP_TESTS_SUPPORT_HPP
#define ANRSP_TESTS_SUPPORT_HPP

#include <map>
#include <memory>
#include <utility>

#include "anrsp/anrsp.hpp"

namespace anrsp::fixtures {

/// Full pipeline runs shared by the tests in one binary, keyed by case study and n.
inline const OptimalRun& cached_run(bool nonlinear, int n) {
  static std::map<std::pair<bool, int>, std::unique_ptr<OptimalRun>> cache;
  auto& slot = cache[{nonlinear, n}];
  if (!slot) {
    RunConfig cfg = nonlinear ? nonlinear_case_study() : cat_case_study();
    cfg.spectral = SpectralConfig::for_order(n);
    slot = std::make_unique<OptimalRun>(run_optimal(cfg));
  }
  return *slot;
}

inline RunConfig case_config(bool nonlinear, int n) {
  RunConfig cfg = nonlinear ? nonlinear_case_study() : cat_case_study();
  cfg.spectral = SpectralConfig::for_order(n);
  return cfg;
}

}  // namespace anrsp::fixtures

#endif  // ANRSP_TESTS_SUPPORT_HPP

#pragma once

#include <cstddef>
#include <vector>

#include "mdpnas/tabular_mdp.hpp"

namespace fixtures {

/// One state, two self-looping actions: the bandit used throughout the tests.
inline mdpnas::TabularMdp bandit(double r0, double r1, double gamma) {
  return mdpnas::TabularMdp(1, 2, gamma, {1.0, 1.0}, {r0, r1});
}

/// Deterministic successor map: action a in state s moves to next[s][a].
inline mdpnas::TabularMdp deterministic(const std::vector<std::vector<std::size_t>>& next,
                                        const std::vector<double>& rewards, double gamma) {
  const std::size_t S = next.size();
  const std::size_t A = next[0].size();
  std::vector<double> p(S * A * S, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) p[(s * A + a) * S + next[s][a]] = 1.0;
  return mdpnas::TabularMdp(S, A, gamma, std::move(p), rewards);
}

/// Two states, two actions, full support; used by the Monte-Carlo checks.
inline mdpnas::TabularMdp two_state() {
  return mdpnas::TabularMdp(2, 2, 0.8,
                            {0.7, 0.3, 0.2, 0.8,  //
                             0.4, 0.6, 0.9, 0.1},
                            {0.3, 0.6, 0.8, 0.2});
}

}  // namespace fixtures

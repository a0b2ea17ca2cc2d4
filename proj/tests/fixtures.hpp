#pragma once

#include <vector>

#include "canon/ensemble.hpp"
#include "canon/space.hpp"

namespace fixtures {

/// K cells (weights in [0.5, 2] when weighted), random pair W in [-1, 1] and
/// optionally a random full order-N term in [-0.5, 0.5].
inline canon::CanonicalSystem random_system(int K, int N, int m, std::uint64_t seed,
                                            bool weighted = false, bool with_full = false,
                                            canon::ExactOptions opts = {}) {
  using namespace canon;
  std::vector<double> w(static_cast<std::size_t>(K), 1.0);
  if (weighted) {
    const auto t = random_table(StateSpace::uniform(K), 1, 0.5, 2.0, seed ^ 0x5eedULL);
    w.assign(t.values().begin(), t.values().end());
  }
  const StateSpace space(std::move(w));
  PotentialSpec pot;
  pot.add_term(random_table(space, 2, -1.0, 1.0, seed + 1000));
  if (with_full) pot.set_full(random_table(space, N, -0.5, 0.5, seed + 2000));
  return CanonicalSystem(space, N, m, pot, opts);
}

}  // namespace fixtures

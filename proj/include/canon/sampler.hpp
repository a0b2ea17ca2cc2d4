#pragma once

// Metropolis Monte Carlo estimates of m-particle densities for systems too
// large to enumerate. Each move resamples one coordinate uniformly among the
// other K-1 cells; standard errors come from batch means.

#include <cstdint>
#include <stdexcept>

#include "canon/ensemble.hpp"
#include "canon/space.hpp"

namespace canon {

struct ChainConfig {
  int num_chains = 4;
  /// Total sweeps per chain, burn-in included. One sweep = N proposals.
  int sweeps = 20000;
  int burn_in = 1000;
  std::uint64_t seed = 1;
  int batches = 20;

  void validate() const;
};

struct DensityEstimate {
  SymmetricTable mean;
  SymmetricTable std_error;
  double acceptance_rate;
};

struct GradientEstimate {
  SymmetricTable mean;       // C(N,m) (rho_hat - target)
  SymmetricTable std_error;
  SymmetricTable density;    // rho_hat
  SymmetricTable density_error;
  double acceptance_rate;
};

/// A chain accepted nothing during burn-in.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(const std::string& what, double acceptance_rate)
      : std::runtime_error(what), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

DensityEstimate run_chain(const CanonicalSystem& sys, const SymmetricTable& u,
                          const ChainConfig& cfg);

GradientEstimate estimate_gradient(const CanonicalSystem& sys,
                                   const SymmetricTable& u,
                                   const SymmetricTable& target,
                                   const ChainConfig& cfg);

}  // namespace canon

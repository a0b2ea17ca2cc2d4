#pragma once

// Executable checks of the structural properties the inverse problem rests
// on: concavity and boundedness of log_F, the lower-bound condition on P that
// makes solutions unique, consistency of a target with a parent density, and
// agreement of derivatives with finite differences.

#include <span>
#include <string>
#include <vector>

#include "canon/ensemble.hpp"
#include "canon/solver.hpp"
#include "canon/space.hpp"
#include "json.hpp"

namespace canon {

namespace tolerance {
inline constexpr double kConcavitySlack = 1e-12;
inline constexpr double kEquality = 1e-10;
inline constexpr double kBound = 1e-10;
inline constexpr double kConsistency = 1e-10;
inline constexpr double kFdStep = 1e-5;
inline constexpr double kGradientRel = 1e-6;
inline constexpr double kHessianRel = 1e-4;
/// Directional derivatives smaller than this are compared in absolute terms.
inline constexpr double kDerivativeFloor = 1e-3;
inline constexpr double kNullSpace = 1e-10;
}  // namespace tolerance

enum class CheckStatus { Pass, Fail, Inconclusive };

std::string to_string(CheckStatus s);

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::Fail;
  nlohmann::json witness = nlohmann::json::object();

  bool passed() const { return status == CheckStatus::Pass; }
};

nlohmann::json to_json(const CheckReport& r);

/// log_F(l u1 + (1-l) u0) >= l log_F(u1) + (1-l) log_F(u0) on the grid, with
/// equality when u1 - u0 is constant and a strict gap at l = 1/2 otherwise.
CheckReport check_concavity(const CanonicalSystem& sys,
                            const SymmetricTable& target,
                            const SymmetricTable& u0, const SymmetricTable& u1,
                            std::span<const double> lambdas);

/// log_F(u, reduce(P, m)) <= bound_log(P, W) for every u.
CheckReport check_bound(const CanonicalSystem& sys, const SymmetricTable& P,
                        std::span<const SymmetricTable> potentials);

/// gamma(c) = min over (N-1)-tuples y of P(y, c) / rho^(N-1)(y).
std::vector<double> gamma_profile(const SymmetricTable& P);
CheckReport check_condition_P(const SymmetricTable& P);

CheckReport check_consistency(const SymmetricTable& rho, const SymmetricTable& P);

/// Solves from every initial guess (plus the closed form when m = N) and
/// compares gauge-fixed solutions within 10x the solver tolerance.
CheckReport check_uniqueness(const CanonicalSystem& sys,
                             const SymmetricTable& target,
                             std::span<const SymmetricTable> inits,
                             const SolverConfig& cfg = {});

CheckReport check_gradient_fd(const CanonicalSystem& sys,
                              const SymmetricTable& target,
                              const SymmetricTable& u,
                              std::span<const SymmetricTable> directions);

/// Quadratic forms of the covariance Hessian against second differences of
/// log_F, the all-ones null vector, and negative semidefiniteness.
CheckReport check_hessian(const CanonicalSystem& sys,
                          const SymmetricTable& target,
                          const SymmetricTable& u,
                          std::span<const SymmetricTable> directions);

}  // namespace canon

#pragma once

// Inverse solver: finds the order-m potential whose canonical m-density equals
// a target by maximizing the concave functional log_F. The maximizer is unique
// up to an additive constant; returned potentials are gauge fixed to zero
// weighted mean.

#include <optional>
#include <string>
#include <vector>

#include "canon/ensemble.hpp"
#include "canon/sampler.hpp"
#include "canon/space.hpp"

namespace canon {

enum class Method { GradientAscent, Newton };
enum class Engine { Exact, Sampled };

std::string to_string(Method m);
std::string to_string(Engine e);
Method parse_method(const std::string& s);
Engine parse_engine(const std::string& s);

struct LineSearch {
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_increase = 1e-4;
  int max_backtracks = 80;
};

struct SolverConfig {
  Method method = Method::Newton;
  /// Sup-norm threshold on rho_u - target.
  double tol = 1e-10;
  int max_iters = 500;
  std::optional<SymmetricTable> initial_u;
  LineSearch line_search;
  Engine engine = Engine::Exact;
  /// Chain settings for Engine::Sampled; the seed advances every iteration.
  ChainConfig sampler;

  void validate() const;
};

struct SolveReport {
  SymmetricTable u;
  int iterations = 0;
  double final_residual = 0.0;
  double final_l1 = 0.0;
  /// log_F after each accepted step, starting from the initial guess. Empty
  /// for the sampled engine, which never evaluates log Z.
  std::vector<double> log_F_trace;
  bool converged = false;
  double log_z = 0.0;
  /// Sup-norm of the returned potential; grows without bound on targets that
  /// are not reductions of any positive N-density.
  double u_sup_norm = 0.0;
  std::string stop_reason;
  /// Largest density standard error at the last iterate (sampled engine).
  std::optional<double> final_std_error;
};

/// Shifts u so that its weighted mean over ordered tuples is zero.
SymmetricTable gauge_fix(const SymmetricTable& u);

SolveReport invert(const CanonicalSystem& sys, const SymmetricTable& target,
                   const SolverConfig& cfg = {});

/// Closed form for m = N: u = -log(target) - W, gauge fixed.
SymmetricTable trivial_invert(const CanonicalSystem& sys,
                              const SymmetricTable& target);

}  // namespace canon

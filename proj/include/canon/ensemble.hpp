#pragma once

// Exact canonical-ensemble engine.
//
// A CanonicalSystem holds N identical particles on a weighted state space with
// a fixed symmetric internal potential W. For an order-m symmetric table u the
// total potential is W(x) + U(x), where U sums u over every m-subset of the N
// coordinates. Configuration x has Boltzmann weight exp(-W-U) * prod w_{x_i}
// (beta = 1). All quantities here are computed by enumerating the K^N ordered
// configurations in the log domain.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "canon/space.hpp"

namespace canon {

/// Raised when K^N exceeds the exact-mode budget; use the sampler instead.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed internal potential: a sum of lower-order symmetric interactions, each
/// lifted over all coordinate subsets of its order, plus an optional full
/// order-N table.
class PotentialSpec {
 public:
  PotentialSpec() = default;

  void add_term(SymmetricTable term);
  void set_full(SymmetricTable full);

  std::span<const SymmetricTable> terms() const { return terms_; }
  const std::optional<SymmetricTable>& full() const { return full_; }
  bool is_zero() const { return terms_.empty() && !full_; }

  /// W at an ordered N-tuple.
  double operator()(std::span<const int> x) const;

 private:
  std::vector<SymmetricTable> terms_;
  std::optional<SymmetricTable> full_;
};

struct ExactOptions {
  std::uint64_t budget = std::uint64_t{1} << 24;
  /// Number of index blocks in the configuration reduction. Blocks are merged
  /// in order, so results do not depend on how they are scheduled.
  int partitions = 1;
  bool parallel = false;
};

class CanonicalSystem {
 public:
  CanonicalSystem(StateSpace space, int particles, int order,
                  PotentialSpec potential = {}, ExactOptions options = {});

  const StateSpace& space() const { return space_; }
  int num_cells() const { return space_.num_cells(); }
  int particles() const { return particles_; }
  int order() const { return order_; }
  const PotentialSpec& potential() const { return potential_; }
  const ExactOptions& options() const { return options_; }

  /// C(N, m).
  std::uint64_t num_subsets() const { return num_subsets_; }
  /// K^N, saturating at UINT64_MAX.
  std::uint64_t num_configurations() const { return num_configs_; }
  bool enumerable() const { return num_configs_ <= options_.budget; }
  /// Throws BudgetError unless enumerable().
  void require_enumerable() const;

  /// Same system with a different interaction order (1 <= order <= N).
  CanonicalSystem with_order(int order) const;

 private:
  StateSpace space_;
  int particles_;
  int order_;
  PotentialSpec potential_;
  ExactOptions options_;
  std::uint64_t num_subsets_;
  std::uint64_t num_configs_;
};

struct ExactEvaluation {
  double log_z;
  SymmetricTable density;              // order m, per ordered tuple
  std::optional<Eigen::MatrixXd> hessian;  // -Cov(S), multiset ranks
};

struct EnsembleSummary {
  double log_z;
  SymmetricTable density;
  std::optional<double> log_f;
  std::optional<double> upper_bound_log;
};

/// W(x) + sum over m-subsets of u.
double total_potential(const CanonicalSystem& sys, const SymmetricTable& u,
                       std::span<const int> x);

double log_partition(const CanonicalSystem& sys, const SymmetricTable& u);

/// Order-m density of the canonical distribution at u.
SymmetricTable m_density(const CanonicalSystem& sys, const SymmetricTable& u);

/// Density of any order 1..N of the same canonical distribution.
SymmetricTable density_of_order(const CanonicalSystem& sys,
                                const SymmetricTable& u, int order);

/// log Z, the order-m density and optionally the Hessian in one enumeration.
ExactEvaluation evaluate(const CanonicalSystem& sys, const SymmetricTable& u,
                         bool with_hessian = false);

/// Integrates out coordinates of a symmetric density down to `order`.
SymmetricTable reduce_density(const SymmetricTable& rho, int order);

/// log F = -C(N,m) <target, u> - log Z(u).
double log_F(const CanonicalSystem& sys, const SymmetricTable& u,
             const SymmetricTable& target);

/// C(N,m) (rho_u - target) as a table. The derivative of log_F along xi is
/// inner(grad, xi).
SymmetricTable grad_log_F(const CanonicalSystem& sys, const SymmetricTable& u,
                          const SymmetricTable& target);

/// Second derivative of log_F with respect to the per-multiset values of u:
/// entry (a, b) = -Cov(S_a, S_b), where S_a counts the m-subsets of a
/// configuration equal to multiset a.
Eigen::MatrixXd hessian_log_F(const CanonicalSystem& sys,
                              const SymmetricTable& u);

/// log_F(u + step) - log_F(u), evaluated without cancelling the two
/// log-partition values against each other. Accurate for steps far below
/// the rounding resolution of log_F itself.
double log_F_increment(const CanonicalSystem& sys, const SymmetricTable& u,
                       const SymmetricTable& step, const SymmetricTable& target);

/// Integral of (W + log P)_+ P over ordered N-tuples; log_F never exceeds it.
double bound_log(const SymmetricTable& P, const PotentialSpec& W);

EnsembleSummary summarize(const CanonicalSystem& sys, const SymmetricTable& u,
                          const SymmetricTable* target = nullptr,
                          const SymmetricTable* P = nullptr);

/// Throws InputError unless `target` has order m on the system's space and
/// integrates to one within 1e-8.
void require_target(const CanonicalSystem& sys, const SymmetricTable& target);

/// Canonical N-particle density exp(-W-U)/Z as an order-N table.
SymmetricTable configuration_density(const CanonicalSystem& sys,
                                     const SymmetricTable& u);

}  // namespace canon

#include "canon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace canon {

using nlohmann::json;

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Inconclusive: return "inconclusive";
  }
  return "fail";
}

json to_json(const CheckReport& r) {
  return json{{"name", r.name},
              {"status", to_string(r.status)},
              {"passed", r.passed()},
              {"witness", r.witness}};
}

namespace {

CheckStatus status_of(bool ok) { return ok ? CheckStatus::Pass : CheckStatus::Fail; }

std::vector<int> cells_of(const SymmetricTable& t, std::size_t r) {
  return unrank(r, t.order(), t.space().num_cells()).cells;
}

bool differs_by_constant(const SymmetricTable& a, const SymmetricTable& b) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t r = 0; r < a.size(); ++r) {
    lo = std::min(lo, a[r] - b[r]);
    hi = std::max(hi, a[r] - b[r]);
  }
  const double scale = std::max({1.0, sup_norm(a), sup_norm(b)});
  return hi - lo <= 1e-12 * scale;
}

SymmetricTable target_from(const CanonicalSystem& sys, const SymmetricTable& P) {
  return P.order() == sys.order() ? P : reduce_density(P, sys.order());
}

}  // namespace

CheckReport check_concavity(const CanonicalSystem& sys,
                            const SymmetricTable& target,
                            const SymmetricTable& u0, const SymmetricTable& u1,
                            std::span<const double> lambdas) {
  CheckReport rep{"concavity"};
  const double f0 = log_F(sys, u0, target);
  const double f1 = log_F(sys, u1, target);
  const bool constant = differs_by_constant(u1, u0);

  auto margin_at = [&](double lambda) {
    const auto mix = lambda * u1 + (1.0 - lambda) * u0;
    return log_F(sys, mix, target) - (lambda * f1 + (1.0 - lambda) * f0);
  };

  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  double worst_lambda = 0.0;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0 && lambda < 1.0))
      throw InputError("concavity grid points must lie in (0, 1)");
    const double m = margin_at(lambda);
    if (m < worst) {
      worst = m;
      worst_lambda = lambda;
    }
    if (m < -tolerance::kConcavitySlack) ok = false;
    if (constant && std::abs(m) > tolerance::kEquality) ok = false;
  }
  const double mid = margin_at(0.5);
  if (!constant && !(mid > 0.0)) ok = false;
  if (constant && std::abs(mid) > tolerance::kEquality) ok = false;

  rep.status = status_of(ok);
  rep.witness = {{"constant_difference", constant},
                 {"worst_margin", worst},
                 {"worst_lambda", worst_lambda},
                 {"margin_at_half", mid},
                 {"log_F_u0", f0},
                 {"log_F_u1", f1}};
  return rep;
}

CheckReport check_bound(const CanonicalSystem& sys, const SymmetricTable& P,
                        std::span<const SymmetricTable> potentials) {
  CheckReport rep{"bound"};
  if (P.order() != sys.particles() || !(P.space() == sys.space()))
    throw InputError("P must be an order-N table on the system's space");
  const double bound = bound_log(P, sys.potential());
  const auto target = target_from(sys, P);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_index = 0;
  for (std::size_t i = 0; i < potentials.size(); ++i) {
    const double f = log_F(sys, potentials[i], target);
    if (f - bound > worst) {
      worst = f - bound;
      worst_index = i;
    }
  }
  rep.status = status_of(potentials.empty() || worst <= tolerance::kBound);
  rep.witness = {{"bound_log", bound},
                 {"max_excess", potentials.empty() ? 0.0 : worst},
                 {"worst_potential", worst_index},
                 {"num_potentials", potentials.size()}};
  return rep;
}

std::vector<double> gamma_profile(const SymmetricTable& P) {
  const int N = P.order();
  if (N < 2) throw InputError("P must have order at least 2");
  const int K = P.space().num_cells();
  for (double v : P.values())
    if (!(v > 0.0)) throw InputError("P must be strictly positive");
  const auto rho = reduce_density(P, N - 1);
  std::vector<double> gamma(static_cast<std::size_t>(K),
                            std::numeric_limits<double>::infinity());
  std::vector<int> merged(static_cast<std::size_t>(N));
  for_each_multiset(N - 1, K, [&](std::uint64_t r, std::span<const int> cells) {
    for (int c = 0; c < K; ++c) {
      const auto pos = std::upper_bound(cells.begin(), cells.end(), c) - cells.begin();
      std::copy(cells.begin(), cells.begin() + pos, merged.begin());
      merged[static_cast<std::size_t>(pos)] = c;
      std::copy(cells.begin() + pos, cells.end(), merged.begin() + pos + 1);
      const double ratio = P[rank_sorted(merged, K)] / rho[r];
      gamma[static_cast<std::size_t>(c)] = std::min(gamma[static_cast<std::size_t>(c)], ratio);
    }
  });
  return gamma;
}

CheckReport check_condition_P(const SymmetricTable& P) {
  CheckReport rep{"condition_P"};
  const auto gamma = gamma_profile(P);
  // Every cell has positive weight, so one cell with gamma > 0 is a set of
  // positive measure.
  double covered = 0.0;
  for (std::size_t c = 0; c < gamma.size(); ++c)
    if (gamma[c] > 0.0) covered += P.space().weight(static_cast<int>(c));
  rep.status = status_of(covered > 0.0);
  rep.witness = {{"gamma", gamma}, {"measure_with_positive_gamma", covered}};
  return rep;
}

CheckReport check_consistency(const SymmetricTable& rho, const SymmetricTable& P) {
  CheckReport rep{"consistency"};
  if (!(rho.space() == P.space())) throw InputError("tables on different spaces");
  if (rho.order() > P.order()) throw InputError("candidate order exceeds order of P");
  const auto reduced = rho.order() == P.order() ? P : reduce_density(P, rho.order());
  double worst = 0.0;
  std::size_t where = 0;
  for (std::size_t r = 0; r < rho.size(); ++r) {
    const double d = std::abs(rho[r] - reduced[r]);
    if (d > worst) {
      worst = d;
      where = r;
    }
  }
  rep.status = status_of(worst <= tolerance::kConsistency);
  rep.witness = {{"sup_difference", worst},
                 {"worst_rank", where},
                 {"worst_cells", cells_of(rho, where)},
                 {"candidate", rho[where]},
                 {"reduced", reduced[where]}};
  return rep;
}

CheckReport check_uniqueness(const CanonicalSystem& sys,
                             const SymmetricTable& target,
                             std::span<const SymmetricTable> inits,
                             const SolverConfig& cfg) {
  CheckReport rep{"uniqueness"};
  std::vector<SymmetricTable> solutions;
  json runs = json::array();
  bool all_converged = true;
  for (const auto& init : inits) {
    SolverConfig run = cfg;
    run.initial_u = init;
    // A density residual of tol can leave the potential off by more than
    // 10 tol on ill-conditioned targets, so solve a little tighter.
    run.tol = std::min(cfg.tol, std::max(1e-2 * cfg.tol, 1e-13));
    const auto report = invert(sys, target, run);
    runs.push_back({{"converged", report.converged},
                    {"iterations", report.iterations},
                    {"residual", report.final_residual}});
    all_converged = all_converged && report.converged;
    solutions.push_back(report.u);
  }
  if (sys.order() == sys.particles()) {
    solutions.push_back(trivial_invert(sys, target));
    runs.push_back({{"closed_form", true}});
  }
  double spread = 0.0;
  for (std::size_t i = 0; i < solutions.size(); ++i)
    for (std::size_t j = i + 1; j < solutions.size(); ++j)
      spread = std::max(spread, sup_distance(solutions[i], solutions[j]));

  const double threshold = 10.0 * cfg.tol;
  if (!all_converged)
    rep.status = CheckStatus::Inconclusive;
  else
    rep.status = status_of(spread <= threshold);
  rep.witness = {{"max_pairwise_sup", spread}, {"threshold", threshold}, {"runs", runs}};
  return rep;
}

CheckReport check_gradient_fd(const CanonicalSystem& sys,
                              const SymmetricTable& target,
                              const SymmetricTable& u,
                              std::span<const SymmetricTable> directions) {
  CheckReport rep{"gradient_fd"};
  const auto g = grad_log_F(sys, u, target);
  const double h = tolerance::kFdStep;
  double worst = 0.0;
  std::size_t worst_dir = 0;
  json detail = json::array();
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const auto& xi = directions[i];
    const double analytic = inner(g, xi);
    const double fd =
        (log_F(sys, u + h * xi, target) - log_F(sys, u + (-h) * xi, target)) / (2.0 * h);
    const double rel = std::abs(analytic - fd) /
                       std::max({std::abs(analytic), std::abs(fd), tolerance::kDerivativeFloor});
    if (rel >= worst) {
      worst = rel;
      worst_dir = i;
    }
    detail.push_back({{"analytic", analytic}, {"finite_difference", fd}, {"rel_error", rel}});
  }
  rep.status = status_of(worst <= tolerance::kGradientRel);
  rep.witness = {{"max_rel_error", worst}, {"worst_direction", worst_dir}, {"directions", detail}};
  return rep;
}

CheckReport check_hessian(const CanonicalSystem& sys,
                          const SymmetricTable& target,
                          const SymmetricTable& u,
                          std::span<const SymmetricTable> directions) {
  CheckReport rep{"hessian"};
  const Eigen::MatrixXd H = hessian_log_F(sys, u);
  const auto n = H.rows();
  // Second differences lose ~eps/h^2; a larger step than the gradient check
  // keeps rounding well under the tolerance.
  const double h = 1e-4;
  const double f0 = log_F(sys, u, target);
  double worst = 0.0;
  for (const auto& d : directions) {
    const Eigen::Map<const Eigen::VectorXd> v(d.values().data(), n);
    const double q = v.dot(H * v);
    const double fd = (log_F(sys, u + h * d, target) - 2.0 * f0 +
                       log_F(sys, u + (-h) * d, target)) / (h * h);
    const double rel = std::abs(q - fd) /
                       std::max({std::abs(q), std::abs(fd), tolerance::kDerivativeFloor});
    worst = std::max(worst, rel);
  }
  const double null_residual = (H * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double max_eigenvalue = eig.eigenvalues().maxCoeff();
  const double max_diagonal = H.diagonal().maxCoeff();

  const bool ok = worst <= tolerance::kHessianRel &&
                  null_residual <= tolerance::kNullSpace &&
                  max_eigenvalue <= tolerance::kNullSpace &&
                  max_diagonal <= tolerance::kNullSpace;
  rep.status = status_of(ok);
  rep.witness = {{"max_rel_error", worst},
                 {"null_residual", null_residual},
                 {"max_eigenvalue", max_eigenvalue},
                 {"max_diagonal", max_diagonal}};
  return rep;
}

}  // namespace canon

#include "canon/solver.hpp"

#include <algorithm>
#include <cmath>

namespace canon {

std::string to_string(Method m) {
  return m == Method::Newton ? "newton" : "gradient-ascent";
}

std::string to_string(Engine e) { return e == Engine::Exact ? "exact" : "sampled"; }

Method parse_method(const std::string& s) {
  if (s == "newton") return Method::Newton;
  if (s == "gradient-ascent" || s == "gradient") return Method::GradientAscent;
  throw InputError("unknown solver method '" + s + "'");
}

Engine parse_engine(const std::string& s) {
  if (s == "exact") return Engine::Exact;
  if (s == "sampled") return Engine::Sampled;
  throw InputError("unknown engine '" + s + "'");
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw InputError("tol must be positive");
  if (max_iters < 0) throw InputError("max_iters must be nonnegative");
  if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0))
    throw InputError("line search shrink factor must lie in (0, 1)");
  if (!(line_search.initial_step > 0.0))
    throw InputError("initial step must be positive");
  if (!(line_search.sufficient_increase > 0.0 && line_search.sufficient_increase < 1.0))
    throw InputError("sufficient-increase constant must lie in (0, 1)");
  if (engine == Engine::Sampled) sampler.validate();
}

SymmetricTable gauge_fix(const SymmetricTable& u) {
  const double volume = std::pow(u.space().total_measure(), u.order());
  return u + (-integrate(u) / volume);
}

namespace {

void require_inverse_target(const CanonicalSystem& sys, const SymmetricTable& target) {
  require_target(sys, target);
  for (double v : target.values())
    if (!(v > 0.0)) throw InputError("target density must be strictly positive");
}

double l1_distance(const SymmetricTable& a, const SymmetricTable& b) {
  double sum = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) sum += a.mass(r) * std::abs(a[r] - b[r]);
  return sum;
}

/// d log_F / d u_alpha for every multiset alpha.
Eigen::VectorXd coordinate_gradient(const CanonicalSystem& sys,
                                    const SymmetricTable& rho_u,
                                    const SymmetricTable& target) {
  const double subsets = static_cast<double>(sys.num_subsets());
  Eigen::VectorXd g(static_cast<Eigen::Index>(rho_u.size()));
  for (std::size_t r = 0; r < rho_u.size(); ++r)
    g[static_cast<Eigen::Index>(r)] = subsets * rho_u.mass(r) * (rho_u[r] - target[r]);
  return g;
}

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& grad) {
  const auto n = hessian.rows();
  Eigen::MatrixXd a = -hessian;
  const double scale = std::max(a.trace() / static_cast<double>(n), 1e-300);
  // The all-ones direction is a null vector of the Hessian; pin it with a rank-
  // one term so the solve stays in the mean-zero subspace.
  a += (scale / static_cast<double>(n)) * Eigen::MatrixXd::Ones(n, n);
  a.diagonal().array() += 1e-10 * scale;
  return a.ldlt().solve(grad);
}

SymmetricTable as_table(const SymmetricTable& like, const Eigen::VectorXd& v,
                        double factor) {
  std::vector<double> values(like.size());
  for (std::size_t r = 0; r < values.size(); ++r)
    values[r] = factor * v[static_cast<Eigen::Index>(r)];
  return SymmetricTable(like.space(), like.order(), std::move(values));
}

SolveReport invert_exact(const CanonicalSystem& sys, const SymmetricTable& target,
                         const SolverConfig& cfg, SymmetricTable u) {
  SolveReport rep{u};
  const bool newton = cfg.method == Method::Newton;
  const double subsets = static_cast<double>(sys.num_subsets());
  for (int it = 0;; ++it) {
    auto ev = evaluate(sys, u, newton);
    if (rep.log_F_trace.empty())
      rep.log_F_trace.push_back(-subsets * inner(target, u) - ev.log_z);
    rep.final_residual = sup_distance(ev.density, target);
    rep.final_l1 = l1_distance(ev.density, target);
    rep.log_z = ev.log_z;
    if (rep.final_residual <= cfg.tol) {
      rep.converged = true;
      rep.stop_reason = "density residual below tolerance";
      break;
    }
    if (it >= cfg.max_iters) {
      rep.stop_reason = "iteration limit reached";
      break;
    }

    const Eigen::VectorXd grad = coordinate_gradient(sys, ev.density, target);
    Eigen::VectorXd dir = newton ? newton_direction(*ev.hessian, grad) : grad;
    double slope = grad.dot(dir);
    if (!(slope > 0.0) || !dir.allFinite()) {
      dir = grad;
      slope = grad.squaredNorm();
    }

    double t = cfg.line_search.initial_step;
    bool accepted = false;
    double increase = 0.0;
    SymmetricTable step = as_table(u, dir, t);
    for (int b = 0; b <= cfg.line_search.max_backtracks; ++b) {
      step = as_table(u, dir, t);
      increase = log_F_increment(sys, u, step, target);
      if (std::isfinite(increase) &&
          increase >= cfg.line_search.sufficient_increase * t * slope) {
        accepted = true;
        break;
      }
      t *= cfg.line_search.shrink;
    }
    if (!accepted) {
      rep.stop_reason = "line search found no sufficient increase";
      break;
    }
    u = gauge_fix(u + step);
    rep.log_F_trace.push_back(rep.log_F_trace.back() + increase);
    ++rep.iterations;
  }
  rep.u = std::move(u);
  rep.u_sup_norm = sup_norm(rep.u);
  return rep;
}

SolveReport invert_sampled(const CanonicalSystem& sys, const SymmetricTable& target,
                           const SolverConfig& cfg, SymmetricTable u) {
  SolveReport rep{u};
  ChainConfig chains = cfg.sampler;
  for (int it = 0;; ++it) {
    chains.seed = cfg.sampler.seed + static_cast<std::uint64_t>(it);
    const auto est = estimate_gradient(sys, u, target, chains);
    bool within = true;
    double worst_err = 0.0;
    for (std::size_t r = 0; r < target.size(); ++r) {
      const double gap = std::abs(est.density[r] - target[r]);
      within = within && gap <= cfg.tol + 3.0 * est.density_error[r];
      worst_err = std::max(worst_err, est.density_error[r]);
    }
    rep.final_residual = sup_distance(est.density, target);
    rep.final_l1 = l1_distance(est.density, target);
    rep.final_std_error = worst_err;
    if (within) {
      rep.converged = true;
      rep.stop_reason = "density residual within tolerance plus 3 standard errors";
      break;
    }
    if (it >= cfg.max_iters) {
      rep.stop_reason = "iteration limit reached";
      break;
    }
    const Eigen::VectorXd grad = coordinate_gradient(sys, est.density, target);
    const double t = cfg.line_search.initial_step / (1.0 + it / 10.0);
    u = gauge_fix(u + as_table(u, grad, t));
    ++rep.iterations;
  }
  rep.u = std::move(u);
  rep.u_sup_norm = sup_norm(rep.u);
  return rep;
}

}  // namespace

SolveReport invert(const CanonicalSystem& sys, const SymmetricTable& target,
                   const SolverConfig& cfg) {
  cfg.validate();
  require_inverse_target(sys, target);
  SymmetricTable u(sys.space(), sys.order());
  if (cfg.initial_u) {
    if (!cfg.initial_u->compatible(u))
      throw InputError("initial potential does not match the system's order and space");
    u = *cfg.initial_u;
  }
  u = gauge_fix(u);
  if (cfg.engine == Engine::Exact) {
    sys.require_enumerable();
    return invert_exact(sys, target, cfg, std::move(u));
  }
  return invert_sampled(sys, target, cfg, std::move(u));
}

SymmetricTable trivial_invert(const CanonicalSystem& sys,
                              const SymmetricTable& target) {
  if (sys.order() != sys.particles())
    throw InputError("closed-form inversion requires m = N");
  require_inverse_target(sys, target);
  SymmetricTable u(sys.space(), sys.order());
  for_each_multiset(sys.order(), sys.num_cells(),
                    [&](std::uint64_t r, std::span<const int> cells) {
                      u.set(r, -std::log(target[r]) - sys.potential()(cells));
                    });
  return gauge_fix(u);
}

}  // namespace canon

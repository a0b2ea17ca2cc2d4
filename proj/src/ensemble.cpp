#include "canon/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "lift.hpp"

namespace canon {

void PotentialSpec::add_term(SymmetricTable term) {
  if (!terms_.empty() && !(terms_.front().space() == term.space()))
    throw InputError("potential terms must share a state space");
  if (full_ && !(full_->space() == term.space()))
    throw InputError("potential terms must share a state space");
  terms_.push_back(std::move(term));
}

void PotentialSpec::set_full(SymmetricTable full) {
  if (!terms_.empty() && !(terms_.front().space() == full.space()))
    throw InputError("potential terms must share a state space");
  full_ = std::move(full);
}

double PotentialSpec::operator()(std::span<const int> x) const {
  const int N = static_cast<int>(x.size());
  double w = 0.0;
  std::vector<int> combo, cells;
  for (const auto& term : terms_) {
    const int k = term.order();
    if (k > N) throw InputError("potential term order exceeds N");
    combo.resize(static_cast<std::size_t>(k));
    cells.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) combo[i] = i;
    for (;;) {
      for (int i = 0; i < k; ++i) cells[i] = x[combo[i]];
      w += term.at(cells);
      int i = k - 1;
      while (i >= 0 && combo[i] == N - k + i) --i;
      if (i < 0) break;
      ++combo[i];
      for (int j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
    }
  }
  if (full_) w += full_->at(x);
  return w;
}

CanonicalSystem::CanonicalSystem(StateSpace space, int particles, int order,
                                 PotentialSpec potential, ExactOptions options)
    : space_(std::move(space)),
      particles_(particles),
      order_(order),
      potential_(std::move(potential)),
      options_(options) {
  if (particles_ < 2) throw InputError("particle count N must be at least 2");
  if (order_ < 1) throw InputError("interaction order m must be at least 1");
  if (order_ > particles_) throw InputError("interaction order m exceeds N");
  if (options_.partitions < 1) throw InputError("partitions must be positive");
  for (const auto& term : potential_.terms()) {
    if (!(term.space() == space_))
      throw InputError("potential term defined on a different state space");
    if (term.order() > particles_)
      throw InputError("potential term order exceeds N");
  }
  if (const auto& full = potential_.full()) {
    if (!(full->space() == space_))
      throw InputError("full potential defined on a different state space");
    if (full->order() != particles_)
      throw InputError("full potential table must have order N");
  }
  num_subsets_ = binomial(static_cast<std::uint64_t>(particles_),
                          static_cast<std::uint64_t>(order_));
  try {
    num_configs_ = int_pow(static_cast<std::uint64_t>(space_.num_cells()), particles_);
  } catch (const InputError&) {
    num_configs_ = std::numeric_limits<std::uint64_t>::max();
  }
}

void CanonicalSystem::require_enumerable() const {
  if (!enumerable())
    throw BudgetError("exact enumeration needs " +
                      (num_configs_ == std::numeric_limits<std::uint64_t>::max()
                           ? std::string("more than 2^64")
                           : std::to_string(num_configs_)) +
                      " configurations, budget is " +
                      std::to_string(options_.budget) +
                      "; use the Monte Carlo sampler");
}

CanonicalSystem CanonicalSystem::with_order(int order) const {
  return CanonicalSystem(space_, particles_, order, potential_, options_);
}

namespace {

void require_potential(const CanonicalSystem& sys, const SymmetricTable& u) {
  if (u.order() != sys.order())
    throw InputError("potential order " + std::to_string(u.order()) +
                     " does not match m = " + std::to_string(sys.order()));
  if (!(u.space() == sys.space()))
    throw InputError("potential defined on a different state space");
}

struct Block {
  std::uint64_t begin;
  std::uint64_t end;
};

std::vector<Block> make_blocks(const CanonicalSystem& sys) {
  const std::uint64_t total = sys.num_configurations();
  const auto parts = std::min<std::uint64_t>(
      static_cast<std::uint64_t>(sys.options().partitions), total);
  std::vector<Block> blocks;
  for (std::uint64_t p = 0; p < parts; ++p)
    blocks.push_back({total * p / parts, total * (p + 1) / parts});
  return blocks;
}

template <class R, class F>
std::vector<R> map_blocks(const CanonicalSystem& sys,
                          const std::vector<Block>& blocks, F&& f) {
  std::vector<R> out;
  out.reserve(blocks.size());
  if (sys.options().parallel && blocks.size() > 1) {
    std::vector<std::future<R>> futures;
    for (const auto& b : blocks)
      futures.push_back(std::async(std::launch::async, [&f, b] { return f(b); }));
    for (auto& fut : futures) out.push_back(fut.get());
  } else {
    for (const auto& b : blocks) out.push_back(f(b));
  }
  return out;
}

/// Calls fn(x) for configurations with linear index in [begin, end); x[0] is
/// the most significant digit.
template <class Fn>
void for_each_config(int num_cells, int particles, Block block, Fn&& fn) {
  std::vector<int> x(static_cast<std::size_t>(particles));
  std::uint64_t rest = block.begin;
  for (int i = particles - 1; i >= 0; --i) {
    x[i] = static_cast<int>(rest % static_cast<std::uint64_t>(num_cells));
    rest /= static_cast<std::uint64_t>(num_cells);
  }
  for (std::uint64_t idx = block.begin; idx < block.end; ++idx) {
    fn(std::span<const int>(x));
    for (int i = particles - 1; i >= 0; --i) {
      if (++x[i] < num_cells) break;
      x[i] = 0;
    }
  }
}

double log_measure(const StateSpace& space, std::span<const int> x) {
  double lw = 0.0;
  for (int c : x) lw += std::log(space.weight(c));
  return lw;
}

struct Moments {
  double log_z = 0.0;
  std::vector<double> mean_counts;  // E[S] at the density order
  Eigen::MatrixXd second;           // E[S S^T] at order m, when requested
  std::vector<double> mean_counts_m;
};

Moments enumerate_moments(const CanonicalSystem& sys, const SymmetricTable& u,
                          int density_order, bool with_second) {
  sys.require_enumerable();
  const int K = sys.num_cells();
  const int N = sys.particles();
  const detail::EnergyModel energy(sys, &u);
  const detail::Lift density_lift(K, N, density_order);
  const detail::Lift m_lift(K, N, u.order());
  const auto n_density = num_multisets(K, density_order);
  const auto n_m = num_multisets(K, u.order());
  const auto blocks = make_blocks(sys);

  const auto maxima = map_blocks<double>(sys, blocks, [&](Block b) {
    double mx = -std::numeric_limits<double>::infinity();
    for_each_config(K, N, b, [&](std::span<const int> x) {
      mx = std::max(mx, -energy(x) + log_measure(sys.space(), x));
    });
    return mx;
  });
  const double shift = *std::max_element(maxima.begin(), maxima.end());

  struct Partial {
    double z = 0.0;
    std::vector<double> counts;
    std::vector<double> counts_m;
    Eigen::MatrixXd second;
  };
  const auto partials = map_blocks<Partial>(sys, blocks, [&](Block b) {
    Partial p;
    p.counts.assign(n_density, 0.0);
    if (with_second) {
      p.counts_m.assign(n_m, 0.0);
      p.second = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_m),
                                       static_cast<Eigen::Index>(n_m));
    }
    std::vector<std::uint32_t> ranks, ranks_m;
    for_each_config(K, N, b, [&](std::span<const int> x) {
      const double e = std::exp(-energy(x) + log_measure(sys.space(), x) - shift);
      p.z += e;
      density_lift.ranks(x, ranks);
      for (auto r : ranks) p.counts[r] += e;
      if (with_second) {
        m_lift.ranks(x, ranks_m);
        for (auto a : ranks_m) {
          p.counts_m[a] += e;
          for (auto c : ranks_m) p.second(a, c) += e;
        }
      }
    });
    return p;
  });

  Moments out;
  double z = 0.0;
  out.mean_counts.assign(n_density, 0.0);
  if (with_second) {
    out.mean_counts_m.assign(n_m, 0.0);
    out.second = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_m),
                                       static_cast<Eigen::Index>(n_m));
  }
  for (const auto& p : partials) {
    z += p.z;
    for (std::size_t r = 0; r < n_density; ++r) out.mean_counts[r] += p.counts[r];
    if (with_second) {
      for (std::size_t r = 0; r < n_m; ++r) out.mean_counts_m[r] += p.counts_m[r];
      out.second += p.second;
    }
  }
  out.log_z = shift + std::log(z);
  for (auto& c : out.mean_counts) c /= z;
  if (with_second) {
    for (auto& c : out.mean_counts_m) c /= z;
    out.second /= z;
  }
  return out;
}

SymmetricTable counts_to_density(const StateSpace& space, int particles,
                                 int order, const std::vector<double>& counts) {
  SymmetricTable rho(space, order);
  const double subsets = static_cast<double>(
      binomial(static_cast<std::uint64_t>(particles), static_cast<std::uint64_t>(order)));
  for (std::size_t r = 0; r < rho.size(); ++r)
    rho.set(r, counts[r] / (subsets * rho.mass(r)));
  return rho;
}

}  // namespace

double total_potential(const CanonicalSystem& sys, const SymmetricTable& u,
                       std::span<const int> x) {
  require_potential(sys, u);
  if (static_cast<int>(x.size()) != sys.particles())
    throw InputError("configuration must have N coordinates");
  for (int c : x)
    if (c < 0 || c >= sys.num_cells()) throw InputError("cell out of range");
  const detail::EnergyModel energy(sys, &u);
  return energy(x);
}

ExactEvaluation evaluate(const CanonicalSystem& sys, const SymmetricTable& u,
                         bool with_hessian) {
  require_potential(sys, u);
  auto mom = enumerate_moments(sys, u, sys.order(), with_hessian);
  ExactEvaluation out{
      mom.log_z,
      counts_to_density(sys.space(), sys.particles(), sys.order(), mom.mean_counts),
      std::nullopt};
  if (with_hessian) {
    const Eigen::Map<const Eigen::VectorXd> mean(
        mom.mean_counts_m.data(), static_cast<Eigen::Index>(mom.mean_counts_m.size()));
    Eigen::MatrixXd h = -(mom.second - mean * mean.transpose());
    out.hessian = 0.5 * (h + h.transpose());
  }
  return out;
}

double log_partition(const CanonicalSystem& sys, const SymmetricTable& u) {
  require_potential(sys, u);
  return enumerate_moments(sys, u, 1, false).log_z;
}

SymmetricTable m_density(const CanonicalSystem& sys, const SymmetricTable& u) {
  return evaluate(sys, u, false).density;
}

SymmetricTable density_of_order(const CanonicalSystem& sys,
                                const SymmetricTable& u, int order) {
  require_potential(sys, u);
  if (order < 1 || order > sys.particles())
    throw InputError("density order must lie in [1, N]");
  const auto mom = enumerate_moments(sys, u, order, false);
  return counts_to_density(sys.space(), sys.particles(), order, mom.mean_counts);
}

SymmetricTable reduce_density(const SymmetricTable& rho, int order) {
  if (order < 1 || order > rho.order())
    throw InputError("reduction order must lie in [1, k]");
  if (order == rho.order()) return rho;
  const auto& space = rho.space();
  const int K = space.num_cells();
  const int rest = rho.order() - order;
  // Ordered tuples z of the integrated coordinates, grouped by multiset.
  std::vector<std::vector<int>> groups;
  std::vector<double> group_mass;
  for_each_multiset(rest, K, [&](std::uint64_t, std::span<const int> cells) {
    double m = static_cast<double>(multiplicity_sorted(cells));
    for (int c : cells) m *= space.weight(c);
    groups.emplace_back(cells.begin(), cells.end());
    group_mass.push_back(m);
  });
  std::vector<double> values(num_multisets(K, order), 0.0);
  std::vector<int> merged(static_cast<std::size_t>(rho.order()));
  for_each_multiset(order, K, [&](std::uint64_t r, std::span<const int> cells) {
    double sum = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::merge(cells.begin(), cells.end(), groups[g].begin(), groups[g].end(),
                 merged.begin());
      sum += group_mass[g] * rho[rank_sorted(merged, K)];
    }
    values[r] = sum;
  });
  return SymmetricTable(space, order, std::move(values));
}

void require_target(const CanonicalSystem& sys, const SymmetricTable& target) {
  if (target.order() != sys.order())
    throw InputError("target order " + std::to_string(target.order()) +
                     " does not match m = " + std::to_string(sys.order()));
  if (!(target.space() == sys.space()))
    throw InputError("target defined on a different state space");
  const double mass = integrate(target);
  if (std::abs(mass - 1.0) > 1e-8)
    throw InputError("target density integrates to " + std::to_string(mass) +
                     ", expected 1");
}

double log_F(const CanonicalSystem& sys, const SymmetricTable& u,
             const SymmetricTable& target) {
  require_potential(sys, u);
  require_target(sys, target);
  return -static_cast<double>(sys.num_subsets()) * inner(target, u) -
         log_partition(sys, u);
}

SymmetricTable grad_log_F(const CanonicalSystem& sys, const SymmetricTable& u,
                          const SymmetricTable& target) {
  require_target(sys, target);
  auto g = m_density(sys, u);
  g -= target;
  g *= static_cast<double>(sys.num_subsets());
  return g;
}

Eigen::MatrixXd hessian_log_F(const CanonicalSystem& sys,
                              const SymmetricTable& u) {
  return *evaluate(sys, u, true).hessian;
}

double log_F_increment(const CanonicalSystem& sys, const SymmetricTable& u,
                       const SymmetricTable& step, const SymmetricTable& target) {
  require_potential(sys, u);
  require_potential(sys, step);
  require_target(sys, target);
  sys.require_enumerable();
  const int K = sys.num_cells();
  const int N = sys.particles();
  const detail::EnergyModel energy(sys, &u);
  const detail::Lift lift(K, N, sys.order());
  const auto blocks = make_blocks(sys);

  struct Extremes {
    double base = -std::numeric_limits<double>::infinity();
    double moved = -std::numeric_limits<double>::infinity();
    double max_abs_step = 0.0;
  };
  const auto ext = map_blocks<Extremes>(sys, blocks, [&](Block b) {
    Extremes e;
    for_each_config(K, N, b, [&](std::span<const int> x) {
      const double lw = -energy(x) + log_measure(sys.space(), x);
      const double d = lift.sum(x, step.values());
      e.base = std::max(e.base, lw);
      e.moved = std::max(e.moved, lw - d);
      e.max_abs_step = std::max(e.max_abs_step, std::abs(d));
    });
    return e;
  });
  Extremes all;
  for (const auto& e : ext) {
    all.base = std::max(all.base, e.base);
    all.moved = std::max(all.moved, e.moved);
    all.max_abs_step = std::max(all.max_abs_step, e.max_abs_step);
  }
  const bool small = all.max_abs_step <= 1.0;

  struct Sums {
    double base = 0.0;
    double moved = 0.0;
    double relative = 0.0;  // sum of base weight * expm1(-D)
  };
  const auto sums = map_blocks<Sums>(sys, blocks, [&](Block b) {
    Sums s;
    for_each_config(K, N, b, [&](std::span<const int> x) {
      const double lw = -energy(x) + log_measure(sys.space(), x);
      const double d = lift.sum(x, step.values());
      const double eb = std::exp(lw - all.base);
      s.base += eb;
      s.moved += std::exp(lw - d - all.moved);
      if (small) s.relative += eb * std::expm1(-d);
    });
    return s;
  });
  Sums total;
  for (const auto& s : sums) {
    total.base += s.base;
    total.moved += s.moved;
    total.relative += s.relative;
  }
  const double log_ratio =
      small ? std::log1p(total.relative / total.base)
            : (all.moved + std::log(total.moved)) - (all.base + std::log(total.base));
  return -static_cast<double>(sys.num_subsets()) * inner(target, step) - log_ratio;
}

double bound_log(const SymmetricTable& P, const PotentialSpec& W) {
  const double mass = integrate(P);
  if (std::abs(mass - 1.0) > 1e-8)
    throw InputError("P integrates to " + std::to_string(mass) + ", expected 1");
  double sum = 0.0;
  for_each_multiset(P.order(), P.space().num_cells(),
                    [&](std::uint64_t r, std::span<const int> cells) {
                      const double p = P[r];
                      if (!(p > 0.0)) throw InputError("P must be strictly positive");
                      const double t = W(cells) + std::log(p);
                      if (t > 0.0) sum += P.mass(r) * t * p;
                    });
  return sum;
}

SymmetricTable configuration_density(const CanonicalSystem& sys,
                                     const SymmetricTable& u) {
  require_potential(sys, u);
  const double log_z = log_partition(sys, u);
  const detail::EnergyModel energy(sys, &u);
  SymmetricTable P(sys.space(), sys.particles());
  for_each_multiset(sys.particles(), sys.num_cells(),
                    [&](std::uint64_t r, std::span<const int> cells) {
                      P.set(r, std::exp(-energy(cells) - log_z));
                    });
  return P;
}

EnsembleSummary summarize(const CanonicalSystem& sys, const SymmetricTable& u,
                          const SymmetricTable* target, const SymmetricTable* P) {
  auto ev = evaluate(sys, u, false);
  EnsembleSummary out{ev.log_z, std::move(ev.density), std::nullopt, std::nullopt};
  if (target) {
    require_target(sys, *target);
    out.log_f = -static_cast<double>(sys.num_subsets()) * inner(*target, u) - ev.log_z;
  }
  if (P) {
    if (P->order() != sys.particles() || !(P->space() == sys.space()))
      throw InputError("P must be an order-N table on the system's space");
    out.upper_bound_log = bound_log(*P, sys.potential());
  }
  return out;
}

}  // namespace canon

#include "canon/sampler.hpp"

#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "lift.hpp"

namespace canon {

void ChainConfig::validate() const {
  if (num_chains < 1) throw InputError("num_chains must be at least 1");
  if (burn_in < 0) throw InputError("burn_in must be nonnegative");
  if (sweeps <= burn_in) throw InputError("sweeps must exceed burn_in");
  if (batches < 20) throw InputError("at least 20 batches per chain are required");
  if (sweeps - burn_in < batches)
    throw InputError("too few measurement sweeps for the batch count");
}

namespace {

struct ChainResult {
  std::vector<std::vector<double>> batch_counts;  // per batch, per multiset
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t burn_accepted = 0;
  std::uint64_t burn_proposals = 0;
};

std::mt19937_64 chain_rng(std::uint64_t seed, int chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain)};
  return std::mt19937_64(seq);
}

ChainResult simulate(const CanonicalSystem& sys, const SymmetricTable& u,
                     const ChainConfig& cfg, int chain) {
  const int K = sys.num_cells();
  const int N = sys.particles();
  const detail::EnergyModel energy(sys, &u);
  const detail::Lift lift(K, N, sys.order());
  const auto n = num_multisets(K, sys.order());

  auto rng = chain_rng(cfg.seed, chain);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_cell(0, K - 1);
  std::uniform_int_distribution<int> other_cell(0, K > 1 ? K - 2 : 0);

  std::vector<double> log_w(static_cast<std::size_t>(K));
  for (int c = 0; c < K; ++c) log_w[c] = std::log(sys.space().weight(c));

  std::vector<int> x(static_cast<std::size_t>(N));
  for (auto& c : x) c = any_cell(rng);

  const int measure = cfg.sweeps - cfg.burn_in;
  const int batch_len = measure / cfg.batches;
  // Sweeps that do not fill a whole batch extend the burn-in.
  const int burn = cfg.sweeps - batch_len * cfg.batches;

  ChainResult out;
  out.batch_counts.assign(static_cast<std::size_t>(cfg.batches),
                          std::vector<double>(n, 0.0));
  std::vector<std::uint32_t> ranks;

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    const bool burning = sweep < cfg.burn_in;
    for (int site = 0; site < N; ++site) {
      if (K == 1) break;
      const int old = x[site];
      int cell = other_cell(rng);
      if (cell >= old) ++cell;
      const double log_ratio = -energy.delta(x, site, cell) + log_w[cell] - log_w[old];
      bool accept = log_ratio >= 0.0;
      if (!accept) accept = unit(rng) < std::exp(log_ratio);
      ++out.proposals;
      if (burning) ++out.burn_proposals;
      if (accept) {
        x[site] = cell;
        ++out.accepted;
        if (burning) ++out.burn_accepted;
      }
    }
    if (sweep >= burn) {
      auto& counts = out.batch_counts[static_cast<std::size_t>((sweep - burn) / batch_len)];
      lift.ranks(x, ranks);
      for (auto r : ranks) counts[r] += 1.0;
    }
  }
  return out;
}

}  // namespace

DensityEstimate run_chain(const CanonicalSystem& sys, const SymmetricTable& u,
                          const ChainConfig& cfg) {
  cfg.validate();
  if (u.order() != sys.order() || !(u.space() == sys.space()))
    throw InputError("potential does not match the system's order and space");

  std::vector<ChainResult> results(static_cast<std::size_t>(cfg.num_chains));
  {
    std::vector<std::jthread> workers;
    for (int c = 0; c < cfg.num_chains; ++c)
      workers.emplace_back([&, c] { results[static_cast<std::size_t>(c)] = simulate(sys, u, cfg, c); });
  }

  std::uint64_t proposals = 0, accepted = 0;
  for (std::size_t c = 0; c < results.size(); ++c) {
    const auto& r = results[c];
    if (cfg.burn_in > 0 && r.burn_proposals > 0 && r.burn_accepted == 0)
      throw SamplerError("chain " + std::to_string(c) +
                             " accepted no proposals during burn-in (rate 0)",
                         0.0);
    proposals += r.proposals;
    accepted += r.accepted;
  }

  const int K = sys.num_cells();
  const auto n = num_multisets(K, sys.order());
  const int batch_len = (cfg.sweeps - cfg.burn_in) / cfg.batches;
  const double per_batch =
      static_cast<double>(sys.num_subsets()) * static_cast<double>(batch_len);

  SymmetricTable mean(sys.space(), sys.order());
  SymmetricTable err(sys.space(), sys.order());
  const double total_batches = static_cast<double>(cfg.num_chains * cfg.batches);
  for (std::size_t r = 0; r < n; ++r) {
    const double scale = 1.0 / (per_batch * mean.mass(r));
    double sum = 0.0;
    for (const auto& res : results)
      for (const auto& b : res.batch_counts) sum += b[r] * scale;
    const double mu = sum / total_batches;
    double ss = 0.0;
    for (const auto& res : results)
      for (const auto& b : res.batch_counts) {
        const double d = b[r] * scale - mu;
        ss += d * d;
      }
    mean.set(r, mu);
    err.set(r, std::sqrt(ss / (total_batches - 1.0) / total_batches));
  }
  const double rate = proposals == 0 ? 1.0
                                     : static_cast<double>(accepted) /
                                           static_cast<double>(proposals);
  return {std::move(mean), std::move(err), rate};
}

GradientEstimate estimate_gradient(const CanonicalSystem& sys,
                                   const SymmetricTable& u,
                                   const SymmetricTable& target,
                                   const ChainConfig& cfg) {
  require_target(sys, target);
  auto est = run_chain(sys, u, cfg);
  const double subsets = static_cast<double>(sys.num_subsets());
  auto g = est.mean - target;
  g *= subsets;
  auto g_err = est.std_error;
  g_err *= subsets;
  return {std::move(g), std::move(g_err), std::move(est.mean),
          std::move(est.std_error), est.acceptance_rate};
}

}  // namespace canon

#pragma once

// Lifting of an order-k symmetric table to a function on N-particle
// configurations: F(x) = sum over the C(N,k) coordinate subsets of f.

#include <cstdint>
#include <span>
#include <vector>

#include "canon/ensemble.hpp"
#include "canon/space.hpp"

namespace canon::detail {

class Lift {
 public:
  Lift(int num_cells, int particles, int order);

  int order() const { return order_; }
  std::size_t num_subsets() const { return num_subsets_; }

  /// Rank of the multiset formed by subset s of configuration x.
  std::uint32_t subset_rank(std::span<const int> x, std::size_t s) const;

  double sum(std::span<const int> x, std::span<const double> values) const {
    double total = 0.0;
    for (std::size_t s = 0; s < num_subsets_; ++s)
      total += values[subset_rank(x, s)];
    return total;
  }

  /// Sum over the subsets that include coordinate `site`.
  double sum_at(std::span<const int> x, int site,
                std::span<const double> values) const {
    double total = 0.0;
    for (std::uint32_t s : by_site_[static_cast<std::size_t>(site)])
      total += values[subset_rank(x, s)];
    return total;
  }

  void ranks(std::span<const int> x, std::vector<std::uint32_t>& out) const {
    out.resize(num_subsets_);
    for (std::size_t s = 0; s < num_subsets_; ++s) out[s] = subset_rank(x, s);
  }

 private:
  int num_cells_;
  int order_;
  std::size_t num_subsets_;
  std::vector<int> positions_;  // num_subsets_ x order_, each row increasing
  std::vector<std::vector<std::uint32_t>> by_site_;
  std::vector<std::uint32_t> lookup_;  // ordered code -> rank, when affordable
};

/// W(x) + U(x) for a fixed system and order-m table u.
class EnergyModel {
 public:
  EnergyModel(const CanonicalSystem& sys, const SymmetricTable* u);

  double operator()(std::span<const int> x) const;

  /// Change in energy when coordinate `site` moves from x[site] to `cell`.
  /// `x` is scratch and restored on return.
  double delta(std::vector<int>& x, int site, int cell) const;

 private:
  double at_site(std::span<const int> x, int site) const;

  const CanonicalSystem& sys_;
  const SymmetricTable* u_;
  std::vector<Lift> w_lifts_;
  std::vector<const SymmetricTable*> w_tables_;
  Lift u_lift_;
};

}  // namespace canon::detail

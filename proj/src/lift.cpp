#include "lift.hpp"

#include <algorithm>

namespace canon::detail {

namespace {
constexpr std::uint64_t kLookupLimit = std::uint64_t{1} << 22;
}

Lift::Lift(int num_cells, int particles, int order)
    : num_cells_(num_cells), order_(order) {
  if (order < 1 || order > particles)
    throw InputError("interaction order must lie in [1, N]");
  num_subsets_ = static_cast<std::size_t>(
      binomial(static_cast<std::uint64_t>(particles),
               static_cast<std::uint64_t>(order)));
  positions_.reserve(num_subsets_ * static_cast<std::size_t>(order));
  by_site_.resize(static_cast<std::size_t>(particles));

  std::vector<int> combo(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) combo[i] = i;
  std::uint32_t s = 0;
  for (;;) {
    for (int p : combo) {
      positions_.push_back(p);
      by_site_[static_cast<std::size_t>(p)].push_back(s);
    }
    ++s;
    int i = order - 1;
    while (i >= 0 && combo[i] == particles - order + i) --i;
    if (i < 0) break;
    ++combo[i];
    for (int j = i + 1; j < order; ++j) combo[j] = combo[j - 1] + 1;
  }

  const auto codes = int_pow(static_cast<std::uint64_t>(num_cells), order);
  if (codes <= kLookupLimit) {
    lookup_.resize(codes);
    std::vector<int> tuple(static_cast<std::size_t>(order));
    for (std::uint64_t code = 0; code < codes; ++code) {
      std::uint64_t rest = code;
      for (int i = order - 1; i >= 0; --i) {
        tuple[i] = static_cast<int>(rest % static_cast<std::uint64_t>(num_cells));
        rest /= static_cast<std::uint64_t>(num_cells);
      }
      std::sort(tuple.begin(), tuple.end());
      lookup_[code] = static_cast<std::uint32_t>(rank_sorted(tuple, num_cells));
    }
  }
}

std::uint32_t Lift::subset_rank(std::span<const int> x, std::size_t s) const {
  const int* pos = positions_.data() + s * static_cast<std::size_t>(order_);
  if (!lookup_.empty()) {
    std::uint64_t code = 0;
    for (int i = 0; i < order_; ++i)
      code = code * static_cast<std::uint64_t>(num_cells_) +
             static_cast<std::uint64_t>(x[pos[i]]);
    return lookup_[code];
  }
  std::vector<int> cells(static_cast<std::size_t>(order_));
  for (int i = 0; i < order_; ++i) cells[i] = x[pos[i]];
  std::sort(cells.begin(), cells.end());
  return static_cast<std::uint32_t>(rank_sorted(cells, num_cells_));
}

EnergyModel::EnergyModel(const CanonicalSystem& sys, const SymmetricTable* u)
    : sys_(sys),
      u_(u),
      u_lift_(sys.num_cells(), sys.particles(), u ? u->order() : sys.order()) {
  for (const auto& term : sys.potential().terms()) {
    w_lifts_.emplace_back(sys.num_cells(), sys.particles(), term.order());
    w_tables_.push_back(&term);
  }
}

double EnergyModel::operator()(std::span<const int> x) const {
  double e = 0.0;
  for (std::size_t t = 0; t < w_lifts_.size(); ++t)
    e += w_lifts_[t].sum(x, w_tables_[t]->values());
  if (const auto& full = sys_.potential().full()) {
    std::vector<int> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    e += (*full)[rank_sorted(sorted, sys_.num_cells())];
  }
  if (u_) e += u_lift_.sum(x, u_->values());
  return e;
}

double EnergyModel::at_site(std::span<const int> x, int site) const {
  double e = 0.0;
  for (std::size_t t = 0; t < w_lifts_.size(); ++t)
    e += w_lifts_[t].sum_at(x, site, w_tables_[t]->values());
  if (const auto& full = sys_.potential().full()) {
    std::vector<int> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    e += (*full)[rank_sorted(sorted, sys_.num_cells())];
  }
  if (u_) e += u_lift_.sum_at(x, site, u_->values());
  return e;
}

double EnergyModel::delta(std::vector<int>& x, int site, int cell) const {
  const int old = x[static_cast<std::size_t>(site)];
  const double before = at_site(x, site);
  x[static_cast<std::size_t>(site)] = cell;
  const double after = at_site(x, site);
  x[static_cast<std::size_t>(site)] = old;
  return after - before;
}

}  // namespace canon::detail

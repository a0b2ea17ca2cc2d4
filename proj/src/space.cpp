#include "canon/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace canon {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) is divisible by i; guard the intermediate product.
    const std::uint64_t factor = n - k + i;
    if (result > std::numeric_limits<std::uint64_t>::max() / factor)
      throw InputError("binomial coefficient overflows 64 bits");
    result = result * factor / i;
  }
  return result;
}

std::uint64_t num_multisets(int num_cells, int order) {
  if (num_cells < 1 || order < 0) throw InputError("invalid multiset shape");
  return binomial(static_cast<std::uint64_t>(num_cells + order - 1),
                  static_cast<std::uint64_t>(order));
}

std::uint64_t int_pow(std::uint64_t base, int exp) {
  std::uint64_t result = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && result > std::numeric_limits<std::uint64_t>::max() / base)
      throw InputError("K^k overflows 64 bits");
    result *= base;
  }
  return result;
}

StateSpace::StateSpace(std::vector<double> weights,
                       std::vector<std::string> labels)
    : weights_(std::move(weights)), labels_(std::move(labels)) {
  if (weights_.empty()) throw InputError("state space needs at least one cell");
  if (!labels_.empty() && labels_.size() != weights_.size())
    throw InputError("label count does not match cell count");
  for (double w : weights_) {
    if (!std::isfinite(w) || w <= 0.0)
      throw InputError("cell weights must be positive and finite");
    total_ += w;
  }
  if (!std::isfinite(total_)) throw InputError("total measure is not finite");
}

StateSpace StateSpace::uniform(int num_cells, double weight) {
  if (num_cells < 1) throw InputError("state space needs at least one cell");
  return StateSpace(std::vector<double>(static_cast<std::size_t>(num_cells), weight));
}

void validate(const Multiset& alpha, int num_cells) {
  if (alpha.cells.empty()) throw InputError("multiset order must be positive");
  for (std::size_t i = 0; i < alpha.cells.size(); ++i) {
    const int c = alpha.cells[i];
    if (c < 0 || c >= num_cells) throw InputError("multiset cell out of range");
    if (i > 0 && c < alpha.cells[i - 1])
      throw InputError("multiset cells must be nondecreasing");
  }
}

std::uint64_t rank_sorted(std::span<const int> cells, int num_cells) {
  const int k = static_cast<int>(cells.size());
  std::uint64_t r = 0;
  int prev = 0;
  for (int i = 0; i < k; ++i) {
    const int remaining = k - i - 1;
    for (int c = prev; c < cells[i]; ++c)
      r += binomial(static_cast<std::uint64_t>(num_cells - c + remaining - 1),
                    static_cast<std::uint64_t>(remaining));
    prev = cells[i];
  }
  return r;
}

std::uint64_t rank(const Multiset& alpha, int num_cells) {
  validate(alpha, num_cells);
  return rank_sorted(alpha.cells, num_cells);
}

Multiset unrank(std::uint64_t index, int order, int num_cells) {
  if (order < 1) throw InputError("multiset order must be positive");
  if (index >= num_multisets(num_cells, order))
    throw InputError("multiset rank out of range");
  Multiset alpha;
  alpha.cells.reserve(static_cast<std::size_t>(order));
  int c = 0;
  for (int i = 0; i < order; ++i) {
    const int remaining = order - i - 1;
    for (;; ++c) {
      const std::uint64_t count = binomial(
          static_cast<std::uint64_t>(num_cells - c + remaining - 1),
          static_cast<std::uint64_t>(remaining));
      if (index < count) break;
      index -= count;
    }
    alpha.cells.push_back(c);
  }
  return alpha;
}

std::uint64_t multiplicity_sorted(std::span<const int> cells) {
  // k! / prod(run!) computed as a product of binomials to stay exact.
  std::uint64_t result = 1;
  std::uint64_t placed = 0;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j] == cells[i]) ++j;
    const auto run = static_cast<std::uint64_t>(j - i);
    placed += run;
    result *= binomial(placed, run);
    i = j;
  }
  return result;
}

std::uint64_t multiplicity(const Multiset& alpha) {
  return multiplicity_sorted(alpha.cells);
}

SymmetricTable::SymmetricTable(StateSpace space, int order)
    : SymmetricTable(space, order,
                     std::vector<double>(num_multisets(space.num_cells(),
                                                       order > 0 ? order : 1),
                                         0.0)) {}

SymmetricTable::SymmetricTable(StateSpace space, int order,
                               std::vector<double> values)
    : space_(std::move(space)), order_(order), values_(std::move(values)) {
  if (order_ < 1) throw InputError("table order must be positive");
  const auto n = num_multisets(space_.num_cells(), order_);
  if (values_.size() != n)
    throw InputError("table has " + std::to_string(values_.size()) +
                     " values, expected " + std::to_string(n));
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("table values must be finite");
  mass_.resize(values_.size());
  const auto w = space_.weights();
  for_each_multiset(order_, space_.num_cells(),
                    [&](std::uint64_t r, std::span<const int> cells) {
                      double m = static_cast<double>(multiplicity_sorted(cells));
                      for (int c : cells) m *= w[c];
                      mass_[r] = m;
                    });
}

SymmetricTable SymmetricTable::constant(StateSpace space, int order,
                                        double value) {
  const auto n = num_multisets(space.num_cells(), order);
  return SymmetricTable(std::move(space), order, std::vector<double>(n, value));
}

void SymmetricTable::set(std::size_t r, double value) {
  if (!std::isfinite(value)) throw InputError("table values must be finite");
  values_.at(r) = value;
}

double SymmetricTable::at(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != order_)
    throw InputError("tuple length does not match table order");
  std::vector<int> sorted(tuple.begin(), tuple.end());
  std::sort(sorted.begin(), sorted.end());
  for (int c : sorted)
    if (c < 0 || c >= space_.num_cells()) throw InputError("cell out of range");
  return values_[rank_sorted(sorted, space_.num_cells())];
}

double SymmetricTable::at(const Multiset& alpha) const {
  if (alpha.order() != order_)
    throw InputError("multiset order does not match table order");
  return values_[rank(alpha, space_.num_cells())];
}

namespace {
void require_compatible(const SymmetricTable& a, const SymmetricTable& b) {
  if (!a.compatible(b))
    throw InputError("tables differ in order or state space");
}
}  // namespace

SymmetricTable& SymmetricTable::operator+=(const SymmetricTable& other) {
  require_compatible(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

SymmetricTable& SymmetricTable::operator-=(const SymmetricTable& other) {
  require_compatible(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

SymmetricTable& SymmetricTable::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

SymmetricTable& SymmetricTable::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

SymmetricTable operator+(SymmetricTable a, const SymmetricTable& b) {
  return a += b;
}
SymmetricTable operator-(SymmetricTable a, const SymmetricTable& b) {
  return a -= b;
}
SymmetricTable operator+(SymmetricTable a, double c) { return a += c; }
SymmetricTable operator*(double c, SymmetricTable a) { return a *= c; }

double integrate(const SymmetricTable& f) {
  double sum = 0.0;
  const auto v = f.values();
  for (std::size_t r = 0; r < v.size(); ++r) sum += f.mass(r) * v[r];
  return sum;
}

double inner(const SymmetricTable& a, const SymmetricTable& b) {
  require_compatible(a, b);
  double sum = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) sum += a.mass(r) * a[r] * b[r];
  return sum;
}

double sup_distance(const SymmetricTable& a, const SymmetricTable& b) {
  require_compatible(a, b);
  double d = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) d = std::max(d, std::abs(a[r] - b[r]));
  return d;
}

double sup_norm(const SymmetricTable& a) {
  double d = 0.0;
  for (double v : a.values()) d = std::max(d, std::abs(v));
  return d;
}

SymmetricTable symmetrize(const StateSpace& space, int order,
                          std::span<const double> ordered) {
  const int K = space.num_cells();
  const auto total = int_pow(static_cast<std::uint64_t>(K), order);
  if (ordered.size() != total)
    throw InputError("ordered table must have K^k entries");
  const auto n = num_multisets(K, order);
  std::vector<double> sum(n, 0.0);
  std::vector<double> first(n, 0.0);
  std::vector<char> seen(n, 0), uniform(n, 1);
  std::vector<int> tuple(static_cast<std::size_t>(order));
  for (std::uint64_t code = 0; code < total; ++code) {
    const double g = ordered[code];
    if (!std::isfinite(g)) throw InputError("table values must be finite");
    std::uint64_t rest = code;
    for (int i = order - 1; i >= 0; --i) {
      tuple[i] = static_cast<int>(rest % static_cast<std::uint64_t>(K));
      rest /= static_cast<std::uint64_t>(K);
    }
    std::sort(tuple.begin(), tuple.end());
    const auto r = rank_sorted(tuple, K);
    if (!seen[r]) {
      seen[r] = 1;
      first[r] = g;
    } else if (g != first[r]) {
      uniform[r] = 0;
    }
    sum[r] += g;
  }
  std::vector<double> values(n);
  for_each_multiset(order, K, [&](std::uint64_t r, std::span<const int> cells) {
    // Exact passthrough when every ordering already agrees.
    values[r] = uniform[r] ? first[r]
                           : sum[r] / static_cast<double>(multiplicity_sorted(cells));
  });
  return SymmetricTable(space, order, std::move(values));
}

std::vector<double> to_ordered(const SymmetricTable& f) {
  const int K = f.space().num_cells();
  const int k = f.order();
  const auto total = int_pow(static_cast<std::uint64_t>(K), k);
  std::vector<double> out(total);
  std::vector<int> tuple(static_cast<std::size_t>(k));
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t rest = code;
    for (int i = k - 1; i >= 0; --i) {
      tuple[i] = static_cast<int>(rest % static_cast<std::uint64_t>(K));
      rest /= static_cast<std::uint64_t>(K);
    }
    std::sort(tuple.begin(), tuple.end());
    out[code] = f[rank_sorted(tuple, K)];
  }
  return out;
}

SymmetricTable random_table(const StateSpace& space, int order, double lo,
                            double hi, std::uint64_t seed) {
  if (!(lo <= hi)) throw InputError("random_table: lower bound exceeds upper bound");
  std::mt19937_64 rng(seed);
  const auto n = num_multisets(space.num_cells(), order);
  std::vector<double> values(n);
  for (auto& v : values) {
    const double x = std::generate_canonical<double, 53>(rng);
    v = std::min(hi, lo + (hi - lo) * x);
  }
  return SymmetricTable(space, order, std::move(values));
}

}  // namespace canon

#pragma once

// Weighted finite state spaces and symmetric tables indexed by multisets.
//
// A StateSpace is a finite set of K cells with positive measures w_i. A
// SymmetricTable of order k stores one value per multiset of k cells; the
// value at an ordered k-tuple is the value at its sorted multiset. Integrals
// over Lambda^k become sums over ordered tuples weighted by the product of
// cell measures.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace canon {

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Binomial coefficient; throws InputError on overflow of 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Number of multisets of size k drawn from K cells, C(K+k-1, k).
std::uint64_t num_multisets(int num_cells, int order);

/// K^k, or throws InputError if it does not fit 64 bits.
std::uint64_t int_pow(std::uint64_t base, int exp);

class StateSpace {
 public:
  explicit StateSpace(std::vector<double> weights,
                      std::vector<std::string> labels = {});

  static StateSpace uniform(int num_cells, double weight = 1.0);

  int num_cells() const { return static_cast<int>(weights_.size()); }
  std::span<const double> weights() const { return weights_; }
  double weight(int cell) const { return weights_[cell]; }
  std::span<const std::string> labels() const { return labels_; }
  double total_measure() const { return total_; }

  bool operator==(const StateSpace& other) const {
    return weights_ == other.weights_;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::string> labels_;
  double total_ = 0.0;
};

/// Sorted k-tuple of cell indices; canonical representative of a multiset.
struct Multiset {
  std::vector<int> cells;

  int order() const { return static_cast<int>(cells.size()); }
  bool operator==(const Multiset&) const = default;
};

/// Validates sortedness and range; throws InputError.
void validate(const Multiset& alpha, int num_cells);

/// Lexicographic rank of alpha among all multisets of its order over K cells.
std::uint64_t rank(const Multiset& alpha, int num_cells);
std::uint64_t rank_sorted(std::span<const int> sorted_cells, int num_cells);
Multiset unrank(std::uint64_t index, int order, int num_cells);

/// Number of ordered tuples mapping onto alpha: k! / prod(count_c!).
std::uint64_t multiplicity(const Multiset& alpha);
std::uint64_t multiplicity_sorted(std::span<const int> sorted_cells);

/// Calls fn(rank, sorted_cells) for every multiset of the given order, in
/// rank order.
template <class Fn>
void for_each_multiset(int order, int num_cells, Fn&& fn) {
  std::vector<int> cells(static_cast<std::size_t>(order), 0);
  std::uint64_t r = 0;
  if (order == 0) {
    fn(r, std::span<const int>(cells));
    return;
  }
  for (;;) {
    fn(r++, std::span<const int>(cells));
    int pos = order - 1;
    while (pos >= 0 && cells[pos] == num_cells - 1) --pos;
    if (pos < 0) return;
    const int next = cells[pos] + 1;
    for (int i = pos; i < order; ++i) cells[i] = next;
  }
}

class SymmetricTable {
 public:
  /// Zero table.
  SymmetricTable(StateSpace space, int order);
  /// Values in rank order; length must be C(K+k-1, k) and all finite.
  SymmetricTable(StateSpace space, int order, std::vector<double> values);

  static SymmetricTable constant(StateSpace space, int order, double value);

  int order() const { return order_; }
  const StateSpace& space() const { return space_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

  double operator[](std::size_t r) const { return values_[r]; }
  /// Checked write; rejects non-finite values.
  void set(std::size_t r, double value);

  /// Value at an arbitrary ordered tuple (sorted internally).
  double at(std::span<const int> tuple) const;
  double at(const Multiset& alpha) const;

  /// Product measure of alpha times its multiplicity: the weight with which
  /// entry r enters an integral over ordered tuples.
  double mass(std::size_t r) const { return mass_[r]; }
  std::span<const double> masses() const { return mass_; }

  bool compatible(const SymmetricTable& other) const {
    return order_ == other.order_ && space_ == other.space_;
  }

  SymmetricTable& operator+=(const SymmetricTable& other);
  SymmetricTable& operator-=(const SymmetricTable& other);
  SymmetricTable& operator+=(double c);
  SymmetricTable& operator*=(double c);

 private:
  StateSpace space_;
  int order_;
  std::vector<double> values_;
  std::vector<double> mass_;
};

SymmetricTable operator+(SymmetricTable a, const SymmetricTable& b);
SymmetricTable operator-(SymmetricTable a, const SymmetricTable& b);
SymmetricTable operator+(SymmetricTable a, double c);
SymmetricTable operator*(double c, SymmetricTable a);

/// Sum over ordered k-tuples of f times the product of cell weights.
double integrate(const SymmetricTable& f);

/// Weighted ordered-tuple inner product.
double inner(const SymmetricTable& a, const SymmetricTable& b);

/// Largest absolute entrywise difference.
double sup_distance(const SymmetricTable& a, const SymmetricTable& b);
double sup_norm(const SymmetricTable& a);

/// Averages a table on ordered tuples over the orderings of each multiset.
/// `ordered` has K^k entries, first coordinate most significant.
SymmetricTable symmetrize(const StateSpace& space, int order,
                          std::span<const double> ordered);

/// Expands a symmetric table to its K^k ordered-tuple values.
std::vector<double> to_ordered(const SymmetricTable& f);

/// Uniform values in [lo, hi]; deterministic in seed.
SymmetricTable random_table(const StateSpace& space, int order, double lo,
                            double hi, std::uint64_t seed);

}  // namespace canon

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdpair/matrix.hpp"
#include "fdpair/pair_power.hpp"

namespace fdpair {

/// Benefit c_ij of pairing UL user i with DL user j, plus the power solution
/// that produced it.
struct BenefitMatrix {
  std::size_t n = 0;
  Matrix<double> c;
  Matrix<PairSolution> solutions;
};

/// One-to-one UL -> DL matching. pairs[i] is the DL user of UL user i.
struct Assignment {
  std::vector<std::size_t> pairs;
  double total_benefit = 0.0;
  std::vector<PairSolution> per_pair_powers;  // empty when solved from bare benefits
};

/// Exhaustive search refuses instances beyond this size (9! ~ 3.6e5 permutations).
inline constexpr std::size_t kExhaustiveLimit = 9;

class GuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline BenefitMatrix compute_benefit_matrix(const NetworkInstance& inst) {
  if (inst.num_ul() != inst.num_dl()) throw std::invalid_argument("compute_benefit_matrix: instance must be square");
  const std::size_t n = inst.num_ul();
  BenefitMatrix bm{n, Matrix<double>(n, n), Matrix<PairSolution>(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      bm.solutions(i, j) = optimize_pair_powers(inst, i, j);
      bm.c(i, j) = bm.solutions(i, j).benefit;
    }
  }
  return bm;
}

/// Sum of c[i][pairs[i]], accumulated in UL index order.
inline double assignment_total(const Matrix<double>& c, const std::vector<std::size_t>& pairs) {
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) total += c(i, pairs[i]);
  return total;
}

inline bool is_permutation(const std::vector<std::size_t>& pairs, std::size_t n) {
  if (pairs.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t j : pairs) {
    if (j >= n || seen[j]) return false;
    seen[j] = true;
  }
  return true;
}

inline Assignment make_assignment(const BenefitMatrix& bm, std::vector<std::size_t> pairs) {
  Assignment a;
  a.total_benefit = assignment_total(bm.c, pairs);
  a.per_pair_powers.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) a.per_pair_powers.push_back(bm.solutions(i, pairs[i]));
  a.pairs = std::move(pairs);
  return a;
}

/// Best permutation by enumeration; ties go to the lexicographically smallest.
inline Assignment solve_exhaustive(const Matrix<double>& c) {
  const std::size_t n = c.rows();
  if (c.cols() != n) throw std::invalid_argument("solve_exhaustive: matrix must be square");
  if (n > kExhaustiveLimit)
    throw GuardError("solve_exhaustive: N = " + std::to_string(n) + " exceeds the exhaustive-search guard N <= " +
                     std::to_string(kExhaustiveLimit));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Assignment best{perm, assignment_total(c, perm), {}};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double total = assignment_total(c, perm);
    if (total > best.total_benefit) best = {perm, total, {}};
  }
  return best;
}

inline Assignment solve_exhaustive(const BenefitMatrix& bm) {
  return make_assignment(bm, solve_exhaustive(bm.c).pairs);
}

/// Maximum-benefit assignment via the O(N^3) Hungarian method on the
/// min-cost form cost = max(c) - c.
inline Assignment solve_hungarian(const Matrix<double>& c) {
  const std::size_t n = c.rows();
  if (c.cols() != n) throw std::invalid_argument("solve_hungarian: matrix must be square");
  if (n == 0) return {};
  double cmax = -std::numeric_limits<double>::infinity();
  for (double v : c.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("solve_hungarian: non-finite benefit");
    cmax = std::max(cmax, v);
  }
  auto cost = [&](std::size_t i, std::size_t j) { return cmax - c(i, j); };

  // Potentials u (rows), v (columns); 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> pairs(n);
  for (std::size_t j = 1; j <= n; ++j) pairs[match[j] - 1] = j - 1;
  const double total = assignment_total(c, pairs);
  return {std::move(pairs), total, {}};
}

inline Assignment solve_hungarian(const BenefitMatrix& bm) {
  return make_assignment(bm, solve_hungarian(bm.c).pairs);
}

}  // namespace fdpair

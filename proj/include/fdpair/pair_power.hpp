#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fdpair/channel_model.hpp"

namespace fdpair {

/// Benefit reported for a pair whose SINR targets cannot be met. Finite so the
/// assignment problem always has a complete matching, and far below any
/// achievable benefit (achievable benefits are >= 0).
inline constexpr double kInfeasibleBenefit = -1.0e6;

/// Lowest power searched, as a fraction of the cap.
inline constexpr double kMinPowerFraction = 1.0e-9;

/// Uniform points per max-power edge before refinement.
inline constexpr std::size_t kEdgeGridPoints = 1024;
/// Extra log-spaced points per edge so that low powers are resolved too.
inline constexpr std::size_t kEdgeLogGridPoints = 256;
/// Relative bracket width at which golden-section refinement stops.
inline constexpr double kRefineTolerance = 1.0e-9;

struct PairSinr {
  double ul = 0.0;
  double dl = 0.0;
};

/// SINRs of a co-scheduled pair: UL sees residual SI from the DL transmission,
/// DL sees the UL user's transmission through the UE-to-UE gain.
inline PairSinr pair_sinr(double p_ul, double p_dl, const NetworkInstance& inst, std::size_t i, std::size_t j) {
  return {p_ul * inst.g_ul[i] / (inst.sigma2 + inst.beta * p_dl),
          p_dl * inst.g_dl[j] / (inst.sigma2 + p_ul * inst.g_cross(i, j))};
}

/// Shannon spectral efficiency log2(1 + sinr) in bits/s/Hz.
inline double spectral_efficiency(double sinr) {
  if (!(sinr >= 0.0)) throw std::domain_error("spectral_efficiency: negative SINR");
  return std::log2(1.0 + sinr);
}

/// Weighted pair objective alpha_u * C_u + alpha_d * C_d at the given powers.
inline double pair_objective(const NetworkInstance& inst, std::size_t i, std::size_t j, double p_ul, double p_dl) {
  const auto s = pair_sinr(p_ul, p_dl, inst, i, j);
  return inst.alpha_ul[i] * std::log2(1.0 + s.ul) + inst.alpha_dl[j] * std::log2(1.0 + s.dl);
}

struct PairSolution {
  double p_ul = 0.0;
  double p_dl = 0.0;
  double sinr_ul = 0.0;
  double sinr_dl = 0.0;
  double se_ul = 0.0;
  double se_dl = 0.0;
  double weighted_se = 0.0;  // alpha-weighted SE actually achieved at (p_ul, p_dl)
  double benefit = 0.0;      // weighted_se, or kInfeasibleBenefit when infeasible
  bool feasible = false;
};

/// Evaluates SINR, SE, and feasibility of a pair at fixed powers.
inline PairSolution evaluate_pair(const NetworkInstance& inst, std::size_t i, std::size_t j, double p_ul, double p_dl) {
  PairSolution s;
  s.p_ul = p_ul;
  s.p_dl = p_dl;
  const auto sinr = pair_sinr(p_ul, p_dl, inst, i, j);
  s.sinr_ul = sinr.ul;
  s.sinr_dl = sinr.dl;
  s.se_ul = spectral_efficiency(sinr.ul);
  s.se_dl = spectral_efficiency(sinr.dl);
  s.weighted_se = inst.alpha_ul[i] * s.se_ul + inst.alpha_dl[j] * s.se_dl;
  s.feasible = sinr.ul >= inst.sinr_th_ul && sinr.dl >= inst.sinr_th_dl;
  s.benefit = s.feasible ? s.weighted_se : kInfeasibleBenefit;
  return s;
}

namespace detail {

struct EdgeOptimum {
  double x = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

/// Maximizes f over [lo, hi]: dense grid (uniform plus log-spaced) followed by
/// golden-section refinement between the neighbours of the best grid point.
template <typename F>
EdgeOptimum maximize_on_interval(F&& f, double lo, double hi) {
  std::vector<double> xs;
  xs.reserve(kEdgeGridPoints + kEdgeLogGridPoints);
  if (hi <= lo) {
    xs.push_back(lo);
  } else {
    for (std::size_t k = 0; k < kEdgeGridPoints; ++k)
      xs.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kEdgeGridPoints - 1));
    if (lo > 0.0 && hi / lo > 10.0) {
      const double log_lo = std::log(lo);
      const double log_hi = std::log(hi);
      for (std::size_t k = 1; k + 1 < kEdgeLogGridPoints; ++k)
        xs.push_back(std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(k) /
                                           static_cast<double>(kEdgeLogGridPoints - 1)));
    }
    std::sort(xs.begin(), xs.end());
  }

  EdgeOptimum best;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double v = f(xs[k]);
    if (v > best.value) {
      best = {xs[k], v};
      best_k = k;
    }
  }
  if (xs.size() < 3) return best;

  double a = xs[best_k == 0 ? 0 : best_k - 1];
  double b = xs[std::min(best_k + 1, xs.size() - 1)];
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > kRefineTolerance * std::max(std::abs(a), std::abs(b))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  for (double x : {c, d}) {
    const double v = f(x);
    if (v > best.value) best = {x, v};
  }
  return best;
}

/// [lo, hi] of the free power on one max-power edge where both SINR targets
/// hold, intersected with the search range. Empty when lo > hi.
struct Interval {
  double lo;
  double hi;
  bool empty() const { return !(lo <= hi); }
};

/// Box [box_lo, box_hi] intersected with the analytic target bounds [lo, hi].
/// The analytic bounds are pulled slightly inward so re-evaluated SINRs do not
/// land a rounding error below the target; the box ends stay exact.
inline Interval clip_to_targets(double box_lo, double box_hi, double lo, double hi) {
  return {std::max(box_lo, lo * (1.0 + 1e-12)), std::min(box_hi, hi * (1.0 - 1e-12))};
}

}  // namespace detail

/// Optimal powers for pair (i, j). The optimum lies on one of the two
/// max-power edges (p_ul = cap or p_dl = cap), so only those are searched,
/// restricted to where both SINR targets hold.
inline PairSolution optimize_pair_powers(const NetworkInstance& inst, std::size_t i, std::size_t j) {
  if (i >= inst.num_ul() || j >= inst.num_dl()) throw std::out_of_range("optimize_pair_powers: bad pair index");
  const double pu_max = inst.p_max_ul;
  const double pd_max = inst.p_max_dl;
  const double gib = inst.g_ul[i];
  const double gbj = inst.g_dl[j];
  const double gij = inst.g_cross(i, j);
  const double s2 = inst.sigma2;
  const double inf = std::numeric_limits<double>::infinity();

  auto on_ul_cap = [&](double pd) { return pair_objective(inst, i, j, pu_max, pd); };
  auto on_dl_cap = [&](double pu) { return pair_objective(inst, i, j, pu, pd_max); };

  // Edge p_ul = cap, free p_dl: DL target bounds p_dl below, SI bounds it above.
  detail::Interval ul_cap_edge;
  {
    const double lo = inst.sinr_th_dl * (s2 + pu_max * gij) / gbj;
    const double slack = pu_max * gib / inst.sinr_th_ul - s2;  // +inf when target is 0
    const double hi = slack < 0.0 ? -inf : (inst.beta > 0.0 ? slack / inst.beta : inf);
    ul_cap_edge = detail::clip_to_targets(kMinPowerFraction * pd_max, pd_max, lo, hi);
  }
  // Edge p_dl = cap, free p_ul: UL target bounds p_ul below, UE-to-UE bounds it above.
  detail::Interval dl_cap_edge;
  {
    const double lo = inst.sinr_th_ul * (s2 + inst.beta * pd_max) / gib;
    const double slack = pd_max * gbj / inst.sinr_th_dl - s2;
    const double hi = slack < 0.0 ? -inf : (gij > 0.0 ? slack / gij : inf);
    dl_cap_edge = detail::clip_to_targets(kMinPowerFraction * pu_max, pu_max, lo, hi);
  }

  std::optional<PairSolution> best;
  auto consider = [&](const PairSolution& s) {
    if (!best || s.weighted_se > best->weighted_se) best = s;
  };
  if (!ul_cap_edge.empty()) {
    const auto opt = detail::maximize_on_interval(on_ul_cap, ul_cap_edge.lo, ul_cap_edge.hi);
    const auto s = evaluate_pair(inst, i, j, pu_max, opt.x);
    if (s.feasible) consider(s);
  }
  if (!dl_cap_edge.empty()) {
    const auto opt = detail::maximize_on_interval(on_dl_cap, dl_cap_edge.lo, dl_cap_edge.hi);
    const auto s = evaluate_pair(inst, i, j, opt.x, pd_max);
    if (s.feasible) consider(s);
  }
  if (best) return *best;

  // No admissible point: report the unconstrained best edge point for diagnostics.
  const auto a = detail::maximize_on_interval(on_ul_cap, kMinPowerFraction * pd_max, pd_max);
  const auto b = detail::maximize_on_interval(on_dl_cap, kMinPowerFraction * pu_max, pu_max);
  return a.value >= b.value ? evaluate_pair(inst, i, j, pu_max, a.x) : evaluate_pair(inst, i, j, b.x, pd_max);
}

}  // namespace fdpair

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fdpair/assignment.hpp"
#include "fdpair/auction.hpp"
#include "fdpair/channel_model.hpp"
#include "fdpair/pair_power.hpp"
#include "fdpair/rng.hpp"

namespace fdpair {

enum class Method { EOpt, CHun, DAuc, Hd, REpa };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::EOpt, Method::CHun, Method::DAuc, Method::Hd, Method::REpa};
  return methods;
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::EOpt: return "eopt";
    case Method::CHun: return "chun";
    case Method::DAuc: return "dauc";
    case Method::Hd: return "hd";
    case Method::REpa: return "repa";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  return std::nullopt;
}

struct MethodResult {
  double sum_weighted_se = 0.0;  // alpha-weighted, physical SE (no sentinel)
  double sum_se = 0.0;           // unweighted bits/s/Hz
  std::vector<double> per_user_se;  // UL users then DL users
  std::size_t infeasible_pairs = 0;
  double benefit_total = 0.0;       // assignment objective on the benefit matrix
  std::vector<std::size_t> pairs;   // pairs[i] = DL user of UL user i (empty for HD)
  std::optional<std::size_t> auction_bids;
  std::optional<bool> eps_cs_ok;
};

struct DropResult {
  std::size_t drop_index = 0;
  std::map<Method, MethodResult> per_method;
};

/// Half-duplex baseline: every user alone on its channel at full power, no
/// SI and no UE-to-UE interference. Two time slots are needed, so every SE
/// (per user and summed) is halved.
inline MethodResult solve_hd(const NetworkInstance& inst) {
  MethodResult r;
  const std::size_t n_ul = inst.num_ul();
  const std::size_t n_dl = inst.num_dl();
  r.per_user_se.reserve(n_ul + n_dl);
  for (std::size_t i = 0; i < n_ul; ++i) {
    const double se = spectral_efficiency(inst.p_max_ul * inst.g_ul[i] / inst.sigma2) / 2.0;
    r.per_user_se.push_back(se);
    r.sum_se += se;
    r.sum_weighted_se += inst.alpha_ul[i] * se;
  }
  for (std::size_t j = 0; j < n_dl; ++j) {
    const double se = spectral_efficiency(inst.p_max_dl * inst.g_dl[j] / inst.sigma2) / 2.0;
    r.per_user_se.push_back(se);
    r.sum_se += se;
    r.sum_weighted_se += inst.alpha_dl[j] * se;
  }
  r.benefit_total = r.sum_weighted_se;
  return r;
}

namespace detail {

inline MethodResult summarize_pairs(const NetworkInstance& inst, const std::vector<std::size_t>& pairs,
                                    const std::vector<PairSolution>& powers, double benefit_total) {
  MethodResult r;
  r.pairs = pairs;
  r.benefit_total = benefit_total;
  r.per_user_se.assign(inst.num_ul() + inst.num_dl(), 0.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairSolution& s = powers[i];
    r.sum_se += s.se_ul + s.se_dl;
    r.sum_weighted_se += s.weighted_se;
    r.per_user_se[i] = s.se_ul;
    r.per_user_se[inst.num_ul() + pairs[i]] = s.se_dl;
    if (!s.feasible) ++r.infeasible_pairs;
  }
  return r;
}

}  // namespace detail

/// Random pairing with equal power allocation: a uniformly random
/// permutation, every link at its cap (or half of it).
inline MethodResult solve_repa(const NetworkInstance& inst, Rng& rng, EqualPowerLevel level = EqualPowerLevel::Max) {
  const std::size_t n = inst.num_ul();
  std::vector<std::size_t> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = i;
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const double scale = level == EqualPowerLevel::Max ? 1.0 : 0.5;
  std::vector<PairSolution> powers;
  powers.reserve(n);
  double benefit = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    powers.push_back(evaluate_pair(inst, i, pairs[i], scale * inst.p_max_ul, scale * inst.p_max_dl));
    benefit += powers.back().benefit;
  }
  return detail::summarize_pairs(inst, pairs, powers, benefit);
}

struct DropOptions {
  bool record_trace = false;
  DeliveryOrder order = DeliveryOrder::RoundRobin;
};

struct DropOutput {
  DropResult result;
  std::optional<AuctionTrace> trace;
};

/// One channel drop: builds the instance and benefit matrix once, then runs
/// every requested method on it. Throws GuardError if E-OPT is requested
/// beyond the exhaustive-search limit.
inline DropOutput run_drop_detailed(const ScenarioConfig& config, std::size_t drop_index,
                                    const std::vector<Method>& methods, const DropOptions& options = {}) {
  auto has = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  if (has(Method::EOpt) && config.num_ul > kExhaustiveLimit)
    throw GuardError("E-OPT requested with N = " + std::to_string(config.num_ul) +
                     " but exhaustive search is limited to N <= " + std::to_string(kExhaustiveLimit));

  const NetworkInstance inst = generate_instance(config, drop_index);
  DropOutput out;
  out.result.drop_index = drop_index;

  const bool needs_matrix = has(Method::EOpt) || has(Method::CHun) || has(Method::DAuc);
  BenefitMatrix bm;
  if (needs_matrix) bm = compute_benefit_matrix(inst);

  for (Method m : methods) {
    switch (m) {
      case Method::EOpt: {
        const auto a = solve_exhaustive(bm);
        out.result.per_method[m] = detail::summarize_pairs(inst, a.pairs, a.per_pair_powers, a.total_benefit);
        break;
      }
      case Method::CHun: {
        const auto a = solve_hungarian(bm);
        out.result.per_method[m] = detail::summarize_pairs(inst, a.pairs, a.per_pair_powers, a.total_benefit);
        break;
      }
      case Method::DAuc: {
        AuctionOptions opt;
        opt.epsilon = config.epsilon;
        opt.order = options.order;
        opt.scheduler_seed = config.seed ^ drop_index;
        opt.record_messages = options.record_trace;
        auto res = run_auction(bm, opt);
        auto r = detail::summarize_pairs(inst, res.assignment.pairs, res.assignment.per_pair_powers,
                                         res.assignment.total_benefit);
        r.auction_bids = res.trace.bids;
        r.eps_cs_ok = verify_eps_cs(res.assignment.pairs, res.trace.final_prices, bm.c, config.epsilon);
        out.result.per_method[m] = std::move(r);
        if (options.record_trace) out.trace = std::move(res.trace);
        break;
      }
      case Method::Hd:
        out.result.per_method[m] = solve_hd(inst);
        break;
      case Method::REpa: {
        Rng rng = make_stream(config.seed, drop_index, StreamPurpose::RandomPairing);
        out.result.per_method[m] = solve_repa(inst, rng, config.repa_power);
        break;
      }
    }
  }
  return out;
}

inline DropResult run_drop(const ScenarioConfig& config, std::size_t drop_index, const std::vector<Method>& methods) {
  return run_drop_detailed(config, drop_index, methods).result;
}

// ---------------------------------------------------------------------------
// CDFs

struct CdfSeries {
  std::string method;
  std::vector<double> sorted_values;

  static CdfSeries from_values(std::string method, std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return {std::move(method), std::move(values)};
  }

  /// Value at percentile p in [0, 100], linearly interpolated between order
  /// statistics placed at p = 100 k / (n - 1).
  double percentile(double p) const {
    if (sorted_values.empty()) throw std::logic_error("percentile of an empty series");
    if (!(p >= 0.0 && p <= 100.0)) throw std::domain_error("percentile outside [0, 100]");
    const double pos = p / 100.0 * static_cast<double>(sorted_values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
  }

  double median() const { return percentile(50.0); }
};

struct MonteCarloResult {
  std::vector<DropResult> drops;
  std::map<Method, CdfSeries> cdf;           // unweighted sum SE
  std::map<Method, CdfSeries> cdf_weighted;  // weighted sum SE
};

struct MonteCarloOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// Runs config.drops independent drops (drop k uses the RNG streams of
/// (seed, k)) and folds them in drop order, so output does not depend on the
/// number of worker threads.
inline MonteCarloResult run_monte_carlo(const ScenarioConfig& config, const std::vector<Method>& methods,
                                        const MonteCarloOptions& options = {}) {
  config.validate();
  if (methods.empty()) throw std::invalid_argument("run_monte_carlo: no methods requested");
  MonteCarloResult out;
  out.drops.resize(config.drops);

  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, config.drops);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < config.drops; k = next++) {
      try {
        out.drops[k] = run_drop(config, k, methods);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.drops;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (Method m : methods) {
    std::vector<double> plain, weighted;
    for (const auto& d : out.drops) {
      plain.push_back(d.per_method.at(m).sum_se);
      weighted.push_back(d.per_method.at(m).sum_weighted_se);
    }
    out.cdf[m] = CdfSeries::from_values(method_name(m), std::move(plain));
    out.cdf_weighted[m] = CdfSeries::from_values(method_name(m), std::move(weighted));
  }
  return out;
}

/// Median ratios at the 50th percentile: D-AUC/HD, R-EPA/HD, HD/D-AUC.
struct MedianRatios {
  std::optional<double> dauc_over_hd;
  std::optional<double> repa_over_hd;
  std::optional<double> hd_over_dauc;
};

inline MedianRatios median_ratios(const std::map<Method, CdfSeries>& cdf) {
  MedianRatios r;
  auto med = [&](Method m) -> std::optional<double> {
    auto it = cdf.find(m);
    if (it == cdf.end()) return std::nullopt;
    return it->second.median();
  };
  const auto hd = med(Method::Hd), dauc = med(Method::DAuc), repa = med(Method::REpa);
  if (hd && dauc) {
    r.dauc_over_hd = *dauc / *hd;
    r.hd_over_dauc = *hd / *dauc;
  }
  if (hd && repa) r.repa_over_hd = *repa / *hd;
  return r;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// Columns: drop, method, sum_se, sum_weighted_se, bids, infeasible_pairs.
inline void write_drops_csv(std::ostream& out, const MonteCarloResult& mc) {
  out << "drop,method,sum_se,sum_weighted_se,bids,infeasible_pairs\n";
  for (const auto& d : mc.drops) {
    for (const auto& [m, r] : d.per_method) {
      out << d.drop_index << ',' << method_name(m) << ',' << detail::fmt_number(r.sum_se) << ','
          << detail::fmt_number(r.sum_weighted_se) << ',';
      if (r.auction_bids) out << *r.auction_bids;
      out << ',' << r.infeasible_pairs << '\n';
    }
  }
}

/// Columns: method, percentile, value; percentiles 0..100 in steps of 1.
inline void write_cdf_csv(std::ostream& out, const std::map<Method, CdfSeries>& cdf) {
  out << "method,percentile,value\n";
  for (const auto& [m, series] : cdf)
    for (int p = 0; p <= 100; ++p)
      out << series.method << ',' << p << ',' << detail::fmt_number(series.percentile(p)) << '\n';
}

inline void write_summary(std::ostream& out, const MonteCarloResult& mc) {
  auto line = [&](const char* key, const std::optional<double>& v) {
    if (v) out << key << '=' << detail::fmt_number(*v) << '\n';
  };
  const auto plain = median_ratios(mc.cdf);
  const auto weighted = median_ratios(mc.cdf_weighted);
  out << "drops=" << mc.drops.size() << '\n';
  for (const auto& [m, series] : mc.cdf) out << "median_sum_se." << series.method << '=' << detail::fmt_number(series.median()) << '\n';
  for (const auto& [m, series] : mc.cdf_weighted)
    out << "median_sum_weighted_se." << series.method << '=' << detail::fmt_number(series.median()) << '\n';
  line("ratio.dauc_over_hd", plain.dauc_over_hd);
  line("ratio.repa_over_hd", plain.repa_over_hd);
  line("ratio.hd_over_dauc", plain.hd_over_dauc);
  line("ratio_weighted.dauc_over_hd", weighted.dauc_over_hd);
  line("ratio_weighted.repa_over_hd", weighted.repa_over_hd);
  line("ratio_weighted.hd_over_dauc", weighted.hd_over_dauc);

  std::size_t eps_cs_failures = 0, infeasible = 0;
  bool any_auction = false;
  for (const auto& d : mc.drops) {
    if (auto it = d.per_method.find(Method::DAuc); it != d.per_method.end()) {
      any_auction = true;
      if (it->second.eps_cs_ok && !*it->second.eps_cs_ok) ++eps_cs_failures;
      infeasible += it->second.infeasible_pairs;
    }
  }
  if (any_auction) {
    out << "dauc.eps_cs_failures=" << eps_cs_failures << '\n';
    out << "dauc.infeasible_pairs=" << infeasible << '\n';
  }
}

}  // namespace fdpair

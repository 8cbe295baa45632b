#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fdpair/harness.hpp"

using namespace fdpair;

namespace {

ScenarioConfig small(std::size_t n, std::size_t drops = 6) {
  ScenarioConfig c;
  c.num_ul = c.num_dl = c.num_channels = n;
  c.drops = drops;
  c.si_cancellation = -100.0;
  return c;
}

std::string csv_of(const MonteCarloResult& mc) {
  std::ostringstream os;
  write_drops_csv(os, mc);
  write_cdf_csv(os, mc.cdf);
  write_cdf_csv(os, mc.cdf_weighted);
  write_summary(os, mc);
  return os.str();
}

}  // namespace

TEST(HalfDuplex, HandExample) {
  NetworkInstance inst;
  inst.g_ul = {1.0};
  inst.g_dl = {3.0};
  inst.g_cross = Matrix<double>(1, 1, 1.0);
  inst.sigma2 = 1.0;
  inst.beta = 1.0;
  inst.alpha_ul = {1.0};
  inst.alpha_dl = {2.0};
  inst.p_max_ul = inst.p_max_dl = 1.0;
  const auto r = solve_hd(inst);
  ASSERT_EQ(r.per_user_se.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_user_se[0], 0.5);  // log2(1 + 1) / 2
  EXPECT_DOUBLE_EQ(r.per_user_se[1], 1.0);  // log2(1 + 3) / 2
  EXPECT_DOUBLE_EQ(r.sum_se, 1.5);
  EXPECT_DOUBLE_EQ(r.sum_weighted_se, 2.5);
}

TEST(HalfDuplex, IgnoresSelfInterference) {
  auto c = small(5);
  const auto a = solve_hd(generate_instance(c, 1));
  c.si_cancellation = -70.0;
  const auto b = solve_hd(generate_instance(c, 1));
  EXPECT_EQ(a.sum_se, b.sum_se);
  EXPECT_EQ(a.per_user_se, b.per_user_se);
}

TEST(HalfDuplex, FullDuplexUserNeverDoublesIt) {
  // an FD link has at most full power and extra interference
  for (std::size_t k = 0; k < 5; ++k) {
    const auto d = run_drop(small(6), k, {Method::CHun, Method::Hd});
    const auto& fd = d.per_method.at(Method::CHun).per_user_se;
    const auto& hd = d.per_method.at(Method::Hd).per_user_se;
    for (std::size_t u = 0; u < fd.size(); ++u) EXPECT_LE(fd[u], 2.0 * hd[u] + 1e-12);
  }
}

TEST(RandomPairing, DeterministicPerDrop) {
  const auto c = small(8);
  const auto inst = generate_instance(c, 0);
  Rng a = make_stream(c.seed, 0, StreamPurpose::RandomPairing);
  Rng b = make_stream(c.seed, 0, StreamPurpose::RandomPairing);
  const auto ra = solve_repa(inst, a);
  EXPECT_EQ(ra.pairs, solve_repa(inst, b).pairs);
  EXPECT_EQ(ra.pairs.size(), 8u);
  std::vector<bool> seen(8, false);
  for (auto j : ra.pairs) seen.at(j) = true;
  for (bool s : seen) EXPECT_TRUE(s);
}

TEST(RandomPairing, SingleUserAndHalfPower) {
  const auto c = small(1);
  const auto inst = generate_instance(c, 0);
  Rng rng = make_stream(1, 0, StreamPurpose::RandomPairing);
  const auto r = solve_repa(inst, rng);
  EXPECT_EQ(r.pairs, std::vector<std::size_t>{0});
  const auto s = evaluate_pair(inst, 0, 0, inst.p_max_ul, inst.p_max_dl);
  EXPECT_DOUBLE_EQ(r.sum_se, s.se_ul + s.se_dl);
  Rng rng2 = make_stream(1, 0, StreamPurpose::RandomPairing);
  const auto h = solve_repa(inst, rng2, EqualPowerLevel::Half);
  const auto sh = evaluate_pair(inst, 0, 0, inst.p_max_ul / 2, inst.p_max_dl / 2);
  EXPECT_DOUBLE_EQ(h.sum_se, sh.se_ul + sh.se_dl);
}

TEST(Drop, MethodInvariants) {
  const auto c = small(5);
  for (std::size_t k = 0; k < 6; ++k) {
    const auto d = run_drop(c, k, all_methods());
    const auto& eopt = d.per_method.at(Method::EOpt);
    const auto& chun = d.per_method.at(Method::CHun);
    const auto& dauc = d.per_method.at(Method::DAuc);
    const auto& repa = d.per_method.at(Method::REpa);
    EXPECT_NEAR(chun.benefit_total, eopt.benefit_total, 1e-9 * std::abs(eopt.benefit_total));
    EXPECT_GE(dauc.benefit_total, chun.benefit_total - 5 * c.epsilon);
    EXPECT_LE(dauc.benefit_total, chun.benefit_total + 1e-9 * std::abs(chun.benefit_total));
    // max-power pairs sit on the searched edges, so the optimum matches or beats them
    EXPECT_GE(chun.benefit_total, repa.benefit_total - 1e-9 * std::abs(repa.benefit_total));
    ASSERT_TRUE(dauc.eps_cs_ok);
    EXPECT_TRUE(*dauc.eps_cs_ok);
    ASSERT_TRUE(dauc.auction_bids);
    EXPECT_GE(*dauc.auction_bids, 5u);
  }
}

TEST(Drop, Deterministic) {
  const auto c = small(6);
  const auto a = run_drop(c, 3, all_methods());
  const auto b = run_drop(c, 3, all_methods());
  for (Method m : all_methods()) {
    EXPECT_EQ(a.per_method.at(m).sum_se, b.per_method.at(m).sum_se);
    EXPECT_EQ(a.per_method.at(m).pairs, b.per_method.at(m).pairs);
  }
}

TEST(Drop, ExhaustiveGuard) {
  EXPECT_THROW(run_drop(small(10), 0, {Method::EOpt}), GuardError);
  EXPECT_NO_THROW(run_drop(small(10, 1), 0, {Method::CHun, Method::Hd}));
}

TEST(Cdf, PercentileInterpolation) {
  const auto s = CdfSeries::from_values("x", {4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(s.sorted_values, (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_DOUBLE_EQ(s.percentile(0), 1.0);
  EXPECT_DOUBLE_EQ(s.percentile(100), 5.0);
  EXPECT_DOUBLE_EQ(s.median(), 3.0);
  EXPECT_DOUBLE_EQ(s.percentile(12.5), 1.5);
  const auto even = CdfSeries::from_values("y", {1.0, 2.0});
  EXPECT_DOUBLE_EQ(even.median(), 1.5);
  EXPECT_THROW(s.percentile(101), std::domain_error);
  EXPECT_THROW(CdfSeries{}.median(), std::logic_error);
}

TEST(MonteCarlo, OutputIndependentOfThreads) {
  const auto c = small(4, 8);
  const auto methods = std::vector<Method>{Method::EOpt, Method::DAuc, Method::Hd, Method::REpa};
  const auto one = csv_of(run_monte_carlo(c, methods, {1}));
  EXPECT_EQ(one, csv_of(run_monte_carlo(c, methods, {1})));
  EXPECT_EQ(one, csv_of(run_monte_carlo(c, methods, {3})));
}

TEST(MonteCarlo, CsvLayout) {
  const auto mc = run_monte_carlo(small(3, 4), {Method::DAuc, Method::Hd}, {1});
  std::ostringstream drops, cdf;
  write_drops_csv(drops, mc);
  write_cdf_csv(cdf, mc.cdf);
  std::istringstream d(drops.str()), cd(cdf.str());
  std::string line;
  std::getline(d, line);
  EXPECT_EQ(line, "drop,method,sum_se,sum_weighted_se,bids,infeasible_pairs");
  std::size_t rows = 0;
  while (std::getline(d, line)) ++rows;
  EXPECT_EQ(rows, 8u);
  std::getline(cd, line);
  EXPECT_EQ(line, "method,percentile,value");
  rows = 0;
  while (std::getline(cd, line)) ++rows;
  EXPECT_EQ(rows, 2u * 101u);
  EXPECT_EQ(mc.cdf.at(Method::Hd).sorted_values.size(), 4u);
}

TEST(MonteCarlo, RatiosFromMedians) {
  std::map<Method, CdfSeries> cdf;
  cdf[Method::Hd] = CdfSeries::from_values("hd", {1.0, 2.0, 3.0});
  cdf[Method::DAuc] = CdfSeries::from_values("dauc", {2.0, 4.0, 6.0});
  const auto r = median_ratios(cdf);
  EXPECT_DOUBLE_EQ(*r.dauc_over_hd, 2.0);
  EXPECT_DOUBLE_EQ(*r.hd_over_dauc, 0.5);
  EXPECT_FALSE(r.repa_over_hd);
}

TEST(Drop, ReportedSumsMatchPowers) {
  const auto c = small(6);
  for (std::size_t k = 0; k < 6; ++k) {
    const auto inst = generate_instance(c, k);
    const auto d = run_drop(c, k, {Method::CHun});
    const auto& r = d.per_method.at(Method::CHun);
    const auto bm = compute_benefit_matrix(inst);
    double weighted = 0.0;
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
      const auto& s = bm.solutions(i, r.pairs[i]);
      weighted += pair_objective(inst, i, r.pairs[i], s.p_ul, s.p_dl);
    }
    EXPECT_NEAR(r.sum_weighted_se, weighted, 1e-9 * std::abs(weighted));
    if (r.infeasible_pairs == 0) {
      EXPECT_NEAR(r.benefit_total, weighted, 1e-9 * std::abs(weighted));
    }
  }
}

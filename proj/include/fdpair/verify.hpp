#pragma once

// Built-in property suite: random benefit matrices checked for the auction's
// optimality and termination guarantees and for exact-solver agreement.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdpair/assignment.hpp"
#include "fdpair/auction.hpp"
#include "fdpair/rng.hpp"

namespace fdpair {

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t instances = 200;
  std::size_t min_n = 2;
  std::size_t max_n = 7;
  double max_benefit = 10.0;
  double epsilon = 0.1;
  AuctionFault fault = AuctionFault::None;
};

struct PropertyFailure {
  std::size_t instance = 0;
  std::string property;
  std::string detail;
  nlohmann::json counterexample;
};

struct VerifyReport {
  std::size_t instances = 0;
  std::vector<PropertyFailure> failures;
  std::vector<std::size_t> bid_counts;
  std::vector<double> bid_bounds;

  bool passed() const { return failures.empty(); }
};

inline Matrix<double> random_benefits(Rng& rng, std::size_t n, double max_benefit) {
  Matrix<double> c(n, n);
  std::uniform_real_distribution<double> dist(0.0, max_benefit);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) = dist(rng);
  return c;
}

inline nlohmann::json benefits_to_json(const Matrix<double>& c, double epsilon) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto r = c.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"n", c.rows()}, {"epsilon", epsilon}, {"benefits", rows}};
}

inline VerifyReport run_property_suite(const VerifyOptions& opt) {
  VerifyReport report;
  for (std::size_t k = 0; k < opt.instances; ++k) {
    Rng rng = make_stream(opt.seed, k, StreamPurpose::Verify);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(opt.min_n, opt.max_n)(rng);
    const Matrix<double> c = random_benefits(rng, n, opt.max_benefit);
    ++report.instances;

    auto fail = [&](std::string property, std::string detail) {
      report.failures.push_back({k, std::move(property), std::move(detail), benefits_to_json(c, opt.epsilon)});
    };

    const auto hungarian = solve_hungarian(c);
    const auto exhaustive = solve_exhaustive(c);
    if (hungarian.total_benefit != exhaustive.total_benefit)
      fail("hungarian_equals_exhaustive", "hungarian " + std::to_string(hungarian.total_benefit) + " vs exhaustive " +
                                              std::to_string(exhaustive.total_benefit));

    AuctionOptions ao;
    ao.epsilon = opt.epsilon;
    ao.record_messages = false;
    ao.fault = opt.fault;
    AuctionResult auction;
    try {
      auction = run_auction(c, ao);
    } catch (const InvariantViolation& e) {
      fail("termination_bound", e.what());
      continue;
    }
    report.bid_counts.push_back(auction.trace.bids);
    report.bid_bounds.push_back(auction.trace.bid_bound);

    if (!is_permutation(auction.assignment.pairs, n)) fail("bijection", "auction output is not a permutation");
    const double gap_limit = static_cast<double>(n) * opt.epsilon;
    if (auction.assignment.total_benefit < hungarian.total_benefit - gap_limit)
      fail("n_epsilon_optimality", "auction " + std::to_string(auction.assignment.total_benefit) + " < optimum " +
                                       std::to_string(hungarian.total_benefit) + " - " + std::to_string(gap_limit));
    if (static_cast<double>(auction.trace.bids) > auction.trace.bid_bound)
      fail("termination_bound", std::to_string(auction.trace.bids) + " bids");
    if (!verify_eps_cs(auction.assignment.pairs, auction.trace.final_prices, c, opt.epsilon))
      fail("eps_complementary_slackness", "final prices violate eps-CS");
  }
  return report;
}

}  // namespace fdpair

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fdpair/assignment.hpp"
#include "fdpair/auction.hpp"
#include "oracles.hpp"

using namespace fdpair;

namespace {

Matrix<double> random_matrix(std::mt19937_64& rng, std::size_t n, double hi = 10.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  Matrix<double> m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

Matrix<double> integer_matrix(std::mt19937_64& rng, std::size_t n, int hi = 10) {
  std::uniform_int_distribution<int> u(0, hi);
  Matrix<double> m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

AuctionOptions opts(double eps, DeliveryOrder order = DeliveryOrder::RoundRobin) {
  AuctionOptions o;
  o.epsilon = eps;
  o.order = order;
  return o;
}

}  // namespace

TEST(UlBid, TwoChoiceExample) {
  auto r = ul_bid_step(UlAgentState::initial(0, {5.0, 1.0}, 0.1));
  EXPECT_EQ(r.bid.ul, 0u);
  EXPECT_EQ(r.bid.dl, 0u);
  EXPECT_NEAR(r.bid.bid, 4.1, 1e-12);
  EXPECT_EQ(r.state.pending_dl, std::optional<std::size_t>(0));
}

TEST(UlBid, EqualBenefitsBidEpsilon) {
  auto r = ul_bid_step(UlAgentState::initial(2, {3.0, 3.0, 3.0}, 0.1));
  EXPECT_NEAR(r.bid.bid, 0.1, 1e-15);
  EXPECT_EQ(r.bid.dl, 0u);
}

TEST(UlBid, PriceOfChosenUserDoesNotMoveBid) {
  // b = c_ij - w + eps: the chosen user's own price only lowers v
  auto s = UlAgentState::initial(0, {5.0, 1.0, 0.5}, 0.1);
  const double base = ul_bid_step(s).bid.bid;
  for (double delta : {0.5, 1.0, 3.5}) {
    auto t = s;
    t.local_prices[0] = delta;
    const auto r = ul_bid_step(t);
    EXPECT_EQ(r.bid.dl, 0u);
    EXPECT_NEAR(r.bid.bid, base, 1e-12);
  }
}

TEST(UlBid, PriceOfRunnerUpRaisesBid) {
  auto s = UlAgentState::initial(0, {5.0, 1.0, 0.5}, 0.1);
  const double base = ul_bid_step(s).bid.bid;
  for (double delta : {0.1, 0.3, 0.5}) {
    auto t = s;
    t.local_prices[1] = delta;
    EXPECT_NEAR(ul_bid_step(t).bid.bid, base + delta, 1e-12);
  }
}

TEST(UlBid, SingleDlUserClearsAnyPrice) {
  auto s = UlAgentState::initial(0, {2.0}, 0.1);
  const auto r = ul_bid_step(s);
  EXPECT_GE(r.bid.bid - 0.0, 0.1);
  EXPECT_TRUE(std::isfinite(r.bid.bid));
}

TEST(UlAgent, RebidsAfterDisplacement) {
  auto s = ul_bid_step(UlAgentState::initial(1, {5.0, 4.0}, 0.1)).state;
  auto r = ul_receive(s, M1Message{1});
  EXPECT_EQ(r.state.current_dl, std::optional<std::size_t>(0));
  EXPECT_FALSE(r.bid);
  r = ul_receive(r.state, M2Message{1, 0, 2.0});
  EXPECT_FALSE(r.state.current_dl);
  ASSERT_TRUE(r.bid);
  EXPECT_EQ(r.bid->dl, 1u);  // 4 - 0 beats 5 - 2
  EXPECT_NEAR(r.bid->bid, 4.0 - 3.0 + 0.1, 1e-12);
}

TEST(UlAgent, UnexpectedMessagesThrow) {
  auto s = UlAgentState::initial(0, {1.0, 2.0}, 0.1);
  EXPECT_THROW(ul_receive(s, M1Message{0}), ProtocolError);
  EXPECT_THROW(ul_receive(s, M2Message{0, 7, 1.0}), ProtocolError);
  EXPECT_THROW(ul_receive(s, BidMessage{0, 0, 1.0}), ProtocolError);
}

TEST(BsAssign, AcceptFirstBid) {
  auto r = bs_assign_step(BsAgentState::initial(2, 0.1), BidMessage{1, 0, 4.1});
  EXPECT_TRUE(r.accepted);
  EXPECT_NEAR(r.state.prices[0], 4.1, 1e-15);
  EXPECT_EQ(r.state.owners[0], std::optional<std::size_t>(1));
  ASSERT_EQ(r.out.size(), 1u);
  EXPECT_EQ(r.out[0].to, Endpoint::ul(1));
  EXPECT_TRUE(std::holds_alternative<M1Message>(r.out[0].msg));
}

TEST(BsAssign, RejectLowBid) {
  auto s = bs_assign_step(BsAgentState::initial(2, 0.1), BidMessage{1, 0, 4.1}).state;
  auto r = bs_assign_step(s, BidMessage{0, 0, 4.15});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.state.prices, s.prices);
  EXPECT_EQ(r.state.owners, s.owners);
  ASSERT_EQ(r.out.size(), 1u);
  const auto* m2 = std::get_if<M2Message>(&r.out[0].msg);
  ASSERT_TRUE(m2);
  EXPECT_EQ(m2->ul, 0u);
  EXPECT_NEAR(m2->price, 4.1, 1e-15);
}

TEST(BsAssign, DisplacePreviousOwner) {
  auto s = bs_assign_step(BsAgentState::initial(3, 0.1), BidMessage{1, 0, 4.1}).state;
  auto r = bs_assign_step(s, BidMessage{2, 0, 5.0});
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.state.owners[0], std::optional<std::size_t>(2));
  EXPECT_EQ(r.state.x(1, 0), 0);
  EXPECT_EQ(r.state.x(2, 0), 1);
  ASSERT_EQ(r.out.size(), 2u);
  EXPECT_EQ(r.out[0].to, Endpoint::ul(1));
  const auto* m2 = std::get_if<M2Message>(&r.out[0].msg);
  ASSERT_TRUE(m2);
  EXPECT_NEAR(m2->price, 5.0, 1e-15);
  EXPECT_EQ(r.out[1].to, Endpoint::ul(2));
}

TEST(BsAssign, CompletionSendsM3AndM4) {
  auto s = bs_assign_step(BsAgentState::initial(2, 0.1), BidMessage{0, 1, 1.0}).state;
  auto r = bs_assign_step(s, BidMessage{1, 0, 1.0});
  EXPECT_TRUE(r.state.finished);
  std::size_t m3 = 0, m4 = 0;
  for (const auto& o : r.out) {
    m3 += std::holds_alternative<M3Message>(o.msg);
    m4 += std::holds_alternative<M4Message>(o.msg);
  }
  EXPECT_EQ(m3, 2u);
  EXPECT_EQ(m4, 4u);
  EXPECT_THROW(bs_assign_step(r.state, BidMessage{0, 0, 9.0}), ProtocolError);
}

TEST(BsAssign, MalformedBidsThrow) {
  auto s = BsAgentState::initial(2, 0.1);
  EXPECT_THROW(bs_assign_step(s, BidMessage{2, 0, 1.0}), ProtocolError);
  EXPECT_THROW(bs_assign_step(s, BidMessage{0, 5, 1.0}), ProtocolError);
  EXPECT_THROW(bs_assign_step(s, BidMessage{0, 0, NAN}), ProtocolError);
}

TEST(RunAuction, TwoByTwo) {
  Matrix<double> c(2, 2);
  c(0, 0) = 2; c(0, 1) = 1; c(1, 0) = 1; c(1, 1) = 2;
  const auto r = run_auction(c, opts(0.1));
  EXPECT_EQ(r.assignment.pairs, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.assignment.total_benefit, 4.0);
}

TEST(RunAuction, IntegerBenefitsAreExactBelowOneOverN) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 6;
    const auto c = integer_matrix(rng, n);
    const auto r = run_auction(c, opts(1.0 / static_cast<double>(n + 1)));
    EXPECT_EQ(r.assignment.total_benefit, oracle::brute_force_best_total(c)) << "trial " << t;
  }
}

TEST(RunAuction, WithinNEpsilonOfOptimum) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 100; ++t) {
    const auto c = random_matrix(rng, 6);
    const auto r = run_auction(c, opts(0.1));
    ASSERT_TRUE(is_permutation(r.assignment.pairs, 6));
    EXPECT_GE(r.assignment.total_benefit, oracle::brute_force_best_total(c) - 6 * 0.1);
  }
}

TEST(RunAuction, EpsCsHoldsAtTermination) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + t % 6;
    const auto c = random_matrix(rng, n);
    const auto r = run_auction(c, opts(0.1));
    EXPECT_TRUE(verify_eps_cs(r.assignment.pairs, r.trace.final_prices, c, 0.1)) << "trial " << t;
  }
}

TEST(EpsCs, DetectsViolation) {
  Matrix<double> c(2, 2);
  c(0, 0) = 5; c(0, 1) = 1; c(1, 0) = 1; c(1, 1) = 5;
  EXPECT_TRUE(verify_eps_cs({0, 1}, {0.0, 0.0}, c, 0.1));
  EXPECT_FALSE(verify_eps_cs({1, 0}, {0.0, 0.0}, c, 0.1));
  EXPECT_FALSE(verify_eps_cs({0, 0}, {0.0, 0.0}, c, 0.1));
  Matrix<double> one(1, 1, 3.0);
  EXPECT_TRUE(verify_eps_cs({0}, {7.0}, one, 0.1));
}

TEST(RunAuction, SingleUser) {
  Matrix<double> one(1, 1, -4.0);
  const auto r = run_auction(one, opts(0.1));
  EXPECT_EQ(r.assignment.pairs, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.trace.bids, 1u);
}

TEST(RunAuction, SchedulerDoesNotBreakGuarantees) {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 30; ++t) {
    const auto c = random_matrix(rng, 5);
    const double best = oracle::brute_force_best_total(c);
    for (auto order : {DeliveryOrder::RoundRobin, DeliveryOrder::GlobalFifo, DeliveryOrder::Random,
                       DeliveryOrder::HighestFirst}) {
      auto o = opts(0.1, order);
      o.scheduler_seed = static_cast<std::uint64_t>(t);
      const auto r = run_auction(c, o);
      EXPECT_GE(r.assignment.total_benefit, best - 5 * 0.1);
      EXPECT_TRUE(verify_eps_cs(r.assignment.pairs, r.trace.final_prices, c, 0.1));
    }
    // integer data with eps < 1/N: every order lands on the optimum value
    const auto ci = integer_matrix(rng, 5);
    const double best_i = oracle::brute_force_best_total(ci);
    for (auto order : {DeliveryOrder::RoundRobin, DeliveryOrder::GlobalFifo, DeliveryOrder::Random,
                       DeliveryOrder::HighestFirst})
      EXPECT_EQ(run_auction(ci, opts(1.0 / 6.0, order)).assignment.total_benefit, best_i);
  }
}

TEST(RunAuction, PricesRiseByAtLeastEpsilon) {
  std::mt19937_64 rng(25);
  for (int t = 0; t < 50; ++t) {
    const auto c = random_matrix(rng, 6);
    const auto r = run_auction(c, opts(0.1));
    std::vector<double> last(6, 0.0);
    for (const auto& u : r.trace.price_history) {
      EXPECT_GE(u.price - last[u.dl], 0.1 - 1e-12);
      last[u.dl] = u.price;
    }
    EXPECT_EQ(last, r.trace.final_prices);
  }
}

TEST(RunAuction, AcceptedBidsPerDlUserBounded) {
  std::mt19937_64 rng(26);
  for (int t = 0; t < 50; ++t) {
    const auto c = random_matrix(rng, 6);
    const auto r = run_auction(c, opts(0.1));
    const auto [lo, hi] = std::minmax_element(c.values().begin(), c.values().end());
    const double cap = std::ceil((*hi - *lo) / 0.1) + 1.0;
    for (auto a : r.trace.accepted_per_dl) EXPECT_LE(static_cast<double>(a), cap);
    EXPECT_LE(static_cast<double>(r.trace.bids), auction_bid_bound(c, 0.1));
  }
}

TEST(RunAuction, SkippedPriceUpdateIsCaught) {
  Matrix<double> c(3, 3, 0.0);
  c(0, 0) = 5; c(1, 0) = 5; c(2, 0) = 5;
  auto o = opts(0.1);
  o.fault = AuctionFault::SkipPriceUpdate;
  EXPECT_THROW(run_auction(c, o), InvariantViolation);
}

TEST(RunAuction, RejectsBadInput) {
  EXPECT_THROW(run_auction(Matrix<double>(2, 3), opts(0.1)), std::invalid_argument);
  EXPECT_THROW(run_auction(Matrix<double>(2, 2), opts(0.0)), std::invalid_argument);
}

TEST(Trace, JsonLinesFormat) {
  Matrix<double> c(3, 3);
  std::mt19937_64 rng(27);
  c = random_matrix(rng, 3);
  const auto r = run_auction(c, opts(0.1));
  std::ostringstream os;
  write_trace_jsonl(os, r.trace);
  std::istringstream is(os.str());
  std::string line;
  std::size_t count = 0, bids = 0, m3 = 0, m4 = 0;
  std::size_t prev_step = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"step", "from", "to", "type", "payload"}) EXPECT_TRUE(j.contains(key)) << line;
    EXPECT_GE(j["step"].get<std::size_t>(), prev_step);
    prev_step = j["step"].get<std::size_t>();
    const auto type = j["type"].get<std::string>();
    if (type == "Bid") {
      ++bids;
      EXPECT_EQ(j["to"], "bs");
    }
    m3 += type == "M3";
    m4 += type == "M4";
    ++count;
  }
  EXPECT_EQ(count, r.trace.messages.size());
  EXPECT_EQ(count, r.trace.messages_sent);
  EXPECT_EQ(bids, r.trace.bids);
  EXPECT_EQ(m3, 3u);
  EXPECT_EQ(m4, 6u);
}

TEST(Trace, RecordingDoesNotChangeOutcome) {
  std::mt19937_64 rng(28);
  const auto c = random_matrix(rng, 6);
  auto quiet = opts(0.1);
  quiet.record_messages = false;
  const auto a = run_auction(c, quiet);
  const auto b = run_auction(c, opts(0.1));
  EXPECT_TRUE(a.trace.messages.empty());
  EXPECT_EQ(a.assignment.pairs, b.assignment.pairs);
  EXPECT_EQ(a.trace.final_prices, b.trace.final_prices);
  EXPECT_EQ(a.trace.bids, b.trace.bids);
}

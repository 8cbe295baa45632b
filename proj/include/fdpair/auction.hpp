#pragma once

// Distributed forward auction for UL/DL pairing. UL users bid for DL users;
// the BS accepts or rejects bids and raises prices. Agents are isolated state
// machines that only exchange AuctionMessage values through an in-process
// transport whose delivery order is chosen by a scheduler policy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdpair/assignment.hpp"
#include "fdpair/matrix.hpp"

namespace fdpair {

// ---------------------------------------------------------------------------
// Messages

struct BidMessage {
  std::size_t ul = 0;
  std::size_t dl = 0;
  double bid = 0.0;
};
/// Bid accepted.
struct M1Message {
  std::size_t ul = 0;
};
/// Bid too low, or ownership lost; carries the BS's current price of `dl`.
struct M2Message {
  std::size_t ul = 0;
  std::size_t dl = 0;
  double price = 0.0;
};
/// A feasible assignment was found.
struct M3Message {};
/// Final pair and powers.
struct M4Message {
  std::size_t ul = 0;
  std::size_t dl = 0;
  double p_ul = 0.0;
  double p_dl = 0.0;
};

using AuctionMessage = std::variant<BidMessage, M1Message, M2Message, M3Message, M4Message>;

inline const char* message_type(const AuctionMessage& m) {
  static constexpr const char* names[] = {"Bid", "M1", "M2", "M3", "M4"};
  return names[m.index()];
}

struct Endpoint {
  enum class Kind : std::uint8_t { Bs, Ul, Dl };
  Kind kind = Kind::Bs;
  std::size_t index = 0;

  static Endpoint bs() { return {Kind::Bs, 0}; }
  static Endpoint ul(std::size_t i) { return {Kind::Ul, i}; }
  static Endpoint dl(std::size_t j) { return {Kind::Dl, j}; }

  std::string to_string() const {
    switch (kind) {
      case Kind::Bs: return "bs";
      case Kind::Ul: return "ul:" + std::to_string(index);
      case Kind::Dl: return "dl:" + std::to_string(index);
    }
    return "?";
  }
  bool operator==(const Endpoint&) const = default;
};

struct Outgoing {
  Endpoint to;
  AuctionMessage msg;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A property the auction guarantees was observed to fail.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// UL agent

struct UlAgentState {
  std::size_t id = 0;
  std::vector<double> benefits;      // row c_i of the benefit matrix
  std::vector<double> local_prices;  // last prices learned from M2
  std::optional<std::size_t> current_dl;
  std::optional<std::size_t> pending_dl;  // DL user of the outstanding bid
  double epsilon = 0.1;
  bool finished = false;                  // M3 received
  std::optional<M4Message> final_pair;

  static UlAgentState initial(std::size_t id, std::vector<double> row, double epsilon) {
    UlAgentState s;
    s.id = id;
    s.local_prices.assign(row.size(), 0.0);
    s.benefits = std::move(row);
    s.epsilon = epsilon;
    return s;
  }
};

struct BidStepResult {
  BidMessage bid;
  UlAgentState state;
};

/// One bidding step: best utility v, its DL user, second-best utility w,
/// and bid c - w + eps. With a single DL user there is no second best; w is
/// taken as v - (row range + 1) so the bid clears the price immediately.
inline BidStepResult ul_bid_step(UlAgentState state) {
  const std::size_t n = state.benefits.size();
  if (n == 0) throw ProtocolError("ul_bid_step: empty benefit row");
  if (state.current_dl) throw ProtocolError("ul_bid_step: agent is already assigned");

  std::size_t best_j = 0;
  double v = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double utility = state.benefits[j] - state.local_prices[j];
    if (utility > v) {
      v = utility;
      best_j = j;
    }
  }
  double w = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (j != best_j) w = std::max(w, state.benefits[j] - state.local_prices[j]);
  if (n == 1) {
    const auto [lo, hi] = std::minmax_element(state.benefits.begin(), state.benefits.end());
    w = v - ((*hi - *lo) + 1.0);
  }

  double bid = state.benefits[best_j] - w + state.epsilon;
  // v >= w means bid - price >= eps exactly; rounding can leave it an ulp
  // short, and the BS would then reject the same bid forever.
  const double known_price = state.local_prices[best_j];
  while (bid - known_price < state.epsilon) bid = std::nextafter(bid, std::numeric_limits<double>::infinity());
  state.pending_dl = best_j;
  return {{state.id, best_j, bid}, std::move(state)};
}

struct UlReceiveResult {
  UlAgentState state;
  std::optional<BidMessage> bid;
};

/// Handles one incoming message; rebids immediately when left unassigned.
inline UlReceiveResult ul_receive(UlAgentState state, const AuctionMessage& msg) {
  if (const auto* m1 = std::get_if<M1Message>(&msg)) {
    if (m1->ul != state.id || !state.pending_dl) throw ProtocolError("UL agent got an unexpected M1");
    state.current_dl = state.pending_dl;
    state.pending_dl.reset();
    return {std::move(state), std::nullopt};
  }
  if (const auto* m2 = std::get_if<M2Message>(&msg)) {
    if (m2->ul != state.id || m2->dl >= state.local_prices.size()) throw ProtocolError("UL agent got a malformed M2");
    state.current_dl.reset();
    state.pending_dl.reset();
    state.local_prices[m2->dl] = m2->price;
    if (state.finished) return {std::move(state), std::nullopt};
    auto step = ul_bid_step(std::move(state));
    return {std::move(step.state), step.bid};
  }
  if (std::holds_alternative<M3Message>(msg)) {
    state.finished = true;
    return {std::move(state), std::nullopt};
  }
  if (const auto* m4 = std::get_if<M4Message>(&msg)) {
    state.final_pair = *m4;
    return {std::move(state), std::nullopt};
  }
  throw ProtocolError("UL agent received a bid");
}

// ---------------------------------------------------------------------------
// BS agent

/// Deliberate protocol bugs, used to check that verification catches them.
enum class AuctionFault { None, SkipPriceUpdate };

struct BsAgentState {
  std::vector<double> prices;
  std::vector<std::optional<std::size_t>> owners;  // owner UL user of each DL user
  Matrix<std::uint8_t> x;
  double epsilon = 0.1;
  std::size_t assigned = 0;
  bool finished = false;

  static BsAgentState initial(std::size_t n, double epsilon) {
    BsAgentState s;
    s.prices.assign(n, 0.0);
    s.owners.assign(n, std::nullopt);
    s.x = Matrix<std::uint8_t>(n, n, 0);
    s.epsilon = epsilon;
    return s;
  }
};

struct BsStepResult {
  BsAgentState state;
  std::vector<Outgoing> out;
  bool accepted = false;
};

/// Processes one bid. Accepted when bid - price >= eps: the price becomes the
/// bid, the previous owner is told via M2, the bidder gets M1, and once every
/// UL user owns a DL user M3 and M4 go out. Rejected bids get M2 with the
/// current price. `solutions` supplies the M4 powers and may be null.
inline BsStepResult bs_assign_step(BsAgentState state, const BidMessage& bid,
                                   const Matrix<PairSolution>* solutions = nullptr,
                                   AuctionFault fault = AuctionFault::None) {
  const std::size_t n = state.prices.size();
  if (bid.ul >= n || bid.dl >= n) throw ProtocolError("bid with out-of-range index: ul=" + std::to_string(bid.ul) +
                                                      " dl=" + std::to_string(bid.dl));
  if (!std::isfinite(bid.bid)) throw ProtocolError("bid with non-finite amount from ul=" + std::to_string(bid.ul));
  if (state.finished) throw ProtocolError("bid received after the auction finished");

  BsStepResult r;
  const std::size_t j = bid.dl;
  if (!(bid.bid - state.prices[j] >= state.epsilon)) {
    r.out.push_back({Endpoint::ul(bid.ul), M2Message{bid.ul, j, state.prices[j]}});
    r.state = std::move(state);
    return r;
  }

  for (std::size_t k = 0; k < n; ++k)
    if (state.x(bid.ul, k)) throw ProtocolError("bid from ul=" + std::to_string(bid.ul) + " which already owns dl=" +
                                                std::to_string(k));

  r.accepted = true;
  if (fault != AuctionFault::SkipPriceUpdate) state.prices[j] = bid.bid;
  if (const auto prev = state.owners[j]) {
    state.x(*prev, j) = 0;
    --state.assigned;
    r.out.push_back({Endpoint::ul(*prev), M2Message{*prev, j, state.prices[j]}});
  }
  state.owners[j] = bid.ul;
  state.x(bid.ul, j) = 1;
  ++state.assigned;
  r.out.push_back({Endpoint::ul(bid.ul), M1Message{bid.ul}});

  if (state.assigned == n) {
    state.finished = true;
    for (std::size_t i = 0; i < n; ++i) r.out.push_back({Endpoint::ul(i), M3Message{}});
    for (std::size_t dl = 0; dl < n; ++dl) {
      const std::size_t ul = *state.owners[dl];
      M4Message m4{ul, dl, 0.0, 0.0};
      if (solutions) {
        m4.p_ul = (*solutions)(ul, dl).p_ul;
        m4.p_dl = (*solutions)(ul, dl).p_dl;
      }
      r.out.push_back({Endpoint::ul(ul), m4});
      r.out.push_back({Endpoint::dl(dl), m4});
    }
  }
  r.state = std::move(state);
  return r;
}

// ---------------------------------------------------------------------------
// Verification

/// Relative slack for rounding in price arithmetic, scaled by the largest
/// benefit/price magnitude.
inline constexpr double kEpsCsRoundingSlack = 1.0e-14;

/// eps-complementary slackness: every UL user's DL user is within eps of its
/// best utility c_ik - p_k.
inline bool verify_eps_cs(const std::vector<std::size_t>& pairs, const std::vector<double>& prices,
                          const Matrix<double>& c, double epsilon) {
  const std::size_t n = c.rows();
  if (!is_permutation(pairs, n) || prices.size() != n) return false;
  double scale = 1.0;
  for (double v : c.values()) scale = std::max(scale, std::abs(v));
  for (double p : prices) scale = std::max(scale, std::abs(p));
  const double slack = kEpsCsRoundingSlack * scale;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) best = std::max(best, c(i, k) - prices[k]);
    if (c(i, pairs[i]) - prices[pairs[i]] < best - epsilon - slack) return false;
  }
  return true;
}

/// Worst-case bid count N * N^2 * ceil(delta / eps), delta = max c - min c.
/// The ceiling is floored at 1 so a constant matrix still admits its N bids.
inline double auction_bid_bound(const Matrix<double>& c, double epsilon) {
  const std::size_t n = c.rows();
  if (n == 0) return 0.0;
  const auto [lo, hi] = std::minmax_element(c.values().begin(), c.values().end());
  const double steps = std::max(1.0, std::ceil((*hi - *lo) / epsilon));
  return static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(n) * steps;
}

// ---------------------------------------------------------------------------
// Transport, scheduler, driver

/// Which agent with queued mail handles its next message. Each agent's
/// inbox is FIFO, so messages between two agents never overtake each other.
enum class DeliveryOrder {
  RoundRobin,    // cycle over agents with pending mail
  GlobalFifo,    // oldest undelivered message first
  Random,        // uniformly random agent with pending mail (seeded)
  HighestFirst,  // always the highest-index UL agent, BS last
};

struct AuctionOptions {
  double epsilon = 0.1;
  DeliveryOrder order = DeliveryOrder::RoundRobin;
  std::uint64_t scheduler_seed = 0;
  bool record_messages = true;
  AuctionFault fault = AuctionFault::None;
};

struct TraceRecord {
  std::size_t step = 0;
  Endpoint from;
  Endpoint to;
  AuctionMessage msg;
};

struct PriceUpdate {
  std::size_t step = 0;
  std::size_t dl = 0;
  double price = 0.0;
};

struct AuctionTrace {
  std::vector<TraceRecord> messages;  // empty unless record_messages
  std::size_t bids = 0;
  std::size_t messages_sent = 0;
  std::vector<std::size_t> accepted_per_dl;
  std::vector<PriceUpdate> price_history;
  std::vector<double> final_prices;
  double bid_bound = 0.0;
};

struct AuctionResult {
  Assignment assignment;
  AuctionTrace trace;
};

namespace detail {

class AuctionRun {
 public:
  AuctionRun(const Matrix<double>& c, const Matrix<PairSolution>* solutions, const AuctionOptions& opt)
      : c_(c), solutions_(solutions), opt_(opt), n_(c.rows()), rng_(opt.scheduler_seed) {
    bs_ = BsAgentState::initial(n_, opt.epsilon);
    ul_.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto row = c.row(i);
      ul_.push_back(UlAgentState::initial(i, {row.begin(), row.end()}, opt.epsilon));
    }
    inbox_.resize(n_ + 1);  // slot n_ is the BS
    trace_.accepted_per_dl.assign(n_, 0);
    trace_.bid_bound = auction_bid_bound(c, opt.epsilon);
  }

  AuctionResult run() {
    for (std::size_t i = 0; i < n_; ++i) {
      auto step = ul_bid_step(std::move(ul_[i]));
      ul_[i] = std::move(step.state);
      send(Endpoint::ul(i), Endpoint::bs(), step.bid);
    }
    while (auto slot = next_slot()) deliver(*slot);

    if (!bs_.finished) throw InvariantViolation("auction drained its queues without a feasible assignment");
    std::vector<std::size_t> pairs(n_);
    for (std::size_t j = 0; j < n_; ++j) pairs[*bs_.owners[j]] = j;
    for (const auto& agent : ul_)
      if (!agent.finished || !agent.current_dl || !agent.final_pair || agent.final_pair->dl != *agent.current_dl)
        throw InvariantViolation("UL agent " + std::to_string(agent.id) + " did not end with its final pair");

    AuctionResult result;
    result.assignment.total_benefit = assignment_total(c_, pairs);
    if (solutions_)
      for (std::size_t i = 0; i < n_; ++i) result.assignment.per_pair_powers.push_back((*solutions_)(i, pairs[i]));
    result.assignment.pairs = std::move(pairs);
    trace_.final_prices = bs_.prices;
    result.trace = std::move(trace_);
    return result;
  }

 private:
  struct Queued {
    std::size_t seq;
    Endpoint from;
    AuctionMessage msg;
  };

  std::size_t slot_of(const Endpoint& e) const { return e.kind == Endpoint::Kind::Bs ? n_ : e.index; }

  void send(const Endpoint& from, const Endpoint& to, const AuctionMessage& msg) {
    const std::size_t seq = trace_.messages_sent++;
    if (opt_.record_messages) trace_.messages.push_back({seq, from, to, msg});
    if (std::holds_alternative<BidMessage>(msg)) {
      if (static_cast<double>(++trace_.bids) > trace_.bid_bound)
        throw InvariantViolation("bid count " + std::to_string(trace_.bids) + " exceeds the termination bound " +
                                 std::to_string(trace_.bid_bound));
    }
    // DL users are passive receivers of M4; nothing to deliver.
    if (to.kind == Endpoint::Kind::Dl) return;
    inbox_[slot_of(to)].push_back({seq, from, msg});
  }

  std::optional<std::size_t> next_slot() {
    const std::size_t slots = inbox_.size();
    switch (opt_.order) {
      case DeliveryOrder::RoundRobin:
        for (std::size_t k = 0; k < slots; ++k) {
          const std::size_t s = (cursor_ + k) % slots;
          if (!inbox_[s].empty()) {
            cursor_ = (s + 1) % slots;
            return s;
          }
        }
        return std::nullopt;
      case DeliveryOrder::GlobalFifo: {
        std::optional<std::size_t> best;
        for (std::size_t s = 0; s < slots; ++s)
          if (!inbox_[s].empty() && (!best || inbox_[s].front().seq < inbox_[*best].front().seq)) best = s;
        return best;
      }
      case DeliveryOrder::Random: {
        std::vector<std::size_t> ready;
        for (std::size_t s = 0; s < slots; ++s)
          if (!inbox_[s].empty()) ready.push_back(s);
        if (ready.empty()) return std::nullopt;
        return ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng_)];
      }
      case DeliveryOrder::HighestFirst:
        for (std::size_t k = n_; k-- > 0;)
          if (!inbox_[k].empty()) return k;
        if (!inbox_[n_].empty()) return n_;
        return std::nullopt;
    }
    return std::nullopt;
  }

  void deliver(std::size_t slot) {
    Queued q = std::move(inbox_[slot].front());
    inbox_[slot].pop_front();
    if (slot == n_) {
      const auto* bid = std::get_if<BidMessage>(&q.msg);
      if (!bid) throw ProtocolError(std::string("BS received a non-bid message ") + message_type(q.msg));
      if (q.from != Endpoint::ul(bid->ul)) throw ProtocolError("bid sender does not match its UL index");
      const auto before = bs_.prices;
      auto r = bs_assign_step(std::move(bs_), *bid, solutions_, opt_.fault);
      bs_ = std::move(r.state);
      for (std::size_t j = 0; j < n_; ++j)
        if (bs_.prices[j] < before[j]) throw InvariantViolation("BS price decreased");
      if (r.accepted) {
        ++trace_.accepted_per_dl[bid->dl];
        trace_.price_history.push_back({trace_.messages_sent, bid->dl, bs_.prices[bid->dl]});
      }
      for (auto& o : r.out) send(Endpoint::bs(), o.to, o.msg);
      return;
    }
    auto r = ul_receive(std::move(ul_[slot]), q.msg);
    ul_[slot] = std::move(r.state);
    if (r.bid) send(Endpoint::ul(slot), Endpoint::bs(), *r.bid);
  }

  const Matrix<double>& c_;
  const Matrix<PairSolution>* solutions_;
  AuctionOptions opt_;
  std::size_t n_;
  std::mt19937_64 rng_;
  BsAgentState bs_;
  std::vector<UlAgentState> ul_;
  std::vector<std::deque<Queued>> inbox_;
  std::size_t cursor_ = 0;
  AuctionTrace trace_;
};

}  // namespace detail

/// Runs the auction on bare benefits. Throws InvariantViolation if the bid
/// count exceeds auction_bid_bound.
inline AuctionResult run_auction(const Matrix<double>& c, const AuctionOptions& options) {
  if (c.rows() != c.cols()) throw std::invalid_argument("run_auction: benefit matrix must be square");
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("run_auction: epsilon must be > 0");
  if (c.rows() == 0) return {};
  return detail::AuctionRun(c, nullptr, options).run();
}

/// Runs the auction on a benefit matrix; M4 messages and the assignment carry
/// the per-pair powers.
inline AuctionResult run_auction(const BenefitMatrix& bm, const AuctionOptions& options) {
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("run_auction: epsilon must be > 0");
  if (bm.n == 0) return {};
  return detail::AuctionRun(bm.c, &bm.solutions, options).run();
}

// ---------------------------------------------------------------------------
// Trace serialization: one JSON object per line.

inline nlohmann::json message_payload(const AuctionMessage& m) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BidMessage>) return {{"ul", v.ul}, {"dl", v.dl}, {"bid", v.bid}};
        else if constexpr (std::is_same_v<T, M1Message>) return {{"ul", v.ul}};
        else if constexpr (std::is_same_v<T, M2Message>) return {{"ul", v.ul}, {"dl", v.dl}, {"price", v.price}};
        else if constexpr (std::is_same_v<T, M3Message>) return nlohmann::json::object();
        else return {{"ul", v.ul}, {"dl", v.dl}, {"p_ul", v.p_ul}, {"p_dl", v.p_dl}};
      },
      m);
}

inline void write_trace_jsonl(std::ostream& out, const AuctionTrace& trace) {
  for (const auto& r : trace.messages) {
    nlohmann::json line{{"step", r.step},
                        {"from", r.from.to_string()},
                        {"to", r.to.to_string()},
                        {"type", message_type(r.msg)},
                        {"payload", message_payload(r.msg)}};
    out << line.dump() << '\n';
  }
}

}  // namespace fdpair

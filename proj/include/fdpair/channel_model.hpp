#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdpair/matrix.hpp"
#include "fdpair/rng.hpp"
#include "fdpair/units.hpp"

namespace fdpair {

enum class WeightMode { SumRate, PathLossCompensation };

/// Power level used by the random-pairing baseline.
enum class EqualPowerLevel { Max, Half };

/// Scenario parameters. Defaults are the full-load urban-micro setup:
/// 100 m cell, 25 UL/DL users on 25 channels, 24 dBm caps, 0 dB targets.
struct ScenarioConfig {
  double cell_radius = 100.0;      // m
  std::size_t num_ul = 25;
  std::size_t num_dl = 25;
  std::size_t num_channels = 25;
  double noise_power = -116.4;     // dBm per channel
  double si_cancellation = -110.0; // dB
  double p_max_ul = 24.0;          // dBm
  double p_max_dl = 24.0;          // dBm
  double sinr_target_ul = 0.0;     // dB
  double sinr_target_dl = 0.0;     // dB
  WeightMode weight_mode = WeightMode::PathLossCompensation;
  double epsilon = 0.1;
  std::size_t drops = 400;
  std::uint64_t seed = 1;
  double los_shadow_std = 3.0;     // dB
  double nlos_shadow_std = 4.0;    // dB
  bool force_nlos = false;
  EqualPowerLevel repa_power = EqualPowerLevel::Max;

  std::size_t num_pairs() const { return num_ul; }

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid scenario: " + what); };
    if (!(cell_radius > 0.0)) fail("cell_radius must be > 0");
    if (num_ul == 0 || num_dl == 0) fail("num_ul and num_dl must be > 0");
    if (num_ul != num_dl) fail("num_ul must equal num_dl");
    if (num_ul > num_channels) fail("num_ul must not exceed num_channels");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (drops == 0) fail("drops must be > 0");
    if (!(los_shadow_std >= 0.0) || !(nlos_shadow_std >= 0.0)) fail("shadowing std must be >= 0");
    if (!(si_cancellation <= 0.0)) fail("si_cancellation must be <= 0 dB");
    for (double v : {noise_power, p_max_ul, p_max_dl, sinr_target_ul, sinr_target_dl})
      if (!std::isfinite(v)) fail("power levels and targets must be finite");
  }
};

/// One channel realization with everything in linear units.
struct NetworkInstance {
  std::vector<double> g_ul;   // G_ib, UL user -> BS
  std::vector<double> g_dl;   // G_bj, BS -> DL user
  Matrix<double> g_cross;     // G_ij, UL user i -> DL user j
  double sigma2 = 0.0;        // W
  double beta = 0.0;          // residual SI fraction
  std::vector<double> alpha_ul;
  std::vector<double> alpha_dl;
  double p_max_ul = 0.0;      // W
  double p_max_dl = 0.0;      // W
  double sinr_th_ul = 0.0;
  double sinr_th_dl = 0.0;

  std::size_t num_ul() const { return g_ul.size(); }
  std::size_t num_dl() const { return g_dl.size(); }

  bool operator==(const NetworkInstance&) const = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
  bool operator==(const Position&) const = default;
};

inline constexpr double kMinLinkDistance = 3.0;  // m

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Uniform placement in the disk around the BS at the origin. Returns the
/// num_ul uplink users followed by the num_dl downlink users; radii below
/// kMinLinkDistance are pushed out to it.
inline std::vector<Position> place_users(const ScenarioConfig& config, Rng& rng) {
  if (!(config.cell_radius > 0.0)) throw std::invalid_argument("place_users: cell_radius must be > 0");
  const std::size_t total = config.num_ul + config.num_dl;
  std::vector<Position> out;
  out.reserve(total);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < total; ++k) {
    const double u = unit(rng);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const double r = std::clamp(config.cell_radius * std::sqrt(u), kMinLinkDistance, config.cell_radius);
    out.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return out;
}

/// Path gain in dB (negative path loss) for the urban-micro LOS/NLOS models.
inline double path_gain_db(double distance_m, bool los) {
  if (!(distance_m > 0.0)) throw std::domain_error("path_gain_db: distance must be > 0");
  const double lg = std::log10(distance_m);
  return los ? -(34.96 + 22.7 * lg) : -(33.36 + 38.35 * lg);
}

/// UMi line-of-sight probability: min(18/d, 1)(1 - e^{-d/36}) + e^{-d/36}.
inline double los_probability(double distance_m) {
  const double e = std::exp(-distance_m / 36.0);
  return std::min(18.0 / distance_m, 1.0) * (1.0 - e) + e;
}

namespace detail {

inline double draw_link_gain(const ScenarioConfig& config, double d, Rng& rng) {
  d = std::max(d, kMinLinkDistance);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double los_draw = unit(rng);
  const bool los = !config.force_nlos && los_draw < los_probability(d);
  const double stddev = los ? config.los_shadow_std : config.nlos_shadow_std;
  double shadow = 0.0;
  if (stddev > 0.0) shadow = std::normal_distribution<double>(0.0, stddev)(rng);
  return db_to_linear(path_gain_db(d, los) + shadow);
}

}  // namespace detail

/// Draws LOS state and shadowing for every link and converts the scenario
/// to linear units. Link order is fixed (UL, DL, then cross links row by row)
/// so a given RNG state always produces the same instance.
inline NetworkInstance build_instance(const ScenarioConfig& config, const std::vector<Position>& positions, Rng& rng) {
  const std::size_t n_ul = config.num_ul;
  const std::size_t n_dl = config.num_dl;
  if (positions.size() != n_ul + n_dl) throw std::invalid_argument("build_instance: position count mismatch");

  const Position bs{};
  NetworkInstance inst;
  inst.g_ul.resize(n_ul);
  inst.g_dl.resize(n_dl);
  inst.g_cross = Matrix<double>(n_ul, n_dl);
  for (std::size_t i = 0; i < n_ul; ++i) inst.g_ul[i] = detail::draw_link_gain(config, distance(positions[i], bs), rng);
  for (std::size_t j = 0; j < n_dl; ++j)
    inst.g_dl[j] = detail::draw_link_gain(config, distance(positions[n_ul + j], bs), rng);
  for (std::size_t i = 0; i < n_ul; ++i)
    for (std::size_t j = 0; j < n_dl; ++j)
      inst.g_cross(i, j) = detail::draw_link_gain(config, distance(positions[i], positions[n_ul + j]), rng);

  inst.sigma2 = dbm_to_watts(config.noise_power);
  inst.beta = db_to_linear(config.si_cancellation);
  inst.p_max_ul = dbm_to_watts(config.p_max_ul);
  inst.p_max_dl = dbm_to_watts(config.p_max_dl);
  inst.sinr_th_ul = db_to_linear(config.sinr_target_ul);
  inst.sinr_th_dl = db_to_linear(config.sinr_target_dl);

  inst.alpha_ul.assign(n_ul, 1.0);
  inst.alpha_dl.assign(n_dl, 1.0);
  if (config.weight_mode == WeightMode::PathLossCompensation) {
    for (std::size_t i = 0; i < n_ul; ++i) inst.alpha_ul[i] = 1.0 / inst.g_ul[i];
    for (std::size_t j = 0; j < n_dl; ++j) inst.alpha_dl[j] = 1.0 / inst.g_dl[j];
  }
  return inst;
}

/// Geometry and channel draw for one Monte Carlo drop.
inline NetworkInstance generate_instance(const ScenarioConfig& config, std::uint64_t drop_index) {
  Rng rng = make_stream(config.seed, drop_index, StreamPurpose::Geometry);
  const auto positions = place_users(config, rng);
  return build_instance(config, positions, rng);
}

}  // namespace fdpair

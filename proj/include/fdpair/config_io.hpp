#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fdpair/channel_model.hpp"

namespace fdpair {

/// Raised for a key that is not a ScenarioConfig field.
class UnknownKeyError : public std::invalid_argument {
 public:
  explicit UnknownKeyError(const std::string& key)
      : std::invalid_argument("unknown config key '" + key + "'"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] inline void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("bad value '" + std::string(value) + "' for config key '" + std::string(key) + "'");
}

inline double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view value) {
  Int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

}  // namespace detail

inline std::string to_string(WeightMode mode) {
  return mode == WeightMode::SumRate ? "sum_rate" : "path_loss_compensation";
}

inline std::string to_string(EqualPowerLevel level) { return level == EqualPowerLevel::Max ? "max" : "half"; }

/// Names accepted by apply_setting, in the order they are written out.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "cell_radius",    "num_ul",         "num_dl",          "num_channels",    "noise_power",
      "si_cancellation", "p_max_ul",      "p_max_dl",        "sinr_target_ul",  "sinr_target_dl",
      "weight_mode",    "epsilon",        "drops",           "seed",            "los_shadow_std",
      "nlos_shadow_std", "force_nlos",    "repa_power"};
  return keys;
}

/// Assigns one field by name. Does not validate cross-field invariants.
inline void apply_setting(ScenarioConfig& c, std::string_view key_in, std::string_view value_in) {
  using namespace detail;
  const std::string_view key = trim(key_in);
  const std::string_view value = trim(value_in);
  if (key == "cell_radius") c.cell_radius = parse_double(key, value);
  else if (key == "num_ul") c.num_ul = parse_integer<std::size_t>(key, value);
  else if (key == "num_dl") c.num_dl = parse_integer<std::size_t>(key, value);
  else if (key == "num_channels") c.num_channels = parse_integer<std::size_t>(key, value);
  else if (key == "noise_power") c.noise_power = parse_double(key, value);
  else if (key == "si_cancellation") c.si_cancellation = parse_double(key, value);
  else if (key == "p_max_ul") c.p_max_ul = parse_double(key, value);
  else if (key == "p_max_dl") c.p_max_dl = parse_double(key, value);
  else if (key == "sinr_target_ul") c.sinr_target_ul = parse_double(key, value);
  else if (key == "sinr_target_dl") c.sinr_target_dl = parse_double(key, value);
  else if (key == "weight_mode") {
    if (value == "sum_rate" || value == "SumRate") c.weight_mode = WeightMode::SumRate;
    else if (value == "path_loss_compensation" || value == "PathLossCompensation")
      c.weight_mode = WeightMode::PathLossCompensation;
    else bad_value(key, value);
  } else if (key == "epsilon") c.epsilon = parse_double(key, value);
  else if (key == "drops") c.drops = parse_integer<std::size_t>(key, value);
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "los_shadow_std") c.los_shadow_std = parse_double(key, value);
  else if (key == "nlos_shadow_std") c.nlos_shadow_std = parse_double(key, value);
  else if (key == "force_nlos") c.force_nlos = parse_bool(key, value);
  else if (key == "repa_power") {
    if (value == "max") c.repa_power = EqualPowerLevel::Max;
    else if (value == "half") c.repa_power = EqualPowerLevel::Half;
    else bad_value(key, value);
  } else throw UnknownKeyError(std::string(key));
}

/// Applies a "key=value" string.
inline void apply_override(ScenarioConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw std::invalid_argument("override '" + std::string(assignment) + "' is not of the form key=value");
  apply_setting(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Reads flat key=value text onto `base`. Blank lines and '#' comments are skipped.
inline ScenarioConfig parse_config(std::istream& in, ScenarioConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(base, view.substr(0, eq), view.substr(eq + 1));
  }
  return base;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

namespace detail {

// Shortest text that parses back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline std::string format_config(const ScenarioConfig& c) {
  using detail::shortest;
  std::ostringstream out;
  out << "cell_radius=" << shortest(c.cell_radius) << '\n'
      << "num_ul=" << c.num_ul << '\n'
      << "num_dl=" << c.num_dl << '\n'
      << "num_channels=" << c.num_channels << '\n'
      << "noise_power=" << shortest(c.noise_power) << '\n'
      << "si_cancellation=" << shortest(c.si_cancellation) << '\n'
      << "p_max_ul=" << shortest(c.p_max_ul) << '\n'
      << "p_max_dl=" << shortest(c.p_max_dl) << '\n'
      << "sinr_target_ul=" << shortest(c.sinr_target_ul) << '\n'
      << "sinr_target_dl=" << shortest(c.sinr_target_dl) << '\n'
      << "weight_mode=" << to_string(c.weight_mode) << '\n'
      << "epsilon=" << shortest(c.epsilon) << '\n'
      << "drops=" << c.drops << '\n'
      << "seed=" << c.seed << '\n'
      << "los_shadow_std=" << shortest(c.los_shadow_std) << '\n'
      << "nlos_shadow_std=" << shortest(c.nlos_shadow_std) << '\n'
      << "force_nlos=" << (c.force_nlos ? "true" : "false") << '\n'
      << "repa_power=" << to_string(c.repa_power) << '\n';
  return out.str();
}

}  // namespace fdpair

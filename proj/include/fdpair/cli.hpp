#pragma once

// Command implementations behind the fdpair tool. Kept in the library so
// every CLI behaviour is callable (and testable) without a process boundary.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fdpair/config_io.hpp"
#include "fdpair/harness.hpp"
#include "fdpair/verify.hpp"

namespace fdpair {

/// Config name that selects the built-in defaults instead of a file.
inline constexpr const char* kBuiltinConfig = "tableI";

struct RunSpec {
  std::string config_path = kBuiltinConfig;
  std::vector<Method> methods;
  std::filesystem::path output_dir = "out";
  bool emit_trace = false;
  std::vector<std::string> overrides;  // key=value, applied in order
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
};

/// Parses a comma-separated method list; throws std::invalid_argument on an
/// unknown or duplicated name.
inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    name = std::string(detail::trim(name));
    if (name.empty()) continue;
    const auto m = parse_method(name);
    if (!m) throw std::invalid_argument("unknown method '" + name + "' (expected eopt, chun, dauc, hd, repa)");
    if (std::find(out.begin(), out.end(), *m) != out.end())
      throw std::invalid_argument("method '" + name + "' listed twice");
    out.push_back(*m);
  }
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

/// Config from file (or built-in) plus overrides and seed, validated.
inline ScenarioConfig resolve_config(const RunSpec& spec) {
  ScenarioConfig config = spec.config_path == kBuiltinConfig ? ScenarioConfig{} : load_config(spec.config_path);
  for (const auto& o : spec.overrides) apply_override(config, o);
  if (spec.seed) config.seed = *spec.seed;
  config.validate();
  return config;
}

/// `run`: Monte Carlo over all drops; writes drops.csv, cdf.csv,
/// cdf_weighted.csv, summary.txt and, with emit_trace, one JSONL auction
/// trace per drop under traces/. Nothing is written unless the inputs are valid.
inline int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  try {
    if (spec.methods.empty()) throw std::invalid_argument("no methods given");
    config = resolve_config(spec);
    if (std::find(spec.methods.begin(), spec.methods.end(), Method::EOpt) != spec.methods.end() &&
        config.num_ul > kExhaustiveLimit)
      throw GuardError("refusing eopt: N = " + std::to_string(config.num_ul) + " exceeds the exhaustive-search guard N <= " +
                       std::to_string(kExhaustiveLimit));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  MonteCarloResult mc;
  try {
    mc = run_monte_carlo(config, spec.methods, {spec.threads});
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  std::error_code ec;
  std::filesystem::create_directories(spec.output_dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << spec.output_dir.string() << "': " << ec.message() << '\n';
    return 1;
  }
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
  };
  try {
    {
      auto f = open(spec.output_dir / "drops.csv");
      write_drops_csv(f, mc);
    }
    {
      auto f = open(spec.output_dir / "cdf.csv");
      write_cdf_csv(f, mc.cdf);
    }
    {
      auto f = open(spec.output_dir / "cdf_weighted.csv");
      write_cdf_csv(f, mc.cdf_weighted);
    }
    std::ostringstream summary;
    write_summary(summary, mc);
    {
      auto f = open(spec.output_dir / "summary.txt");
      f << summary.str();
    }
    {
      auto f = open(spec.output_dir / "config.txt");
      f << format_config(config);
    }
    if (spec.emit_trace && std::find(spec.methods.begin(), spec.methods.end(), Method::DAuc) != spec.methods.end()) {
      const auto dir = spec.output_dir / "traces";
      std::filesystem::create_directories(dir);
      for (std::size_t k = 0; k < config.drops; ++k) {
        DropOptions opt;
        opt.record_trace = true;
        const auto drop = run_drop_detailed(config, k, {Method::DAuc}, opt);
        auto f = open(dir / ("drop_" + std::to_string(k) + ".jsonl"));
        write_trace_jsonl(f, *drop.trace);
      }
    }
    out << summary.str();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

/// `verify`: the built-in property suite. Exit 0 iff every property holds;
/// otherwise each counterexample is printed as one JSON line on `err`.
inline int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err) {
  const VerifyReport report = run_property_suite(options);
  std::size_t max_bids = 0;
  for (auto b : report.bid_counts) max_bids = std::max(max_bids, b);
  out << "instances=" << report.instances << '\n' << "failures=" << report.failures.size() << '\n';
  out << "max_bids=" << max_bids << '\n';
  for (const auto& f : report.failures) {
    nlohmann::json j{{"instance", f.instance}, {"property", f.property}, {"detail", f.detail},
                     {"counterexample", f.counterexample}};
    err << j.dump() << '\n';
  }
  out << (report.passed() ? "verify: PASS" : "verify: FAIL") << '\n';
  return report.passed() ? 0 : 1;
}

}  // namespace fdpair

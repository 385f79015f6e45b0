#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mkfk/config.hpp"
#include "mkfk/core.hpp"
#include "mkfk/csv.hpp"
#include "mkfk/initial_density.hpp"

namespace mkfk {

/// Declarative config: an INI file with sections
///
///   [physical]  lambda c0 phi0 phi1 phi_bar s0
///   [kernel]    bandwidth
///   [grid]      spacing lower upper      (bounds default to +-L, see default_half_width)
///   [time]      horizon step
///   [particles] count mode field_mode
///   [run]       seed
///   [initial]   family center width table normalize
///
/// Keys are addressed as "section.key". Absent keys keep SimConfig defaults.
using ConfigTree = boost::property_tree::ptree;

/// Every key understood by config_from_tree, in file order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "physical.lambda", "physical.c0",      "physical.phi0",       "physical.phi1",    "physical.phi_bar",
      "physical.s0",     "kernel.bandwidth", "grid.spacing",        "grid.lower",       "grid.upper",
      "time.horizon",    "time.step",        "particles.count",     "particles.mode",   "particles.field_mode",
      "run.seed",        "initial.family",   "initial.center",      "initial.width",    "initial.table",
      "initial.normalize"};
  return keys;
}

inline ConfigTree read_config_tree(const std::string& path) {
  ConfigTree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    for (const auto& [key, _] : body) {
      const std::string full = section + "." + key;
      bool known = false;
      for (const auto& k : config_keys()) known = known || k == full;
      if (!known) throw ConfigError("unknown config key '" + full + "' in " + path);
    }
  }
  return tree;
}

namespace detail {

inline double tree_double(const ConfigTree& t, const std::string& key, double fallback) {
  const auto v = t.get_optional<std::string>(ConfigTree::path_type(key, '.'));
  if (!v) return fallback;
  try {
    return csv::parse(*v);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: '" + *v + "'");
  }
}

inline std::optional<std::string> tree_string(const ConfigTree& t, const std::string& key) {
  auto v = t.get_optional<std::string>(ConfigTree::path_type(key, '.'));
  if (!v) return std::nullopt;
  return *v;
}

inline std::uint64_t tree_u64(const ConfigTree& t, const std::string& key, std::uint64_t fallback) {
  const auto v = tree_string(t, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a non-negative integer: '" + *v + "'");
  }
}

inline bool tree_bool(const ConfigTree& t, const std::string& key, bool fallback) {
  const auto v = tree_string(t, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key " + key + " is not a boolean: '" + *v + "'");
}

}  // namespace detail

/// Reads an x,density table for the tabulated initial family.
inline void load_initial_table(InitialDensitySpec& spec, const std::string& path) {
  csv::Table t;
  try {
    t = csv::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read initial density table: " + std::string(e.what()));
  }
  spec.table_x = t.column("x");
  spec.table_density = t.column("density");
  spec.table_path = path;
}

/// Builds a SimConfig from a tree. Relative table paths resolve against
/// `base_dir`. When grid bounds are absent they default to +-L with L from
/// default_half_width. The result is not validated.
inline SimConfig config_from_tree(const ConfigTree& t, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  SimConfig c;
  auto& p = c.physical;
  p.lambda = tree_double(t, "physical.lambda", p.lambda);
  p.c0 = tree_double(t, "physical.c0", p.c0);
  p.phi0 = tree_double(t, "physical.phi0", p.phi0);
  p.phi1 = tree_double(t, "physical.phi1", p.phi1);
  p.phi_bar = tree_double(t, "physical.phi_bar", p.phi_bar);
  p.s0 = tree_double(t, "physical.s0", p.s0);
  c.kernel.bandwidth = tree_double(t, "kernel.bandwidth", c.kernel.bandwidth);
  c.horizon = tree_double(t, "time.horizon", c.horizon);
  c.step = tree_double(t, "time.step", c.step);
  c.particles = tree_u64(t, "particles.count", c.particles);
  if (auto m = tree_string(t, "particles.mode")) c.mode = parse_mode(*m);
  if (auto m = tree_string(t, "particles.field_mode")) c.field_mode = parse_field_mode(*m);
  c.seed = tree_u64(t, "run.seed", c.seed);

  auto& init = c.initial;
  if (auto f = tree_string(t, "initial.family")) init.family = parse_initial_family(*f);
  init.center = tree_double(t, "initial.center", init.center);
  init.width = tree_double(t, "initial.width", init.width);
  init.normalize = tree_bool(t, "initial.normalize", init.normalize);
  if (auto path = tree_string(t, "initial.table")) {
    std::filesystem::path tp(*path);
    if (tp.is_relative() && !base_dir.empty()) tp = base_dir / tp;
    load_initial_table(init, std::filesystem::absolute(tp).lexically_normal().string());
  } else if (init.family == InitialFamily::tabulated) {
    throw ConfigError("initial.family = tabulated needs initial.table");
  }

  const double h = tree_double(t, "grid.spacing", c.grid.spacing);
  if (!(h > 0.0)) throw ConfigError("grid spacing must be > 0");
  const auto lower = t.get_optional<std::string>("grid.lower");
  const auto upper = t.get_optional<std::string>("grid.upper");
  if (lower || upper) {
    if (!lower || !upper) throw ConfigError("grid.lower and grid.upper must be given together");
    c.grid = make_grid(tree_double(t, "grid.lower", 0.0), tree_double(t, "grid.upper", 0.0), h);
  } else {
    const double bw = c.kernel.bandwidth > 0.0 ? c.kernel.bandwidth : 0.0;
    c.grid = make_symmetric_grid(default_half_width(std::max(c.horizon, 0.0), init, bw, h), h);
  }
  return c;
}

inline SimConfig load_config_file(const std::string& path) {
  const auto tree = read_config_tree(path);
  return config_from_tree(tree, std::filesystem::path(path).parent_path());
}

/// INI text for a config with every field materialized (round-trips through
/// config_from_tree).
inline std::string config_to_ini(const SimConfig& c) {
  using csv::format;
  std::ostringstream o;
  const auto& p = c.physical;
  o << "[physical]\n"
    << "lambda = " << format(p.lambda) << "\n"
    << "c0 = " << format(p.c0) << "\n"
    << "phi0 = " << format(p.phi0) << "\n"
    << "phi1 = " << format(p.phi1) << "\n"
    << "phi_bar = " << format(p.phi_bar) << "\n"
    << "s0 = " << format(p.s0) << "\n\n"
    << "[kernel]\n"
    << "bandwidth = " << format(c.kernel.bandwidth) << "\n\n"
    << "[grid]\n"
    << "spacing = " << format(c.grid.spacing) << "\n"
    << "lower = " << format(c.grid.lower) << "\n"
    << "upper = " << format(c.grid.upper()) << "\n\n"
    << "[time]\n"
    << "horizon = " << format(c.horizon) << "\n"
    << "step = " << format(c.step) << "\n\n"
    << "[particles]\n"
    << "count = " << c.particles << "\n"
    << "mode = " << to_string(c.mode) << "\n"
    << "field_mode = " << to_string(c.field_mode) << "\n\n"
    << "[run]\n"
    << "seed = " << c.seed << "\n\n"
    << "[initial]\n"
    << "family = " << to_string(c.initial.family) << "\n"
    << "center = " << format(c.initial.center) << "\n"
    << "width = " << format(c.initial.width) << "\n"
    << "normalize = " << (c.initial.normalize ? "true" : "false") << "\n";
  if (c.initial.family == InitialFamily::tabulated) o << "table = " << c.initial.table_path << "\n";
  return o.str();
}

}  // namespace mkfk

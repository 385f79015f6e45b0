// mkfk: command-line front end for the particle engines, the reference
// solver and the analysis harness.
//
// Exit codes: 0 ok, 2 configuration or usage, 3 numerical abort, 4 data
// (missing inputs, mismatched grids, unreadable files).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "mkfk/mkfk.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_data = 4 };

/// Missing or malformed input data (exit 4).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config flags

/// --config plus one flag per config key; flags win over the file.
class ConfigFlags {
 public:
  void attach(CLI::App* app, bool seed_required) {
    app->add_option("--config", path_, "INI config file")->check(CLI::ExistingFile);
    for (const auto& key : mkfk::config_keys()) {
      auto& slot = values_[key];
      const std::string name = "--" + flag_name(key);
      auto* opt = app->add_option(name, slot, "overrides " + key);
      if (key == "run.seed" && seed_required) opt->required();
      options_.emplace_back(key, opt);
    }
  }

  mkfk::SimConfig resolve() const {
    mkfk::ConfigTree tree;
    fs::path base;
    if (!path_.empty()) {
      tree = mkfk::read_config_tree(path_);
      base = fs::path(path_).parent_path();
    }
    for (const auto& [key, opt] : options_)
      if (opt->count() > 0) tree.put(mkfk::ConfigTree::path_type(key, '.'), values_.at(key));
    auto c = mkfk::config_from_tree(tree, base);
    mkfk::validate_config(c);
    return c;
  }

  static std::string flag_name(const std::string& key) {
    static const std::map<std::string, std::string> special{{"particles.count", "particles"},
                                                             {"initial.family", "initial"}};
    if (auto it = special.find(key); it != special.end()) return it->second;
    std::string name = key.substr(key.find('.') + 1);
    for (char& ch : name)
      if (ch == '_') ch = '-';
    return name;
  }

 private:
  std::string path_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
};

// ---------------------------------------------------------------- output helpers

fs::path output_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MKFK_OUT_DIR"); env && *env) return env;
  return fallback;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects emitted files and writes manifest.json listing each with its
/// SHA-256 checksum.
class Manifest {
 public:
  Manifest(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    fs::create_directories(dir_);
  }

  fs::path path(const std::string& rel) const { return dir_ / rel; }

  void add(const std::string& rel) { files_.push_back(rel); }

  void write_csv(const std::string& rel, const mkfk::csv::Table& t) {
    fs::create_directories(path(rel).parent_path());
    mkfk::csv::write_file(path(rel).string(), t);
    add(rel);
  }

  void write_text(const std::string& rel, const std::string& text) {
    std::ofstream out(path(rel), std::ios::binary);
    if (!out) throw DataError("cannot write " + path(rel).string());
    out << text;
    add(rel);
  }

  void set_config(const mkfk::SimConfig& c) {
    config_ini_ = mkfk::config_to_ini(c);
    write_text("config.ini", config_ini_);
  }

  json& extra() { return extra_; }

  void finish() const {
    json m;
    m["artifact"] = "mkfk";
    m["version"] = MKFK_VERSION;
    m["command"] = command_;
    m["timestamp"] = utc_timestamp();
    if (!config_ini_.empty()) {
      m["config_file"] = "config.ini";
      m["config"] = config_ini_;
    }
    json outputs = json::array();
    for (const auto& rel : files_)
      outputs.push_back({{"path", rel}, {"sha256", sha256_file(path(rel))}, {"bytes", fs::file_size(path(rel))}});
    m["outputs"] = outputs;
    if (!extra_.empty()) m["summary"] = extra_;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string config_ini_;
  std::vector<std::string> files_;
  json extra_ = json::object();
};

std::string step_name(const std::string& prefix, std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", step);
  return prefix + buf + ".csv";
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  ConfigFlags config;
  std::string out;
  std::size_t stride = 100;
  std::size_t field_stride = 0;
  bool archive = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto config = a.config.resolve();
  mkfk::RunOptions opt;
  opt.snapshot_stride = a.stride;
  opt.keep_archive = a.archive;
  opt.field_stride = a.field_stride;
  const auto run = mkfk::run_simulation(config, opt);

  Manifest m(output_dir(a.out, "mkfk-out"), "simulate");
  m.set_config(config);
  for (std::size_t r = 0; r < run.densities.size(); ++r)
    m.write_csv(step_name("snapshots/snap_", run.recorded_steps[r]), mkfk::csv::density_table(run.densities[r]));
  m.write_csv("run.csv", {{"t", "mass", "alive_fraction_or_mean_weight", "escaped_mass"},
                          {run.times, run.grid_mass, run.estimator_mass, run.escaped_mass}});
  for (const auto& f : run.field_history) m.write_csv(step_name("fields/fields_", f.steps), mkfk::fields_table(f));
  if (run.archive) {
    mkfk::write_archive_file(m.path("archive.bin").string(), *run.archive);
    m.add("archive.bin");
  }
  m.extra() = {{"final_mass", run.grid_mass.back()},
               {"final_alive_fraction_or_mean_weight", run.estimator_mass.back()},
               {"out_of_domain_lookups", run.diagnostics.out_of_domain_lookups},
               {"clamped_exposures", run.diagnostics.clamped_exposures}};
  m.finish();

  std::cout << "simulate: mode " << mkfk::to_string(config.mode) << ", N " << config.particles << ", "
            << mkfk::step_count(config) << " steps, " << run.densities.size() << " snapshots\n"
            << "final t " << run.times.back() << ": mass " << run.grid_mass.back()
            << ", alive_fraction_or_mean_weight " << run.estimator_mass.back() << ", escaped "
            << run.escaped_mass.back() << "\n";
  if (run.diagnostics.out_of_domain_lookups > 0)
    std::cerr << "warning: " << run.diagnostics.out_of_domain_lookups
              << " field lookups fell outside the grid (boundary values used)\n";
  return exit_ok;
}

// ---------------------------------------------------------------- pde

struct PdeArgs {
  ConfigFlags config;
  std::string out;
  std::size_t stride = 100;
};

int cmd_pde(const PdeArgs& a) {
  const auto config = a.config.resolve();
  const auto sol = mkfk::solve_pde(config, a.stride);

  Manifest m(output_dir(a.out, "mkfk-pde"), "pde");
  m.set_config(config);
  for (std::size_t r = 0; r < sol.densities.size(); ++r) {
    const std::size_t k = sol.recorded_steps[r];
    m.write_csv(step_name("snapshots/snap_", k), mkfk::csv::density_table(sol.densities[r]));
    m.write_csv(step_name("mollified/snap_", k), mkfk::csv::density_table(sol.mollified[r]));
    m.write_csv(step_name("calcite/calcite_", k),
                {{"x", "calcite"}, {sol.calcite[r].grid.nodes(), sol.calcite[r].values}});
  }
  m.write_csv("run.csv", {{"t", "mass"}, {sol.times, sol.mass}});

  mkfk::csv::Table balance{{"step", "mass_before", "mass_after", "reaction_sink", "boundary_outflow",
                            "clamped_mass", "residual"},
                           std::vector<std::vector<double>>(7)};
  double worst = 0.0;
  for (std::size_t k = 0; k < sol.reports.size(); ++k) {
    const auto& r = sol.reports[k];
    const double row[] = {static_cast<double>(k), r.mass_before, r.mass_after, r.reaction_sink,
                          r.boundary_outflow, r.clamped_mass, r.residual};
    for (std::size_t c = 0; c < 7; ++c) balance.columns[c].push_back(row[c]);
    worst = std::max(worst, std::abs(r.residual));
  }
  m.write_csv("mass_balance.csv", balance);
  m.extra() = {{"final_mass", sol.mass.back()},
               {"max_abs_residual", worst},
               {"clamped_nodes", sol.final_state.clamped_nodes}};
  m.finish();

  std::cout << "pde: " << config.grid.count << " nodes, h " << config.grid.spacing << ", dt " << config.step
            << ", " << sol.reports.size() << " steps\n"
            << "final mass " << sol.mass.back() << ", max |mass residual| " << worst << ", clamped nodes "
            << sol.final_state.clamped_nodes << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  ConfigFlags config;
  std::string a, b, out;
  std::size_t stride = 100;
};

/// snap_*.csv files of a run directory (or of its snapshots/ subdirectory),
/// keyed by file name.
std::map<std::string, fs::path> snapshot_files(const fs::path& dir) {
  fs::path d = dir;
  if (fs::is_directory(dir / "snapshots")) d = dir / "snapshots";
  if (!fs::is_directory(d)) throw DataError("not a directory: " + dir.string());
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(d)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("snap_", 0) == 0 && entry.path().extension() == ".csv") files[name] = entry.path();
  }
  if (files.empty()) throw DataError("no snap_*.csv files in " + d.string());
  return files;
}

std::size_t step_of(const std::string& name) { return std::stoul(name.substr(5, name.size() - 9)); }

void print_comparison(const mkfk::ComparisonReport& r) {
  double l1 = 0.0, sup = 0.0;
  for (std::size_t k = 0; k < r.l1.size(); ++k) {
    l1 = std::max(l1, r.l1[k]);
    sup = std::max(sup, r.sup[k]);
  }
  std::cout << "compared " << r.l1.size() << " snapshots; max L1 " << l1 << ", max sup " << sup << "; final L1 "
            << r.l1.back() << ", L2 " << r.l2.back() << ", sup " << r.sup.back() << "\n";
}

int cmd_compare(const CompareArgs& a, bool dirs_given, bool config_given) {
  if (dirs_given) {
    if (a.a.empty() || a.b.empty()) throw mkfk::ConfigError("compare needs both --a and --b");
    const auto fa = snapshot_files(a.a);
    const auto fb = snapshot_files(a.b);
    std::vector<std::string> missing;
    for (const auto& [name, _] : fa)
      if (!fb.count(name)) missing.push_back(a.b + ": " + name);
    for (const auto& [name, _] : fb)
      if (!fa.count(name)) missing.push_back(a.a + ": " + name);
    if (!missing.empty()) {
      std::string msg = "snapshot sets differ; missing:";
      for (const auto& s : missing) msg += "\n  " + s;
      throw DataError(msg);
    }
    std::vector<double> steps;
    std::vector<mkfk::DensityField> da, db;
    for (const auto& [name, path] : fa) {
      steps.push_back(static_cast<double>(step_of(name)));
      da.push_back(mkfk::csv::density_from_table(mkfk::csv::read_file(path.string())));
      db.push_back(mkfk::csv::density_from_table(mkfk::csv::read_file(fb.at(name).string())));
    }
    const auto r = mkfk::compare_series(steps, da, db);
    Manifest m(output_dir(a.out, "mkfk-compare"), "compare");
    m.write_csv("comparison.csv",
                {{"step", "l1", "l2", "sup", "mass_a", "mass_b"}, {r.times, r.l1, r.l2, r.sup, r.mass_a, r.mass_b}});
    m.finish();
    print_comparison(r);
    return exit_ok;
  }
  if (!config_given) throw mkfk::ConfigError("compare needs --a/--b snapshot directories or a config with --seed");

  // Regenerate both sides: the estimator run and the reference solve.
  const auto config = a.config.resolve();
  mkfk::RunOptions opt;
  opt.snapshot_stride = a.stride;
  const auto run = mkfk::run_simulation(config, opt);
  const auto sol = mkfk::solve_pde(config, a.stride);
  const auto r = mkfk::compare_series(run.times, run.densities, sol.mollified);
  const auto total = mkfk::compare_series(run.times, run.densities, sol.densities);

  Manifest m(output_dir(a.out, "mkfk-compare"), "compare");
  m.set_config(config);
  m.write_csv("comparison.csv", {{"t", "l1", "l2", "sup", "mass_a", "mass_b", "total_l1", "total_l2", "total_sup"},
                                 {r.times, r.l1, r.l2, r.sup, r.mass_a, r.mass_b, total.l1, total.l2, total.sup}});
  m.finish();
  std::cout << "estimator (" << mkfk::to_string(config.mode) << ") vs K*v: ";
  print_comparison(r);
  std::cout << "total error vs raw v: final L1 " << total.l1.back() << ", sup " << total.sup.back() << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------- convergence

struct ConvergenceArgs {
  ConfigFlags config;
  std::string out;
  std::vector<std::size_t> ns{250, 1000, 4000};
  std::size_t seeds = 8;
};

int cmd_convergence(const ConvergenceArgs& a) {
  const auto config = a.config.resolve();
  const auto table = mkfk::convergence_study(config, a.ns, a.seeds);

  Manifest m(output_dir(a.out, "mkfk-convergence"), "convergence");
  m.set_config(config);
  mkfk::csv::Table summary{{"N", "fk_mean_l1", "fk_stderr", "kill_mean_l1", "kill_stderr"},
                           std::vector<std::vector<double>>(5)};
  mkfk::csv::Table runs{{"N", "seed", "fk_l1", "kill_l1"}, std::vector<std::vector<double>>(4)};
  for (const auto& row : table.rows) {
    const double vals[] = {static_cast<double>(row.particles), row.fk.mean, row.fk.stderr_, row.killed.mean,
                           row.killed.stderr_};
    for (std::size_t c = 0; c < 5; ++c) summary.columns[c].push_back(vals[c]);
    for (std::size_t j = 0; j < row.fk_errors.size(); ++j) {
      const double r[] = {static_cast<double>(row.particles), static_cast<double>(config.seed + j), row.fk_errors[j],
                          row.killed_errors[j]};
      for (std::size_t c = 0; c < 4; ++c) runs.columns[c].push_back(r[c]);
    }
  }
  m.write_csv("convergence.csv", summary);
  m.write_csv("convergence_runs.csv", runs);
  m.finish();

  std::cout << "final-time L1 distance to K*v, " << a.seeds << " seeds per N\n";
  std::cout << std::setw(8) << "N" << std::setw(14) << "fk mean" << std::setw(12) << "fk se" << std::setw(14)
            << "kill mean" << std::setw(12) << "kill se" << "\n";
  std::vector<mkfk::MeanStderr> fk, kill;
  for (const auto& row : table.rows) {
    std::cout << std::setw(8) << row.particles << std::setw(14) << row.fk.mean << std::setw(12) << row.fk.stderr_
              << std::setw(14) << row.killed.mean << std::setw(12) << row.killed.stderr_ << "\n";
    fk.push_back(row.fk);
    kill.push_back(row.killed);
  }
  std::cout << "non-increasing within 2 s.e.: fk " << (mkfk::non_increasing_within_2se(fk) ? "yes" : "no")
            << ", kill " << (mkfk::non_increasing_within_2se(kill) ? "yes" : "no") << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------- fixedpoint

struct FixedPointArgs {
  ConfigFlags config;
  std::string archive, out;
  std::size_t max_iters = 50;
  double tol = 1e-10;
};

int cmd_fixedpoint(const FixedPointArgs& a) {
  const auto config = a.config.resolve();
  mkfk::TrajectoryArchive archive;
  try {
    archive = mkfk::read_archive_file(a.archive);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  const auto r = mkfk::picard_solve(archive, config.grid, config.kernel.bandwidth, config.physical, a.max_iters, a.tol);

  mkfk::csv::Table trace{{"iteration", "sup_distance", "ratio"}, std::vector<std::vector<double>>(3)};
  for (std::size_t k = 0; k < r.distances.size(); ++k) {
    trace.columns[0].push_back(static_cast<double>(k + 1));
    trace.columns[1].push_back(r.distances[k]);
    trace.columns[2].push_back(k == 0 || r.distances[k - 1] == 0.0 ? std::nan("")
                                                                   : r.distances[k] / r.distances[k - 1]);
  }
  Manifest m(output_dir(a.out, "mkfk-fixedpoint"), "fixedpoint");
  m.set_config(config);
  m.write_csv("fixedpoint_trace.csv", trace);
  const auto& u = r.fixed_point;
  m.write_csv("fixedpoint_final.csv",
              mkfk::csv::density_table({u.grid, std::vector<double>(u.row(u.steps).begin(), u.row(u.steps).end())}));
  m.extra() = {{"converged", r.converged}, {"iterations", r.distances.size()}};
  if (r.converged) m.extra()["converged_iteration"] = r.converged_iteration;
  m.finish();

  std::cout << "fixedpoint: " << archive.ensemble_size << " paths, " << archive.steps() << " steps\n";
  for (std::size_t k = 0; k < r.distances.size(); ++k) std::cout << "  d_" << k + 1 << " = " << r.distances[k] << "\n";
  if (r.converged)
    std::cout << "converged after iteration " << r.converged_iteration << " (tol " << a.tol << ")\n";
  else
    std::cout << "not converged within " << a.max_iters << " iterations\n";
  return exit_ok;
}

// ---------------------------------------------------------------- emit-plots

const char* script_header = R"PY(#!/usr/bin/env python3
# Generated by mkfk emit-plots. Reads CSVs relative to this script.
import csv
import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read_csv(rel):
    with open(HERE / rel, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}

)PY";

int cmd_emit_plots(const std::string& dir_flag) {
  const fs::path dir = dir_flag;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::string> absent, emitted;

  auto write_script = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    out << script_header << body;
    emitted.push_back(name);
  };

  std::vector<std::string> frames;
  if (fs::is_directory(dir / "snapshots"))
    for (const auto& e : fs::directory_iterator(dir / "snapshots"))
      if (e.path().filename().string().rfind("snap_", 0) == 0 && e.path().extension() == ".csv")
        frames.push_back("snapshots/" + e.path().filename().string());
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) {
    absent.push_back("snapshots/snap_*.csv");
  } else {
    std::string list;
    for (const auto& f : frames) list += "    \"" + f + "\",\n";
    write_script("plot_density.py", "FRAMES = [\n" + list + R"PY(]

fig, ax = plt.subplots(figsize=(7, 4))
cmap = plt.get_cmap("viridis")
for i, rel in enumerate(FRAMES):
    d = read_csv(rel)
    ax.plot(d["x"], d["density"], color=cmap(i / max(1, len(FRAMES) - 1)), lw=1, label=Path(rel).stem)
ax.set_xlabel("x")
ax.set_ylabel("density")
ax.set_title("density snapshots ({} frames)".format(len(FRAMES)))
if len(FRAMES) <= 12:
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(HERE / "density.png", dpi=150)
)PY");
  }

  if (!fs::exists(dir / "run.csv")) {
    absent.push_back("run.csv");
  } else if (!fs::exists(dir / "config.ini")) {
    absent.push_back("config.ini (needed for the e^{-lambda c0 t} envelope)");
  } else {
    const auto c = mkfk::load_config_file((dir / "config.ini").string());
    write_script("plot_mass.py", "LAMBDA = " + mkfk::csv::format(c.physical.lambda) +
                                     "\nC0 = " + mkfk::csv::format(c.physical.c0) + R"PY(

run = read_csv("run.csv")
t = run["t"]
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(t, run["mass"], label="grid mass")
if "alive_fraction_or_mean_weight" in run:
    ax.plot(t, run["alive_fraction_or_mean_weight"], "--", label="alive fraction / mean weight")
ax.plot(t, [math.exp(-LAMBDA * C0 * s) for s in t], "k:", label="exp(-lambda c0 t)")
ax.set_xlabel("t")
ax.set_ylabel("mass")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "mass.png", dpi=150)
)PY");
  }

  if (!fs::exists(dir / "convergence.csv")) {
    absent.push_back("convergence.csv");
  } else {
    write_script("plot_convergence.py", R"PY(
tab = read_csv("convergence.csv")
n = tab["N"]
fig, ax = plt.subplots(figsize=(6, 4))
ax.errorbar(n, tab["fk_mean_l1"], yerr=tab["fk_stderr"], fmt="o-", label="Feynman-Kac")
ax.errorbar(n, tab["kill_mean_l1"], yerr=tab["kill_stderr"], fmt="s-", label="killed")
ref = tab["fk_mean_l1"][0] * math.sqrt(n[0])
ax.plot(n, [ref / math.sqrt(m) for m in n], "k:", label="N^(-1/2)")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("N")
ax.set_ylabel("final-time L1 error")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "convergence.png", dpi=150)
)PY");
  }

  if (fs::exists(dir / "fixedpoint_trace.csv")) {
    write_script("plot_contraction.py", R"PY(
tr = read_csv("fixedpoint_trace.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(tr["iteration"], [max(d, 1e-300) for d in tr["sup_distance"]], "o-")
ax.set_xlabel("iteration k")
ax.set_ylabel("sup |u_k - u_(k-1)|")
fig.tight_layout()
fig.savefig(HERE / "contraction.png", dpi=150)
)PY");
  }

  if (emitted.empty()) {
    std::string msg = "nothing to plot in " + dir.string() + "; missing:";
    for (const auto& s : absent) msg += "\n  " + s;
    throw DataError(msg);
  }
  for (const auto& s : emitted) std::cout << "wrote " << (dir / s).string() << "\n";
  for (const auto& s : absent) std::cout << "skipped (absent): " << s << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mkfk: particle and reference solvers for a path-dependent McKean PDE with reaction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MKFK_VERSION);
  int workers = 0;
  app.add_option("--workers", workers, "OpenMP worker count (0: runtime default)")->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "run the Feynman-Kac or killed particle system");
  sim.config.attach(c_sim, true);
  c_sim->add_option("--out", sim.out, "output directory (default: $MKFK_OUT_DIR or mkfk-out)");
  c_sim->add_option("--snapshot-stride", sim.stride, "steps between density snapshots")->check(CLI::PositiveNumber);
  c_sim->add_option("--field-stride", sim.field_stride, "steps between A,G field snapshots (0: none)");
  c_sim->add_flag("--archive", sim.archive, "dump full paths to archive.bin for fixedpoint");
  c_sim->add_option("--workers", workers, "OpenMP worker count");

  PdeArgs pde;
  auto* c_pde = app.add_subcommand("pde", "solve the reference PDE by finite differences");
  pde.config.attach(c_pde, false);
  c_pde->add_option("--out", pde.out, "output directory (default: $MKFK_OUT_DIR or mkfk-pde)");
  c_pde->add_option("--snapshot-stride", pde.stride, "steps between snapshots")->check(CLI::PositiveNumber);
  c_pde->add_option("--workers", workers, "OpenMP worker count");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "distances between two snapshot sets, or estimator vs reference");
  cmp.config.attach(c_cmp, false);
  auto* opt_a = c_cmp->add_option("--a", cmp.a, "first snapshot directory");
  auto* opt_b = c_cmp->add_option("--b", cmp.b, "second snapshot directory");
  c_cmp->add_option("--out", cmp.out, "output directory (default: $MKFK_OUT_DIR or mkfk-compare)");
  c_cmp->add_option("--snapshot-stride", cmp.stride, "steps between compared snapshots")->check(CLI::PositiveNumber);
  c_cmp->add_option("--workers", workers, "OpenMP worker count");

  ConvergenceArgs conv;
  auto* c_conv = app.add_subcommand("convergence", "estimator error vs particle count");
  conv.config.attach(c_conv, true);
  c_conv->add_option("--n", conv.ns, "particle counts")->delimiter(',');
  c_conv->add_option("--seeds", conv.seeds, "seeds per particle count")->check(CLI::PositiveNumber);
  c_conv->add_option("--out", conv.out, "output directory (default: $MKFK_OUT_DIR or mkfk-convergence)");
  c_conv->add_option("--workers", workers, "OpenMP worker count");

  FixedPointArgs fp;
  auto* c_fp = app.add_subcommand("fixedpoint", "Picard iteration of the MKFK map on an archive");
  fp.config.attach(c_fp, false);
  c_fp->add_option("--archive", fp.archive, "archive.bin from simulate --archive")->required();
  c_fp->add_option("--max-iters", fp.max_iters, "iteration cap (>= 2)")->check(CLI::Range(2, 1000000));
  c_fp->add_option("--tol", fp.tol, "sup-norm stopping tolerance");
  c_fp->add_option("--out", fp.out, "output directory (default: $MKFK_OUT_DIR or mkfk-fixedpoint)");
  c_fp->add_option("--workers", workers, "OpenMP worker count");

  std::string plot_dir;
  auto* c_plot = app.add_subcommand("emit-plots", "write matplotlib scripts for an output directory");
  c_plot->add_option("dir", plot_dir, "output directory of a previous command")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return exit_config;
  }

  if (workers > 0) mkfk::set_worker_count(workers);

  try {
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_pde->parsed()) return cmd_pde(pde);
    if (c_cmp->parsed()) {
      const bool dirs = opt_a->count() + opt_b->count() > 0;
      const bool seeded = c_cmp->get_option("--seed")->count() > 0;
      return cmd_compare(cmp, dirs, seeded);
    }
    if (c_conv->parsed()) return cmd_convergence(conv);
    if (c_fp->parsed()) return cmd_fixedpoint(fp);
    if (c_plot->parsed()) return cmd_emit_plots(plot_dir);
  } catch (const mkfk::ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return exit_config;
  } catch (const mkfk::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return exit_numerical;
  } catch (const mkfk::GridMismatch& e) {
    std::cerr << "grid mismatch: " << e.what() << "\n";
    return exit_data;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return exit_data;
  }
  return exit_config;
}

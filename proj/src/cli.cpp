#include "hydrolimit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hydrolimit/config.hpp"
#include "hydrolimit/csv.hpp"
#include "hydrolimit/error.hpp"
#include "hydrolimit/harness.hpp"
#include "hydrolimit/manifest.hpp"

#ifndef HYDROLIMIT_VERSION
#define HYDROLIMIT_VERSION "0.0.0"
#endif

namespace hydrolimit {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Context {
  ExperimentConfig config;
  RunOptions options;
  fs::path out_dir;
  std::vector<std::string> written;
  std::vector<std::pair<std::string, double>> stages;
  json summary = json::object();
  bool partial = false;

  void write(const std::string& name, const Table& table) {
    write_csv(table, out_dir / name);
    written.push_back(name);
  }
};

Cell integer(std::size_t v) { return static_cast<std::int64_t>(v); }

double nan_if_missing(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// bin centers of a ring of N sites split into B bins, in macroscopic units
double bin_position(std::size_t bin, std::size_t bins) {
  return (static_cast<double>(bin) + 0.5) / static_cast<double>(bins);
}

void add_profile_rows(Table& table, double t, const Eigen::MatrixXd& a, const Eigen::MatrixXd* b,
                      const std::vector<std::string>& labels) {
  const auto bins = static_cast<std::size_t>(a.cols());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    for (std::size_t j = 0; j < bins; ++j) {
      const auto kk = static_cast<Eigen::Index>(k);
      const auto jj = static_cast<Eigen::Index>(j);
      std::vector<Cell> row{t, integer(j), bin_position(j, bins), labels[k], a(kk, jj)};
      if (b) row.emplace_back((*b)(kk, jj));
      table.add_row(std::move(row));
    }
  }
}

// ---- subcommands ----

void cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.config;
  Table summary{{{"N", ColumnType::integer},
                 {"replicas", ColumnType::integer},
                 {"failures", ColumnType::integer},
                 {"events", ColumnType::integer}},
                {}};
  json sizes = json::array();
  for (const std::size_t n_sites : cfg.sizes) {
    std::vector<std::vector<std::string>> snapshots(cfg.replicas);
    ReplicaHook hook;
    if (cfg.write_configurations) {
      hook = [&](std::size_t r, const Trajectory& traj) {
        for (const auto& c : traj.snapshots) snapshots[r].push_back(c.to_string());
      };
    }
    const Ensemble e = run_ensemble(cfg, n_sites, cfg.checkpoints, ctx.options, hook);
    ctx.stages.emplace_back("N=" + std::to_string(n_sites), e.seconds);
    ctx.partial = ctx.partial || e.failures > 0;
    summary.add_row({integer(n_sites), integer(e.replicas), integer(e.failures),
                     static_cast<std::int64_t>(e.events)});
    if (cfg.write_profiles) {
      Table profiles{{{"t", ColumnType::real},
                      {"bin", ColumnType::integer},
                      {"x", ColumnType::real},
                      {"species", ColumnType::text},
                      {"density", ColumnType::real}},
                     {}};
      for (std::size_t j = 0; j < e.times.size(); ++j) {
        Eigen::MatrixXd binned(e.mean[j].rows(), static_cast<Eigen::Index>(cfg.bins));
        const auto per = static_cast<Eigen::Index>(n_sites / cfg.bins);
        for (Eigen::Index b = 0; b < binned.cols(); ++b) {
          binned.col(b) = e.mean[j].middleCols(b * per, per).rowwise().mean();
        }
        add_profile_rows(profiles, e.times[j], binned, nullptr, cfg.species);
      }
      ctx.write("profiles_N" + std::to_string(n_sites) + ".csv", profiles);
    }
    if (cfg.write_configurations) {
      Table configs{{{"replica", ColumnType::integer},
                     {"t", ColumnType::real},
                     {"configuration", ColumnType::text}},
                    {}};
      for (std::size_t r = 0; r < cfg.replicas; ++r) {
        for (std::size_t j = 0; j < snapshots[r].size(); ++j) {
          configs.add_row({integer(r), cfg.checkpoints[j], snapshots[r][j]});
        }
      }
      ctx.write("configurations_N" + std::to_string(n_sites) + ".csv", configs);
    }
    sizes.push_back({{"N", n_sites}, {"replicas", e.replicas}, {"failures", e.failures},
                     {"events", e.events}});
  }
  ctx.write("simulate.csv", summary);
  ctx.summary["sizes"] = sizes;
}

void cmd_solve_pde(Context& ctx) {
  const auto& cfg = ctx.config;
  const int sign = cfg.drift.automatic ? +1 : cfg.drift.sign;
  const auto start = std::chrono::steady_clock::now();
  const Reference ref = reference_solution(cfg, sign, cfg.checkpoints, cfg.grid_cells, false);
  ctx.stages.emplace_back(
      "pde", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  Table profiles{{{"t", ColumnType::real},
                  {"cell", ColumnType::integer},
                  {"x", ColumnType::real},
                  {"species", ColumnType::text},
                  {"density", ColumnType::real}},
                 {}};
  for (std::size_t j = 0; j < ref.times.size(); ++j) {
    add_profile_rows(profiles, ref.times[j], ref.states[j].density, nullptr, cfg.species);
  }
  if (cfg.write_profiles) ctx.write("pde_profiles.csv", profiles);

  const auto initial = reference_solution(cfg, sign, {0.0}, cfg.grid_cells, false);
  Table summary{{{"M", ColumnType::integer},
                 {"dt", ColumnType::real},
                 {"steps", ColumnType::integer},
                 {"species", ColumnType::text},
                 {"mass_initial", ColumnType::real},
                 {"mass_final", ColumnType::real}},
                {}};
  const auto m0 = initial.states.front().mass();
  const auto m1 = ref.states.back().mass();
  for (std::size_t k = 0; k < cfg.species_count(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    summary.add_row({integer(cfg.grid_cells), ref.dt, integer(ref.steps), cfg.species[k], m0(kk),
                     m1(kk)});
  }
  ctx.write("pde_summary.csv", summary);
  ctx.summary["solver"] = ref.kind;
  ctx.summary["drift_sign"] = sign;
  ctx.summary["dt"] = ref.dt;
  ctx.summary["steps"] = ref.steps;
}

void cmd_converge(Context& ctx) {
  const auto& cfg = ctx.config;
  const ComparisonReport rep = run_convergence_study(cfg, ctx.options);
  for (const auto& s : rep.runtimes) ctx.stages.push_back(s);
  ctx.partial = ctx.partial || rep.failures > 0;

  Table distances{{{"N", ColumnType::integer},
                   {"t", ColumnType::real},
                   {"norm", ColumnType::text},
                   {"distance", ColumnType::real},
                   {"replicas", ColumnType::integer},
                   {"drift_sign", ColumnType::integer}},
                  {}};
  for (const auto& d : rep.distances) {
    distances.add_row({integer(d.sites), d.time, std::string(to_string(d.norm)), d.distance,
                       integer(d.replicas), static_cast<std::int64_t>(d.drift_sign)});
  }
  ctx.write("distances.csv", distances);

  Table dispersion{{{"N", ColumnType::integer},
                    {"t", ColumnType::real},
                    {"replicas", ColumnType::integer},
                    {"failures", ColumnType::integer},
                    {"mean_l1", ColumnType::real},
                    {"std_l1", ColumnType::real}},
                   {}};
  for (const auto& s : rep.sizes) {
    dispersion.add_row({integer(s.sites), rep.checkpoints.back(), integer(s.replicas),
                        integer(s.failures), s.replica_l1_mean, s.replica_l1_std});
  }
  ctx.write("dispersion.csv", dispersion);

  Table overview{{{"drift_sign", ColumnType::integer},
                  {"drift_auto", ColumnType::integer},
                  {"l1_plus", ColumnType::real},
                  {"l1_minus", ColumnType::real},
                  {"slope", ColumnType::real},
                  {"reference", ColumnType::text}},
                 {}};
  const double plus = rep.drift_scores ? rep.drift_scores->first : std::nan("");
  const double minus = rep.drift_scores ? rep.drift_scores->second : std::nan("");
  overview.add_row({static_cast<std::int64_t>(rep.drift_sign),
                    static_cast<std::int64_t>(rep.drift_auto ? 1 : 0), plus, minus,
                    nan_if_missing(rep.slope), rep.reference});
  ctx.write("convergence.csv", overview);

  for (const auto& s : rep.sizes) {
    if (!cfg.write_profiles) break;
    Table profiles{{{"t", ColumnType::real},
                    {"bin", ColumnType::integer},
                    {"x", ColumnType::real},
                    {"species", ColumnType::text},
                    {"empirical", ColumnType::real},
                    {"reference", ColumnType::real}},
                   {}};
    for (std::size_t j = 0; j < rep.checkpoints.size(); ++j) {
      add_profile_rows(profiles, rep.checkpoints[j], s.empirical[j], &s.reference[j], cfg.species);
    }
    ctx.write("profiles_N" + std::to_string(s.sites) + ".csv", profiles);
  }

  json final_l1 = json::object();
  for (const auto& d : rep.distances) {
    if (d.norm == Norm::L1 && d.time == rep.checkpoints.back()) {
      final_l1[std::to_string(d.sites)] = d.distance;
    }
  }
  ctx.summary["reference"] = rep.reference;
  ctx.summary["drift_sign"] = rep.drift_sign;
  ctx.summary["drift_auto"] = rep.drift_auto;
  ctx.summary["l1_final"] = final_l1;
  ctx.summary["slope"] = number_or_null(nan_if_missing(rep.slope));
  ctx.summary["failures"] = rep.failures;
}

void cmd_martingale(Context& ctx) {
  const auto& cfg = ctx.config;
  const MartingaleReport rep = run_martingale_study(cfg, ctx.options);
  for (const auto& s : rep.runtimes) ctx.stages.push_back(s);
  ctx.partial = ctx.partial || rep.failures > 0;
  Table table{{{"N", ColumnType::integer},
               {"replicas", ColumnType::integer},
               {"failures", ColumnType::integer},
               {"mean_U", ColumnType::real},
               {"var_U", ColumnType::real},
               {"stderr_U", ColumnType::real},
               {"max_abs_L", ColumnType::real},
               {"max_NR", ColumnType::real},
               {"max_abs_L_all", ColumnType::real},
               {"max_NR_all", ColumnType::real},
               {"series_order", ColumnType::integer}},
              {}};
  json sizes = json::array();
  for (const auto& s : rep.sizes) {
    table.add_row({integer(s.sites), integer(s.replicas), integer(s.failures), s.mean_U, s.var_U,
                   s.stderr_U, s.max_abs_L, s.max_NR, s.max_abs_L_all, s.max_NR_all,
                   integer(s.series_order)});
    sizes.push_back({{"N", s.sites}, {"mean_U", s.mean_U}, {"stderr_U", s.stderr_U},
                     {"var_U", s.var_U}, {"max_abs_L", s.max_abs_L}, {"max_NR", s.max_NR}});
    if (!cfg.write_profiles || s.first_path.time.empty()) continue;
    Table path{{{"t", ColumnType::real},
                {"Z", ColumnType::real},
                {"theta", ColumnType::real},
                {"L", ColumnType::real},
                {"R", ColumnType::real},
                {"U", ColumnType::real}},
               {}};
    const auto& p = s.first_path;
    for (std::size_t j = 0; j < p.time.size(); ++j) {
      path.add_row({p.time[j], p.Z[j], p.theta[j], p.L[j], p.R[j], p.U[j]});
    }
    ctx.write("martingale_path_N" + std::to_string(s.sites) + ".csv", path);
  }
  ctx.write("martingale.csv", table);
  ctx.summary["step"] = rep.step;
  ctx.summary["sizes"] = sizes;
  ctx.summary["variance_slope"] = number_or_null(nan_if_missing(rep.variance_slope));
  ctx.summary["failures"] = rep.failures;
}

void cmd_residual(Context& ctx) {
  const auto& cfg = ctx.config;
  const ResidualReport rep = run_weak_residual_study(cfg, ctx.options);
  for (const auto& s : rep.runtimes) ctx.stages.push_back(s);
  ctx.partial = ctx.partial || rep.failures > 0;
  Table rows{{{"source", ColumnType::text},
              {"resolution", ColumnType::integer},
              {"function", ColumnType::integer},
              {"residual", ColumnType::real},
              {"drift_sign", ColumnType::integer}},
             {}};
  for (const auto& r : rep.rows) {
    rows.add_row({r.source, integer(r.resolution), integer(r.function), r.residual,
                  static_cast<std::int64_t>(r.drift_sign)});
  }
  ctx.write("residuals.csv", rows);
  Table flags{{{"function", ColumnType::integer},
               {"pde_monotone", ColumnType::integer},
               {"pde_ratio_coarse", ColumnType::real},
               {"pde_ratio_fine", ColumnType::real},
               {"empirical_monotone", ColumnType::integer},
               {"empirical_mean_monotone", ColumnType::integer}},
              {}};
  for (std::size_t f = 0; f < rep.pde_monotone.size(); ++f) {
    flags.add_row({integer(f + 1), static_cast<std::int64_t>(rep.pde_monotone[f]),
                   rep.pde_ratio_coarse[f], rep.pde_ratio_fine[f],
                   static_cast<std::int64_t>(rep.empirical_monotone[f]),
                   static_cast<std::int64_t>(rep.empirical_mean_monotone[f])});
  }
  ctx.write("residual_flags.csv", flags);
  const auto all = [](const std::vector<bool>& v) {
    return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
  };
  ctx.summary["drift_sign"] = rep.drift_sign;
  ctx.summary["pde_monotone"] = all(rep.pde_monotone);
  ctx.summary["empirical_monotone"] = all(rep.empirical_monotone);
  ctx.summary["failures"] = rep.failures;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hydrodynamic-limit lab for multi-species exclusion processes", "hydrolimit"};
  app.set_version_flag("--version", std::string(HYDROLIMIT_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;

  const std::vector<std::pair<std::string, std::function<void(Context&)>>> commands{
      {"simulate", cmd_simulate},     {"solve-pde", cmd_solve_pde},
      {"converge", cmd_converge},     {"martingale", cmd_martingale},
      {"residual", cmd_residual},
  };
  const std::vector<std::string> descriptions{
      "Simulate ensembles and write averaged profiles",
      "Solve the macroscopic equation and write profiles",
      "Compare ensemble profiles with the macroscopic solution across N",
      "Martingale statistics of the exponential density functional",
      "Weak-form residuals for the test-function family",
  };
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, descriptions[i]);
    sub->add_option("--config", config_path, "Config file")->required();
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the seed base");
    sub->add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}))
        ->capture_default_str();
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << HYDROLIMIT_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "hydrolimit: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kExitOk;
    err << app.help();
    return kExitConfig;
  }

  std::size_t which = 0;
  for (; which < subs.size(); ++which) {
    if (subs[which]->parsed()) break;
  }
  const std::string command = commands[which].first;

  Context ctx;
  try {
    ctx.config = load_config(config_path);
    if (seed) {
      ctx.config.seed = *seed;
      ctx.config.validate();
    }
  } catch (const Error& e) {
    err << "hydrolimit: config error: " << e.what() << "\n";
    return kExitConfig;
  }

  ctx.out_dir = out_dir;
  ctx.options.threads = threads;
  ctx.options.progress = [&err](const std::string& message) { err << message << "\n"; };

  RunManifest manifest;
  manifest.tool_version = HYDROLIMIT_VERSION;
  manifest.command = command;
  manifest.config = serialize_config(ctx.config);
  manifest.seed = ctx.config.seed;
  manifest.threads = threads;
  manifest.started = utc_timestamp();

  int code = kExitOk;
  try {
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec || !fs::is_directory(ctx.out_dir)) {
      throw Error(Errc::IoError, "cannot create output directory " + ctx.out_dir.string());
    }
    commands[which].second(ctx);
  } catch (const Error& e) {
    err << "hydrolimit: " << e.what() << "\n";
    manifest.error = e.what();
    ctx.partial = true;
    code = kExitRuntime;
  } catch (const std::exception& e) {
    err << "hydrolimit: " << e.what() << "\n";
    manifest.error = e.what();
    ctx.partial = true;
    code = kExitRuntime;
  }

  manifest.finished = utc_timestamp();
  manifest.stages = ctx.stages;
  manifest.partial = ctx.partial;
  manifest.summary_json = ctx.summary.dump();
  try {
    for (const auto& name : ctx.written) manifest.outputs.push_back(describe_output(ctx.out_dir, name));
    if (fs::is_directory(ctx.out_dir)) write_manifest(manifest, ctx.out_dir / "manifest.json");
  } catch (const std::exception& e) {
    err << "hydrolimit: " << e.what() << "\n";
    return kExitRuntime;
  }

  json line;
  line["command"] = command;
  line["status"] = code == kExitOk ? "ok" : "error";
  line["partial"] = ctx.partial;
  line["out"] = ctx.out_dir.string();
  line["outputs"] = ctx.written;
  line["summary"] = ctx.summary;
  out << line.dump() << "\n";
  return code;
}

}  // namespace hydrolimit

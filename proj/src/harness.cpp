#include "hydrolimit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "hydrolimit/error.hpp"
#include "hydrolimit/random.hpp"

namespace hydrolimit {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs body(item, worker) for item in [0, count) on up to `threads` workers.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  const auto work = [&](std::size_t worker) {
    for (std::size_t i = next++; i < count; i = next++) body(i, worker);
  };
  if (threads == 1) {
    work(0);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
}

class Progress {
 public:
  explicit Progress(const RunOptions& options) : sink_(options.progress) {}
  void operator()(const std::string& message) {
    if (!sink_) return;
    const std::lock_guard lock(mutex_);
    sink_(message);
  }

 private:
  const std::function<void(const std::string&)>& sink_;
  std::mutex mutex_;
};

bool asymmetric(const ExperimentConfig& config) {
  return config.model == ModelKind::asep ? config.mu != 0.0
                                         : config.alpha.size() > 0 && !config.alpha.isZero(0.0);
}

Eigen::MatrixXd bin_sites(const Eigen::MatrixXd& sites, std::size_t bins) {
  const auto n_sites = static_cast<std::size_t>(sites.cols());
  if (bins == 0 || n_sites % bins != 0) {
    throw Error(Errc::BinMismatch, std::to_string(bins) + " bins do not divide " +
                                       std::to_string(n_sites) + " sites");
  }
  const auto per = static_cast<Eigen::Index>(n_sites / bins);
  Eigen::MatrixXd out(sites.rows(), static_cast<Eigen::Index>(bins));
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    out.col(b) = sites.middleCols(b * per, per).rowwise().mean();
  }
  return out;
}

std::vector<double> sorted_union(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::size_t index_of_time(const std::vector<double>& times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) throw Error(Errc::InvalidArgument, "time not recorded");
  return static_cast<std::size_t>(it - times.begin());
}

std::string size_label(std::size_t n) { return "N=" + std::to_string(n); }

}  // namespace

std::string_view to_string(Norm norm) noexcept { return norm == Norm::L1 ? "L1" : "L2"; }

double distance(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, Norm norm) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.size() == 0) {
    throw Error(Errc::BinMismatch, "profiles have shapes " + std::to_string(p.rows()) + "x" +
                                       std::to_string(p.cols()) + " and " +
                                       std::to_string(q.rows()) + "x" + std::to_string(q.cols()));
  }
  const double scale = 1.0 / static_cast<double>(p.size());
  if (norm == Norm::L1) return (p - q).cwiseAbs().sum() * scale;
  return std::sqrt((p - q).squaredNorm() * scale);
}

double distance(const EmpiricalProfile& p, const EmpiricalProfile& q, Norm norm) {
  return distance(p.density, q.density, norm);
}

double distance(const EmpiricalProfile& p, const GridStated& q, Norm norm) {
  return distance(p.density, bin_average(q, static_cast<Eigen::Index>(p.bins())), norm);
}

Eigen::MatrixXd site_bin_average(const GridStated& state, std::size_t n_sites, std::size_t bins) {
  const auto cells = state.cells();
  if (cells == 0) throw Error(Errc::InvalidArgument, "empty grid");
  Eigen::MatrixXd sites(state.species(), static_cast<Eigen::Index>(n_sites));
  for (std::size_t i = 0; i < n_sites; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n_sites) *
                         static_cast<double>(cells) -
                     0.5;
    const double fl = std::floor(u);
    const double w = u - fl;
    const auto j0 = ((static_cast<Eigen::Index>(fl) % cells) + cells) % cells;
    const auto j1 = (j0 + 1) % cells;
    sites.col(static_cast<Eigen::Index>(i)) =
        (1.0 - w) * state.density.col(j0) + w * state.density.col(j1);
  }
  return bin_sites(sites, bins);
}

std::uint64_t sampling_seed(std::uint64_t base, std::size_t replica) noexcept {
  return replica_seed(base, replica);
}

std::uint64_t dynamics_seed(std::uint64_t base, std::size_t replica) noexcept {
  return replica_seed(base, replica) ^ 0xD1B54A32D192ED03ULL;
}

Ensemble run_ensemble(const ExperimentConfig& config, std::size_t n_sites,
                      const std::vector<double>& times, const RunOptions& options,
                      const ReplicaHook& hook) {
  const auto start = Clock::now();
  const RateTable rates = build_rate_table(config.scaling(), n_sites);
  const SpeciesAlphabet alphabet = config.alphabet();
  const auto profiles = config.initial_profiles();
  const std::size_t n = config.species_count();
  const std::size_t block = n * n_sites;
  const std::size_t replicas = config.replicas;
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, replicas);

  std::vector<std::vector<std::uint32_t>> counts(threads,
                                                 std::vector<std::uint32_t>(times.size() * block));
  std::vector<std::uint64_t> events(replicas, 0);
  std::vector<std::exception_ptr> errors(replicas);
  std::atomic<std::size_t> done{0};
  Progress progress(options);

  parallel_for(replicas, threads, [&](std::size_t r, std::size_t worker) {
    try {
      const RingConfiguration initial = sample_from_profile(
          profiles, alphabet, n_sites, sampling_seed(config.seed, r), config.sample_mode);
      const Trajectory traj =
          simulate(initial, rates, config.horizon, times, dynamics_seed(config.seed, r));
      auto& mine = counts[worker];
      for (std::size_t j = 0; j < times.size(); ++j) {
        const auto sites = traj.snapshots[j].sites();
        std::uint32_t* base = mine.data() + j * block;
        for (std::size_t i = 0; i < n_sites; ++i) ++base[sites[i] * n_sites + i];
      }
      events[r] = traj.event_count;
      if (hook) hook(r, traj);
    } catch (...) {
      errors[r] = std::current_exception();
    }
    progress(size_label(n_sites) + ": replica " + std::to_string(++done) + "/" +
             std::to_string(replicas));
  });

  Ensemble out;
  out.sites = n_sites;
  out.times = times;
  for (std::size_t r = 0; r < replicas; ++r) {
    if (errors[r]) {
      ++out.failures;
    } else {
      ++out.replicas;
      out.events += events[r];
    }
  }
  if (out.replicas == 0) {
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  const double scale = 1.0 / static_cast<double>(out.replicas);
  for (std::size_t j = 0; j < times.size(); ++j) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n_sites));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n_sites; ++i) {
        std::uint64_t total = 0;
        for (const auto& c : counts) total += c[j * block + k * n_sites + i];
        mean(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
            static_cast<double>(total) * scale;
      }
    }
    out.mean.push_back(std::move(mean));
  }
  out.seconds = seconds_since(start);
  return out;
}

Reference reference_solution(const ExperimentConfig& config, int drift_sign,
                             const std::vector<double>& times, std::size_t cells,
                             bool analytic_if_symmetric, double fixed_dt) {
  Reference ref;
  const auto fraction = [&](PdeModel model, const PdeParamsd& p) {
    if (fixed_dt <= 0.0) return config.cfl_fraction;
    const double bound = cfl_bound(model, 1.0 / static_cast<double>(cells), p);
    if (fixed_dt > bound) throw Error(Errc::CflViolation, "fixed dt exceeds the stability bound");
    return fixed_dt / bound;
  };
  ref.times = times;
  const auto m = static_cast<Eigen::Index>(cells);
  if (config.model == ModelKind::asep) {
    const auto expand = [](GridStated s) {
      GridStated two{Eigen::MatrixXd(2, s.cells()), s.time};
      two.density.row(0) = s.density.row(0);
      two.density.row(1) = (1.0 - s.density.row(0).array()).matrix();
      return two;
    };
    if (config.mu == 0.0 && analytic_if_symmetric) {
      ref.kind = "heat";
      for (double t : times) {
        ref.states.push_back(expand(analytic_heat_solution(config.initial[0], config.lambda, t, m)));
      }
      return ref;
    }
    ref.kind = "burgers";
    const auto initial = sample_grid<double>(std::span(config.initial.data(), 1), m);
    PdeParamsd p;
    p.lambda = config.lambda;
    p.mu = config.mu;
    p.drift_sign = drift_sign;
    const auto traj = solve<double>(initial, p, PdeModel::burgers, config.horizon, times,
                                    fraction(PdeModel::burgers, p));
    for (const auto& s : traj.states) ref.states.push_back(expand(s));
    ref.dt = traj.dt;
    ref.steps = traj.steps;
    return ref;
  }
  ref.kind = "nspecies";
  const auto initial = sample_grid<double>(config.initial, m);
  PdeParamsd p;
  p.lambda = config.lambda;
  p.alpha = config.alpha;
  p.drift_sign = drift_sign;
  auto traj = solve<double>(initial, p, PdeModel::nspecies, config.horizon, times,
                            fraction(PdeModel::nspecies, p));
  ref.states = std::move(traj.states);
  ref.dt = traj.dt;
  ref.steps = traj.steps;
  return ref;
}

std::pair<int, std::optional<std::pair<double, double>>> resolve_drift_sign(
    const ExperimentConfig& config, const Ensemble& largest,
    const std::vector<double>& checkpoints) {
  if (!config.drift.automatic) return {config.drift.sign, std::nullopt};
  const auto first = std::find_if(checkpoints.begin(), checkpoints.end(),
                                  [](double t) { return t > 0.0; });
  if (first == checkpoints.end() || !asymmetric(config)) return {+1, std::nullopt};
  const std::vector<double> at{*first};
  const Eigen::MatrixXd empirical =
      bin_sites(largest.mean[index_of_time(largest.times, *first)], config.bins);
  double score[2];
  for (int s = 0; s < 2; ++s) {
    const int sign = s == 0 ? +1 : -1;
    const Reference ref = reference_solution(config, sign, at, config.grid_cells);
    score[s] = distance(empirical, site_bin_average(ref.states[0], largest.sites, config.bins),
                        Norm::L1);
  }
  return {score[1] < score[0] ? -1 : +1, std::make_pair(score[0], score[1])};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(Errc::InvalidArgument, "slope needs at least two points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw Error(Errc::InvalidArgument, "log-log slope needs positive values");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ComparisonReport run_convergence_study(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  ComparisonReport report;
  report.checkpoints = config.checkpoints;
  report.drift_auto = config.drift.automatic;
  for (std::size_t r = 0; r < config.replicas; ++r) {
    report.seeds.push_back(sampling_seed(config.seed, r));
  }
  const auto& cps = config.checkpoints;
  const std::size_t last = cps.size() - 1;

  // both orientations are kept until the sign is known
  auto pde_start = Clock::now();
  const bool both = config.drift.automatic && asymmetric(config);
  std::vector<Reference> refs;
  refs.push_back(reference_solution(config, both ? +1 : config.drift.automatic ? +1 : config.drift.sign,
                                    cps, config.grid_cells));
  if (both) refs.push_back(reference_solution(config, -1, cps, config.grid_cells));
  report.runtimes.emplace_back("pde", seconds_since(pde_start));

  std::vector<Ensemble> ensembles;
  std::vector<std::vector<std::vector<double>>> replica_l1;  // size, orientation, replica
  for (const std::size_t n_sites : config.sizes) {
    std::vector<Eigen::MatrixXd> final_ref;
    for (const auto& ref : refs) {
      final_ref.push_back(site_bin_average(ref.states[last], n_sites, config.bins));
    }
    std::vector<std::vector<double>> l1(refs.size(),
                                        std::vector<double>(config.replicas, std::nan("")));
    const ReplicaHook hook = [&](std::size_t r, const Trajectory& traj) {
      const auto p = empirical_profile(traj.snapshots[last], config.bins);
      for (std::size_t o = 0; o < final_ref.size(); ++o) {
        l1[o][r] = distance(p.density, final_ref[o], Norm::L1);
      }
    };
    ensembles.push_back(run_ensemble(config, n_sites, cps, options, hook));
    replica_l1.push_back(std::move(l1));
    report.runtimes.emplace_back(size_label(n_sites), ensembles.back().seconds);
  }

  const auto [sign, scores] = resolve_drift_sign(config, ensembles.back(), cps);
  report.drift_sign = sign;
  report.drift_scores = scores;
  const std::size_t chosen = both && sign == -1 ? 1 : 0;
  const Reference& ref = refs[chosen];
  report.reference = ref.kind;

  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < config.sizes.size(); ++s) {
    const Ensemble& e = ensembles[s];
    SizeSummary summary;
    summary.sites = e.sites;
    summary.replicas = e.replicas;
    summary.failures = e.failures;
    summary.events = e.events;
    summary.seconds = e.seconds;
    report.failures += e.failures;
    for (std::size_t j = 0; j < cps.size(); ++j) {
      summary.empirical.push_back(bin_sites(e.mean[j], config.bins));
      summary.reference.push_back(site_bin_average(ref.states[j], e.sites, config.bins));
      for (const Norm norm : {Norm::L1, Norm::L2}) {
        report.distances.push_back({e.sites, cps[j], norm,
                                    distance(summary.empirical.back(), summary.reference.back(), norm),
                                    e.replicas, sign});
      }
    }
    for (double d : replica_l1[s][chosen]) {
      if (!std::isnan(d)) summary.replica_l1.push_back(d);
    }
    if (!summary.replica_l1.empty()) {
      const double count = static_cast<double>(summary.replica_l1.size());
      summary.replica_l1_mean =
          std::accumulate(summary.replica_l1.begin(), summary.replica_l1.end(), 0.0) / count;
      double ss = 0.0;
      for (double d : summary.replica_l1) ss += (d - summary.replica_l1_mean) * (d - summary.replica_l1_mean);
      summary.replica_l1_std = count > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    }
    xs.push_back(static_cast<double>(e.sites));
    ys.push_back(distance(summary.empirical[last], summary.reference[last], Norm::L1));
    report.sizes.push_back(std::move(summary));
  }
  if (xs.size() >= 2 && std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; })) {
    report.slope = loglog_slope(xs, ys);
  }
  return report;
}

MartingaleReport run_martingale_study(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  MartingaleReport report;
  report.step = config.resolved_martingale_step();
  const TestFunctions tf = config.martingale_test_functions();
  const SpeciesAlphabet alphabet = config.alphabet();
  const auto profiles = config.initial_profiles();
  Progress progress(options);

  for (const std::size_t n_sites : config.sizes) {
    const auto start = Clock::now();
    const RateTable rates = build_rate_table(config.scaling(), n_sites);
    const std::size_t replicas = config.replicas;
    struct Result {
      double U = 0.0, max_L = 0.0, max_NR = 0.0;
      std::size_t order = 0;
      std::uint64_t events = 0;
      std::exception_ptr error;
    };
    std::vector<Result> results(replicas);
    MartingalePath first;
    std::atomic<std::size_t> done{0};
    parallel_for(replicas, options.threads, [&](std::size_t r, std::size_t) {
      Result& res = results[r];
      try {
        const RingConfiguration initial = sample_from_profile(
            profiles, alphabet, n_sites, sampling_seed(config.seed, r), config.sample_mode);
        MartingaleTracker tracker(initial, tf, rates, config.horizon, report.step);
        SimulateOptions so;
        so.sink = &tracker;
        const Trajectory traj =
            simulate(initial, rates, config.horizon, {}, dynamics_seed(config.seed, r), so);
        const MartingalePath& path = tracker.path();
        res.U = path.U.back();
        for (std::size_t j = 0; j < path.time.size(); ++j) {
          res.max_L = std::max(res.max_L, std::abs(path.L[j]));
          res.max_NR = std::max(res.max_NR, static_cast<double>(n_sites) * path.R[j]);
        }
        res.order = path.series_order;
        res.events = traj.event_count;
        if (r == 0) first = path;
      } catch (...) {
        res.error = std::current_exception();
      }
      progress(size_label(n_sites) + ": replica " + std::to_string(++done) + "/" +
               std::to_string(replicas));
    });

    MartingaleSummary summary;
    summary.sites = n_sites;
    for (const auto& res : results) {
      if (res.error) {
        ++summary.failures;
        continue;
      }
      ++summary.replicas;
      summary.U_T.push_back(res.U);
      summary.max_abs_L += res.max_L;
      summary.max_NR += res.max_NR;
      summary.max_abs_L_all = std::max(summary.max_abs_L_all, res.max_L);
      summary.max_NR_all = std::max(summary.max_NR_all, res.max_NR);
      summary.series_order = std::max(summary.series_order, res.order);
      summary.events += res.events;
    }
    if (summary.replicas == 0) {
      for (const auto& res : results) {
        if (res.error) std::rethrow_exception(res.error);
      }
    }
    const double count = static_cast<double>(summary.replicas);
    summary.max_abs_L /= count;
    summary.max_NR /= count;
    summary.mean_U = std::accumulate(summary.U_T.begin(), summary.U_T.end(), 0.0) / count;
    double ss = 0.0;
    for (double u : summary.U_T) ss += (u - summary.mean_U) * (u - summary.mean_U);
    summary.var_U = count > 1 ? ss / (count - 1.0) : 0.0;
    summary.stderr_U = std::sqrt(summary.var_U / count);
    summary.first_path = std::move(first);
    summary.seconds = seconds_since(start);
    report.failures += summary.failures;
    report.runtimes.emplace_back(size_label(n_sites), summary.seconds);
    report.sizes.push_back(std::move(summary));
  }

  std::vector<double> xs, ys;
  for (const auto& s : report.sizes) {
    xs.push_back(static_cast<double>(s.sites));
    ys.push_back(s.var_U);
  }
  if (xs.size() >= 2 && std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; })) {
    report.variance_slope = loglog_slope(xs, ys);
  }
  return report;
}

double ResidualReport::residual(const std::string& source, std::size_t resolution,
                                std::size_t function) const {
  for (const auto& row : rows) {
    if (row.source == source && row.resolution == resolution && row.function == function) {
      return row.residual;
    }
  }
  throw Error(Errc::InvalidArgument, "no residual for " + source + " at " +
                                         std::to_string(resolution) + ", function " +
                                         std::to_string(function));
}

namespace {

double residual_of(const ExperimentConfig& config, std::span<const DensityHistory> histories,
                   std::size_t member, int sign) {
  const FourierSeries p = ExperimentConfig::family_member(member);
  const TimeFactor s = TimeFactor::decay(config.horizon);
  if (config.model == ModelKind::asep) {
    return weak_residual(histories[0], p, s, config.lambda, config.mu, sign);
  }
  return weak_residual(histories, 0, p, s, config.lambda, config.alpha, sign);
}

std::vector<double> uniform_nodes(double horizon, std::size_t intervals) {
  std::vector<double> nodes(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) {
    nodes[j] = horizon * static_cast<double>(j) / static_cast<double>(intervals);
  }
  nodes.back() = horizon;
  return nodes;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(std::abs(v[i]) < std::abs(v[i - 1]))) return false;
  }
  return true;
}

}  // namespace

ResidualReport run_weak_residual_study(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (!(config.horizon > 0.0)) throw Error(Errc::InvalidArgument, "residual study needs T > 0");
  ResidualReport report;
  const std::size_t n = config.species_count();
  const std::size_t members = config.test_functions;
  const std::vector<double> nodes = uniform_nodes(config.horizon, config.residual_nodes);
  const std::size_t bins = config.resolved_residual_bins();

  const auto to_history = [&](const auto& density_at, std::size_t cells, std::size_t n_sites) {
    std::vector<DensityHistory> hist(n);
    for (std::size_t k = 0; k < n; ++k) {
      hist[k].times = nodes;
      hist[k].offset = -0.5 * static_cast<double>(cells) / static_cast<double>(n_sites);
      hist[k].density.resize(static_cast<Eigen::Index>(cells),
                             static_cast<Eigen::Index>(nodes.size()));
    }
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const Eigen::MatrixXd binned = density_at(j);
      for (std::size_t k = 0; k < n; ++k) {
        hist[k].density.col(static_cast<Eigen::Index>(j)) =
            binned.row(static_cast<Eigen::Index>(k)).transpose();
      }
    }
    return hist;
  };

  // empirical ensembles first: auto mode resolves the sign from them, so single-trajectory
  // residuals are kept for both orientations until then
  const bool both = config.drift.automatic && asymmetric(config);
  const std::vector<int> signs = both ? std::vector<int>{+1, -1}
                                      : std::vector<int>{config.drift.automatic ? +1 : config.drift.sign};
  const std::vector<double> times = sorted_union(nodes, config.checkpoints);
  std::vector<std::size_t> node_index;
  for (double t : nodes) node_index.push_back(index_of_time(times, t));

  std::vector<Ensemble> ensembles;
  // size, orientation, member, replica
  std::vector<std::vector<std::vector<std::vector<double>>>> single;
  for (const std::size_t n_sites : config.sizes) {
    if (n_sites % bins != 0) {
      throw Error(Errc::BinMismatch, "residual bins must divide N = " + std::to_string(n_sites));
    }
    std::vector<std::vector<std::vector<double>>> res(
        signs.size(), std::vector<std::vector<double>>(
                          members, std::vector<double>(config.replicas, std::nan(""))));
    const ReplicaHook hook = [&](std::size_t r, const Trajectory& traj) {
      const auto hist = to_history(
          [&](std::size_t j) {
            return empirical_profile(traj.snapshots[node_index[j]], bins).density;
          },
          bins, n_sites);
      for (std::size_t o = 0; o < signs.size(); ++o) {
        for (std::size_t f = 1; f <= members; ++f) {
          res[o][f - 1][r] = residual_of(config, hist, f, signs[o]);
        }
      }
    };
    ensembles.push_back(run_ensemble(config, n_sites, times, options, hook));
    single.push_back(std::move(res));
    report.failures += ensembles.back().failures;
    report.runtimes.emplace_back(size_label(n_sites), ensembles.back().seconds);
  }
  const int sign = resolve_drift_sign(config, ensembles.back(), config.checkpoints).first;
  report.drift_sign = sign;
  const std::size_t chosen = both && sign == -1 ? 1 : 0;

  // PDE source on M/4, M/2, M with uniform steps dt = T/K, K growing as M^2 so that
  // dt/dx^2 is identical on every grid and each node interval holds whole steps
  const auto pde_start = Clock::now();
  const std::size_t coarsest = config.grid_cells / 4;
  const std::size_t intervals = config.residual_nodes;
  std::size_t base_steps = 0;
  {
    PdeParamsd p;
    p.lambda = config.lambda;
    p.mu = config.mu;
    p.alpha = config.alpha;
    const PdeModel model = config.model == ModelKind::asep ? PdeModel::burgers : PdeModel::nspecies;
    const double bound = cfl_bound(model, 1.0 / static_cast<double>(coarsest), p);
    const auto per_interval = static_cast<std::size_t>(
        std::ceil(config.horizon / static_cast<double>(intervals) / (config.cfl_fraction * bound)));
    base_steps = std::max<std::size_t>(per_interval, 1) * intervals;
  }
  std::vector<std::vector<double>> pde_res(members);
  for (const std::size_t m : {coarsest, coarsest * 2, coarsest * 4}) {
    report.grids.push_back(m);
    const std::size_t steps = base_steps * (m / coarsest) * (m / coarsest);
    const Reference ref = reference_solution(config, sign, nodes, m, false,
                                             config.horizon / static_cast<double>(steps));
    std::vector<DensityHistory> hist(n);
    for (std::size_t k = 0; k < n; ++k) {
      hist[k].times = nodes;
      hist[k].density.resize(static_cast<Eigen::Index>(m),
                             static_cast<Eigen::Index>(nodes.size()));
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        hist[k].density.col(static_cast<Eigen::Index>(j)) =
            ref.states[j].density.row(static_cast<Eigen::Index>(k)).transpose();
      }
    }
    for (std::size_t f = 1; f <= members; ++f) {
      const double r = residual_of(config, hist, f, sign);
      pde_res[f - 1].push_back(r);
      report.rows.push_back({"pde", m, f, r, sign});
    }
  }
  report.runtimes.emplace_back("pde", seconds_since(pde_start));

  std::vector<std::vector<double>> rms_res(members), mean_res(members);
  for (std::size_t s = 0; s < ensembles.size(); ++s) {
    const Ensemble& e = ensembles[s];
    report.sizes.push_back(e.sites);
    for (std::size_t f = 1; f <= members; ++f) {
      double ss = 0.0;
      std::size_t count = 0;
      for (double r : single[s][chosen][f - 1]) {
        if (std::isnan(r)) continue;
        ss += r * r;
        ++count;
      }
      const double rms = std::sqrt(ss / static_cast<double>(count));
      rms_res[f - 1].push_back(rms);
      report.rows.push_back({"empirical", e.sites, f, rms, sign});
    }
    const auto hist = to_history([&](std::size_t j) { return e.mean[node_index[j]]; }, e.sites,
                                 e.sites);
    for (std::size_t f = 1; f <= members; ++f) {
      const double r = residual_of(config, hist, f, sign);
      mean_res[f - 1].push_back(r);
      report.rows.push_back({"empirical_mean", e.sites, f, r, sign});
    }
  }

  for (std::size_t f = 0; f < members; ++f) {
    report.pde_monotone.push_back(strictly_decreasing(pde_res[f]));
    report.empirical_monotone.push_back(strictly_decreasing(rms_res[f]));
    report.empirical_mean_monotone.push_back(strictly_decreasing(mean_res[f]));
    report.pde_ratio_coarse.push_back(std::abs(pde_res[f][0]) / std::abs(pde_res[f][1]));
    report.pde_ratio_fine.push_back(std::abs(pde_res[f][1]) / std::abs(pde_res[f][2]));
  }
  return report;
}

}  // namespace hydrolimit

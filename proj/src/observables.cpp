#include "hydrolimit/observables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hydrolimit/error.hpp"

namespace hydrolimit {

TimeFactor::TimeFactor(Kind kind, double horizon) : kind_(kind), horizon_(horizon) {
  if (!(horizon > 0.0)) throw Error(Errc::InvalidArgument, "test-function horizon must be positive");
}

double TimeFactor::value(double t) const noexcept {
  const double r = 1.0 - t / horizon_;
  switch (kind_) {
    case Kind::decay: return r * r;
    case Kind::bump: return t * r;
    case Kind::constant: return 1.0;
  }
  return 0.0;
}

double TimeFactor::derivative(double t) const noexcept {
  switch (kind_) {
    case Kind::decay: return -2.0 * (1.0 - t / horizon_) / horizon_;
    case Kind::bump: return 1.0 - 2.0 * t / horizon_;
    case Kind::constant: return 0.0;
  }
  return 0.0;
}

double TimeFactor::sup() const noexcept {
  switch (kind_) {
    case Kind::decay: return 1.0;
    case Kind::bump: return horizon_ / 4.0;
    case Kind::constant: return 1.0;
  }
  return 1.0;
}

TestFunctions::TestFunctions(std::vector<FourierSeries> spatial, TimeFactor time)
    : spatial_(std::move(spatial)), time_(time) {
  if (spatial_.empty()) throw Error(Errc::InvalidArgument, "need at least one test function");
}

TestFunctions TestFunctions::pair(FourierSeries phi_a, FourierSeries phi_b, TimeFactor time) {
  return TestFunctions({std::move(phi_a), std::move(phi_b)}, time);
}

double TestFunctions::value(std::size_t k, double x, double t) const {
  return spatial_.at(k)(x) * time_.value(t);
}

double TestFunctions::dt(std::size_t k, double x, double t) const {
  return spatial_.at(k)(x) * time_.derivative(t);
}

double TestFunctions::dx(std::size_t k, double x, double t, int order) const {
  return spatial_.at(k).derivative(x, order) * time_.value(t);
}

double TestFunctions::sup_norm() const noexcept {
  double s = 0.0;
  for (const auto& p : spatial_) s = std::max(s, p.sup_bound());
  return s * time_.sup();
}

namespace {

FourierSeries add_series(const FourierSeries& a, const FourierSeries& b, double scale_b) {
  FourierSeries out;
  out.constant = a.constant + scale_b * b.constant;
  const auto merge = [scale_b](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(std::max(x.size(), y.size()), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) z[i] += x[i];
    for (std::size_t i = 0; i < y.size(); ++i) z[i] += scale_b * y[i];
    return z;
  };
  out.cos_coeffs = merge(a.cos_coeffs, b.cos_coeffs);
  out.sin_coeffs = merge(a.sin_coeffs, b.sin_coeffs);
  return out;
}

}  // namespace

TestFunctions TestFunctions::operator+(const TestFunctions& other) const {
  if (other.spatial_.size() != spatial_.size() || other.time_.kind() != time_.kind() ||
      other.time_.horizon() != time_.horizon()) {
    throw Error(Errc::InvalidArgument, "test functions must share species count and time factor");
  }
  std::vector<FourierSeries> sum;
  for (std::size_t k = 0; k < spatial_.size(); ++k) {
    sum.push_back(add_series(spatial_[k], other.spatial_[k], 1.0));
  }
  return TestFunctions(std::move(sum), time_);
}

TestFunctions TestFunctions::scaled(double factor) const {
  std::vector<FourierSeries> out;
  for (const auto& p : spatial_) out.push_back(add_series(FourierSeries{}, p, factor));
  return TestFunctions(std::move(out), time_);
}

// ---------------------------------------------------------------------------

EmpiricalProfile empirical_profile(const RingConfiguration& config, std::size_t bins,
                                   double time) {
  const std::size_t n_sites = config.size();
  if (bins == 0 || n_sites % bins != 0) {
    throw Error(Errc::BinMismatch, std::to_string(bins) + " bins do not divide N=" +
                                       std::to_string(n_sites));
  }
  const std::size_t per_bin = n_sites / bins;
  EmpiricalProfile p{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(config.species_count()),
                                           static_cast<Eigen::Index>(bins)),
                     time};
  for (std::size_t i = 0; i < n_sites; ++i) {
    p.density(config[i], static_cast<Eigen::Index>(i / per_bin)) += 1.0;
  }
  p.density /= static_cast<double>(per_bin);
  return p;
}

namespace {

void require_species(const RingConfiguration& config, const TestFunctions& tf) {
  if (tf.species_count() != config.species_count()) {
    throw Error(Errc::InvalidArgument, "need one test function per species");
  }
}

/// (1/N) sum_i p_{X_i}(i/N), the time-free part of log Z.
double spatial_sum(const RingConfiguration& config, const TestFunctions& tf) {
  const double N = static_cast<double>(config.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    sum += tf.spatial(config[i])(static_cast<double>(i) / N);
  }
  return sum / N;
}

template <typename Accumulate>
double sum_over_reactions(const RingConfiguration& config, const TestFunctions& tf,
                          const RateTable& rates, double t, Accumulate&& term) {
  require_species(config, tf);
  const std::size_t n_sites = config.size();
  const double N = static_cast<double>(n_sites);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_sites; ++i) {
    const std::size_t j = (i + 1) % n_sites;
    const Species a = config[i];
    const Species b = config[j];
    const auto reactions = rates.reactions(a, b);
    if (reactions.empty()) continue;
    const double xi = static_cast<double>(i) / N;
    const double xj = static_cast<double>(j) / N;
    const double before = tf.value(a, xi, t) + tf.value(b, xj, t);
    for (const auto& r : reactions) {
      const double after = tf.value(r.new_left, xi, t) + tf.value(r.new_right, xj, t);
      sum += term(r.rate, std::expm1((after - before) / N));
    }
  }
  return sum;
}

}  // namespace

double log_Z(const RingConfiguration& config, const TestFunctions& tf, double t) {
  require_species(config, tf);
  return spatial_sum(config, tf) * tf.time_factor().value(t);
}

double theta(const RingConfiguration& config, const TestFunctions& tf, double t) {
  require_species(config, tf);
  return spatial_sum(config, tf) * tf.time_factor().derivative(t);
}

double generator_term(const RingConfiguration& config, const TestFunctions& tf,
                      const RateTable& rates, double t) {
  return sum_over_reactions(config, tf, rates, t,
                            [](double rate, double em1) { return rate * em1; });
}

double fluctuation_term(const RingConfiguration& config, const TestFunctions& tf,
                        const RateTable& rates, double t) {
  return sum_over_reactions(config, tf, rates, t,
                            [](double rate, double em1) { return rate * em1 * em1; });
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::size_t kMaxSeriesOrder = 24;
}

MartingaleTracker::MartingaleTracker(const RingConfiguration& initial, const TestFunctions& tf,
                                     const RateTable& rates, double horizon, double step)
    : rates_(&rates),
      tf_(tf),
      sites_(initial.sites().begin(), initial.sites().end()),
      n_species_(initial.species_count()) {
  require_species(initial, tf);
  if (!(horizon > 0.0)) throw Error(Errc::InvalidArgument, "horizon must be positive");
  if (!(step > 0.0) || step > horizon / 100.0) {
    throw Error(Errc::GridTooCoarse, "quadrature step " + std::to_string(step) +
                                         " exceeds T/100 = " + std::to_string(horizon / 100.0));
  }
  const std::size_t n_sites = sites_.size();
  const double N = static_cast<double>(n_sites);
  table_.resize(n_sites * n_species_);
  for (std::size_t i = 0; i < n_sites; ++i) {
    for (std::size_t k = 0; k < n_species_; ++k) {
      table_[i * n_species_ + k] = tf.spatial(k)(static_cast<double>(i) / N) / N;
    }
  }

  // Largest |s(t) d| over every reaction any bond could host decides the series order.
  double max_increment = 0.0;
  for (std::size_t i = 0; i < n_sites; ++i) {
    const std::size_t j = (i + 1) % n_sites;
    for (std::size_t a = 0; a < n_species_; ++a) {
      for (std::size_t b = 0; b < n_species_; ++b) {
        for (const auto& r : rates.reactions(static_cast<Species>(a), static_cast<Species>(b))) {
          const double d = site_value(i, r.new_left) + site_value(j, r.new_right) -
                           site_value(i, static_cast<Species>(a)) -
                           site_value(j, static_cast<Species>(b));
          max_increment = std::max(max_increment, std::abs(d));
        }
      }
    }
  }
  const double x = max_increment * tf.time_factor().sup();
  double term = x;  // x^m / m! at m = 1
  order_ = 0;
  for (std::size_t m = 1; m <= kMaxSeriesOrder; ++m) {
    if (x == 0.0 || term * x / static_cast<double>(m + 1) < 1e-17 * std::max(x, 1e-300)) {
      order_ = m;
      break;
    }
    term *= x / static_cast<double>(m + 1);
  }
  inv_factorial_.assign(order_ + 1, 1.0);
  for (std::size_t m = 1; m <= order_; ++m) {
    inv_factorial_[m] = inv_factorial_[m - 1] / static_cast<double>(m);
  }

  grid_.clear();
  const auto intervals = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  for (std::size_t g = 0; g <= intervals; ++g) {
    grid_.push_back(std::min(horizon, static_cast<double>(g) * step));
  }
  grid_.back() = horizon;
  path_.step = horizon / static_cast<double>(intervals);
  path_.series_order = order_;

  recompute_moments();
  const Sample s0 = sample(0.0);
  z0_ = s0.Z;
  t_cur_ = 0.0;
  f_cur_ = (s0.L + s0.theta) * s0.Z;
  path_.time.push_back(0.0);
  path_.Z.push_back(s0.Z);
  path_.theta.push_back(s0.theta);
  path_.L.push_back(s0.L);
  path_.R.push_back(s0.R);
  path_.U.push_back(0.0);
  next_grid_ = 1;
}

void MartingaleTracker::accumulate_bond(std::size_t bond, double sign) {
  const std::size_t j = bond + 1 == sites_.size() ? 0 : bond + 1;
  const Species a = sites_[bond];
  const Species b = sites_[j];
  if (order_ == 0) return;
  const double before = site_value(bond, a) + site_value(j, b);
  for (const auto& r : rates_->reactions(a, b)) {
    const double d = site_value(bond, r.new_left) + site_value(j, r.new_right) - before;
    double power = sign * r.rate;
    for (std::size_t m = 1; m <= order_; ++m) {
      power *= d;
      moments_[m] += power;
    }
  }
}

void MartingaleTracker::recompute_moments() {
  moments_.assign(order_ + 1, 0.0);
  linear_sum_ = 0.0;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    linear_sum_ += site_value(i, sites_[i]);
    accumulate_bond(i, 1.0);
  }
}

MartingaleTracker::Sample MartingaleTracker::sample(double t) const {
  const double s = tf_.time_factor().value(t);
  const double log_z = linear_sum_ * s;
  Sample out{std::exp(log_z), linear_sum_ * tf_.time_factor().derivative(t), 0.0, 0.0};
  if (order_ == 0) {
    const RingConfiguration config(
        SpeciesAlphabet::letters(n_species_), std::vector<Species>(sites_.begin(), sites_.end()));
    out.L = generator_term(config, tf_, *rates_, t);
    out.R = fluctuation_term(config, tf_, *rates_, t);
    return out;
  }
  double s_power = 1.0;
  double two_power = 1.0;
  for (std::size_t m = 1; m <= order_; ++m) {
    s_power *= s;
    two_power *= 2.0;
    const double c = moments_[m] * s_power * inv_factorial_[m];
    out.L += c;
    out.R += (two_power - 2.0) * c;
  }
  return out;
}

void MartingaleTracker::advance_to(double t) {
  while (next_grid_ < grid_.size() && grid_[next_grid_] <= t) {
    const double tg = grid_[next_grid_];
    recompute_moments();
    const Sample sg = sample(tg);
    const double fg = (sg.L + sg.theta) * sg.Z;
    integral_ += 0.5 * (f_cur_ + fg) * (tg - t_cur_);
    t_cur_ = tg;
    f_cur_ = fg;
    path_.time.push_back(tg);
    path_.Z.push_back(sg.Z);
    path_.theta.push_back(sg.theta);
    path_.L.push_back(sg.L);
    path_.R.push_back(sg.R);
    path_.U.push_back(sg.Z - z0_ - integral_);
    ++next_grid_;
  }
  if (t > t_cur_) {
    const Sample st = sample(t);
    const double ft = (st.L + st.theta) * st.Z;
    integral_ += 0.5 * (f_cur_ + ft) * (t - t_cur_);
    t_cur_ = t;
    f_cur_ = ft;
  }
}

void MartingaleTracker::on_event(double time, const Event& event, const RingConfiguration& after) {
  advance_to(time);
  const std::size_t n_sites = sites_.size();
  const std::size_t bond = event.bond;
  const std::size_t prev = bond == 0 ? n_sites - 1 : bond - 1;
  const std::size_t next = bond + 1 == n_sites ? 0 : bond + 1;
  accumulate_bond(prev, -1.0);
  accumulate_bond(bond, -1.0);
  accumulate_bond(next, -1.0);
  linear_sum_ -= site_value(bond, sites_[bond]) + site_value(next, sites_[next]);
  sites_[bond] = after[bond];
  sites_[next] = after[next];
  linear_sum_ += site_value(bond, sites_[bond]) + site_value(next, sites_[next]);
  accumulate_bond(prev, 1.0);
  accumulate_bond(bond, 1.0);
  accumulate_bond(next, 1.0);
  const Sample s = sample(time);
  f_cur_ = (s.L + s.theta) * s.Z;
}

void MartingaleTracker::on_finish(double horizon, const RingConfiguration& /*final_config*/) {
  advance_to(horizon);
}

MartingalePath martingale_path(const Trajectory& trajectory, const TestFunctions& tf,
                               const RateTable& rates, double step) {
  if (trajectory.event_count != trajectory.events.size()) {
    throw Error(Errc::InvalidArgument, "trajectory was simulated without an event log");
  }
  MartingaleTracker tracker(trajectory.initial, tf, rates, trajectory.horizon, step);
  RingConfiguration config = trajectory.initial;
  const std::size_t n_sites = config.size();
  for (const auto& rec : trajectory.events) {
    const std::size_t bond = rec.bond;
    const Species a = config[bond];
    const Species b = config[(bond + 1) % n_sites];
    const auto reactions = rates.reactions(a, b);
    const auto it = std::find_if(reactions.begin(), reactions.end(), [&](const Reaction& r) {
      return r.new_left == rec.new_left && r.new_right == rec.new_right;
    });
    if (it == reactions.end()) {
      throw Error(Errc::InvalidArgument, "event log does not match the rate table");
    }
    const Event e{bond, *it};
    apply_event(config, e);
    tracker.on_event(rec.time, e, config);
  }
  tracker.on_finish(trajectory.horizon, config);
  return tracker.path();
}

// ---------------------------------------------------------------------------

namespace {

// Shared quadrature: `flux(n)` returns the cell values of the drift flux at node n.
template <typename Flux>
double weak_form(const DensityHistory& source, const FourierSeries& spatial,
                 const TimeFactor& time, double lambda, Flux&& flux) {
  const auto cells = source.density.rows();
  const auto nodes = source.density.cols();
  if (cells == 0 || nodes < 2 || static_cast<std::size_t>(nodes) != source.times.size()) {
    throw Error(Errc::InvalidArgument, "density history needs >= 2 time nodes and >= 1 cell");
  }
  if (source.times.front() != 0.0) {
    throw Error(Errc::InvalidArgument, "density history must start at t = 0");
  }
  for (std::size_t j = 1; j < source.times.size(); ++j) {
    if (!(source.times[j] > source.times[j - 1])) {
      throw Error(Errc::InvalidArgument, "density history times must increase");
    }
  }
  // exact cell integrals of p, p' and p''
  Eigen::VectorXd int_p(cells), int_px(cells), int_pxx(cells);
  const double h = 1.0 / static_cast<double>(cells);
  for (Eigen::Index j = 0; j < cells; ++j) {
    const double a = (static_cast<double>(j) + source.offset) * h;
    const double b = (static_cast<double>(j + 1) + source.offset) * h;
    int_p(j) = spatial.average(a, b) * h;
    int_px(j) = spatial(b) - spatial(a);
    int_pxx(j) = spatial.derivative(b, 1) - spatial.derivative(a, 1);
  }

  const auto integrand = [&](Eigen::Index n) {
    const double t = source.times[static_cast<std::size_t>(n)];
    const auto rho = source.density.col(n).array();
    const double st = time.value(t);
    const double dst = time.derivative(t);
    const double linear = (rho * (dst * int_p.array() + lambda * st * int_pxx.array())).sum();
    return linear - (flux(n).array() * int_px.array()).sum() * st;
  };

  // composite Simpson over pairs of intervals (unequal spacing allowed); a leftover
  // last interval uses the trapezoid rule
  const auto& ts = source.times;
  std::vector<double> f(static_cast<std::size_t>(nodes));
  for (Eigen::Index n = 0; n < nodes; ++n) f[static_cast<std::size_t>(n)] = integrand(n);
  double total = 0.0;
  std::size_t n = 0;
  for (; n + 2 < f.size(); n += 2) {
    const double h0 = ts[n + 1] - ts[n];
    const double h1 = ts[n + 2] - ts[n + 1];
    total += (h0 + h1) / 6.0 *
             ((2.0 - h1 / h0) * f[n] + (h0 + h1) * (h0 + h1) / (h0 * h1) * f[n + 1] +
              (2.0 - h0 / h1) * f[n + 2]);
  }
  if (n + 1 < f.size()) total += 0.5 * (f[n] + f[n + 1]) * (ts[n + 1] - ts[n]);
  total += (source.density.col(0).array() * int_p.array()).sum() * time.value(0.0);
  return total;
}

}  // namespace

double weak_residual(const DensityHistory& source, const FourierSeries& spatial,
                     const TimeFactor& time, double lambda, double mu, int drift_sign) {
  const double c = drift_sign * mu;
  return weak_form(source, spatial, time, lambda, [&](Eigen::Index n) -> Eigen::VectorXd {
    const auto rho = source.density.col(n).array();
    return c * rho * (1.0 - rho);
  });
}

double weak_residual(std::span<const DensityHistory> species, std::size_t k,
                     const FourierSeries& spatial, const TimeFactor& time, double lambda,
                     const Eigen::MatrixXd& alpha, int drift_sign) {
  const auto n = species.size();
  if (k >= n || alpha.rows() != static_cast<Eigen::Index>(n) || alpha.cols() != alpha.rows()) {
    throw Error(Errc::InvalidArgument, "species index or alpha shape does not match histories");
  }
  for (const auto& h : species) {
    if (h.density.rows() != species[k].density.rows() ||
        h.density.cols() != species[k].density.cols() || h.times != species[k].times ||
        h.offset != species[k].offset) {
      throw Error(Errc::InvalidArgument, "species histories must share grid and times");
    }
  }
  const double c = drift_sign * lambda;
  return weak_form(species[k], spatial, time, lambda, [&](Eigen::Index node) -> Eigen::VectorXd {
    Eigen::VectorXd coupling = Eigen::VectorXd::Zero(species[k].density.rows());
    for (std::size_t l = 0; l < n; ++l) {
      if (l == k) continue;
      coupling += alpha(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) *
                  species[l].density.col(node);
    }
    return c * species[k].density.col(node).cwiseProduct(coupling);
  });
}

}  // namespace hydrolimit

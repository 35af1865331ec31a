#include "hydrolimit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hydrolimit/error.hpp"

namespace hydrolimit {

std::size_t ScalingSpec::species_count() const {
  return model == ModelKind::asep ? 2 : static_cast<std::size_t>(alpha.rows());
}

RateTable::RateTable(std::size_t n_sites, Eigen::MatrixXd exchange, std::optional<FoldRates> fold)
    : n_sites_(n_sites), exchange_(std::move(exchange)), fold_(std::move(fold)) {
  const auto n = static_cast<std::size_t>(exchange_.rows());
  if (n < 2 || exchange_.cols() != exchange_.rows()) {
    throw Error(Errc::InvalidArgument, "exchange rates must be a square matrix with n >= 2");
  }
  if (n_sites_ < 3) throw Error(Errc::BadN, "N must be at least 3, got " + std::to_string(n_sites_));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      if (k != l && !(exchange_(k, l) >= 0.0)) {
        throw Error(Errc::RatePositivity, "exchange rate (" + std::to_string(k) + "," +
                                              std::to_string(l) + ") = " +
                                              std::to_string(exchange_(k, l)));
      }
    }
  }
  if (fold_) {
    if (n % 2 != 0) throw Error(Errc::FoldOnOddAlphabet, "folds need an even alphabet");
    if (n < 4) {
      throw Error(Errc::InvalidArgument, "folds coincide with exchanges for n = 2; need n >= 4");
    }
    if (fold_->gamma.size() != n || fold_->delta.size() != n) {
      throw Error(Errc::LengthMismatch, "fold rates need one gamma and one delta per species");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!(fold_->gamma[k] >= 0.0) || !(fold_->delta[k] >= 0.0)) {
        throw Error(Errc::RatePositivity, "negative fold rate for species " + std::to_string(k));
      }
    }
  }

  reactions_.assign(n * n, {});
  pair_rate_.assign(n * n, 0.0);
  const std::size_t half = n / 2;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      auto& list = reactions_[a * n + b];
      const bool is_fold = fold_ && b == (a + half) % n;
      if (is_fold) {
        const double fwd = fold_->gamma[a];
        const double bwd = fold_->delta[a];
        if (fwd > 0.0) {
          list.push_back({static_cast<Species>((a + 1) % n), static_cast<Species>((b + 1) % n), fwd,
                          ReactionKind::fold_forward});
        }
        if (bwd > 0.0) {
          list.push_back({static_cast<Species>((a + n - 1) % n),
                          static_cast<Species>((b + n - 1) % n), bwd, ReactionKind::fold_backward});
        }
      } else if (exchange_(a, b) > 0.0) {
        list.push_back({static_cast<Species>(b), static_cast<Species>(a), exchange_(a, b),
                        ReactionKind::exchange});
      }
      for (const auto& r : list) pair_rate_[a * n + b] += r.rate;
    }
  }
}

RateTable build_rate_table(const ScalingSpec& spec, std::size_t n_sites) {
  if (n_sites < 3) throw Error(Errc::BadN, "N must be at least 3, got " + std::to_string(n_sites));
  if (!(spec.lambda > 0.0)) throw Error(Errc::ConstraintViolation, "lambda must be positive");
  const double N = static_cast<double>(n_sites);
  const double diffusive = spec.lambda * N * N;

  if (spec.model == ModelKind::asep) {
    if (spec.fold) throw Error(Errc::FoldOnOddAlphabet, "folds are not defined for the two-species model");
    Eigen::MatrixXd ex = Eigen::MatrixXd::Zero(2, 2);
    ex(0, 1) = diffusive + spec.mu * N / 2.0;
    ex(1, 0) = diffusive - spec.mu * N / 2.0;
    if (ex(0, 1) < 0.0 || ex(1, 0) < 0.0) {
      throw Error(Errc::RatePositivity, "|mu| = " + std::to_string(std::abs(spec.mu)) +
                                            " exceeds 2 lambda N = " +
                                            std::to_string(2.0 * spec.lambda * N));
    }
    return RateTable(n_sites, std::move(ex));
  }

  const auto n = spec.alpha.rows();
  if (n < 2 || spec.alpha.cols() != n) {
    throw Error(Errc::InvalidArgument, "alpha must be a square matrix with n >= 2");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k + 1; l < n; ++l) {
      if (std::abs(spec.alpha(k, l) + spec.alpha(l, k)) > 1e-12) {
        throw Error(Errc::ConstraintViolation, "alpha must be antisymmetric off the diagonal");
      }
    }
  }
  Eigen::MatrixXd ex = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k != l) ex(k, l) = diffusive * std::exp(spec.alpha(k, l) / (2.0 * N));
    }
  }
  return RateTable(n_sites, std::move(ex), spec.fold);
}

EventSet active_events(const RingConfiguration& config, const RateTable& rates) {
  if (config.species_count() != rates.species_count()) {
    throw Error(Errc::InvalidArgument, "configuration and rate table disagree on n");
  }
  if (rates.fold() && rates.species_count() % 2 != 0) {
    throw Error(Errc::FoldOnOddAlphabet, "fold rates supplied for odd n");
  }
  EventSet set;
  const std::size_t n_sites = config.size();
  for (std::size_t i = 0; i < n_sites; ++i) {
    const Species left = config[i];
    const Species right = config[(i + 1) % n_sites];
    for (const auto& r : rates.reactions(left, right)) {
      set.events.push_back({i, r});
      set.total_rate += r.rate;
    }
  }
  return set;
}

void apply_event(RingConfiguration& config, const Event& event) {
  config.set(event.bond, event.reaction.new_left);
  config.set((event.bond + 1) % config.size(), event.reaction.new_right);
}

std::pair<RingConfiguration, double> kmc_step(const RingConfiguration& config,
                                              const RateTable& rates, Rng& rng) {
  const EventSet set = active_events(config, rates);
  if (set.events.empty() || set.total_rate <= 0.0) {
    throw Error(Errc::Frozen, "no reaction is enabled");
  }
  const double dt = rng.exponential(set.total_rate);
  double target = rng.uniform() * set.total_rate;
  std::size_t chosen = set.events.size() - 1;
  for (std::size_t e = 0; e < set.events.size(); ++e) {
    target -= set.events[e].reaction.rate;
    if (target < 0.0) {
      chosen = e;
      break;
    }
  }
  RingConfiguration next = config;
  apply_event(next, set.events[chosen]);
  return {std::move(next), dt};
}

// ---------------------------------------------------------------------------

KmcEngine::KmcEngine(RingConfiguration initial, const RateTable& rates, std::uint64_t seed)
    : config_(std::move(initial)), rates_(&rates), rng_(seed), n_species_(rates.species_count()) {
  if (config_.species_count() != n_species_) {
    throw Error(Errc::InvalidArgument, "configuration and rate table disagree on n");
  }
  if (config_.size() != rates.sites()) {
    throw Error(Errc::LengthMismatch, "rate table built for N=" + std::to_string(rates.sites()) +
                                          ", configuration has N=" +
                                          std::to_string(config_.size()));
  }
  const std::size_t pairs = n_species_ * n_species_;
  const std::size_t n_sites = config_.size();
  bonds_.assign(pairs * n_sites, 0);
  count_.assign(pairs, 0);
  pair_rate_.resize(pairs);
  for (std::size_t p = 0; p < pairs; ++p) {
    pair_rate_[p] = rates.pair_rate(static_cast<Species>(p / n_species_),
                                    static_cast<Species>(p % n_species_));
    if (pair_rate_[p] > 0.0) active_pairs_.push_back(p);
  }
  position_.assign(n_sites, 0);
  pair_.assign(n_sites, 0);
  for (std::size_t i = 0; i < n_sites; ++i) insert_bond(i, pair_of(i));
  recompute_total();
  draw_next_time();
}

void KmcEngine::insert_bond(std::size_t bond, std::size_t pair) {
  const std::uint32_t slot = count_[pair]++;
  bonds_[pair * config_.size() + slot] = static_cast<std::uint32_t>(bond);
  position_[bond] = slot;
  pair_[bond] = static_cast<std::uint32_t>(pair);
}

void KmcEngine::refresh_bond(std::size_t bond) {
  const std::size_t pair = pair_of(bond);
  if (pair == pair_[bond]) return;
  const std::size_t n_sites = config_.size();
  std::uint32_t* old_base = bonds_.data() + pair_[bond] * n_sites;
  const std::uint32_t moved = old_base[--count_[pair_[bond]]];
  old_base[position_[bond]] = moved;
  position_[moved] = position_[bond];
  const std::uint32_t slot = count_[pair]++;
  bonds_[pair * n_sites + slot] = static_cast<std::uint32_t>(bond);
  position_[bond] = slot;
  pair_[bond] = static_cast<std::uint32_t>(pair);
}

void KmcEngine::recompute_total() noexcept {
  double total = 0.0;
  for (std::size_t p : active_pairs_) total += static_cast<double>(count_[p]) * pair_rate_[p];
  total_rate_ = total;
}

void KmcEngine::draw_next_time() {
  next_time_ = total_rate_ > 0.0 ? time_ + rng_.exponential(total_rate_)
                                 : std::numeric_limits<double>::infinity();
}

Event KmcEngine::fire() {
  if (frozen()) throw Error(Errc::Frozen, "no reaction is enabled");

  const std::size_t none = n_species_ * n_species_;
  double target = rng_.uniform() * total_rate_;
  std::size_t pair = none;
  for (std::size_t p : active_pairs_) {
    const double weight = static_cast<double>(count_[p]) * pair_rate_[p];
    if (weight > 0.0 && target < weight) {
      pair = p;
      break;
    }
    target -= weight;
  }
  if (pair == none) {
    // rounding pushed the target past the last weight; take the last nonempty pair
    for (std::size_t p : active_pairs_) {
      if (count_[p] > 0) pair = p;
    }
    target = static_cast<double>(count_[pair]) * pair_rate_[pair];
  }
  const std::size_t n_sites = config_.size();
  const auto slot = std::min(static_cast<std::size_t>(target / pair_rate_[pair]),
                             static_cast<std::size_t>(count_[pair]) - 1);
  const std::size_t bond = bonds_[pair * n_sites + slot];

  const auto reactions = rates_->reactions(static_cast<Species>(pair / n_species_),
                                           static_cast<Species>(pair % n_species_));
  const Reaction* reaction = &reactions.front();
  if (reactions.size() > 1) {
    double r = rng_.uniform() * pair_rate_[pair];
    for (const auto& candidate : reactions) {
      reaction = &candidate;
      if (r < candidate.rate) break;
      r -= candidate.rate;
    }
  }

  const std::size_t prev = bond == 0 ? n_sites - 1 : bond - 1;
  const std::size_t next = bond + 1 == n_sites ? 0 : bond + 1;
  config_.set(bond, reaction->new_left);
  config_.set(next, reaction->new_right);
  refresh_bond(prev);
  refresh_bond(bond);
  refresh_bond(next);

  time_ = next_time_;
  ++events_;
  recompute_total();
  draw_next_time();
  return Event{bond, *reaction};
}

// ---------------------------------------------------------------------------

Trajectory simulate(const RingConfiguration& initial, const RateTable& rates, double horizon,
                    std::span<const double> checkpoints, std::uint64_t seed,
                    const SimulateOptions& options) {
  if (!(horizon >= 0.0)) throw Error(Errc::InvalidArgument, "horizon must be nonnegative");
  for (std::size_t j = 0; j < checkpoints.size(); ++j) {
    if (checkpoints[j] < 0.0 || checkpoints[j] > horizon) {
      throw Error(Errc::InvalidArgument, "checkpoint " + std::to_string(checkpoints[j]) +
                                             " outside [0, T]");
    }
    if (j > 0 && checkpoints[j] < checkpoints[j - 1]) {
      throw Error(Errc::InvalidArgument, "checkpoints must be sorted");
    }
  }

  Trajectory traj{initial, {}, {}, 0, horizon, 0.0, {}};
  traj.times.assign(checkpoints.begin(), checkpoints.end());
  traj.snapshots.reserve(checkpoints.size());

  KmcEngine engine(initial, rates, seed);
  std::size_t next_checkpoint = 0;
  while (true) {
    const double t_next = engine.next_event_time();
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] < t_next) {
      traj.snapshots.push_back(engine.configuration());
      ++next_checkpoint;
    }
    if (t_next > horizon) break;
    const Event e = engine.fire();
    if (options.record_events) {
      traj.events.push_back({engine.time(), static_cast<std::uint32_t>(e.bond),
                             e.reaction.new_left, e.reaction.new_right});
    }
    if (options.sink != nullptr) options.sink->on_event(engine.time(), e, engine.configuration());
  }
  traj.event_count = engine.event_count();
  traj.last_event_time = engine.time();
  if (options.sink != nullptr) options.sink->on_finish(horizon, engine.configuration());
  return traj;
}

}  // namespace hydrolimit

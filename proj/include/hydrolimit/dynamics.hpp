#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hydrolimit/lattice.hpp"
#include "hydrolimit/random.hpp"

namespace hydrolimit {

enum class ModelKind { asep, nspecies };

/// Raw fold rates for even alphabets: gamma[k] drives (k, k+n/2) -> (k+1, k+n/2+1),
/// delta[k] drives (k, k+n/2) -> (k-1, k+n/2-1). Not rescaled with N.
struct FoldRates {
  std::vector<double> gamma;
  std::vector<double> delta;
  friend bool operator==(const FoldRates&, const FoldRates&) = default;
};

/// Macroscopic coefficients from which finite-N rates are derived.
struct ScalingSpec {
  ModelKind model = ModelKind::asep;
  double lambda = 1.0;
  double mu = 0.0;        // asep drift
  Eigen::MatrixXd alpha;  // nspecies: antisymmetric, diagonal ignored
  std::optional<FoldRates> fold;

  [[nodiscard]] std::size_t species_count() const;
};

enum class ReactionKind : std::uint8_t { exchange, fold_forward, fold_backward };

/// A reaction enabled on a bond holding (left, right); it rewrites the bond to
/// (new_left, new_right) at `rate` (events per unit macroscopic time).
struct Reaction {
  Species new_left;
  Species new_right;
  double rate;
  ReactionKind kind;
};

class RateTable {
 public:
  /// `exchange(k, l)` is the rate of X_i^k X_{i+1}^l -> X_i^l X_{i+1}^k. Diagonal ignored.
  RateTable(std::size_t n_sites, Eigen::MatrixXd exchange, std::optional<FoldRates> fold = {});

  [[nodiscard]] std::size_t sites() const noexcept { return n_sites_; }
  [[nodiscard]] std::size_t species_count() const noexcept {
    return static_cast<std::size_t>(exchange_.rows());
  }
  [[nodiscard]] const Eigen::MatrixXd& exchange() const noexcept { return exchange_; }
  [[nodiscard]] double exchange(std::size_t k, std::size_t l) const { return exchange_(k, l); }
  [[nodiscard]] const std::optional<FoldRates>& fold() const noexcept { return fold_; }

  /// Reactions enabled on a bond holding (left, right).
  [[nodiscard]] std::span<const Reaction> reactions(Species left, Species right) const {
    return reactions_[left * species_count() + right];
  }
  /// Sum of rates of reactions(left, right).
  [[nodiscard]] double pair_rate(Species left, Species right) const {
    return pair_rate_[left * species_count() + right];
  }

 private:
  std::size_t n_sites_;
  Eigen::MatrixXd exchange_;
  std::optional<FoldRates> fold_;
  std::vector<std::vector<Reaction>> reactions_;
  std::vector<double> pair_rate_;
};

/// asep: rate(A->right) = lambda N^2 + mu N / 2, rate(A->left) = lambda N^2 - mu N / 2.
/// nspecies: exchange(k,l) = lambda N^2 exp(alpha(k,l) / 2N), so that
/// N log(exchange(k,l) / exchange(l,k)) = alpha(k,l) at every N.
RateTable build_rate_table(const ScalingSpec& spec, std::size_t n_sites);

struct Event {
  std::size_t bond;  // sites (bond, bond+1 mod N)
  Reaction reaction;
};

struct EventSet {
  std::vector<Event> events;
  double total_rate = 0.0;
};

/// Every reaction enabled by `config`, bond by bond.
EventSet active_events(const RingConfiguration& config, const RateTable& rates);

void apply_event(RingConfiguration& config, const Event& event);

/// Reference single step: enumerates all events, draws dt ~ Exp(total) then an event
/// proportionally to rate. Throws Frozen when nothing is enabled.
std::pair<RingConfiguration, double> kmc_step(const RingConfiguration& config,
                                              const RateTable& rates, Rng& rng);

/// Event-driven simulator with per-pair bond buckets: O(n^2) selection, O(1) update.
class KmcEngine {
 public:
  KmcEngine(RingConfiguration initial, const RateTable& rates, std::uint64_t seed);

  [[nodiscard]] double time() const noexcept { return time_; }
  [[nodiscard]] const RingConfiguration& configuration() const noexcept { return config_; }
  [[nodiscard]] double total_rate() const noexcept { return total_rate_; }
  [[nodiscard]] std::uint64_t event_count() const noexcept { return events_; }
  [[nodiscard]] bool frozen() const noexcept { return total_rate_ <= 0.0; }
  /// Time of the pending event; +inf when frozen.
  [[nodiscard]] double next_event_time() const noexcept { return next_time_; }

  /// Applies the pending event, advancing time to next_event_time(). Throws Frozen.
  Event fire();

 private:
  void insert_bond(std::size_t bond, std::size_t pair);
  void refresh_bond(std::size_t bond);
  [[nodiscard]] std::size_t pair_of(std::size_t bond) const noexcept {
    const std::size_t right = bond + 1 == config_.size() ? 0 : bond + 1;
    return config_[bond] * n_species_ + config_[right];
  }
  void recompute_total() noexcept;
  void draw_next_time();

  RingConfiguration config_;
  const RateTable* rates_;
  Rng rng_;
  std::size_t n_species_;
  // bonds grouped by the ordered species pair they hold: pair p owns
  // bonds_[p * N, p * N + count_[p])
  std::vector<std::uint32_t> bonds_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> position_;  // bond -> slot in its pair
  std::vector<std::uint32_t> pair_;      // bond -> pair
  std::vector<double> pair_rate_;
  std::vector<std::size_t> active_pairs_;
  double total_rate_ = 0.0;
  double time_ = 0.0;
  double next_time_ = std::numeric_limits<double>::infinity();
  std::uint64_t events_ = 0;
};

struct EventRecord {
  double time;
  std::uint32_t bond;
  Species new_left;
  Species new_right;
};

/// Receives every event as it happens (after the configuration is updated).
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_event(double time, const Event& event, const RingConfiguration& after) = 0;
  virtual void on_finish(double /*horizon*/, const RingConfiguration& /*final*/) {}
};

struct SimulateOptions {
  bool record_events = false;
  EventSink* sink = nullptr;
};

struct Trajectory {
  RingConfiguration initial;
  std::vector<double> times;
  std::vector<RingConfiguration> snapshots;  // state at times[j] (right-continuous)
  std::uint64_t event_count = 0;
  double horizon = 0.0;
  double last_event_time = 0.0;
  std::vector<EventRecord> events;  // filled when record_events
};

/// Runs the chain on [0, T] and records the configuration at each checkpoint. A frozen
/// chain holds its state to T.
Trajectory simulate(const RingConfiguration& initial, const RateTable& rates, double horizon,
                    std::span<const double> checkpoints, std::uint64_t seed,
                    const SimulateOptions& options = {});

}  // namespace hydrolimit

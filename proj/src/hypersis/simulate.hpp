#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "hypersis/hypergraph.hpp"
#include "hypersis/rng.hpp"

namespace hypersis {

enum class InitialRule {
  explicit_state,    // use SimConfig::initial.state in every run
  shared_fraction,   // one random set of round(fraction*N) nodes, shared by all runs
  per_run_fraction,  // a fresh random set per run
};

struct InitialCondition {
  InitialRule rule = InitialRule::shared_fraction;
  double fraction = 0.1;
  EpidemicState state;
};

struct SimConfig {
  double dt = 0.01;
  double t_max = 10.0;
  EpidemicParams params;
  InitialCondition initial;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  double sampling_interval = 0.1;
  bool keep_runs = false;

  void validate() const;
  std::size_t num_steps() const;
  std::size_t sample_stride() const;
  std::size_t num_samples() const { return num_steps() / sample_stride() + 1; }
};

/// Event probabilities above this make the time discretisation visible.
inline constexpr double kCoarseStepProbability = 0.1;

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> mean_prevalence;
  std::vector<double> std_err;                  // empty for deterministic engines
  std::vector<std::vector<double>> per_run;      // runs x samples, only with keep_runs
  double max_event_probability = 0.0;
  std::optional<SimConfig> config;

  std::size_t size() const { return times.size(); }
  bool coarse_step() const { return max_event_probability > kCoarseStepProbability; }
};

enum class GraphMode { linear, discounted };

/// Per-node infection pressure on a hypergraph, kept current under flips.
class HypergraphPressure {
 public:
  HypergraphPressure(const Hypergraph& h, const InfectionFunction& f) : h_(&h), f_(f) {}

  void reset(const EpidemicState& s);
  double pressure(NodeId node) const {
    double total = 0.0;
    for (EdgeId j : h_->memberships(node)) total += f_(static_cast<double>(counts_[j]));
    return total;
  }
  void flip(NodeId node, bool now_infected);

 private:
  const Hypergraph* h_;
  InfectionFunction f_;
  std::vector<std::uint32_t> counts_;
};

/// Weighted infected-neighbour count W_i on a graph; pressure is W_i or f(W_i).
class GraphPressure {
 public:
  GraphPressure(const WeightedGraph& g, const InfectionFunction& f, GraphMode mode)
      : g_(&g), f_(f), mode_(mode) {}

  void reset(const EpidemicState& s);
  double pressure(NodeId node) const {
    const auto w = static_cast<double>(weighted_[node]);
    return mode_ == GraphMode::linear ? w : f_(w);
  }
  void flip(NodeId node, bool now_infected);

 private:
  const WeightedGraph* g_;
  InfectionFunction f_;
  GraphMode mode_;
  std::vector<std::uint64_t> weighted_;
};

/// Infection rate of a susceptible node on a weighted graph.
double graph_infection_rate(const WeightedGraph& g, const EpidemicState& s, NodeId node,
                            const EpidemicParams& p, GraphMode mode);

/// Probability that a susceptible node with rate `rate` is infected within `dt`.
inline double infection_probability(double rate, double dt) { return 1.0 - std::exp(-rate * dt); }

/// One synchronous update of the whole state. One uniform is drawn per node in
/// node order, whatever that node's state.
EpidemicState step(const Hypergraph& h, const EpidemicState& s, const SimConfig& cfg, Rng& rng);
EpidemicState graph_step(const WeightedGraph& g, const EpidemicState& s, const SimConfig& cfg,
                         GraphMode mode, Rng& rng);

/// Initial state of run `run_index` under cfg.initial.
EpidemicState initial_state(const SimConfig& cfg, std::size_t num_nodes, std::size_t run_index);

TimeSeries run(const Hypergraph& h, const SimConfig& cfg);
TimeSeries graph_run(const WeightedGraph& g, const SimConfig& cfg, GraphMode mode);

/// Runs `cfg` under two thresholds with identical random streams and reports
/// whether the infected set under `c_high` contained the one under `c_low` at
/// every step of every run.
struct CouplingReport {
  std::size_t runs = 0;
  std::size_t steps = 0;       // per run
  std::size_t violations = 0;  // (run, step) pairs where containment failed
  double mean_final_low = 0.0;
  double mean_final_high = 0.0;
};
CouplingReport coupled_threshold_runs(const Hypergraph& h, const SimConfig& cfg, double c_low,
                                      double c_high);

struct SteadyState {
  double mean = 0.0;
  double std_err = 0.0;
};

/// Average over the trailing `window` fraction of samples, window in (0, 1].
SteadyState steady_state_estimate(const TimeSeries& ts, double window);

}  // namespace hypersis

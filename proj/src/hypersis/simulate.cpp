#include "hypersis/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "hypersis/errors.hpp"

namespace hypersis {

namespace {

constexpr std::uint64_t kInitialStream = 0xfeedfacecafebeefULL;

std::size_t rounded_ratio(double num, double den) {
  return static_cast<std::size_t>(std::llround(num / den));
}

}  // namespace

void SimConfig::validate() const {
  params.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be > 0");
  if (!(t_max >= dt) || !std::isfinite(t_max)) throw ValidationError("t_max must be >= dt");
  if (runs < 1) throw ValidationError("runs must be >= 1");
  if (!(sampling_interval >= dt * (1.0 - 1e-9)))
    throw ValidationError("sampling_interval must be >= dt");
  const auto stride = rounded_ratio(sampling_interval, dt);
  if (std::abs(static_cast<double>(stride) * dt - sampling_interval) > 1e-9 * sampling_interval)
    throw ValidationError("sampling_interval must be a multiple of dt");
  if (initial.rule != InitialRule::explicit_state &&
      !(initial.fraction >= 0.0 && initial.fraction <= 1.0))
    throw ValidationError("initial infected fraction must lie in [0, 1]");
}

std::size_t SimConfig::num_steps() const {
  return static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
}

std::size_t SimConfig::sample_stride() const {
  return std::max<std::size_t>(1, rounded_ratio(sampling_interval, dt));
}

void HypergraphPressure::reset(const EpidemicState& s) { counts_ = edge_infected_counts(*h_, s); }

void HypergraphPressure::flip(NodeId node, bool now_infected) {
  for (EdgeId j : h_->memberships(node)) {
    if (now_infected)
      ++counts_[j];
    else
      --counts_[j];
  }
}

void GraphPressure::reset(const EpidemicState& s) {
  if (s.size() != g_->num_nodes()) throw ValidationError("state size does not match graph");
  weighted_.assign(g_->num_nodes(), 0);
  for (NodeId v = 0; v < g_->num_nodes(); ++v)
    if (s.infected(v))
      for (const auto& nb : g_->neighbours(v)) weighted_[nb.node] += nb.weight;
}

void GraphPressure::flip(NodeId node, bool now_infected) {
  for (const auto& nb : g_->neighbours(node)) {
    if (now_infected)
      weighted_[nb.node] += nb.weight;
    else
      weighted_[nb.node] -= nb.weight;
  }
}

double graph_infection_rate(const WeightedGraph& g, const EpidemicState& s, NodeId node,
                            const EpidemicParams& p, GraphMode mode) {
  if (s.size() != g.num_nodes()) throw ValidationError("state size does not match graph");
  if (node >= g.num_nodes()) throw ValidationError("node id out of range");
  if (s.infected(node)) throw ValidationError("graph_infection_rate requires a susceptible node");
  std::uint64_t w = 0;
  for (const auto& nb : g.neighbours(node))
    if (s.infected(nb.node)) w += nb.weight;
  const auto wd = static_cast<double>(w);
  return p.tau * (mode == GraphMode::linear ? wd : p.f(wd));
}

namespace {

struct StepConstants {
  double tau;
  double dt;
  double survive;  // exp(-gamma dt): an infected node recovers iff u >= survive
};

StepConstants step_constants(const SimConfig& cfg) {
  return {cfg.params.tau, cfg.dt, std::exp(-cfg.params.gamma * cfg.dt)};
}

// Decides every node against the pre-step state, then applies the flips. The
// recovery test uses the upper tail of the same uniform the infection test
// uses the lower tail of, so raising the infection pressure can only enlarge
// the infected set (given p_infect + p_recover <= 1).
template <class Pressure>
void advance(Pressure& model, EpidemicState& s, const StepConstants& k, Rng& rng,
             std::vector<NodeId>& flips, double& max_infect_prob) {
  flips.clear();
  const auto n = static_cast<NodeId>(s.size());
  for (NodeId i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    if (s.infected(i)) {
      if (u >= k.survive) flips.push_back(i);
    } else {
      const double rate = k.tau * model.pressure(i);
      if (rate > 0.0) {
        const double prob = infection_probability(rate, k.dt);
        max_infect_prob = std::max(max_infect_prob, prob);
        if (u < prob) flips.push_back(i);
      }
    }
  }
  for (NodeId i : flips) {
    const bool now_infected = !s.infected(i);
    s.set(i, now_infected);
    model.flip(i, now_infected);
  }
}

EpidemicState random_subset(std::size_t n, double fraction, std::uint64_t seed) {
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<NodeId> nodes(n);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  Rng rng = make_rng(seed);
  // Partial Fisher-Yates: the first `count` entries become a uniform subset.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_below(rng, n - i);
    std::swap(nodes[i], nodes[j]);
  }
  return EpidemicState::from_infected(n, std::span<const NodeId>(nodes.data(), count));
}

// Integer accumulators: exact and independent of the order runs finish in.
struct Accumulator {
  std::vector<std::uint64_t> sum;
  std::vector<std::uint64_t> sum_sq;
  double max_prob = 0.0;
  explicit Accumulator(std::size_t samples) : sum(samples, 0), sum_sq(samples, 0) {}
};

template <class MakePressure>
TimeSeries run_ensemble(std::size_t num_nodes, const SimConfig& cfg, MakePressure make_pressure) {
  cfg.validate();
  if (cfg.initial.rule == InitialRule::explicit_state && cfg.initial.state.size() != num_nodes)
    throw ValidationError("initial state size does not match the network");

  const std::size_t steps = cfg.num_steps();
  const std::size_t stride = cfg.sample_stride();
  const std::size_t samples = steps / stride + 1;
  const StepConstants k = step_constants(cfg);

  TimeSeries ts;
  ts.config = cfg;
  ts.times.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) ts.times[s] = static_cast<double>(s * stride) * cfg.dt;
  if (cfg.keep_runs) ts.per_run.assign(cfg.runs, std::vector<double>(samples, 0.0));

  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, cfg.runs);
  std::vector<Accumulator> partial(workers, Accumulator(samples));

  auto worker = [&](std::size_t w) {
    auto model = make_pressure();
    Accumulator& acc = partial[w];
    std::vector<NodeId> flips;
    const EpidemicState shared_start =
        cfg.initial.rule == InitialRule::per_run_fraction ? EpidemicState{} : initial_state(cfg, num_nodes, 0);
    for (std::size_t r = w; r < cfg.runs; r += workers) {
      EpidemicState s = cfg.initial.rule == InitialRule::per_run_fraction
                            ? initial_state(cfg, num_nodes, r)
                            : shared_start;
      model.reset(s);
      Rng rng = make_rng(derive_seed(cfg.seed, r));
      auto record = [&](std::size_t sample) {
        const std::uint64_t c = s.infected_count();
        acc.sum[sample] += c;
        acc.sum_sq[sample] += c * c;
        if (cfg.keep_runs) ts.per_run[r][sample] = static_cast<double>(c);
      };
      record(0);
      for (std::size_t t = 1; t <= steps; ++t) {
        advance(model, s, k, rng, flips, acc.max_prob);
        if (t % stride == 0) record(t / stride);
      }
    }
  };

  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
  }

  Accumulator total(samples);
  for (const auto& p : partial) {
    for (std::size_t s = 0; s < samples; ++s) {
      total.sum[s] += p.sum[s];
      total.sum_sq[s] += p.sum_sq[s];
    }
    total.max_prob = std::max(total.max_prob, p.max_prob);
  }
  const auto runs = static_cast<double>(cfg.runs);
  ts.mean_prevalence.resize(samples);
  ts.std_err.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    ts.mean_prevalence[s] = static_cast<double>(total.sum[s]) / runs;
    if (cfg.runs > 1) {
      using wide = unsigned __int128;
      const wide r = cfg.runs;
      const wide spread = r * total.sum_sq[s] - wide(total.sum[s]) * total.sum[s];
      const double var = static_cast<double>(spread) / (runs * (runs - 1.0));
      ts.std_err[s] = std::sqrt(var / runs);
    } else {
      ts.std_err[s] = 0.0;
    }
  }
  ts.max_event_probability = std::max(total.max_prob, 1.0 - k.survive);
  return ts;
}

}  // namespace

EpidemicState initial_state(const SimConfig& cfg, std::size_t num_nodes, std::size_t run_index) {
  switch (cfg.initial.rule) {
    case InitialRule::explicit_state:
      if (cfg.initial.state.size() != num_nodes)
        throw ValidationError("initial state size does not match the network");
      return cfg.initial.state;
    case InitialRule::shared_fraction:
      return random_subset(num_nodes, cfg.initial.fraction, derive_seed(cfg.seed, kInitialStream));
    case InitialRule::per_run_fraction:
      return random_subset(num_nodes, cfg.initial.fraction,
                           derive_seed(cfg.seed ^ kInitialStream, run_index));
  }
  throw ValidationError("unknown initial rule");
}

EpidemicState step(const Hypergraph& h, const EpidemicState& s, const SimConfig& cfg, Rng& rng) {
  if (s.size() != h.num_nodes()) throw ValidationError("state size does not match hypergraph");
  HypergraphPressure model(h, cfg.params.f);
  model.reset(s);
  EpidemicState next = s;
  std::vector<NodeId> flips;
  double max_prob = 0.0;
  advance(model, next, step_constants(cfg), rng, flips, max_prob);
  return next;
}

EpidemicState graph_step(const WeightedGraph& g, const EpidemicState& s, const SimConfig& cfg,
                         GraphMode mode, Rng& rng) {
  GraphPressure model(g, cfg.params.f, mode);
  model.reset(s);
  EpidemicState next = s;
  std::vector<NodeId> flips;
  double max_prob = 0.0;
  advance(model, next, step_constants(cfg), rng, flips, max_prob);
  return next;
}

TimeSeries run(const Hypergraph& h, const SimConfig& cfg) {
  return run_ensemble(h.num_nodes(), cfg, [&] { return HypergraphPressure(h, cfg.params.f); });
}

TimeSeries graph_run(const WeightedGraph& g, const SimConfig& cfg, GraphMode mode) {
  return run_ensemble(g.num_nodes(), cfg, [&] { return GraphPressure(g, cfg.params.f, mode); });
}

CouplingReport coupled_threshold_runs(const Hypergraph& h, const SimConfig& cfg, double c_low,
                                      double c_high) {
  cfg.validate();
  const InfectionFunction f_low(c_low);
  const InfectionFunction f_high(c_high);
  const StepConstants k = step_constants(cfg);
  const std::size_t steps = cfg.num_steps();
  CouplingReport report;
  report.runs = cfg.runs;
  report.steps = steps;
  std::vector<NodeId> flips;
  double max_prob = 0.0;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    EpidemicState low = initial_state(cfg, h.num_nodes(), r);
    EpidemicState high = low;
    HypergraphPressure model_low(h, f_low);
    HypergraphPressure model_high(h, f_high);
    model_low.reset(low);
    model_high.reset(high);
    Rng rng_low = make_rng(derive_seed(cfg.seed, r));
    Rng rng_high = rng_low;
    for (std::size_t t = 1; t <= steps; ++t) {
      advance(model_low, low, k, rng_low, flips, max_prob);
      advance(model_high, high, k, rng_high, flips, max_prob);
      for (NodeId i = 0; i < h.num_nodes(); ++i)
        if (low.infected(i) && !high.infected(i)) {
          ++report.violations;
          break;
        }
    }
    report.mean_final_low += static_cast<double>(low.infected_count());
    report.mean_final_high += static_cast<double>(high.infected_count());
  }
  report.mean_final_low /= static_cast<double>(cfg.runs);
  report.mean_final_high /= static_cast<double>(cfg.runs);
  return report;
}

SteadyState steady_state_estimate(const TimeSeries& ts, double window) {
  if (!(window > 0.0 && window <= 1.0)) throw ValidationError("window must lie in (0, 1]");
  const std::size_t n = ts.size();
  if (n == 0) throw ValidationError("steady state of an empty series");
  const auto count = std::min<std::size_t>(
      n, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)))));
  const std::size_t first = n - count;
  const auto cnt = static_cast<double>(count);
  SteadyState out;

  if (!ts.per_run.empty()) {
    // Time average of each run, then the spread of those averages across runs.
    std::vector<double> run_means;
    run_means.reserve(ts.per_run.size());
    for (const auto& row : ts.per_run)
      run_means.push_back(std::accumulate(row.begin() + static_cast<std::ptrdiff_t>(first), row.end(), 0.0) / cnt);
    const auto r = static_cast<double>(run_means.size());
    out.mean = std::accumulate(run_means.begin(), run_means.end(), 0.0) / r;
    if (run_means.size() > 1) {
      double ss = 0.0;
      for (double m : run_means) ss += (m - out.mean) * (m - out.mean);
      out.std_err = std::sqrt(ss / (r - 1.0) / r);
    }
    return out;
  }

  double sum = 0.0;
  double var = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    sum += ts.mean_prevalence[i];
    if (!ts.std_err.empty()) var += ts.std_err[i] * ts.std_err[i];
  }
  out.mean = sum / cnt;
  // Samples are treated as independent; correlated samples make this optimistic.
  out.std_err = std::sqrt(var) / cnt;
  return out;
}

}  // namespace hypersis

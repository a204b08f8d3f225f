#include <doctest.h>

#include <cmath>

#include "hypersis/errors.hpp"
#include "hypersis/generators.hpp"
#include "hypersis/simulate.hpp"

using namespace hypersis;

namespace {

SimConfig config(double tau, double gamma, double c) {
  SimConfig cfg;
  cfg.params = EpidemicParams(tau, gamma, c);
  cfg.dt = 0.01;
  cfg.t_max = 2.0;
  cfg.sampling_interval = 0.1;
  cfg.runs = 20;
  cfg.seed = 5;
  return cfg;
}

Hypergraph households(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return gen_bi_uniform({100, 5, 10}, rng);
}

}  // namespace

TEST_CASE("config validation") {
  auto cfg = config(1, 1, 1);
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.num_steps() == 200);
  CHECK(cfg.sample_stride() == 10);
  CHECK(cfg.num_samples() == 21);
  cfg.sampling_interval = 0.015;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = config(1, 1, 1);
  cfg.dt = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = config(1, 1, 1);
  cfg.runs = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = config(1, 1, 1);
  cfg.initial.fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("initial conditions") {
  auto cfg = config(1, 1, 1);
  cfg.initial.fraction = 0.25;
  const auto a = initial_state(cfg, 100, 0);
  CHECK(a.infected_count() == 25);
  CHECK(initial_state(cfg, 100, 7) == a);
  cfg.initial.rule = InitialRule::per_run_fraction;
  CHECK(initial_state(cfg, 100, 0).infected_count() == 25);
  CHECK(initial_state(cfg, 100, 0) != initial_state(cfg, 100, 1));
  cfg.initial.rule = InitialRule::explicit_state;
  cfg.initial.state = EpidemicState::from_string("ISIS");
  CHECK(initial_state(cfg, 4, 3).to_string() == "ISIS");
}

TEST_CASE("no dynamics without rates") {
  const auto h = households(1);
  auto cfg = config(0.0, 0.0, 1.0);
  const auto ts = run(h, cfg);
  for (double v : ts.mean_prevalence) CHECK(v == 10.0);
  for (double v : ts.std_err) CHECK(v == 0.0);
}

TEST_CASE("pure recovery decays like exp(-gamma t)") {
  const auto h = households(1);
  auto cfg = config(0.0, 1.0, 1.0);
  cfg.initial.fraction = 1.0;
  cfg.runs = 400;
  const auto ts = run(h, cfg);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double expected = 100.0 * std::exp(-ts.times[i]);
    if (ts.std_err[i] > 0) CHECK(std::abs(ts.mean_prevalence[i] - expected) / ts.std_err[i] < 5.0);
  }
}

TEST_CASE("ensembles are reproducible and runs do not depend on the ensemble size") {
  const auto h = households(2);
  auto cfg = config(0.2, 1.0, 3.0);
  cfg.keep_runs = true;
  cfg.runs = 3;
  const auto small = run(h, cfg);
  cfg.runs = 9;
  const auto big = run(h, cfg);
  const auto again = run(h, cfg);
  REQUIRE(big.per_run.size() == 9);
  for (std::size_t r = 0; r < 3; ++r) CHECK(small.per_run[r] == big.per_run[r]);
  CHECK(big.mean_prevalence == again.mean_prevalence);
  CHECK(big.std_err == again.std_err);
  cfg.seed = 6;
  CHECK(run(h, cfg).per_run != big.per_run);
}

TEST_CASE("graph simulation on the clique expansion replays the hypergraph run when f is linear") {
  const auto h = households(3);
  auto cfg = config(0.15, 1.0, 10.0);
  cfg.keep_runs = true;
  const auto a = run(h, cfg);
  const auto b = graph_run(clique_expand(h), cfg, GraphMode::linear);
  CHECK(a.per_run == b.per_run);
  CHECK(a.mean_prevalence == b.mean_prevalence);
}

TEST_CASE("graph infection rate modes") {
  const Hypergraph h(3, {{0, 1, 2}, {0, 1}});
  const auto g = clique_expand(h);
  const auto s = EpidemicState::from_string("SII");
  const EpidemicParams p(0.5, 1.0, 2.0);
  CHECK(graph_infection_rate(g, s, 0, p, GraphMode::linear) == 0.5 * 3);
  CHECK(graph_infection_rate(g, s, 0, p, GraphMode::discounted) == 0.5 * 2);
}

TEST_CASE("larger c never shrinks the infected set under a shared stream") {
  const auto h = households(4);
  auto cfg = config(0.3, 1.0, 1.0);
  cfg.runs = 10;
  const auto rep = coupled_threshold_runs(h, cfg, 1.0, 4.0);
  CHECK(rep.runs == 10);
  CHECK(rep.steps == 200);
  CHECK(rep.violations == 0);
  CHECK(rep.mean_final_high >= rep.mean_final_low);
}

TEST_CASE("coarse steps are flagged") {
  const auto h = households(1);
  auto cfg = config(0.2, 1.0, 5.0);
  cfg.dt = 0.5;
  cfg.sampling_interval = 0.5;
  CHECK(run(h, cfg).coarse_step());
  cfg = config(0.2, 1.0, 5.0);
  cfg.dt = 0.001;
  cfg.t_max = 0.2;
  CHECK(!run(h, cfg).coarse_step());
}

TEST_CASE("steady state estimate") {
  TimeSeries ts;
  ts.times = {0, 1, 2, 3, 4};
  ts.mean_prevalence = {0, 0, 0, 4, 6};
  ts.std_err = {0, 0, 0, 1, 1};
  const auto s = steady_state_estimate(ts, 0.4);
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.std_err == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK_THROWS_AS(steady_state_estimate(ts, 0.0), ValidationError);
  CHECK_THROWS_AS(steady_state_estimate(TimeSeries{}, 0.5), ValidationError);
}

#include <doctest.h>

#include <cmath>

#include "hypersis/errors.hpp"
#include "hypersis/meanfield.hpp"

using namespace hypersis;

namespace {

std::vector<double> grid(double t_max, double step) {
  std::vector<double> g;
  for (int i = 0; i * step <= t_max + 1e-12; ++i) g.push_back(i * step);
  return g;
}

double logistic(double n, double beta, double gamma, double i0, double t) {
  const double k = n * (1.0 - gamma / beta);
  return k / (1.0 + (k / i0 - 1.0) * std::exp(-(beta - gamma) * t));
}

}  // namespace

TEST_CASE("closure validation") {
  const EpidemicParams p(0.1, 1.0, 2.0);
  CHECK_THROWS_AS(MeanFieldModel::regular(100, 0, 5, p), ValidationError);
  CHECK_THROWS_AS(MeanFieldModel::regular(100, 3, 1, p), ValidationError);
  CHECK_THROWS_AS(MeanFieldModel::bi_uniform(100, 1, 5, p), ValidationError);
  CHECK_THROWS_AS(MeanFieldModel::bi_uniform(0, 2, 5, p), ValidationError);
  const auto m = MeanFieldModel::regular(100, 3, 5, p);
  CHECK_THROWS_AS(m.rhs(-1), ValidationError);
  CHECK_THROWS_AS(m.rhs(101), ValidationError);
  CHECK(m.rhs(0) == 0.0);
  CHECK(m.rhs(100) == -100.0);
}

TEST_CASE("right-hand sides by hand") {
  const EpidemicParams p(0.2, 1.0, 1.5);
  const auto bu = MeanFieldModel::bi_uniform(100, 3, 6, p);
  // x = 0.4: f(0.8) + f(2.0) = 0.8 + 1.5.
  CHECK(bu.rhs(40) == doctest::Approx(0.2 * 60 * 2.3 - 40));
  CHECK(bu.linear_rhs(40) == doctest::Approx(0.2 * 60 * 2.8 - 40));
  CHECK(bu.initial_growth_rate() == doctest::Approx(0.2 * 7));
  const auto kinks = bu.kinks();
  REQUIRE(kinks.size() == 2);
  CHECK(kinks[0] == doctest::Approx(1.5 * 100 / 5));
  CHECK(kinks[1] == doctest::Approx(1.5 * 100 / 2));

  const auto reg = MeanFieldModel::regular(100, 4, 6, p);
  CHECK(reg.rhs(20) == doctest::Approx(0.2 * 80 * 4 * 1.0 - 20));
  CHECK(reg.rhs(50) == doctest::Approx(0.2 * 50 * 4 * 1.5 - 50));
  CHECK(reg.kinks() == std::vector<double>{30.0});
}

TEST_CASE("unsaturated regular closure is logistic") {
  const double n = 1000, d = 4, e = 6, tau = 0.1, gamma = 1.0;
  const EpidemicParams p(tau, gamma, 5.0);
  const auto m = MeanFieldModel::regular(n, d, e, p);
  const auto g = grid(20.0, 0.1);
  const auto ts = integrate(m, 10.0, g);
  const double beta = tau * d * (e - 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double exact = logistic(n, beta, gamma, 10.0, g[i]);
    CHECK(std::abs(ts.mean_prevalence[i] - exact) / exact < 1e-8);
  }
  CHECK(ts.std_err.empty());
  const auto fps = fixed_points(m);
  REQUIRE(fps.size() == 2);
  CHECK(fps[0].infected == 0.0);
  CHECK(fps[0].stability == Stability::unstable);
  CHECK(std::abs(fps[1].infected - n * (1 - gamma / beta)) < 1e-8 * n);
  CHECK(fps[1].stability == Stability::stable);
}

TEST_CASE("saturated steady state") {
  // With f saturated, tau d c (N - I) = gamma I.
  const EpidemicParams p(0.03, 1.0, 10.0);
  const auto m = MeanFieldModel::regular(500, 16, 20, p);
  const auto fps = fixed_points(m);
  REQUIRE(fps.size() == 2);
  const double expected = 0.03 * 16 * 10 * 500 / (1 + 0.03 * 16 * 10);
  CHECK(fps[1].infected == doctest::Approx(expected).epsilon(1e-9));
  CHECK(fps[1].stability == Stability::stable);
  const auto ts = integrate(m, 50, grid(30, 1.0));
  CHECK(ts.mean_prevalence.back() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("below threshold the disease-free state is the only fixed point") {
  const EpidemicParams p(0.01, 1.0, 2.0);
  const auto m = MeanFieldModel::bi_uniform(500, 5, 10, p);
  const auto fps = fixed_points(m);
  REQUIRE(fps.size() == 1);
  CHECK(fps[0].infected == 0.0);
  CHECK(fps[0].stability == Stability::stable);
  const auto ts = integrate(m, 100, grid(50, 1.0));
  CHECK(ts.mean_prevalence.back() < 1.0);
  CHECK(std::string(to_string(Stability::semi_stable)) == "semi-stable");
}

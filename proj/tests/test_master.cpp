#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hypersis/errors.hpp"
#include "hypersis/master.hpp"

using namespace hypersis;

namespace {

using Dense = std::vector<std::vector<double>>;

// Blocks of the 4-node example with symbols t1 = tau f(1), t2 = tau f(2), g = gamma,
// in the class ordering SSSI SSIS SISS ISSS / SSII SISI SIIS ISSI ISIS IISS / SIII ISII IISI IIIS.
struct Golden {
  Dense a2, a3, a4, c0, c1, c2, c3;
};

Golden golden(double t1, double t2, double g) {
  Golden x;
  x.a2 = {{t1, t1, 0, 0}, {t1, 0, t1, 0}, {0, t1, t1, 0}, {t1, 0, 0, t1}, {0, 0, 0, 0}, {0, 0, t1, t1}};
  x.a3 = {{2 * t1, 2 * t1, 2 * t1, 0, 0, 0},
          {t1, 0, 0, t1, 2 * t1, 0},
          {0, t2, 0, t2, 0, t2},
          {0, 0, t1, 0, 2 * t1, t1}};
  x.a4 = {{t2, t1 + t2, 2 * t1, t1 + t2}};
  x.c0 = {{g, g, g, g}};
  x.c1 = {{g, g, 0, g, 0, 0}, {g, 0, g, 0, g, 0}, {0, g, g, 0, 0, g}, {0, 0, 0, g, g, g}};
  x.c2 = {{g, g, 0, 0}, {g, 0, g, 0}, {g, 0, 0, g}, {0, g, g, 0}, {0, g, 0, g}, {0, 0, g, g}};
  x.c3 = {{g}, {g}, {g}, {g}};
  return x;
}

void check_equal(const SparseBlock& b, const Dense& expected) {
  REQUIRE(b.rows == expected.size());
  REQUIRE(b.cols == expected.front().size());
  CHECK(b.dense() == expected);
}

std::vector<double> column_sums(const Dense& m) {
  std::vector<double> s(m.front().size(), 0.0);
  for (const auto& row : m)
    for (std::size_t j = 0; j < row.size(); ++j) s[j] += row[j];
  return s;
}

// exp(P t) x by scaling and squaring of a Taylor polynomial.
std::vector<double> expm_apply(const Dense& p, double t, const std::vector<double>& x) {
  const std::size_t n = p.size();
  double norm = 0.0;
  for (const auto& row : p) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    norm = std::max(norm, s);
  }
  int squarings = 0;
  double scale = t;
  while (norm * std::abs(scale) > 0.05) {
    scale /= 2.0;
    ++squarings;
  }
  auto mul = [&](const Dense& a, const Dense& b) {
    Dense c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
  };
  Dense e(n, std::vector<double>(n, 0.0)), term(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) e[i][i] = term[i][i] = 1.0;
  Dense ps = p;
  for (auto& row : ps)
    for (double& v : row) v *= scale;
  for (int k = 1; k <= 20; ++k) {
    term = mul(term, ps);
    for (auto& row : term)
      for (double& v : row) v /= k;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e[i][j] += term[i][j];
  }
  for (int s = 0; s < squarings; ++s) e = mul(e, e);
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += e[i][j] * x[j];
  return y;
}

}  // namespace

TEST_CASE("state ordering for four nodes") {
  const StateIndex idx(4);
  CHECK(idx.num_states() == 16);
  const char* expected[] = {"SSSS", "SSSI", "SSIS", "SISS", "ISSS", "SSII", "SISI", "SIIS",
                            "ISSI", "ISIS", "IISS", "SIII", "ISII", "IISI", "IIIS", "IIII"};
  for (std::size_t g = 0; g < 16; ++g) {
    CHECK(idx.state_of(idx.word(g)).to_string() == expected[g]);
    CHECK(idx.global(idx.word(g)) == g);
  }
  CHECK(idx.class_size(2) == 6);
  CHECK(idx.class_offset(3) == 11);
  CHECK(idx.locate(idx.word_of(EpidemicState::from_string("SISI"))) == std::pair<std::size_t, std::size_t>{2, 1});
  CHECK(idx.node_bit(0) == 8);
}

TEST_CASE("example blocks match the hand-derived matrices") {
  const auto h = example_hypergraph();
  for (double c : {1.0, 2.0}) {
    const EpidemicParams p(0.75, 1.25, c);
    const auto ms = build_master(h, p);
    const auto x = golden(0.75 * std::min(1.0, c), 0.75 * std::min(2.0, c), 1.25);
    CHECK(ms.infection(1).entries.empty());
    CHECK(ms.infection(1).rows == 4);
    check_equal(ms.infection(2), x.a2);
    check_equal(ms.infection(3), x.a3);
    check_equal(ms.infection(4), x.a4);
    check_equal(ms.recovery(0), x.c0);
    check_equal(ms.recovery(1), x.c1);
    check_equal(ms.recovery(2), x.c2);
    check_equal(ms.recovery(3), x.c3);
    CHECK(ms.diagonal(0) == std::vector<double>{0.0});

    // B^k = -(column sums of A^{k+1}) - (column sums of C^{k-1}).
    const Dense* a[] = {nullptr, nullptr, &x.a2, &x.a3, &x.a4};
    const Dense* cc[] = {&x.c0, &x.c1, &x.c2, &x.c3};
    const std::size_t sizes[] = {1, 4, 6, 4, 1};
    for (std::size_t k = 0; k <= 4; ++k) {
      std::vector<double> b(sizes[k], 0.0);
      if (k + 1 <= 4 && a[k + 1]) {
        const auto s = column_sums(*a[k + 1]);
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= s[j];
      }
      if (k >= 1) {
        const auto s = column_sums(*cc[k - 1]);
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= s[j];
      }
      const auto& got = ms.diagonal(k);
      REQUIRE(got.size() == b.size());
      for (std::size_t j = 0; j < b.size(); ++j) CHECK(got[j] == doctest::Approx(b[j]).epsilon(1e-15));
    }
  }
}

TEST_CASE("column identities on random hypergraphs") {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + uniform_below(rng, 7);
    std::vector<std::vector<NodeId>> edges;
    const std::size_t m = 1 + uniform_below(rng, 5);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<NodeId> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<NodeId>(i);
      shuffle(std::span<NodeId>(all), rng);
      all.resize(1 + uniform_below(rng, n));
      edges.push_back(all);
    }
    const Hypergraph h(n, edges);
    const EpidemicParams p(0.3 + uniform01(rng), 0.5 + uniform01(rng), 1.0 + static_cast<double>(uniform_below(rng, 3)));
    const auto ms = build_master(h, p);
    const auto rep = column_identities(ms, h, p);
    CHECK(rep.shapes_ok);
    CHECK(rep.max_deviation() < 1e-12);
  }
}

TEST_CASE("capacity and input validation") {
  std::vector<std::vector<NodeId>> edges{{0, 1}};
  const Hypergraph big(21, edges);
  CHECK_THROWS_AS(build_master(big, EpidemicParams(1, 1, 1)), CapacityError);
  CHECK_NOTHROW(build_master(Hypergraph(5, edges), EpidemicParams(1, 1, 1), {5}));
  CHECK_THROWS_AS(build_master(Hypergraph(6, edges), EpidemicParams(1, 1, 1), {5}), CapacityError);

  const auto ms = build_master(example_hypergraph(), EpidemicParams(1, 1, 1));
  const std::vector<double> grid{0.0, 1.0};
  std::vector<double> bad(16, 0.0);
  CHECK_THROWS_AS(integrate_master(ms, bad, grid), ValidationError);
  bad[0] = 1.0;
  const std::vector<double> backwards{1.0, 0.0};
  CHECK_THROWS_AS(integrate_master(ms, bad, backwards), ValidationError);
  CHECK_THROWS_AS(integrate_master(ms, std::vector<double>(3, 1.0 / 3), grid), ValidationError);
}

TEST_CASE("integration agrees with the matrix exponential") {
  const auto h = example_hypergraph();
  const EpidemicParams p(1.0, 1.0, 2.0);
  const auto ms = build_master(h, p);
  const auto x0 = point_mass(ms.index(), EpidemicState::from_string("SISI"));
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 5.0};
  const auto traj = integrate_master(ms, x0, grid);
  REQUIRE(traj.states.size() == grid.size());
  const auto dense = ms.dense();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto expected = expm_apply(dense, grid[i], x0);
    for (std::size_t s = 0; s < 16; ++s) CHECK(std::abs(traj.states[i][s] - expected[s]) < 1e-8);
  }
  CHECK(traj.stats.max_mass_error < 1e-10);

  const auto series = expected_series(ms, traj);
  CHECK(series.infected.front() == 2.0);
  CHECK(series.susceptible.front() == 2.0);
  CHECK(series.si.front() == doctest::Approx(4.0));
  const auto streamed = master_expected(ms, x0, grid);
  CHECK(streamed.infected == series.infected);
}

TEST_CASE("a lone node recovers exponentially") {
  const Hypergraph h(1, {{0}});
  const auto ms = build_master(h, EpidemicParams(2.0, 1.5, 1.0));
  const auto x0 = point_mass(ms.index(), EpidemicState::from_string("I"));
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.3 * i);
  const auto ex = master_expected(ms, x0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(ex.infected[i] - std::exp(-1.5 * grid[i])) < 1e-9);
}

TEST_CASE("expectation equation residual") {
  const auto h = example_hypergraph();
  const EpidemicParams p(0.5, 1.0, 1.0);
  const auto ms = build_master(h, p);
  std::vector<double> grid;
  for (int i = 0; i <= 2000; ++i) grid.push_back(1e-3 * i);
  const auto ex = master_expected(ms, point_mass(ms.index(), EpidemicState::from_string("IIII")), grid);
  const auto r = verify_theorem1(ex, p);
  CHECK(r.points > 1900);
  CHECK(r.infected < 1e-7);
  CHECK(r.susceptible < 1e-7);

  ExpectedSeries tiny;
  tiny.times = {0, 1};
  tiny.infected = tiny.susceptible = tiny.si = {0, 0};
  CHECK_THROWS_AS(verify_theorem1(tiny, p), ValidationError);
}

TEST_CASE("block dump lists every stored entry") {
  const auto ms = build_master(example_hypergraph(), EpidemicParams(0.7, 1.3, 2.0));
  const auto text = format_master_blocks(ms);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# hypersis master blocks v1");
  std::size_t triplets = 0;
  char kind = 0;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (line.rfind("block", 0) == 0) {
      std::string word;
      std::size_t rows, cols, nnz;
      ls >> word >> kind >> k >> rows >> cols >> nnz;
      continue;
    }
    std::size_t r, c;
    double v;
    ls >> r >> c >> v;
    ++triplets;
    if (kind == 'A') CHECK(ms.infection(k).at(r, c) == v);
    if (kind == 'C') CHECK(ms.recovery(k).at(r, c) == v);
    if (kind == 'B') CHECK(ms.diagonal(k)[r] == v);
  }
  std::size_t expected = 0;
  for (std::size_t j = 0; j <= 4; ++j) {
    expected += ms.infection(j).entries.size() + ms.recovery(j).entries.size();
    for (double d : ms.diagonal(j)) expected += d != 0.0;
  }
  CHECK(triplets == expected);
}

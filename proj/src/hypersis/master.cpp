#include "hypersis/master.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hypersis/errors.hpp"

namespace hypersis {

// ---------------------------------------------------------------------------
// StateIndex

StateIndex::StateIndex(std::size_t num_nodes) : num_nodes_(num_nodes) {
  if (num_nodes == 0 || num_nodes > kHardMaxMasterNodes)
    throw CapacityError("state index supports 1.." + std::to_string(kHardMaxMasterNodes) + " nodes");
  const std::uint64_t total = std::uint64_t{1} << num_nodes;
  std::vector<std::size_t> sizes(num_nodes + 1, 0);
  for (std::uint64_t w = 0; w < total; ++w) ++sizes[static_cast<std::size_t>(std::popcount(w))];
  offsets_.assign(num_nodes + 2, 0);
  for (std::size_t k = 0; k <= num_nodes; ++k) offsets_[k + 1] = offsets_[k] + sizes[k];
  words_.resize(total);
  position_.resize(total);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Increasing w visits each class in increasing word order.
  for (std::uint64_t w = 0; w < total; ++w) {
    const auto g = cursor[static_cast<std::size_t>(std::popcount(w))]++;
    words_[g] = w;
    position_[w] = static_cast<std::uint32_t>(g);
  }
}

std::pair<std::size_t, std::size_t> StateIndex::locate(std::uint64_t word) const {
  const auto k = static_cast<std::size_t>(std::popcount(word));
  return {k, position_[word] - offsets_[k]};
}

std::uint64_t StateIndex::word_of(const EpidemicState& s) const {
  if (s.size() != num_nodes_) throw ValidationError("state size does not match the state index");
  std::uint64_t w = 0;
  for (NodeId i = 0; i < num_nodes_; ++i)
    if (s.infected(i)) w |= node_bit(i);
  return w;
}

EpidemicState StateIndex::state_of(std::uint64_t word) const {
  EpidemicState s(num_nodes_);
  for (NodeId i = 0; i < num_nodes_; ++i)
    if (word & node_bit(i)) s.set(i, true);
  return s;
}

// ---------------------------------------------------------------------------
// SparseBlock

double SparseBlock::at(std::size_t row, std::size_t col) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{row, col},
                             [](const Entry& e, const std::pair<std::size_t, std::size_t>& key) {
                               return e.col != key.second ? e.col < key.second : e.row < key.first;
                             });
  return (it != entries.end() && it->row == row && it->col == col) ? it->value : 0.0;
}

std::vector<double> SparseBlock::column_sums() const {
  std::vector<double> sums(cols, 0.0);
  for (const auto& e : entries) sums[e.col] += e.value;
  return sums;
}

std::vector<std::vector<double>> SparseBlock::dense() const {
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols, 0.0));
  for (const auto& e : entries) out[e.row][e.col] = e.value;
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

MasterSystem build_master(const Hypergraph& h, const EpidemicParams& p, const MasterOptions& options) {
  p.validate();
  const std::size_t n = h.num_nodes();
  if (options.max_nodes > kHardMaxMasterNodes)
    throw CapacityError("max_nodes may not exceed " + std::to_string(kHardMaxMasterNodes));
  if (n > options.max_nodes)
    throw CapacityError("master equations need N <= " + std::to_string(options.max_nodes) +
                        ", got N = " + std::to_string(n));
  if (h.num_edges() == 0) throw ValidationError("master equations need at least one hyperedge");

  MasterSystem ms(n);
  ms.params_ = p;
  const StateIndex& index = ms.index_;

  std::vector<std::uint64_t> masks(h.num_edges(), 0);
  for (EdgeId j = 0; j < h.num_edges(); ++j)
    for (NodeId v : h.edge(j)) masks[j] |= index.node_bit(v);

  ms.infection_.resize(n + 1);
  ms.recovery_.resize(n + 1);
  ms.diagonal_.resize(n + 1);
  ms.infection_[0] = {index.class_size(0), 0, {}};
  for (std::size_t k = 1; k <= n; ++k)
    ms.infection_[k] = {index.class_size(k), index.class_size(k - 1), {}};
  for (std::size_t k = 0; k < n; ++k)
    ms.recovery_[k] = {index.class_size(k), index.class_size(k + 1), {}};
  ms.recovery_[n] = {index.class_size(n), 0, {}};
  ms.n_si_f_.assign(index.num_states(), 0.0);

  std::vector<double> edge_pressure(h.num_edges());
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t j = 0; j < index.class_size(k); ++j) {
      const std::uint64_t w = index.word(k, j);
      for (EdgeId e = 0; e < h.num_edges(); ++e)
        edge_pressure[e] = p.f(static_cast<double>(std::popcount(w & masks[e])));
      double nsi = 0.0;
      for (NodeId l = 0; l < n; ++l) {
        const std::uint64_t bit = index.node_bit(l);
        if (w & bit) {
          // Recovery of l: S_j^k -> S_i^{k-1}, rate gamma, stored in C^{k-1}.
          if (p.gamma > 0.0) {
            const auto i = index.locate(w & ~bit).second;
            ms.recovery_[k - 1].entries.push_back(
                {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), p.gamma});
          }
          continue;
        }
        double pressure = 0.0;
        for (EdgeId e : h.memberships(l)) pressure += edge_pressure[e];
        nsi += pressure;
        const double rate = p.tau * pressure;
        if (rate > 0.0) {
          // Infection of l: S_j^k -> S_i^{k+1}, stored in A^{k+1}.
          const auto i = index.locate(w | bit).second;
          ms.infection_[k + 1].entries.push_back(
              {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), rate});
        }
      }
      ms.n_si_f_[index.class_offset(k) + j] = nsi;
    }
  }

  auto by_col_row = [](const SparseBlock::Entry& a, const SparseBlock::Entry& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  };
  for (auto& b : ms.infection_) std::sort(b.entries.begin(), b.entries.end(), by_col_row);
  for (auto& b : ms.recovery_) std::sort(b.entries.begin(), b.entries.end(), by_col_row);

  // B^k from zero column sums of P.
  for (std::size_t k = 0; k <= n; ++k) {
    auto& diag = ms.diagonal_[k];
    diag.assign(index.class_size(k), 0.0);
    if (k < n) {
      const auto out_infection = ms.infection_[k + 1].column_sums();
      for (std::size_t i = 0; i < diag.size(); ++i) diag[i] -= out_infection[i];
    }
    if (k > 0) {
      const auto out_recovery = ms.recovery_[k - 1].column_sums();
      for (std::size_t i = 0; i < diag.size(); ++i) diag[i] -= out_recovery[i];
    }
  }

  for (std::size_t k = 1; k <= n; ++k) {
    const auto& a = ms.infection_[k];
    if (a.rows != index.class_size(k) || a.cols != index.class_size(k - 1))
      throw std::logic_error("A block has the wrong shape");
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& c = ms.recovery_[k];
    if (c.rows != index.class_size(k) || c.cols != index.class_size(k + 1))
      throw std::logic_error("C block has the wrong shape");
    for (const auto& e : c.entries)
      if (!(e.value >= 0.0)) throw std::logic_error("negative recovery rate");
  }
  return ms;
}

void MasterSystem::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = num_nodes();
  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t off = index_.class_offset(k);
    const auto& diag = diagonal_[k];
    for (std::size_t i = 0; i < diag.size(); ++i) y[off + i] = diag[i] * x[off + i];
  }
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t row_off = index_.class_offset(k);
    const std::size_t col_off = index_.class_offset(k - 1);
    for (const auto& e : infection_[k].entries) y[row_off + e.row] += e.value * x[col_off + e.col];
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t row_off = index_.class_offset(k);
    const std::size_t col_off = index_.class_offset(k + 1);
    for (const auto& e : recovery_[k].entries) y[row_off + e.row] += e.value * x[col_off + e.col];
  }
}

std::vector<std::vector<double>> MasterSystem::dense() const {
  const std::size_t total = index_.num_states();
  std::vector<std::vector<double>> out(total, std::vector<double>(total, 0.0));
  const std::size_t n = num_nodes();
  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t off = index_.class_offset(k);
    for (std::size_t i = 0; i < diagonal_[k].size(); ++i) out[off + i][off + i] = diagonal_[k][i];
    if (k >= 1)
      for (const auto& e : infection_[k].entries)
        out[off + e.row][index_.class_offset(k - 1) + e.col] = e.value;
    if (k < n)
      for (const auto& e : recovery_[k].entries)
        out[off + e.row][index_.class_offset(k + 1) + e.col] = e.value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identities

double IdentityReport::max_deviation() const {
  return std::max({p_column_sum, infection_columns, recovery_columns, recovery_rows, conservation});
}

IdentityReport column_identities(const MasterSystem& ms, const Hypergraph& h, const EpidemicParams& p) {
  IdentityReport r;
  const auto& index = ms.index();
  const std::size_t n = ms.num_nodes();
  auto dev = [](double& slot, double value) { slot = std::max(slot, std::abs(value)); };

  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t ck = index.class_size(k);
    if (ms.diagonal(k).size() != ck) r.shapes_ok = false;
    if (k >= 1 && (ms.infection(k).rows != ck || ms.infection(k).cols != index.class_size(k - 1)))
      r.shapes_ok = false;
    if (k < n && (ms.recovery(k).rows != ck || ms.recovery(k).cols != index.class_size(k + 1)))
      r.shapes_ok = false;
  }
  if (!r.shapes_ok) return r;

  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t ck = index.class_size(k);
    // Column j of class k in P: A^{k+1}, B^k and C^{k-1} contributions.
    std::vector<double> from_a(ck, 0.0);
    std::vector<double> from_c(ck, 0.0);
    if (k < n) from_a = ms.infection(k + 1).column_sums();
    if (k > 0) from_c = ms.recovery(k - 1).column_sums();
    for (std::size_t j = 0; j < ck; ++j) {
      const double b = ms.diagonal(k)[j];
      dev(r.p_column_sum, from_a[j] + b + from_c[j]);
      if (k < n) {
        const EpidemicState s = index.state_of(index.word(k, j));
        dev(r.infection_columns, from_a[j] - p.tau * n_si_f(h, s, p.f));
      }
      if (k > 0) dev(r.recovery_rows, from_c[j] - p.gamma * static_cast<double>(k));
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto sums = ms.recovery(k).column_sums();
    for (double s : sums) dev(r.recovery_columns, s - p.gamma * static_cast<double>(k + 1));
  }

  // Global conservation through the matrix-vector product: 1^T P x = 0.
  const std::size_t total = index.num_states();
  std::vector<double> x(total), y(total);
  for (std::size_t i = 0; i < total; ++i) x[i] = 1.0 + static_cast<double>(i % 7);
  ms.apply(x, y);
  double sum = 0.0;
  double scale = 0.0;
  for (double v : y) {
    sum += v;
    scale += std::abs(v);
  }
  r.conservation = scale > 0.0 ? std::abs(sum) / scale : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Integration

Distribution point_mass(const StateIndex& index, const EpidemicState& s) {
  Distribution x(index.num_states(), 0.0);
  x[index.global(index.word_of(s))] = 1.0;
  return x;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

IntegrationStats integrate_master(const MasterSystem& ms, std::span<const double> x0,
                                  std::span<const double> t_grid,
                                  const std::function<void(double, std::span<const double>)>& observe,
                                  const IntegratorOptions& options) {
  const std::size_t dim = ms.index().num_states();
  if (x0.size() != dim) throw ValidationError("initial distribution has the wrong length");
  double mass = 0.0;
  for (double v : x0) {
    if (!(v >= 0.0)) throw ValidationError("initial distribution has a negative entry");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("initial distribution must sum to 1");
  if (t_grid.empty()) throw ValidationError("empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= t_grid[i - 1])) throw ValidationError("time grid must be nondecreasing");

  IntegrationStats stats;
  std::vector<double> y(x0.begin(), x0.end()), ynew(dim), tmp(dim);
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);

  auto report = [&](double t) {
    double total = 0.0;
    for (double v : y) total += v;
    stats.max_mass_error = std::max(stats.max_mass_error, std::abs(total - 1.0));
    observe(t, y);
  };

  double t = t_grid[0];
  double h = options.initial_step;
  ms.apply(y, k1);
  report(t);
  for (std::size_t g = 1; g < t_grid.size(); ++g) {
    const double target = t_grid[g];
    while (t < target) {
      const double remaining = target - t;
      const bool last = h >= remaining;
      const double step = last ? remaining : h;
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + step * a21 * k1[i];
      ms.apply(tmp, k2);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + step * (a31 * k1[i] + a32 * k2[i]);
      ms.apply(tmp, k3);
      for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = y[i] + step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      ms.apply(tmp, k4);
      for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = y[i] + step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      ms.apply(tmp, k5);
      for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = y[i] + step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      ms.apply(tmp, k6);
      for (std::size_t i = 0; i < dim; ++i)
        ynew[i] = y[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      ms.apply(ynew, k7);

      double err = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double e = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                 e7 * k7[i]);
        const double scale = options.atol + options.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err = std::max(err, std::abs(e) / scale);
      }

      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        t = last ? target : t + step;
        y.swap(ynew);
        k1.swap(k7);
        ++stats.accepted;
        // A step shortened to land on the grid says nothing about the next one.
        if (!last || step >= h) h = step * factor;
      } else {
        ++stats.rejected;
        h = step * factor;
        if (h < options.min_step)
          throw NumericalError("master integration: step size underflow at t = " + std::to_string(t));
      }
    }
    report(target);
  }
  return stats;
}

MasterTrajectory integrate_master(const MasterSystem& ms, std::span<const double> x0,
                                  std::span<const double> t_grid, const IntegratorOptions& options) {
  MasterTrajectory traj;
  traj.stats = integrate_master(
      ms, x0, t_grid,
      [&](double t, std::span<const double> x) {
        traj.times.push_back(t);
        traj.states.emplace_back(x.begin(), x.end());
      },
      options);
  return traj;
}

ExpectedValues expected_values(const MasterSystem& ms, std::span<const double> x) {
  const auto& index = ms.index();
  const auto nsi = ms.n_si_f();
  ExpectedValues v;
  for (std::size_t k = 0; k <= ms.num_nodes(); ++k) {
    double mass = 0.0;
    const std::size_t off = index.class_offset(k);
    for (std::size_t j = 0; j < index.class_size(k); ++j) {
      mass += x[off + j];
      v.si += nsi[off + j] * x[off + j];
    }
    v.infected += static_cast<double>(k) * mass;
    v.susceptible += static_cast<double>(ms.num_nodes() - k) * mass;
  }
  return v;
}

namespace {

void push_expected(ExpectedSeries& out, double t, const ExpectedValues& v) {
  out.times.push_back(t);
  out.infected.push_back(v.infected);
  out.susceptible.push_back(v.susceptible);
  out.si.push_back(v.si);
}

}  // namespace

ExpectedSeries expected_series(const MasterSystem& ms, const MasterTrajectory& traj) {
  ExpectedSeries out;
  out.stats = traj.stats;
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    push_expected(out, traj.times[i], expected_values(ms, traj.states[i]));
  return out;
}

ExpectedSeries master_expected(const MasterSystem& ms, std::span<const double> x0,
                               std::span<const double> t_grid, const IntegratorOptions& options) {
  ExpectedSeries out;
  out.stats = integrate_master(
      ms, x0, t_grid,
      [&](double t, std::span<const double> x) { push_expected(out, t, expected_values(ms, x)); },
      options);
  return out;
}

TheoremResidual verify_theorem1(const ExpectedSeries& series, const EpidemicParams& p) {
  const auto& t = series.times;
  const std::size_t n = t.size();
  if (n < 3) throw ValidationError("theorem check needs at least 3 grid points");
  const double h = t[1] - t[0];
  if (!(h > 0.0)) throw ValidationError("theorem check needs an increasing grid");
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(t[i])))
      throw ValidationError("theorem check needs a uniform grid");

  const auto& I = series.infected;
  const auto& S = series.susceptible;
  auto derivative = [&](const std::vector<double>& v, std::size_t i) {
    if (i >= 2 && i + 2 < n)
      return (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
    return (v[i + 1] - v[i - 1]) / (2.0 * h);
  };
  // With five or more points, the boundary-adjacent points only admit the
  // low-order stencil and are skipped.
  const std::size_t first = n >= 5 ? 2 : 1;
  const std::size_t last = n >= 5 ? n - 3 : n - 2;
  TheoremResidual r;
  for (std::size_t i = first; i <= last; ++i) {
    const double flow = p.tau * series.si[i] - p.gamma * I[i];
    r.infected = std::max(r.infected, std::abs(derivative(I, i) - flow));
    r.susceptible = std::max(r.susceptible, std::abs(derivative(S, i) + flow));
    ++r.points;
  }
  return r;
}

std::vector<double> sample_times(const SimConfig& cfg) {
  cfg.validate();
  std::vector<double> out(cfg.num_samples());
  const std::size_t stride = cfg.sample_stride();
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = static_cast<double>(s * stride) * cfg.dt;
  return out;
}

double EnsembleComparison::fraction_within(double bound) const {
  if (z.empty()) return 1.0;
  const auto inside = std::count_if(z.begin(), z.end(), [&](double v) { return std::abs(v) < bound; });
  return static_cast<double>(inside) / static_cast<double>(z.size());
}

double EnsembleComparison::max_abs_z() const {
  double best = 0.0;
  for (double v : z) best = std::max(best, std::abs(v));
  return best;
}

EnsembleComparison ensemble_vs_master(const Hypergraph& h, const SimConfig& cfg,
                                      const MasterOptions& options) {
  if (cfg.initial.rule == InitialRule::per_run_fraction)
    throw ValidationError("ensemble_vs_master needs one initial state shared by all runs");
  const MasterSystem ms = build_master(h, cfg.params, options);
  const EpidemicState start = initial_state(cfg, h.num_nodes(), 0);
  const TimeSeries sim = run(h, cfg);
  const Distribution x0 = point_mass(ms.index(), start);
  const ExpectedSeries exact = master_expected(ms, x0, sim.times);

  EnsembleComparison out;
  out.times = sim.times;
  out.simulated = sim.mean_prevalence;
  out.std_err = sim.std_err;
  out.exact = exact.infected;
  out.z.resize(out.times.size());
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    const double diff = out.simulated[i] - out.exact[i];
    if (out.std_err[i] > 0.0)
      out.z[i] = diff / out.std_err[i];
    else
      out.z[i] = std::abs(diff) <= 1e-9 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return out;
}

std::string format_master_blocks(const MasterSystem& ms) {
  std::ostringstream out;
  out.precision(17);
  const std::size_t n = ms.num_nodes();
  const auto& p = ms.params();
  out << "# hypersis master blocks v1\n";
  out << "# N " << n << " tau " << p.tau << " gamma " << p.gamma << " c " << p.f.threshold() << '\n';
  auto dump = [&](char name, std::size_t k, const SparseBlock& b) {
    out << "block " << name << ' ' << k << ' ' << b.rows << ' ' << b.cols << ' ' << b.entries.size()
        << '\n';
    for (const auto& e : b.entries) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
  };
  for (std::size_t k = 0; k <= n; ++k) {
    if (k >= 1) dump('A', k, ms.infection(k));
    const auto& d = ms.diagonal(k);
    std::size_t nnz = 0;
    for (double v : d) nnz += v != 0.0 ? 1 : 0;
    out << "block B " << k << ' ' << d.size() << ' ' << d.size() << ' ' << nnz << '\n';
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] != 0.0) out << i << ' ' << i << ' ' << d[i] << '\n';
    if (k < n) dump('C', k, ms.recovery(k));
  }
  return out.str();
}

}  // namespace hypersis

#include "hypersis/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "hypersis/errors.hpp"

namespace hypersis {

MeanFieldModel MeanFieldModel::bi_uniform(double num_nodes, double household, double workplace,
                                          const EpidemicParams& p) {
  p.validate();
  if (!(num_nodes > 0.0)) throw ValidationError("mean field: N must be positive");
  if (!(household >= 2.0) || !(workplace >= 2.0))
    throw ValidationError("mean field: bi-uniform closure needs H, W >= 2");
  return {Variant::bi_uniform, num_nodes, household, workplace, p};
}

MeanFieldModel MeanFieldModel::regular(double num_nodes, double degree, double edge_size,
                                       const EpidemicParams& p) {
  p.validate();
  if (!(num_nodes > 0.0)) throw ValidationError("mean field: N must be positive");
  if (!(degree >= 1.0)) throw ValidationError("mean field: regular closure needs d >= 1");
  if (!(edge_size >= 2.0)) throw ValidationError("mean field: regular closure needs e >= 2");
  return {Variant::regular, num_nodes, degree, edge_size, p};
}

namespace {

double pressure(const MeanFieldModel& m, double a, double b, double infected, bool linear) {
  const double x = infected / m.num_nodes();
  const auto& f = m.params().f;
  auto g = [&](double v) { return linear ? v : f(v); };
  if (m.variant() == MeanFieldModel::Variant::bi_uniform)
    return g((a - 1.0) * x) + g((b - 1.0) * x);
  return a * g((b - 1.0) * x);
}

}  // namespace

double MeanFieldModel::rhs(double infected) const {
  if (!(infected >= 0.0 && infected <= n_)) throw ValidationError("mean field: I outside [0, N]");
  return params_.tau * (n_ - infected) * pressure(*this, a_, b_, infected, false) -
         params_.gamma * infected;
}

double MeanFieldModel::linear_rhs(double infected) const {
  if (!(infected >= 0.0 && infected <= n_)) throw ValidationError("mean field: I outside [0, N]");
  return params_.tau * (n_ - infected) * pressure(*this, a_, b_, infected, true) -
         params_.gamma * infected;
}

double MeanFieldModel::initial_growth_rate() const {
  const double slope = variant_ == Variant::bi_uniform ? (a_ - 1.0) + (b_ - 1.0) : a_ * (b_ - 1.0);
  return params_.tau * slope;
}

std::vector<double> MeanFieldModel::kinks() const {
  const double c = params_.f.threshold();
  std::vector<double> out;
  auto add = [&](double slope) {
    if (slope <= 0.0) return;
    const double at = c * n_ / slope;
    if (at > 0.0 && at < n_) out.push_back(at);
  };
  if (variant_ == Variant::bi_uniform) {
    add(a_ - 1.0);
    add(b_ - 1.0);
  } else {
    add(b_ - 1.0);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TimeSeries integrate(const MeanFieldModel& m, double initial, std::span<const double> t_grid,
                     const MeanFieldOptions& options) {
  const double n = m.num_nodes();
  if (!(initial >= 0.0 && initial <= n)) throw ValidationError("mean field: I0 outside [0, N]");
  if (t_grid.empty()) throw ValidationError("mean field: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= t_grid[i - 1])) throw ValidationError("mean field: grid must be nondecreasing");

  const auto& p = m.params();
  const double scale = std::max({p.gamma, m.initial_growth_rate(), 1.0});
  const double h_max = options.max_step / scale;

  auto eval = [&](double v) { return m.rhs(std::clamp(v, 0.0, n)); };

  TimeSeries ts;
  ts.times.assign(t_grid.begin(), t_grid.end());
  ts.mean_prevalence.reserve(t_grid.size());
  double y = initial;
  ts.mean_prevalence.push_back(y);
  for (std::size_t g = 1; g < t_grid.size(); ++g) {
    const double span = t_grid[g] - t_grid[g - 1];
    if (span > 0.0) {
      const auto steps = static_cast<std::size_t>(std::ceil(span / h_max));
      const double h = span / static_cast<double>(steps);
      for (std::size_t s = 0; s < steps; ++s) {
        const double k1 = eval(y);
        const double k2 = eval(y + 0.5 * h * k1);
        const double k3 = eval(y + 0.5 * h * k2);
        const double k4 = eval(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(y)) throw NumericalError("mean field: integration diverged");
        // The interval [0, N] is invariant; anything outside is truncation error.
        y = std::clamp(y, 0.0, n);
      }
    }
    ts.mean_prevalence.push_back(y);
  }
  return ts;
}

std::vector<FixedPoint> fixed_points(const MeanFieldModel& m) {
  const double n = m.num_nodes();
  const auto& p = m.params();
  if (p.tau == 0.0 && p.gamma == 0.0) return {{0.0, Stability::semi_stable}};

  constexpr std::size_t kScan = 20000;
  std::vector<double> grid;
  grid.reserve(kScan + 8);
  for (std::size_t i = 0; i <= kScan; ++i) grid.push_back(n * static_cast<double>(i) / kScan);
  for (double k : m.kinks()) grid.push_back(k);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const double tol = 1e-10 * n;
  std::vector<double> roots;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = m.rhs(grid[i]);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (values[i] == 0.0) {
      roots.push_back(grid[i]);
      continue;
    }
    if (i + 1 < grid.size() && values[i + 1] != 0.0 && (values[i] < 0.0) != (values[i + 1] < 0.0)) {
      double lo = grid[i];
      double hi = grid[i + 1];
      const bool lo_negative = values[i] < 0.0;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if ((m.rhs(mid) < 0.0) == lo_negative)
          lo = mid;
        else
          hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
  }

  std::vector<FixedPoint> out;
  const double probe = 1e-7 * n;
  for (double r : roots) {
    // Sign of rhs just left and right of the root; 0 marks the domain boundary.
    const int left = r - probe < 0.0 ? 0 : (m.rhs(r - probe) > 0.0 ? 1 : -1);
    const int right = r + probe > n ? 0 : (m.rhs(r + probe) > 0.0 ? 1 : -1);
    Stability s = Stability::semi_stable;
    if (left >= 0 && right <= 0 && (left != 0 || right != 0))
      s = Stability::stable;
    else if (left <= 0 && right >= 0 && (left != 0 || right != 0))
      s = Stability::unstable;
    out.push_back({r, s});
  }
  return out;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable:
      return "stable";
    case Stability::unstable:
      return "unstable";
    case Stability::semi_stable:
      return "semi-stable";
  }
  return "?";
}

}  // namespace hypersis

#pragma once

#include <span>
#include <vector>

#include "hypersis/hypergraph.hpp"
#include "hypersis/simulate.hpp"

namespace hypersis {

/// Closed scalar ODE for the expected number of infected nodes.
///   bi-uniform: I' = tau (N - I) [f((H-1) I/N) + f((W-1) I/N)] - gamma I
///   regular:    I' = tau (N - I) d f((e-1) I/N) - gamma I
class MeanFieldModel {
 public:
  enum class Variant { bi_uniform, regular };

  static MeanFieldModel bi_uniform(double num_nodes, double household, double workplace,
                                   const EpidemicParams& p);
  static MeanFieldModel regular(double num_nodes, double degree, double edge_size,
                                const EpidemicParams& p);

  Variant variant() const { return variant_; }
  double num_nodes() const { return n_; }
  const EpidemicParams& params() const { return params_; }

  double rhs(double infected) const;
  /// Points in (0, N) where an argument of f crosses the threshold.
  std::vector<double> kinks() const;
  /// The same model with f replaced by the identity.
  double linear_rhs(double infected) const;
  /// tau (H-1 + W-1) or tau d (e-1): per-capita infection rate of the linearised model.
  double initial_growth_rate() const;

 private:
  MeanFieldModel(Variant v, double n, double a, double b, const EpidemicParams& p)
      : variant_(v), n_(n), a_(a), b_(b), params_(p) {}

  Variant variant_;
  double n_;
  double a_;  // H or d
  double b_;  // W or e
  EpidemicParams params_;
};

struct MeanFieldOptions {
  double max_step = 1e-3;  // in units of 1/gamma (or absolute when gamma = 0)
};

/// Classical RK4 with internal steps no longer than max_step, reported on t_grid.
TimeSeries integrate(const MeanFieldModel& m, double initial, std::span<const double> t_grid,
                     const MeanFieldOptions& options = {});

enum class Stability { stable, unstable, semi_stable };

struct FixedPoint {
  double infected;
  Stability stability;
};

/// Roots of rhs on [0, N], increasing.
std::vector<FixedPoint> fixed_points(const MeanFieldModel& m);

const char* to_string(Stability s);

}  // namespace hypersis

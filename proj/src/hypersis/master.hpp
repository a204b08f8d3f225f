#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypersis/hypergraph.hpp"
#include "hypersis/simulate.hpp"

namespace hypersis {

inline constexpr std::size_t kDefaultMaxMasterNodes = 20;
inline constexpr std::size_t kHardMaxMasterNodes = 28;

/// Canonical ordering of the 2^N configurations.
///
/// A configuration is an N-bit word with node 0 in the most significant bit and
/// I = 1. States are grouped into classes by infected count k; within a class
/// they are listed by increasing word value. For N = 4 this gives
///   class 1: SSSI SSIS SISS ISSS
///   class 2: SSII SISI SIIS ISSI ISIS IISS
/// Global indices run class by class.
class StateIndex {
 public:
  explicit StateIndex(std::size_t num_nodes);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_states() const { return words_.size(); }
  std::size_t class_size(std::size_t k) const { return offsets_[k + 1] - offsets_[k]; }
  std::size_t class_offset(std::size_t k) const { return offsets_[k]; }

  std::uint64_t word(std::size_t global) const { return words_[global]; }
  std::uint64_t word(std::size_t k, std::size_t j) const { return words_[offsets_[k] + j]; }
  std::size_t global(std::uint64_t word) const { return position_[word]; }
  /// (class, index within class) of a word.
  std::pair<std::size_t, std::size_t> locate(std::uint64_t word) const;

  std::uint64_t node_bit(NodeId node) const { return std::uint64_t{1} << (num_nodes_ - 1 - node); }
  std::uint64_t word_of(const EpidemicState& s) const;
  EpidemicState state_of(std::uint64_t word) const;

 private:
  std::size_t num_nodes_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint32_t> position_;
};

/// Sparse block, entries sorted by (col, row).
struct SparseBlock {
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Entry> entries;

  double at(std::size_t row, std::size_t col) const;
  std::vector<double> column_sums() const;
  std::vector<std::vector<double>> dense() const;
};

struct MasterOptions {
  std::size_t max_nodes = kDefaultMaxMasterNodes;
};

/// Block-tridiagonal generator P of the Kolmogorov forward equations
///   dX^k/dt = A^k X^{k-1} + B^k X^k + C^k X^{k+1}.
/// Immutable after build_master().
class MasterSystem {
 public:
  const StateIndex& index() const { return index_; }
  std::size_t num_nodes() const { return index_.num_nodes(); }
  const EpidemicParams& params() const { return params_; }

  /// A^k (c_k x c_{k-1}), k in [1, N]. A^0 is the empty block.
  const SparseBlock& infection(std::size_t k) const { return infection_[k]; }
  /// C^k (c_k x c_{k+1}), k in [0, N-1]. C^N is the empty block.
  const SparseBlock& recovery(std::size_t k) const { return recovery_[k]; }
  /// Diagonal of B^k.
  const std::vector<double>& diagonal(std::size_t k) const { return diagonal_[k]; }
  /// Generalised SI count of every state, by global index.
  std::span<const double> n_si_f() const { return n_si_f_; }

  /// y = P x over global indices.
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<std::vector<double>> dense() const;

 private:
  friend MasterSystem build_master(const Hypergraph&, const EpidemicParams&, const MasterOptions&);
  explicit MasterSystem(std::size_t n) : index_(n) {}

  StateIndex index_;
  EpidemicParams params_;
  std::vector<SparseBlock> infection_;
  std::vector<SparseBlock> recovery_;
  std::vector<std::vector<double>> diagonal_;
  std::vector<double> n_si_f_;
};

MasterSystem build_master(const Hypergraph& h, const EpidemicParams& p,
                          const MasterOptions& options = {});

/// Maximum deviations of the column identities of P.
struct IdentityReport {
  double p_column_sum = 0.0;       // |sum_i P_ij|
  double infection_columns = 0.0;  // |sum_i A^k_ij - tau N_SI^f(S_j^{k-1})|
  double recovery_columns = 0.0;   // |sum_i C^k_ij - gamma (k+1)|
  double recovery_rows = 0.0;      // |S_{k-1} C^{k-1} - gamma k S_k|
  double conservation = 0.0;       // |1^T P x| / 1^T |P x| for a fixed positive x
  bool shapes_ok = true;

  double max_deviation() const;
};

/// Checks the identities against N_SI^f evaluated directly on the hypergraph.
IdentityReport column_identities(const MasterSystem& ms, const Hypergraph& h,
                                 const EpidemicParams& p);

using Distribution = std::vector<double>;

Distribution point_mass(const StateIndex& index, const EpidemicState& s);

struct IntegratorOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  double min_step = 1e-13;
  double initial_step = 1e-3;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_mass_error = 0.0;  // max |sum X(t) - 1| over output times
};

/// Integrates dX/dt = P X with an adaptive Dormand-Prince 5(4) scheme, calling
/// `observe(t, X)` at each output time. t_grid must be nondecreasing; the first
/// entry is the time of x0.
IntegrationStats integrate_master(const MasterSystem& ms, std::span<const double> x0,
                                  std::span<const double> t_grid,
                                  const std::function<void(double, std::span<const double>)>& observe,
                                  const IntegratorOptions& options = {});

struct MasterTrajectory {
  std::vector<double> times;
  std::vector<Distribution> states;
  IntegrationStats stats;
};

MasterTrajectory integrate_master(const MasterSystem& ms, std::span<const double> x0,
                                  std::span<const double> t_grid,
                                  const IntegratorOptions& options = {});

struct ExpectedSeries {
  std::vector<double> times;
  std::vector<double> infected;     // [I]
  std::vector<double> susceptible;  // [S]
  std::vector<double> si;           // [SI]
  IntegrationStats stats;
};

struct ExpectedValues {
  double infected = 0.0;
  double susceptible = 0.0;
  double si = 0.0;
};

ExpectedValues expected_values(const MasterSystem& ms, std::span<const double> x);
ExpectedSeries expected_series(const MasterSystem& ms, const MasterTrajectory& traj);

/// Integrates and reduces to expected values without keeping the distributions.
ExpectedSeries master_expected(const MasterSystem& ms, std::span<const double> x0,
                               std::span<const double> t_grid,
                               const IntegratorOptions& options = {});

struct TheoremResidual {
  double infected = 0.0;     // max |d[I]/dt - (tau [SI] - gamma [I])|
  double susceptible = 0.0;  // max |d[S]/dt - (gamma [I] - tau [SI])|
  std::size_t points = 0;
};

/// Finite-difference test of d[I]/dt = tau [SI] - gamma [I] on a uniform grid.
/// Uses the fourth-order central stencil where five points are available,
/// the second-order one otherwise.
TheoremResidual verify_theorem1(const ExpectedSeries& series, const EpidemicParams& p);

/// The sampling grid a simulation config records at.
std::vector<double> sample_times(const SimConfig& cfg);

struct EnsembleComparison {
  std::vector<double> times;
  std::vector<double> simulated;
  std::vector<double> std_err;
  std::vector<double> exact;
  std::vector<double> z;

  double fraction_within(double bound) const;
  double max_abs_z() const;
};

/// Simulates with cfg and compares the ensemble mean against the exact [I](t)
/// started from the same deterministic initial state.
EnsembleComparison ensemble_vs_master(const Hypergraph& h, const SimConfig& cfg,
                                      const MasterOptions& options = {});

/// Text dump of every block as sparse triplets.
std::string format_master_blocks(const MasterSystem& ms);

}  // namespace hypersis

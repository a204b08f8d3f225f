#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hypersis {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Saturating infection pressure f(x) = min(x, c) on x >= 0.
class InfectionFunction {
 public:
  explicit InfectionFunction(double threshold);

  double threshold() const { return threshold_; }
  double operator()(double infected) const {
    return infected <= threshold_ ? infected : threshold_;
  }

 private:
  double threshold_;
};

struct EpidemicParams {
  double tau = 0.0;
  double gamma = 1.0;
  InfectionFunction f{1.0};

  EpidemicParams() = default;
  EpidemicParams(double tau_, double gamma_, double c);

  void validate() const;
};

/// Node set {0..N-1} plus an ordered list of hyperedges. Each hyperedge keeps
/// the node order it was constructed with so that text round trips are exact.
/// Immutable once built.
class Hypergraph {
 public:
  Hypergraph() = default;
  Hypergraph(std::size_t num_nodes, std::vector<std::vector<NodeId>> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edge_offsets_.empty() ? 0 : edge_offsets_.size() - 1; }

  std::span<const NodeId> edge(EdgeId j) const {
    return {edge_nodes_.data() + edge_offsets_[j], edge_nodes_.data() + edge_offsets_[j + 1]};
  }
  std::size_t edge_size(EdgeId j) const { return edge_offsets_[j + 1] - edge_offsets_[j]; }

  /// Ids of the hyperedges containing `node`, increasing.
  std::span<const EdgeId> memberships(NodeId node) const {
    return {member_edges_.data() + member_offsets_[node],
            member_edges_.data() + member_offsets_[node + 1]};
  }
  std::size_t degree(NodeId node) const {
    return member_offsets_[node + 1] - member_offsets_[node];
  }

  std::size_t max_edge_size() const;
  std::size_t total_incidences() const { return edge_nodes_.size(); }
  std::vector<std::vector<NodeId>> edge_list() const;

  friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> edge_offsets_;
  std::vector<NodeId> edge_nodes_;
  std::vector<std::size_t> member_offsets_;
  std::vector<EdgeId> member_edges_;
};

/// Binary infection state, one entry per node.
class EpidemicState {
 public:
  EpidemicState() = default;
  explicit EpidemicState(std::size_t num_nodes) : bits_(num_nodes, 0) {}

  static EpidemicState all_susceptible(std::size_t num_nodes) { return EpidemicState(num_nodes); }
  static EpidemicState all_infected(std::size_t num_nodes);
  static EpidemicState from_infected(std::size_t num_nodes, std::span<const NodeId> infected);
  /// Parses a word over {S, I}, first character = node 0.
  static EpidemicState from_string(std::string_view word);

  std::size_t size() const { return bits_.size(); }
  bool infected(NodeId node) const { return bits_[node] != 0; }
  void set(NodeId node, bool infected);
  std::size_t infected_count() const { return infected_count_; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::string to_string() const;

  friend bool operator==(const EpidemicState&, const EpidemicState&) = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t infected_count_ = 0;
};

struct Neighbour {
  NodeId node;
  std::uint32_t weight;
  friend bool operator==(const Neighbour&, const Neighbour&) = default;
};

struct WeightedEdge {
  NodeId a;
  NodeId b;
  std::uint32_t weight = 1;
};

/// Symmetric, loop-free graph with positive integer weights.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  /// Parallel entries for the same pair are summed.
  WeightedGraph(std::size_t num_nodes, std::span<const WeightedEdge> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  /// Number of undirected pairs with nonzero weight.
  std::size_t num_edges() const { return adjacency_.size() / 2; }
  std::span<const Neighbour> neighbours(NodeId node) const {
    return {adjacency_.data() + offsets_[node], adjacency_.data() + offsets_[node + 1]};
  }
  std::uint32_t weight(NodeId a, NodeId b) const;
  std::size_t degree(NodeId node) const { return offsets_[node + 1] - offsets_[node]; }
  /// Each undirected pair once, a < b, lexicographic.
  std::vector<WeightedEdge> edge_list() const;

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbour> adjacency_;
};

/// Number of infected members in each hyperedge (the product x J).
std::vector<std::uint32_t> edge_infected_counts(const Hypergraph& h, const EpidemicState& s);

/// tau * sum over hyperedges containing `node` of f(infected in that edge).
/// `node` must be susceptible.
double infection_rate(const Hypergraph& h, const EpidemicState& s, NodeId node,
                      const EpidemicParams& p);

/// Generalised SI count: sum over susceptible nodes l of sum_{h containing l} f(N_h(s)).
double n_si_f(const Hypergraph& h, const EpidemicState& s, const InfectionFunction& f);

/// Weighted graph with w(i,j) = number of hyperedges containing both i and j.
WeightedGraph clique_expand(const Hypergraph& h);

// Text format: "N M", then one line of node ids per hyperedge. '#' starts a comment.
Hypergraph parse_hypergraph(std::string_view text);
std::string format_hypergraph(const Hypergraph& h);
Hypergraph load_hypergraph(const std::filesystem::path& path);
void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path);

/// The 4-node, 3-edge example hypergraph: {0,1,3}, {1,2}, {2,3}.
Hypergraph example_hypergraph();

}  // namespace hypersis

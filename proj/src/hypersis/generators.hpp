#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hypersis/hypergraph.hpp"
#include "hypersis/rng.hpp"

namespace hypersis {

/// Households of size H and workplaces of size W, each a partition of the nodes.
struct BiUniformSpec {
  std::size_t num_nodes = 0;
  std::size_t household_size = 0;
  std::size_t workplace_size = 0;
  void validate() const;
};

/// Preferential attachment with `edges_per_node` links per arriving node.
struct BACliquesSpec {
  std::size_t num_nodes = 0;
  std::size_t edges_per_node = 0;
  void validate() const;
};

/// Prescribed hyperedge sizes and node degrees; the sums must agree.
struct ConfigSpec {
  std::vector<std::size_t> edge_sizes;
  std::vector<std::size_t> node_degrees;
  void validate() const;

  /// Every node in `degree` edges, every edge of size `size`.
  static ConfigSpec regular(std::size_t num_nodes, std::size_t degree, std::size_t size);
};

/// Random household/workplace hypergraph. Edges 0..N/H-1 are households,
/// the rest are workplaces. Every node has degree exactly 2.
Hypergraph gen_bi_uniform(const BiUniformSpec& spec, Rng& rng);

/// Simple undirected graph grown from K_{m+1} by preferential attachment.
WeightedGraph gen_ba_graph(const BACliquesSpec& spec, Rng& rng);

/// Maximal cliques of size >= 2 in lexicographic order, each sorted ascending.
std::vector<std::vector<NodeId>> maximal_cliques(const WeightedGraph& g);

/// Hypergraph whose hyperedges are the maximal cliques (size >= 2) of `g`.
Hypergraph cliques_to_hypergraph(const WeightedGraph& g);

/// The BA-cliques hypergraph: gen_ba_graph followed by cliques_to_hypergraph.
Hypergraph gen_ba_cliques(const BACliquesSpec& spec, Rng& rng);

/// Bipartite configuration model: uniform matching of node half-edges to edge
/// half-edges, with repeated incidences collapsed.
Hypergraph gen_configuration(const ConfigSpec& spec, Rng& rng);

}  // namespace hypersis

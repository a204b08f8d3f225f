#include "hypersis/generators.hpp"

#include <algorithm>
#include <numeric>

#include "hypersis/errors.hpp"

namespace hypersis {

void BiUniformSpec::validate() const {
  if (num_nodes == 0) throw ValidationError("bi-uniform: N must be positive");
  if (household_size == 0 || workplace_size == 0)
    throw ValidationError("bi-uniform: H and W must be at least 1");
  if (num_nodes % household_size != 0) throw ValidationError("bi-uniform: H must divide N");
  if (num_nodes % workplace_size != 0) throw ValidationError("bi-uniform: W must divide N");
}

void BACliquesSpec::validate() const {
  if (edges_per_node < 1 || edges_per_node >= num_nodes)
    throw ValidationError("ba-cliques: need 1 <= m < N");
}

void ConfigSpec::validate() const {
  if (edge_sizes.empty() || node_degrees.empty())
    throw ValidationError("config: edge sizes and node degrees must be nonempty");
  for (auto s : edge_sizes)
    if (s < 1) throw ValidationError("config: every edge size must be >= 1");
  for (auto d : node_degrees)
    if (d < 1) throw ValidationError("config: every node degree must be >= 1");
  const auto stubs_e = std::accumulate(edge_sizes.begin(), edge_sizes.end(), std::size_t{0});
  const auto stubs_n = std::accumulate(node_degrees.begin(), node_degrees.end(), std::size_t{0});
  if (stubs_e != stubs_n)
    throw ValidationError("config: sum of edge sizes (" + std::to_string(stubs_e) +
                          ") differs from sum of degrees (" + std::to_string(stubs_n) + ")");
  for (auto s : edge_sizes)
    if (s > node_degrees.size()) throw ValidationError("config: an edge size exceeds N");
}

ConfigSpec ConfigSpec::regular(std::size_t num_nodes, std::size_t degree, std::size_t size) {
  if (size == 0 || (num_nodes * degree) % size != 0)
    throw ValidationError("config: N*d must be divisible by e");
  ConfigSpec spec;
  spec.node_degrees.assign(num_nodes, degree);
  spec.edge_sizes.assign(num_nodes * degree / size, size);
  return spec;
}

namespace {

void append_partition(std::size_t n, std::size_t block, Rng& rng,
                      std::vector<std::vector<NodeId>>& edges) {
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  shuffle(std::span<NodeId>(perm), rng);
  for (std::size_t start = 0; start < n; start += block)
    edges.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                       perm.begin() + static_cast<std::ptrdiff_t>(start + block));
}

}  // namespace

Hypergraph gen_bi_uniform(const BiUniformSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<std::vector<NodeId>> edges;
  edges.reserve(spec.num_nodes / spec.household_size + spec.num_nodes / spec.workplace_size);
  append_partition(spec.num_nodes, spec.household_size, rng, edges);
  append_partition(spec.num_nodes, spec.workplace_size, rng, edges);
  return Hypergraph(spec.num_nodes, std::move(edges));
}

WeightedGraph gen_ba_graph(const BACliquesSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.num_nodes;
  const std::size_t m = spec.edges_per_node;
  std::vector<WeightedEdge> edges;
  // Each endpoint appears once per incident edge, so a uniform pick is degree-proportional.
  std::vector<NodeId> endpoints;
  for (NodeId a = 0; a <= m; ++a)
    for (NodeId b = a + 1; b <= m; ++b) {
      edges.push_back({a, b, 1});
      endpoints.push_back(a);
      endpoints.push_back(b);
    }
  std::vector<NodeId> targets;
  for (auto v = static_cast<NodeId>(m + 1); v < n; ++v) {
    targets.clear();
    while (targets.size() < m) {
      const NodeId t = endpoints[uniform_below(rng, endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (NodeId t : targets) {
      edges.push_back({t, v, 1});
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return WeightedGraph(n, edges);
}

namespace {

using NodeSet = std::vector<NodeId>;  // sorted

NodeSet intersect(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Bron-Kerbosch with Tomita pivoting.
void expand(const std::vector<NodeSet>& adj, NodeSet& clique, NodeSet candidates, NodeSet excluded,
            std::vector<NodeSet>& out) {
  if (candidates.empty()) {
    if (excluded.empty() && clique.size() >= 2) {
      NodeSet c = clique;
      std::sort(c.begin(), c.end());
      out.push_back(std::move(c));
    }
    return;
  }
  NodeId pivot = candidates.front();
  std::size_t best = 0;
  bool have_pivot = false;
  for (const auto* pool : {&candidates, &excluded})
    for (NodeId u : *pool) {
      const auto hits = intersect(candidates, adj[u]).size();
      if (!have_pivot || hits > best) {
        have_pivot = true;
        best = hits;
        pivot = u;
      }
    }
  NodeSet branch;
  std::set_difference(candidates.begin(), candidates.end(), adj[pivot].begin(), adj[pivot].end(),
                      std::back_inserter(branch));
  for (NodeId v : branch) {
    clique.push_back(v);
    expand(adj, clique, intersect(candidates, adj[v]), intersect(excluded, adj[v]), out);
    clique.pop_back();
    candidates.erase(std::lower_bound(candidates.begin(), candidates.end(), v));
    excluded.insert(std::lower_bound(excluded.begin(), excluded.end(), v), v);
  }
}

}  // namespace

std::vector<std::vector<NodeId>> maximal_cliques(const WeightedGraph& g) {
  std::vector<NodeSet> adj(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    for (const auto& nb : g.neighbours(v)) adj[v].push_back(nb.node);
  std::vector<NodeSet> out;
  NodeSet all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  NodeSet clique;
  expand(adj, clique, std::move(all), {}, out);
  std::sort(out.begin(), out.end());
  return out;
}

Hypergraph cliques_to_hypergraph(const WeightedGraph& g) {
  return Hypergraph(g.num_nodes(), maximal_cliques(g));
}

Hypergraph gen_ba_cliques(const BACliquesSpec& spec, Rng& rng) {
  return cliques_to_hypergraph(gen_ba_graph(spec, rng));
}

Hypergraph gen_configuration(const ConfigSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<NodeId> node_stubs;
  for (std::size_t v = 0; v < spec.node_degrees.size(); ++v)
    node_stubs.insert(node_stubs.end(), spec.node_degrees[v], static_cast<NodeId>(v));
  shuffle(std::span<NodeId>(node_stubs), rng);

  std::vector<std::vector<NodeId>> edges(spec.edge_sizes.size());
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    auto& e = edges[j];
    e.assign(node_stubs.begin() + static_cast<std::ptrdiff_t>(cursor),
             node_stubs.begin() + static_cast<std::ptrdiff_t>(cursor + spec.edge_sizes[j]));
    cursor += spec.edge_sizes[j];
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
  }
  return Hypergraph(spec.node_degrees.size(), std::move(edges));
}

}  // namespace hypersis

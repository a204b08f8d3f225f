#include "hypersis/hypergraph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hypersis/errors.hpp"

namespace hypersis {

InfectionFunction::InfectionFunction(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw ValidationError("infection threshold c must be positive and finite");
}

EpidemicParams::EpidemicParams(double tau_, double gamma_, double c)
    : tau(tau_), gamma(gamma_), f(c) {
  validate();
}

void EpidemicParams::validate() const {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be >= 0");
}

Hypergraph::Hypergraph(std::size_t num_nodes, std::vector<std::vector<NodeId>> edges)
    : num_nodes_(num_nodes) {
  if (num_nodes == 0) throw ValidationError("hypergraph needs at least one node");
  if (edges.size() >= std::numeric_limits<EdgeId>::max())
    throw ValidationError("too many hyperedges");

  edge_offsets_.reserve(edges.size() + 1);
  edge_offsets_.push_back(0);
  std::vector<std::size_t> degree(num_nodes, 0);
  std::vector<NodeId> sorted;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    const auto& e = edges[j];
    if (e.empty()) throw ValidationError("hyperedge " + std::to_string(j) + " is empty");
    sorted.assign(e.begin(), e.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("hyperedge " + std::to_string(j) + " repeats a node");
    if (sorted.back() >= num_nodes)
      throw ValidationError("hyperedge " + std::to_string(j) + " references node " +
                            std::to_string(sorted.back()) + " >= N");
    for (NodeId v : e) {
      edge_nodes_.push_back(v);
      ++degree[v];
    }
    edge_offsets_.push_back(edge_nodes_.size());
  }

  member_offsets_.assign(num_nodes + 1, 0);
  for (std::size_t i = 0; i < num_nodes; ++i) member_offsets_[i + 1] = member_offsets_[i] + degree[i];
  member_edges_.resize(edge_nodes_.size());
  std::vector<std::size_t> cursor(member_offsets_.begin(), member_offsets_.end() - 1);
  for (std::size_t j = 0; j + 1 < edge_offsets_.size(); ++j)
    for (std::size_t p = edge_offsets_[j]; p < edge_offsets_[j + 1]; ++p)
      member_edges_[cursor[edge_nodes_[p]]++] = static_cast<EdgeId>(j);
}

std::size_t Hypergraph::max_edge_size() const {
  std::size_t best = 0;
  for (std::size_t j = 0; j < num_edges(); ++j) best = std::max(best, edge_size(j));
  return best;
}

std::vector<std::vector<NodeId>> Hypergraph::edge_list() const {
  std::vector<std::vector<NodeId>> out;
  out.reserve(num_edges());
  for (std::size_t j = 0; j < num_edges(); ++j) {
    auto e = edge(j);
    out.emplace_back(e.begin(), e.end());
  }
  return out;
}

EpidemicState EpidemicState::all_infected(std::size_t num_nodes) {
  EpidemicState s(num_nodes);
  std::fill(s.bits_.begin(), s.bits_.end(), 1);
  s.infected_count_ = num_nodes;
  return s;
}

EpidemicState EpidemicState::from_infected(std::size_t num_nodes, std::span<const NodeId> infected) {
  EpidemicState s(num_nodes);
  for (NodeId v : infected) {
    if (v >= num_nodes) throw ValidationError("infected node id out of range");
    s.set(v, true);
  }
  return s;
}

EpidemicState EpidemicState::from_string(std::string_view word) {
  EpidemicState s(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word[i] == 'I' || word[i] == 'i')
      s.set(static_cast<NodeId>(i), true);
    else if (word[i] != 'S' && word[i] != 's')
      throw ValidationError("state word may only contain S and I");
  }
  return s;
}

void EpidemicState::set(NodeId node, bool infected) {
  const std::uint8_t v = infected ? 1 : 0;
  if (bits_[node] != v) {
    bits_[node] = v;
    if (infected)
      ++infected_count_;
    else
      --infected_count_;
  }
}

std::string EpidemicState::to_string() const {
  std::string out(bits_.size(), 'S');
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out[i] = 'I';
  return out;
}

WeightedGraph::WeightedGraph(std::size_t num_nodes, std::span<const WeightedEdge> edges)
    : num_nodes_(num_nodes) {
  std::vector<std::pair<NodeId, Neighbour>> entries;
  entries.reserve(2 * edges.size());
  for (const auto& e : edges) {
    if (e.a >= num_nodes || e.b >= num_nodes) throw ValidationError("graph edge out of range");
    if (e.a == e.b) throw ValidationError("graph edges may not be self-loops");
    if (e.weight == 0) continue;
    entries.push_back({e.a, {e.b, e.weight}});
    entries.push_back({e.b, {e.a, e.weight}});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first < y.first : x.second.node < y.second.node;
  });
  offsets_.assign(num_nodes + 1, 0);
  for (const auto& [from, nb] : entries) {
    if (!adjacency_.empty() && offsets_[from + 1] > 0 && adjacency_.back().node == nb.node) {
      adjacency_.back().weight += nb.weight;
      continue;
    }
    adjacency_.push_back(nb);
    ++offsets_[from + 1];
  }
  for (std::size_t i = 0; i < num_nodes; ++i) offsets_[i + 1] += offsets_[i];
}

std::uint32_t WeightedGraph::weight(NodeId a, NodeId b) const {
  auto nb = neighbours(a);
  auto it = std::lower_bound(nb.begin(), nb.end(), b,
                             [](const Neighbour& n, NodeId v) { return n.node < v; });
  return (it != nb.end() && it->node == b) ? it->weight : 0;
}

std::vector<WeightedEdge> WeightedGraph::edge_list() const {
  std::vector<WeightedEdge> out;
  for (NodeId a = 0; a < num_nodes_; ++a)
    for (const auto& nb : neighbours(a))
      if (a < nb.node) out.push_back({a, nb.node, nb.weight});
  return out;
}

namespace {

void check_paired(const Hypergraph& h, const EpidemicState& s) {
  if (s.size() != h.num_nodes())
    throw ValidationError("state has " + std::to_string(s.size()) + " nodes, hypergraph has " +
                          std::to_string(h.num_nodes()));
}

}  // namespace

std::vector<std::uint32_t> edge_infected_counts(const Hypergraph& h, const EpidemicState& s) {
  check_paired(h, s);
  std::vector<std::uint32_t> counts(h.num_edges(), 0);
  for (EdgeId j = 0; j < h.num_edges(); ++j)
    for (NodeId v : h.edge(j)) counts[j] += s.infected(v) ? 1 : 0;
  return counts;
}

double infection_rate(const Hypergraph& h, const EpidemicState& s, NodeId node,
                      const EpidemicParams& p) {
  check_paired(h, s);
  if (node >= h.num_nodes()) throw ValidationError("node id out of range");
  if (s.infected(node)) throw ValidationError("infection_rate requires a susceptible node");
  double pressure = 0.0;
  for (EdgeId j : h.memberships(node)) {
    std::uint32_t k = 0;
    for (NodeId v : h.edge(j)) k += s.infected(v) ? 1 : 0;
    pressure += p.f(static_cast<double>(k));
  }
  return p.tau * pressure;
}

double n_si_f(const Hypergraph& h, const EpidemicState& s, const InfectionFunction& f) {
  const auto counts = edge_infected_counts(h, s);
  double total = 0.0;
  for (NodeId l = 0; l < h.num_nodes(); ++l) {
    if (s.infected(l)) continue;
    for (EdgeId j : h.memberships(l)) total += f(static_cast<double>(counts[j]));
  }
  return total;
}

WeightedGraph clique_expand(const Hypergraph& h) {
  std::vector<WeightedEdge> pairs;
  for (EdgeId j = 0; j < h.num_edges(); ++j) {
    auto e = h.edge(j);
    for (std::size_t a = 0; a < e.size(); ++a)
      for (std::size_t b = a + 1; b < e.size(); ++b) pairs.push_back({e[a], e[b], 1});
  }
  return WeightedGraph(h.num_nodes(), pairs);
}

namespace {

std::string_view strip_comment(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) line = line.substr(0, pos);
  return line;
}

std::vector<std::uint64_t> parse_integers(std::string_view line, std::size_t line_no) {
  std::vector<std::uint64_t> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size()) break;
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), value);
    const auto end = static_cast<std::size_t>(ptr - line.data());
    if (ec != std::errc{} || (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))))
      throw ValidationError("line " + std::to_string(line_no) + ": expected a non-negative integer");
    out.push_back(value);
    i = end;
  }
  return out;
}

}  // namespace

Hypergraph parse_hypergraph(std::string_view text) {
  std::vector<std::vector<std::uint64_t>> rows;
  std::vector<std::size_t> row_lines;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    auto values = parse_integers(strip_comment(line), line_no);
    if (values.empty()) continue;
    rows.push_back(std::move(values));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw ValidationError("missing 'N M' header");
  if (rows[0].size() != 2) throw ValidationError("header must be exactly 'N M'");
  const std::uint64_t n = rows[0][0];
  const std::uint64_t m = rows[0][1];
  if (rows.size() - 1 != m)
    throw ValidationError("header declares " + std::to_string(m) + " hyperedges, found " +
                          std::to_string(rows.size() - 1));
  std::vector<std::vector<NodeId>> edges;
  edges.reserve(m);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<NodeId> e;
    for (auto v : rows[r]) {
      if (v >= n)
        throw ValidationError("line " + std::to_string(row_lines[r]) + ": node id " +
                              std::to_string(v) + " >= N");
      e.push_back(static_cast<NodeId>(v));
    }
    edges.push_back(std::move(e));
  }
  return Hypergraph(n, std::move(edges));
}

std::string format_hypergraph(const Hypergraph& h) {
  std::ostringstream out;
  out << h.num_nodes() << ' ' << h.num_edges() << '\n';
  for (EdgeId j = 0; j < h.num_edges(); ++j) {
    bool first = true;
    for (NodeId v : h.edge(j)) {
      if (!first) out << ' ';
      out << v;
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

Hypergraph load_hypergraph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open hypergraph file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_hypergraph(buf.str());
}

void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write hypergraph file " + path.string());
  out << format_hypergraph(h);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Hypergraph example_hypergraph() {
  return Hypergraph(4, {{0, 1, 3}, {1, 2}, {2, 3}});
}

}  // namespace hypersis

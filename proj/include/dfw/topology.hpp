#pragma once

// Undirected communication graphs and the time-varying sequences G^0, G^1, ...
// that drive the decentralized solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfw/errors.hpp"
#include "dfw/rng.hpp"

namespace dfw {

using Edge = std::pair<std::size_t, std::size_t>;

/// Immutable undirected simple graph on nodes [0, n). Edges are stored as
/// sorted pairs (i < j) in lexicographic order, so equality is structural.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n_nodes, std::vector<Edge> edges) : n_(n_nodes), edges_(std::move(edges)) {
    if (n_ == 0) throw std::invalid_argument("Graph: n_nodes must be positive");
    for (auto& [i, j] : edges_) {
      if (i == j) throw std::invalid_argument("Graph: self-loop on node " + std::to_string(i));
      if (i >= n_ || j >= n_) throw std::invalid_argument("Graph: node index out of range");
      if (i > j) std::swap(i, j);
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw std::invalid_argument("Graph: duplicate edge");
  }

  static Graph complete(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, std::move(e));
  }

  static Graph path(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph(n, std::move(e));
  }

  static Graph ring(std::size_t n) {
    if (n < 3) return path(n);
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, std::move(e));
  }

  std::size_t n_nodes() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t max_edges() const { return n_ * (n_ - 1) / 2; }

  bool has_edge(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(n_, 0);
    for (const auto& [i, j] : edges_) {
      ++deg[i];
      ++deg[j];
    }
    return deg;
  }

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(n_);
    for (const auto& [i, j] : edges_) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    return adj;
  }

  /// Candidate pairs not present in the graph, in lexicographic order.
  std::vector<Edge> absent_edges() const {
    std::vector<Edge> out;
    out.reserve(max_edges() - edges_.size());
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (!has_edge(i, j)) out.emplace_back(i, j);
    return out;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

/// Debug dump: header line "n <n_nodes>" followed by one "i j" line per edge.
inline std::string to_edge_list(const Graph& g) {
  std::ostringstream os;
  os << "n " << g.n_nodes() << '\n';
  for (const auto& [i, j] : g.edges()) os << i << ' ' << j << '\n';
  return os.str();
}

inline Graph parse_edge_list(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "n") throw std::invalid_argument("edge list: missing 'n <count>' header");
  std::vector<Edge> edges;
  std::size_t i, j;
  while (is >> i >> j) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

/// True iff a breadth-first traversal from node 0 reaches every node.
inline bool is_connected(const Graph& g) {
  const std::size_t n = g.n_nodes();
  if (n <= 1) return true;
  const auto adj = g.adjacency();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> frontier{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.back();
    frontier.pop_back();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push_back(v);
      }
    }
  }
  return reached == n;
}

/// G(n, p): each of the n(n-1)/2 candidate edges is kept independently with
/// probability p. Candidates are visited in lexicographic order, one draw each.
inline Graph gen_erdos_renyi(std::size_t n, double p, Rng& rng) {
  if (n < 2) throw std::invalid_argument("gen_erdos_renyi: n must be >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("gen_erdos_renyi: p must lie in [0, 1]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (unif(rng) < p) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

inline constexpr std::size_t kDefaultRetryBudget = 10000;

/// Performs `swaps` edge swaps, each removing a uniformly random present edge
/// and adding a uniformly random edge that was absent before the swap. The edge
/// count is preserved. With `require_connected`, a swap whose result is
/// disconnected is redrawn, up to `retry_budget` draws per swap.
inline Graph edge_swap_step(const Graph& g, std::size_t swaps, Rng& rng, bool require_connected = true,
                            std::size_t retry_budget = kDefaultRetryBudget) {
  if (swaps == 0) return g;
  if (g.n_edges() == 0 || g.n_edges() == g.max_edges())
    throw std::invalid_argument("edge_swap_step: graph must have at least one present and one absent edge");

  Graph current = g;
  for (std::size_t s = 0; s < swaps; ++s) {
    const auto& present = current.edges();
    const auto absent = current.absent_edges();
    std::uniform_int_distribution<std::size_t> pick_present(0, present.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_absent(0, absent.size() - 1);
    bool done = false;
    for (std::size_t attempt = 0; attempt < retry_budget; ++attempt) {
      const std::size_t drop = pick_present(rng);
      const std::size_t add = pick_absent(rng);
      std::vector<Edge> next;
      next.reserve(present.size());
      for (std::size_t k = 0; k < present.size(); ++k)
        if (k != drop) next.push_back(present[k]);
      next.push_back(absent[add]);
      Graph candidate(current.n_nodes(), std::move(next));
      if (!require_connected || is_connected(candidate)) {
        current = std::move(candidate);
        done = true;
        break;
      }
    }
    if (!done)
      throw DegenerateTopologyError("edge_swap_step: no connected swap found after " +
                                    std::to_string(retry_budget) + " draws");
  }
  return current;
}

enum class SequenceKind { Static, ErdosRenyiPerRound, EdgeSwap };

inline std::string to_string(SequenceKind k) {
  switch (k) {
    case SequenceKind::Static: return "static";
    case SequenceKind::ErdosRenyiPerRound: return "erdos_renyi";
    case SequenceKind::EdgeSwap: return "edge_swap";
  }
  return "?";
}

inline SequenceKind sequence_kind_from_string(const std::string& s) {
  if (s == "static") return SequenceKind::Static;
  if (s == "erdos_renyi" || s == "er") return SequenceKind::ErdosRenyiPerRound;
  if (s == "edge_swap" || s == "swap") return SequenceKind::EdgeSwap;
  throw std::invalid_argument("unknown topology kind '" + s + "'");
}

/// Describes a graph sequence. Static and EdgeSwap start from `initial` when
/// given, otherwise from a (connected, if required) G(n, p) draw.
struct GraphSequenceSpec {
  SequenceKind kind = SequenceKind::ErdosRenyiPerRound;
  std::size_t n_nodes = 5;
  double p = 0.5;
  std::size_t swaps_per_round = 1;
  std::uint64_t seed = 1;
  bool require_connected = true;
  std::optional<Graph> initial;
};

/// ln(n)/n, the connectivity threshold for G(n, p).
inline double connectivity_threshold(std::size_t n) {
  return std::log(static_cast<double>(n)) / static_cast<double>(n);
}

inline bool above_connectivity_threshold(const GraphSequenceSpec& spec) {
  return spec.p > connectivity_threshold(spec.n_nodes);
}

namespace detail {

inline Graph sample_er(const GraphSequenceSpec& spec, Rng& rng) {
  if (!spec.require_connected) return gen_erdos_renyi(spec.n_nodes, spec.p, rng);
  for (std::size_t attempt = 0; attempt < kDefaultRetryBudget; ++attempt) {
    Graph g = gen_erdos_renyi(spec.n_nodes, spec.p, rng);
    if (is_connected(g)) return g;
  }
  throw DegenerateTopologyError("no connected G(" + std::to_string(spec.n_nodes) + ", " + std::to_string(spec.p) +
                                ") draw within " + std::to_string(kDefaultRetryBudget) + " attempts");
}

inline Graph initial_graph(const GraphSequenceSpec& spec, Rng& rng) {
  if (spec.initial) {
    if (spec.initial->n_nodes() != spec.n_nodes)
      throw std::invalid_argument("GraphSequenceSpec: initial graph has wrong node count");
    if (spec.require_connected && !is_connected(*spec.initial))
      throw DegenerateTopologyError("GraphSequenceSpec: initial graph is disconnected");
    return *spec.initial;
  }
  if (spec.n_nodes == 1) return Graph(1, {});
  return sample_er(spec, rng);
}

}  // namespace detail

/// Graph for round t. `prev` is the graph of round t-1 (required for EdgeSwap
/// at t > 0 and used by Static to repeat the round-0 graph).
inline Graph next_graph(const GraphSequenceSpec& spec, std::size_t t, const std::optional<Graph>& prev, Rng& rng) {
  if (t == 0) return detail::initial_graph(spec, rng);
  switch (spec.kind) {
    case SequenceKind::Static:
      if (!prev) throw std::invalid_argument("next_graph: Static at t > 0 needs the round-0 graph");
      return *prev;
    case SequenceKind::ErdosRenyiPerRound:
      if (spec.n_nodes == 1) return Graph(1, {});
      return detail::sample_er(spec, rng);
    case SequenceKind::EdgeSwap:
      if (!prev) throw std::invalid_argument("next_graph: EdgeSwap at t > 0 needs the previous graph");
      return edge_swap_step(*prev, spec.swaps_per_round, rng, spec.require_connected);
  }
  throw std::logic_error("next_graph: unreachable");
}

/// Stateful generator over a GraphSequenceSpec, owning its topology sub-stream.
class GraphSequence {
 public:
  explicit GraphSequence(GraphSequenceSpec spec)
      : spec_(std::move(spec)), rng_(make_rng(spec_.seed, Stream::Topology)) {}

  const Graph& next() {
    current_ = next_graph(spec_, t_, current_, rng_);
    ++t_;
    return *current_;
  }

  std::size_t rounds_emitted() const { return t_; }
  const GraphSequenceSpec& spec() const { return spec_; }

 private:
  GraphSequenceSpec spec_;
  Rng rng_;
  std::optional<Graph> current_;
  std::size_t t_ = 0;
};

}  // namespace dfw

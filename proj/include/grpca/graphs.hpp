#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/numerics.hpp"
#include "grpca/random.hpp"

namespace grpca {

using Edge = std::pair<Index, Index>;

/// Simple undirected graph on `p` features with its combinatorial Laplacian
/// L = D - A. Immutable once built.
class FeatureGraph {
 public:
  FeatureGraph() = default;

  FeatureGraph(Index p, std::vector<Edge> edges) : p_(p) {
    require(p >= 1, ErrorKind::InvalidArgument, "FeatureGraph: need at least one node");
    for (auto& [i, j] : edges) {
      require(i >= 0 && j >= 0 && i < p && j < p, ErrorKind::InvalidArgument,
              "FeatureGraph: edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
      require(i != j, ErrorKind::InvalidArgument, "FeatureGraph: self-loop at " + std::to_string(i));
      if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    neighbors_.assign(static_cast<std::size_t>(p), {});
    degrees_.assign(static_cast<std::size_t>(p), 0);
    laplacian_ = Matrix::Zero(p, p);
    for (const auto& [i, j] : edges_) {
      neighbors_[static_cast<std::size_t>(i)].push_back(j);
      neighbors_[static_cast<std::size_t>(j)].push_back(i);
      ++degrees_[static_cast<std::size_t>(i)];
      ++degrees_[static_cast<std::size_t>(j)];
      laplacian_(i, j) = -1.0;
      laplacian_(j, i) = -1.0;
    }
    for (Index i = 0; i < p; ++i) {
      auto& nb = neighbors_[static_cast<std::size_t>(i)];
      std::sort(nb.begin(), nb.end());
      laplacian_(i, i) = static_cast<double>(degrees_[static_cast<std::size_t>(i)]);
    }
  }

  Index p() const noexcept { return p_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Index>& degrees() const noexcept { return degrees_; }
  Index degree(Index j) const { return degrees_.at(static_cast<std::size_t>(j)); }
  const std::vector<Index>& neighbors(Index j) const { return neighbors_.at(static_cast<std::size_t>(j)); }
  const Matrix& laplacian() const noexcept { return laplacian_; }

  Matrix adjacency() const {
    Matrix a = -laplacian_;
    a.diagonal().setZero();
    return a;
  }

  /// Fraction of the p(p-1)/2 possible edges present.
  double density() const {
    if (p_ < 2) return 0.0;
    return static_cast<double>(edges_.size()) / (0.5 * static_cast<double>(p_) * static_cast<double>(p_ - 1));
  }

  Index max_degree() const {
    return degrees_.empty() ? 0 : *std::max_element(degrees_.begin(), degrees_.end());
  }

  /// Unweighted hop distances from `source`; unreachable nodes get -1.
  std::vector<Index> distances_from(Index source) const {
    require(source >= 0 && source < p_, ErrorKind::InvalidArgument, "distances_from: bad source");
    std::vector<Index> dist(static_cast<std::size_t>(p_), -1);
    std::queue<Index> frontier;
    dist[static_cast<std::size_t>(source)] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
      const Index u = frontier.front();
      frontier.pop();
      for (Index w : neighbors(u)) {
        if (dist[static_cast<std::size_t>(w)] < 0) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
          frontier.push(w);
        }
      }
    }
    return dist;
  }

  Index connected_components() const {
    std::vector<bool> seen(static_cast<std::size_t>(p_), false);
    Index count = 0;
    for (Index s = 0; s < p_; ++s) {
      if (seen[static_cast<std::size_t>(s)]) continue;
      ++count;
      const auto dist = distances_from(s);
      for (Index v = 0; v < p_; ++v)
        if (dist[static_cast<std::size_t>(v)] >= 0) seen[static_cast<std::size_t>(v)] = true;
    }
    return count;
  }

 private:
  Index p_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> degrees_;
  std::vector<std::vector<Index>> neighbors_;
  Matrix laplacian_;
};

struct ErdosRenyi {
  double edge_prob = 0.1;
};

struct BarabasiAlbert {
  Index attach_m = 1;
};

struct WattsStrogatz {
  Index ring_k = 2;
  double rewire_prob = 0.1;
};

using TopologyKind = std::variant<ErdosRenyi, BarabasiAlbert, WattsStrogatz>;

enum class Topology { ER, BA, WS };

inline std::string to_string(Topology t) {
  switch (t) {
    case Topology::ER: return "ER";
    case Topology::BA: return "BA";
    case Topology::WS: return "WS";
  }
  return "?";
}

inline Topology parse_topology(const std::string& name) {
  if (name == "ER") return Topology::ER;
  if (name == "BA") return Topology::BA;
  if (name == "WS") return Topology::WS;
  fail(ErrorKind::InvalidParameter, "unknown topology '" + name + "' (expected ER, BA or WS)");
}

inline Topology topology_of(const TopologyKind& kind) {
  return static_cast<Topology>(kind.index());
}

inline std::string describe(const TopologyKind& kind) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ErdosRenyi>) os << "ER(edge_prob=" << k.edge_prob << ")";
        else if constexpr (std::is_same_v<K, BarabasiAlbert>) os << "BA(attach_m=" << k.attach_m << ")";
        else os << "WS(ring_k=" << k.ring_k << ",rewire_prob=" << k.rewire_prob << ")";
      },
      kind);
  return os.str();
}

namespace detail {

inline double pair_count(Index p) { return 0.5 * static_cast<double>(p) * static_cast<double>(p - 1); }

inline void validate(const TopologyKind& kind, Index p) {
  require(p >= 3, ErrorKind::InvalidParameter, "graph generation needs p >= 3");
  std::visit(
      [p](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ErdosRenyi>) {
          require(k.edge_prob >= 0.0 && k.edge_prob <= 1.0, ErrorKind::InvalidParameter,
                  "ER edge_prob must lie in [0, 1]");
        } else if constexpr (std::is_same_v<K, BarabasiAlbert>) {
          require(k.attach_m >= 1 && k.attach_m < p, ErrorKind::InvalidParameter, "BA attach_m must satisfy 1 <= m < p");
        } else {
          require(k.ring_k >= 2 && k.ring_k < p && k.ring_k % 2 == 0, ErrorKind::InvalidParameter,
                  "WS ring_k must be even with 2 <= k < p");
          require(k.rewire_prob >= 0.0 && k.rewire_prob <= 1.0, ErrorKind::InvalidParameter,
                  "WS rewire_prob must lie in [0, 1]");
        }
      },
      kind);
}

inline std::vector<Edge> erdos_renyi(Index p, double prob, RandomSource& rs) {
  std::vector<Edge> edges;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (rs.bernoulli(prob)) edges.emplace_back(i, j);
  return edges;
}

// Seed: complete graph on m + 1 nodes. Every later node attaches to m
// distinct existing nodes drawn with probability proportional to degree.
inline std::vector<Edge> barabasi_albert(Index p, Index m, RandomSource& rs) {
  std::vector<Edge> edges;
  std::vector<Index> stubs;
  for (Index i = 0; i <= m; ++i)
    for (Index j = i + 1; j <= m; ++j) {
      edges.emplace_back(i, j);
      stubs.push_back(i);
      stubs.push_back(j);
    }
  std::vector<Index> chosen;
  for (Index t = m + 1; t < p; ++t) {
    chosen.clear();
    while (static_cast<Index>(chosen.size()) < m) {
      const Index target = stubs[rs.uniform_int(stubs.size())];
      if (std::find(chosen.begin(), chosen.end(), target) == chosen.end()) chosen.push_back(target);
    }
    for (Index target : chosen) {
      edges.emplace_back(target, t);
      stubs.push_back(target);
      stubs.push_back(t);
    }
  }
  return edges;
}

// Ring lattice with k/2 neighbours per side; each lattice edge (i, i+j) is
// rewired with probability `prob` to a uniformly chosen node that is neither
// i nor already adjacent to i. Edges with no admissible target stay put.
inline std::vector<Edge> watts_strogatz(Index p, Index k, double prob, RandomSource& rs) {
  std::vector<std::vector<char>> adj(static_cast<std::size_t>(p), std::vector<char>(static_cast<std::size_t>(p), 0));
  auto link = [&adj](Index a, Index b, char on) {
    adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = on;
    adj[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = on;
  };
  for (Index i = 0; i < p; ++i)
    for (Index j = 1; j <= k / 2; ++j) link(i, (i + j) % p, 1);

  std::vector<Index> candidates;
  for (Index j = 1; j <= k / 2; ++j) {
    for (Index i = 0; i < p; ++i) {
      if (!rs.bernoulli(prob)) continue;
      const Index old = (i + j) % p;
      if (!adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(old)]) continue;
      candidates.clear();
      for (Index w = 0; w < p; ++w)
        if (w != i && !adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)]) candidates.push_back(w);
      if (candidates.empty()) continue;
      const Index fresh = candidates[rs.uniform_int(candidates.size())];
      link(i, old, 0);
      link(i, fresh, 1);
    }
  }
  std::vector<Edge> edges;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) edges.emplace_back(i, j);
  return edges;
}

}  // namespace detail

inline FeatureGraph generate_graph(const TopologyKind& kind, Index p, RandomSource& rs) {
  detail::validate(kind, p);
  std::vector<Edge> edges = std::visit(
      [p, &rs](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ErdosRenyi>) return detail::erdos_renyi(p, k.edge_prob, rs);
        else if constexpr (std::is_same_v<K, BarabasiAlbert>) return detail::barabasi_albert(p, k.attach_m, rs);
        else return detail::watts_strogatz(p, k.ring_k, k.rewire_prob, rs);
      },
      kind);
  return FeatureGraph(p, std::move(edges));
}

/// Edge count produced by the BA construction (complete seed on m + 1 nodes).
inline std::size_t barabasi_albert_edge_count(Index p, Index m) {
  const auto mm = static_cast<std::size_t>(m);
  return mm * (mm + 1) / 2 + mm * static_cast<std::size_t>(p - m - 1);
}

/// Expected edge density of a topology's parameters on p nodes.
inline double expected_density(const TopologyKind& kind, Index p) {
  return std::visit(
      [p](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ErdosRenyi>) return k.edge_prob;
        else if constexpr (std::is_same_v<K, BarabasiAlbert>)
          return static_cast<double>(barabasi_albert_edge_count(p, k.attach_m)) / detail::pair_count(p);
        else return static_cast<double>(k.ring_k) / static_cast<double>(p - 1);
      },
      kind);
}

/// Parameters whose expected density is the feasible value nearest
/// `target`. BA and WS snap to their discrete grids; targets below a
/// topology's smallest feasible density are Infeasible.
inline TopologyKind density_to_params(Topology topology, Index p, double target, double ws_rewire_prob = 0.1) {
  require(p >= 3, ErrorKind::InvalidParameter, "density_to_params needs p >= 3");
  require(target > 0.0 && target <= 1.0, ErrorKind::InvalidParameter,
          "target density must lie in (0, 1], got " + std::to_string(target));
  constexpr double slack = 1e-12;
  switch (topology) {
    case Topology::ER:
      return ErdosRenyi{target};
    case Topology::BA: {
      const double min_density = expected_density(BarabasiAlbert{1}, p);
      require(target >= min_density * (1.0 - slack), ErrorKind::Infeasible,
              "BA cannot go below density " + std::to_string(min_density) + " on " + std::to_string(p) + " nodes");
      Index best = 1;
      double best_gap = std::numeric_limits<double>::infinity();
      for (Index m = 1; m < p; ++m) {
        const double gap = std::abs(expected_density(BarabasiAlbert{m}, p) - target);
        if (gap < best_gap) {
          best_gap = gap;
          best = m;
        }
      }
      return BarabasiAlbert{best};
    }
    case Topology::WS: {
      const double min_density = 2.0 / static_cast<double>(p - 1);
      require(target >= min_density * (1.0 - slack), ErrorKind::Infeasible,
              "WS cannot go below density " + std::to_string(min_density) + " on " + std::to_string(p) + " nodes");
      const Index max_k = (p - 1) % 2 == 0 ? p - 1 : p - 2;
      const double raw = target * static_cast<double>(p - 1);
      Index k = 2 * static_cast<Index>(std::llround(raw / 2.0));
      k = std::clamp<Index>(k, 2, max_k);
      return WattsStrogatz{k, ws_rewire_prob};
    }
  }
  fail(ErrorKind::InvalidParameter, "unknown topology");
}

/// tr(V^T L V): summed total variation of the columns of V over the edges.
inline double laplacian_quadratic(const FeatureGraph& g, const Matrix& v) {
  require(v.rows() == g.p(), ErrorKind::DimensionMismatch,
          "laplacian_quadratic: V has " + std::to_string(v.rows()) + " rows, graph has " + std::to_string(g.p()) + " nodes");
  return (v.transpose() * g.laplacian() * v).trace();
}

/// Support graph of a precision matrix: edge (i, j) iff the symmetric part
/// satisfies |Theta_ij| > threshold. The diagonal is ignored.
inline FeatureGraph adjacency_from_precision(const Matrix& theta, double threshold = 0.0) {
  require(is_square(theta), ErrorKind::DimensionMismatch, "adjacency_from_precision: matrix is " + detail::shape(theta));
  require(threshold >= 0.0, ErrorKind::InvalidArgument, "adjacency_from_precision: threshold must be >= 0");
  const Index p = theta.rows();
  std::vector<Edge> edges;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      if (std::abs(0.5 * (theta(i, j) + theta(j, i))) > threshold) edges.emplace_back(i, j);
  return FeatureGraph(p, std::move(edges));
}

/// One "i j" pair per line, 0-indexed, i < j.
inline void write_edge_list(std::ostream& os, const FeatureGraph& g) {
  for (const auto& [i, j] : g.edges()) os << i << ' ' << j << '\n';
}

/// Reads an edge list written by `write_edge_list`. Blank lines and lines
/// starting with '#' are skipped.
inline FeatureGraph read_edge_list(std::istream& is, Index p) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a >> b)) fail(ErrorKind::ParseError, "edge list line " + std::to_string(lineno) + ": expected 'i j'");
    edges.emplace_back(static_cast<Index>(a), static_cast<Index>(b));
  }
  return FeatureGraph(p, std::move(edges));
}

}  // namespace grpca

#pragma once

#include <winfty/cells.hpp>

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace winfty {

/// Weighted bipartite graph with left vertices labeled by target subsets and
/// right vertices by targets; (A, i) is an edge iff i is in A.
struct TransportGraph {
  std::size_t n_targets = 0;
  std::map<TargetSet, Rational> left;
  std::vector<Rational> right;

  Rational left_weight(TargetSet a) const {
    auto it = left.find(a);
    return it == left.end() ? Rational(0) : it->second;
  }

  /// Throws unless both sides are nonnegative and sum to exactly one.
  void validate() const {
    if (n_targets == 0 || right.size() != n_targets) throw Error("transport graph: right side must have N >= 1 weights");
    check_target_count(n_targets);
    const TargetSet full = TargetSet::full(n_targets);
    Rational l = 0, r = 0;
    for (const auto& [a, w] : left) {
      if (!a.subset_of(full)) throw Error("transport graph: left vertex " + a.str() + " names a missing target");
      if (w < 0) throw Error("transport graph: negative weight on " + a.str());
      l += w;
    }
    for (const auto& w : right) {
      if (w < 0) throw Error("transport graph: negative right weight");
      r += w;
    }
    if (l != 1) throw MassError("transport graph: left weights sum to " + to_string(l), 1 - l);
    if (r != 1) throw MassError("transport graph: right weights sum to " + to_string(r), 1 - r);
  }
};

/// Edge masses M(A, i); absent entries are zero.
class Matching {
 public:
  using Key = std::pair<TargetSet, std::size_t>;

  Rational at(TargetSet a, std::size_t i) const {
    auto it = entries_.find({a, i});
    return it == entries_.end() ? Rational(0) : it->second;
  }
  void set(TargetSet a, std::size_t i, Rational m) {
    if (m < 0) throw Error("matching entries must be nonnegative");
    if (m == 0)
      entries_.erase({a, i});
    else
      entries_[{a, i}] = std::move(m);
  }
  const std::map<Key, Rational>& entries() const { return entries_; }

  Rational row_sum(TargetSet a) const {
    Rational s = 0;
    for (auto it = entries_.lower_bound({a, 0}); it != entries_.end() && it->first.first == a; ++it) s += it->second;
    return s;
  }
  Rational column_sum(std::size_t i) const {
    Rational s = 0;
    for (const auto& [k, m] : entries_)
      if (k.second == i) s += m;
    return s;
  }

  /// Every positive entry lies on an edge.
  bool valid() const {
    for (const auto& [k, m] : entries_)
      if (!k.first.contains(k.second)) return false;
    return true;
  }

  /// Empty when the matching is a valid perfect matching of g; otherwise a
  /// description of the first violated condition.
  std::optional<std::string> perfect_violation(const TransportGraph& g) const {
    for (const auto& [k, m] : entries_) {
      if (!k.first.contains(k.second))
        return "entry (" + k.first.str() + ", y" + std::to_string(k.second + 1) + ") is not an edge";
      if (k.second >= g.n_targets) return "entry names target beyond N";
    }
    std::map<TargetSet, Rational> rows;
    for (const auto& [k, m] : entries_) rows[k.first] += m;
    for (const auto& [a, w] : g.left)
      if (const Rational s = rows.count(a) ? rows[a] : Rational(0); s != w)
        return "row " + a.str() + " sums to " + to_string(s) + ", expected " + to_string(w);
    for (const auto& [a, s] : rows)
      if (!g.left.count(a) && s != 0) return "row " + a.str() + " is not a left vertex of the graph";
    std::vector<Rational> cols(g.n_targets, Rational(0));
    for (const auto& [k, m] : entries_) cols[k.second] += m;
    for (std::size_t i = 0; i < g.n_targets; ++i)
      if (cols[i] != g.right[i])
        return "column y" + std::to_string(i + 1) + " sums to " + to_string(cols[i]) + ", expected " +
               to_string(g.right[i]);
    return std::nullopt;
  }
  bool is_perfect(const TransportGraph& g) const { return !perfect_violation(g).has_value(); }

  friend bool operator==(const Matching&, const Matching&) = default;

 private:
  std::map<Key, Rational> entries_;
};

/// Left weights are the cell masses, right weights the target weights.
inline TransportGraph build_graph(const CellDecomposition& cells, const TargetMeasure& target) {
  if (cells.n_targets != target.size()) throw Error("build_graph: decomposition and target disagree on N");
  TransportGraph g;
  g.n_targets = target.size();
  g.left = cells.masses;
  g.right = target.weights();
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(std::string("internal error: inconsistent transport graph: ") + e.what());
  }
  return g;
}

/// In-place sum over subsets: f[S] <- sum over A subset of S of f[A].
template <class T>
void zeta_subset_sum(std::vector<T>& f, std::size_t n) {
  const std::size_t size = std::size_t{1} << n;
  for (std::size_t bit = 0; bit < n; ++bit) {
    const std::size_t b = std::size_t{1} << bit;
    for (std::size_t s = 0; s < size; ++s)
      if (s & b) f[s] += f[s ^ b];
  }
}

namespace detail {

/// Common denominator of every weight in the graph.
inline BigInt graph_denominator(const TransportGraph& g) {
  BigInt d = 1;
  for (const auto& [a, w] : g.left) d = lcm(d, denom(w));
  for (const auto& w : g.right) d = lcm(d, denom(w));
  return d;
}

inline bool fits_int64(const BigInt& d) { return d <= (BigInt(1) << 62); }

template <class Int>
Int scale(const Rational& w, const BigInt& d) {
  const BigInt v = numer(w) * (d / denom(w));
  if constexpr (std::is_same_v<Int, BigInt>)
    return v;
  else
    return v.template convert_to<Int>();
}

template <class Int>
std::optional<TargetSet> hall_violation_scaled(const TransportGraph& g, const BigInt& d) {
  const std::size_t n = g.n_targets;
  const std::size_t size = std::size_t{1} << n;
  std::vector<Int> reach_only(size, Int(0));
  for (const auto& [a, w] : g.left) reach_only[a.bits()] += scale<Int>(w, d);
  zeta_subset_sum(reach_only, n);
  std::vector<Int> capacity(size, Int(0));
  for (std::size_t s = 1; s < size; ++s) {
    const std::size_t low = static_cast<std::size_t>(std::countr_zero(s));
    capacity[s] = capacity[s & (s - 1)] + scale<Int>(g.right[low], d);
  }
  for (std::size_t s = 0; s < size; ++s)
    if (reach_only[s] > capacity[s]) return TargetSet(static_cast<std::uint32_t>(s));
  return std::nullopt;
}

}  // namespace detail

/// Smallest target set S (in bitmask order) whose demand from cells lying
/// inside S exceeds its capacity nu(S); empty iff a perfect matching exists.
///
/// Only the families {A : A subset of S} need checking: any family of left
/// vertices is dominated by the down-set of its neighborhood. The down-set
/// sums come from one zeta transform, so the check costs O(N 2^N).
inline std::optional<TargetSet> hall_violation(const TransportGraph& g) {
  g.validate();
  const BigInt d = detail::graph_denominator(g);
  if (detail::fits_int64(d)) return detail::hall_violation_scaled<std::int64_t>(g, d);
  return detail::hall_violation_scaled<BigInt>(g, d);
}

inline bool hall_feasible(const TransportGraph& g) { return !hall_violation(g).has_value(); }

/// Residual network with integral capacities, solved by Edmonds-Karp
/// (shortest augmenting paths by BFS in edge insertion order).
template <class Cap>
class FlowNetwork {
 public:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    Cap capacity;
    Cap residual;
  };

  explicit FlowNetwork(std::size_t vertices) : adj_(vertices) {}

  /// Returns a handle (vertex, slot) for reading the flow back.
  std::pair<std::size_t, std::size_t> add_edge(std::size_t from, std::size_t to, Cap capacity) {
    adj_[from].push_back({to, adj_[to].size(), capacity, capacity});
    adj_[to].push_back({from, adj_[from].size() - 1, Cap(0), Cap(0)});
    return {from, adj_[from].size() - 1};
  }

  Cap flow(std::pair<std::size_t, std::size_t> handle) const {
    const Edge& e = adj_[handle.first][handle.second];
    return e.capacity - e.residual;
  }

  Cap max_flow(std::size_t source, std::size_t sink) {
    Cap total(0);
    std::vector<std::pair<std::size_t, std::size_t>> parent(adj_.size());
    for (;;) {
      std::vector<bool> seen(adj_.size(), false);
      std::queue<std::size_t> frontier;
      frontier.push(source);
      seen[source] = true;
      while (!frontier.empty() && !seen[sink]) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t k = 0; k < adj_[u].size(); ++k) {
          const Edge& e = adj_[u][k];
          if (seen[e.to] || e.residual <= 0) continue;
          seen[e.to] = true;
          parent[e.to] = {u, k};
          frontier.push(e.to);
        }
      }
      if (!seen[sink]) return total;
      Cap push = -1;
      for (std::size_t v = sink; v != source; v = parent[v].first) {
        const Edge& e = adj_[parent[v].first][parent[v].second];
        if (push < 0 || e.residual < push) push = e.residual;
      }
      for (std::size_t v = sink; v != source; v = parent[v].first) {
        Edge& e = adj_[parent[v].first][parent[v].second];
        e.residual -= push;
        adj_[e.to][e.rev].residual += push;
      }
      total += push;
    }
  }

 private:
  std::vector<std::vector<Edge>> adj_;
};

struct FlowMatching {
  Matching matching;  ///< a maximum matching, perfect iff `perfect`
  Rational value;     ///< total matched mass
  bool perfect = false;
};

namespace detail {

template <class Cap>
FlowMatching max_flow_matching_scaled(const TransportGraph& g, const BigInt& d) {
  std::vector<TargetSet> lefts;
  for (const auto& [a, w] : g.left)
    if (w > 0) lefts.push_back(a);
  const std::size_t n = g.n_targets;
  const std::size_t source = 0, sink = 1 + lefts.size() + n;
  FlowNetwork<Cap> net(sink + 1);
  std::vector<std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>>> edge_of(lefts.size());
  for (std::size_t l = 0; l < lefts.size(); ++l) {
    const Cap w = scale<Cap>(g.left.at(lefts[l]), d);
    net.add_edge(source, 1 + l, w);
    for (std::size_t i = 0; i < n; ++i)
      if (lefts[l].contains(i)) edge_of[l].push_back({i, net.add_edge(1 + l, 1 + lefts.size() + i, w)});
  }
  for (std::size_t i = 0; i < n; ++i) net.add_edge(1 + lefts.size() + i, sink, scale<Cap>(g.right[i], d));

  const Cap total = net.max_flow(source, sink);
  FlowMatching out;
  for (std::size_t l = 0; l < lefts.size(); ++l)
    for (const auto& [i, h] : edge_of[l]) {
      const Cap f = net.flow(h);
      if (f > 0) out.matching.set(lefts[l], i, Rational(BigInt(f), d));
    }
  out.value = Rational(BigInt(total), d);
  out.perfect = BigInt(total) == d;
  return out;
}

}  // namespace detail

/// Maximum matching by Edmonds-Karp on the network source -> cells ->
/// targets -> sink, with every weight scaled to an integer over the common
/// denominator D. Zero-weight cells are left out of the network. 64-bit
/// capacities are used while D <= 2^62, arbitrary precision beyond.
inline FlowMatching max_flow_matching(const TransportGraph& g) {
  g.validate();
  const BigInt d = detail::graph_denominator(g);
  if (detail::fits_int64(d)) return detail::max_flow_matching_scaled<std::int64_t>(g, d);
  return detail::max_flow_matching_scaled<BigInt>(g, d);
}

}  // namespace winfty

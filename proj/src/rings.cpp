#include "rep3net/chem/rings.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <set>

namespace rep3net::chem {

namespace {

struct Graph {
  int n = 0;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge index)
};

// Marks edges that are bridges; bridges can never be part of a cycle.
std::vector<bool> find_bridges(const Graph& g, int num_edges) {
  std::vector<bool> bridge(static_cast<std::size_t>(num_edges), false);
  std::vector<int> disc(static_cast<std::size_t>(g.n), -1), low(static_cast<std::size_t>(g.n), 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_edge) {
    disc[u] = low[u] = timer++;
    for (auto [v, e] : g.adj[u]) {
      if (e == parent_edge) continue;
      if (disc[v] < 0) {
        dfs(v, e);
        low[u] = std::min(low[u], low[v]);
        if (low[v] > disc[u]) bridge[e] = true;
      } else {
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  for (int u = 0; u < g.n; ++u) {
    if (disc[u] < 0) dfs(u, -1);
  }
  return bridge;
}

using Bits = std::vector<std::uint64_t>;

struct Candidate {
  std::vector<int> atoms;  // cycle order
  Bits edges;
  std::vector<int> sorted_atoms;
};

std::vector<int> normalize_cycle(std::vector<int> cycle) {
  auto min_it = std::min_element(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), min_it, cycle.end());
  if (cycle.size() > 2 && cycle.back() < cycle[1]) std::reverse(cycle.begin() + 1, cycle.end());
  return cycle;
}

}  // namespace

std::vector<std::vector<int>> smallest_set_of_smallest_rings(int num_vertices,
                                                             std::span<const std::pair<int, int>> edges) {
  const int num_edges = static_cast<int>(edges.size());
  Graph full{num_vertices, std::vector<std::vector<std::pair<int, int>>>(static_cast<std::size_t>(num_vertices))};
  for (int e = 0; e < num_edges; ++e) {
    full.adj[edges[e].first].emplace_back(edges[e].second, e);
    full.adj[edges[e].second].emplace_back(edges[e].first, e);
  }
  for (auto& list : full.adj) std::sort(list.begin(), list.end());

  // Cyclomatic number of the whole graph.
  std::vector<int> parent(static_cast<std::size_t>(num_vertices));
  for (int i = 0; i < num_vertices; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  int components = num_vertices;
  for (auto [a, b] : edges) {
    int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  const int nu = num_edges - num_vertices + components;
  if (nu <= 0) return {};

  const std::vector<bool> bridge = find_bridges(full, num_edges);
  Graph cyclic{num_vertices, std::vector<std::vector<std::pair<int, int>>>(static_cast<std::size_t>(num_vertices))};
  for (int u = 0; u < num_vertices; ++u) {
    for (auto [v, e] : full.adj[u]) {
      if (!bridge[e]) cyclic.adj[u].emplace_back(v, e);
    }
  }

  const std::size_t words = (static_cast<std::size_t>(num_edges) + 63) / 64;
  std::map<Bits, Candidate> unique;

  // Horton candidates: for every root and every edge (x, y), the cycle formed
  // by the shortest paths root->x, root->y and the edge itself.
  for (int root = 0; root < num_vertices; ++root) {
    if (cyclic.adj[root].size() < 2) continue;
    std::vector<int> dist(static_cast<std::size_t>(num_vertices), -1), pred(static_cast<std::size_t>(num_vertices), -1),
        pred_edge(static_cast<std::size_t>(num_vertices), -1);
    std::queue<int> queue;
    dist[root] = 0;
    queue.push(root);
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop();
      for (auto [v, e] : cyclic.adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          pred[v] = u;
          pred_edge[v] = e;
          queue.push(v);
        }
      }
    }
    auto path_to_root = [&](int v) {
      std::vector<int> path;
      for (int x = v; x != -1; x = pred[x]) path.push_back(x);
      return path;  // v ... root
    };
    for (int e = 0; e < num_edges; ++e) {
      if (bridge[e]) continue;
      auto [x, y] = edges[e];
      if (dist[x] < 0 || dist[y] < 0) continue;
      if (pred_edge[x] == e || pred_edge[y] == e) continue;
      std::vector<int> px = path_to_root(x), py = path_to_root(y);
      // Paths must share only the root.
      std::set<int> in_px(px.begin(), px.end() - 1);
      bool disjoint = true;
      for (std::size_t i = 0; i + 1 < py.size(); ++i) {
        if (in_px.count(py[i])) {
          disjoint = false;
          break;
        }
      }
      if (!disjoint) continue;
      std::vector<int> cycle(px.rbegin(), px.rend());  // root ... x
      for (int v : py) {
        if (v != root) cycle.push_back(v);  // y ... (towards root)
      }
      Bits bits(words, 0);
      auto set_edge = [&](int edge) { bits[edge / 64] |= std::uint64_t{1} << (edge % 64); };
      set_edge(e);
      for (int v = x; pred[v] != -1; v = pred[v]) set_edge(pred_edge[v]);
      for (int v = y; pred[v] != -1; v = pred[v]) set_edge(pred_edge[v]);
      if (unique.count(bits)) continue;
      Candidate c;
      c.atoms = normalize_cycle(std::move(cycle));
      c.sorted_atoms = c.atoms;
      std::sort(c.sorted_atoms.begin(), c.sorted_atoms.end());
      c.edges = bits;
      unique.emplace(std::move(bits), std::move(c));
    }
  }

  std::vector<const Candidate*> ordered;
  ordered.reserve(unique.size());
  for (const auto& [bits, c] : unique) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const Candidate* a, const Candidate* b) {
    if (a->atoms.size() != b->atoms.size()) return a->atoms.size() < b->atoms.size();
    return a->sorted_atoms < b->sorted_atoms;
  });

  // Greedy minimum cycle basis via GF(2) elimination.
  std::vector<std::pair<int, Bits>> basis;  // (pivot bit, row)
  std::vector<std::vector<int>> rings;
  for (const Candidate* c : ordered) {
    Bits row = c->edges;
    for (const auto& [pivot, brow] : basis) {
      if (row[pivot / 64] >> (pivot % 64) & 1) {
        for (std::size_t w = 0; w < words; ++w) row[w] ^= brow[w];
      }
    }
    int pivot = -1;
    for (std::size_t w = 0; w < words && pivot < 0; ++w) {
      if (row[w] != 0) pivot = static_cast<int>(w * 64) + __builtin_ctzll(row[w]);
    }
    if (pivot < 0) continue;
    basis.emplace_back(pivot, std::move(row));
    rings.push_back(c->atoms);
    if (static_cast<int>(rings.size()) == nu) break;
  }
  return rings;
}

std::vector<std::vector<int>> perceive_rings(const Molecule& mol) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(mol.num_bonds()));
  for (const Bond& b : mol.bonds()) edges.emplace_back(b.begin, b.end);
  return smallest_set_of_smallest_rings(mol.num_atoms(), edges);
}

}  // namespace rep3net::chem

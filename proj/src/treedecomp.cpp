#include "graphnewton/treedecomp.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>

namespace gn {

std::vector<std::vector<int>> Hypergraph::primal_adjacency() const {
  std::vector<std::set<int>> adj(num_vertices());
  for (const auto& e : edges)
    for (size_t a = 0; a < e.size(); ++a)
      for (size_t b = a + 1; b < e.size(); ++b) {
        adj[e[a]].insert(e[b]);
        adj[e[b]].insert(e[a]);
      }
  std::vector<std::vector<int>> out(num_vertices());
  for (int v = 0; v < num_vertices(); ++v) out[v].assign(adj[v].begin(), adj[v].end());
  return out;
}

Hypergraph moralize(const CompGraph& g) {
  Hypergraph h;
  for (const auto& nd : g.nodes()) h.vertex_ids.push_back(nd.id);
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (!g.is_input(v)) {
      std::vector<int> fam = g.parents(v);
      fam.push_back(v);
      std::sort(fam.begin(), fam.end());
      h.edges.push_back(std::move(fam));
    } else if (g.node(v).objective) {
      h.edges.push_back({v});
    }
  }
  return h;
}

namespace {

// Smallest node id wins ties.
bool id_less(const Hypergraph& h, int a, int b) { return h.vertex_ids[a] < h.vertex_ids[b]; }

int fill_count(const std::vector<std::set<int>>& adj, int v) {
  int fill = 0;
  std::vector<int> nb(adj[v].begin(), adj[v].end());
  for (size_t a = 0; a < nb.size(); ++a)
    for (size_t b = a + 1; b < nb.size(); ++b)
      if (!adj[nb[a]].count(nb[b])) ++fill;
  return fill;
}

}  // namespace

EliminationOrdering elimination_order(const Hypergraph& h, OrderingHeuristic heuristic) {
  const int n = h.num_vertices();
  std::vector<std::set<int>> adj(n);
  {
    auto pa = h.primal_adjacency();
    for (int v = 0; v < n; ++v) adj[v].insert(pa[v].begin(), pa[v].end());
  }
  std::vector<bool> gone(n, false);
  EliminationOrdering order;
  order.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    long best_score = 0;
    for (int v = 0; v < n; ++v) {
      if (gone[v]) continue;
      long score = (heuristic == OrderingHeuristic::MinDegree)
                       ? static_cast<long>(adj[v].size())
                       : static_cast<long>(fill_count(adj, v));
      if (best < 0 || score < best_score || (score == best_score && id_less(h, v, best))) {
        best = v;
        best_score = score;
      }
    }
    order.push_back(best);
    gone[best] = true;
    std::vector<int> nb(adj[best].begin(), adj[best].end());
    for (size_t a = 0; a < nb.size(); ++a) {
      adj[nb[a]].erase(best);
      for (size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]].insert(nb[b]);
        adj[nb[b]].insert(nb[a]);
      }
    }
  }
  return order;
}

TreeDecomposition decomposition_from_ordering(const Hypergraph& h,
                                              const EliminationOrdering& order) {
  const int n = h.num_vertices();
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  std::vector<std::set<int>> adj(n);
  {
    auto pa = h.primal_adjacency();
    for (int v = 0; v < n; ++v) adj[v].insert(pa[v].begin(), pa[v].end());
  }

  std::vector<std::vector<int>> bags;   // bag per eliminated vertex
  std::vector<int> parent(n, -1);       // bag index of parent
  std::vector<int> bag_of_vertex(n);    // vertex -> its elimination bag
  for (int i = 0; i < n; ++i) {
    int v = order[i];
    std::vector<int> higher;
    for (int u : adj[v])
      if (pos[u] > i) higher.push_back(u);
    std::vector<int> bag = higher;
    bag.push_back(v);
    std::sort(bag.begin(), bag.end());
    bag_of_vertex[v] = static_cast<int>(bags.size());
    bags.push_back(bag);
    if (!higher.empty()) {
      int first = *std::min_element(higher.begin(), higher.end(),
                                    [&](int a, int b) { return pos[a] < pos[b]; });
      parent[bag_of_vertex[v]] = -2 - first;  // resolved below, first not yet eliminated
    }
    // Eliminate v with fill.
    for (size_t a = 0; a < higher.size(); ++a) {
      adj[higher[a]].erase(v);
      for (size_t b = a + 1; b < higher.size(); ++b) {
        adj[higher[a]].insert(higher[b]);
        adj[higher[b]].insert(higher[a]);
      }
    }
  }

  const int m = static_cast<int>(bags.size());
  std::vector<std::pair<int, int>> edges;
  int prev_root = -1;
  for (int b = 0; b < m; ++b) {
    if (parent[b] <= -2) {
      edges.emplace_back(b, bag_of_vertex[-(parent[b] + 2)]);
    } else {
      // Component root; chain roots so the decomposition is a single tree.
      if (prev_root >= 0) edges.emplace_back(b, prev_root);
      prev_root = b;
    }
  }

  // Merge bags that are subsets of a tree neighbor.
  std::vector<std::vector<int>> nbrs(m);
  for (auto [a, b] : edges) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  std::vector<bool> dead(m, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b = 0; b < m; ++b) {
      if (dead[b]) continue;
      for (int u : nbrs[b]) {
        if (dead[u] || u == b) continue;
        if (std::includes(bags[u].begin(), bags[u].end(), bags[b].begin(), bags[b].end())) {
          dead[b] = true;
          for (int w : nbrs[b]) {
            if (w == u || dead[w]) continue;
            nbrs[u].push_back(w);
            nbrs[w].push_back(u);
          }
          changed = true;
          break;
        }
      }
    }
  }

  TreeDecomposition td;
  std::vector<int> remap(m, -1);
  for (int b = 0; b < m; ++b) {
    if (dead[b]) continue;
    remap[b] = td.num_bags();
    td.bags.push_back(bags[b]);
  }
  std::set<std::pair<int, int>> eset;
  for (int b = 0; b < m; ++b) {
    if (dead[b]) continue;
    for (int u : nbrs[b]) {
      if (dead[u] || u == b) continue;
      auto key = std::minmax(remap[b], remap[u]);
      eset.insert(key);
    }
  }
  // The merged neighbor lists can contain redundant links; keep a spanning tree.
  {
    const int mm = td.num_bags();
    std::vector<int> comp(mm);
    std::iota(comp.begin(), comp.end(), 0);
    std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
    for (auto [a, b] : eset) {
      int ra = find(a), rb = find(b);
      if (ra != rb) {
        comp[ra] = rb;
        td.edges.emplace_back(a, b);
      }
    }
  }
  td.width = 0;
  for (const auto& bag : td.bags) td.width = std::max(td.width, static_cast<int>(bag.size()) - 1);
  return td;
}

std::vector<std::vector<int>> TreeDecomposition::adjacency() const {
  std::vector<std::vector<int>> adj(num_bags());
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

std::vector<std::string> validate_decomposition(const Hypergraph& h, const TreeDecomposition& td) {
  std::vector<std::string> out;
  const int n = h.num_vertices();
  const int m = td.num_bags();
  if (m == 0) {
    if (n > 0) out.push_back("no bags");
    return out;
  }
  if (static_cast<int>(td.edges.size()) != m - 1)
    out.push_back("tree must have exactly " + std::to_string(m - 1) + " edges");
  // Connectivity of the tree itself.
  auto adj = td.adjacency();
  {
    std::vector<bool> seen(m, false);
    std::deque<int> q{0};
    seen[0] = true;
    while (!q.empty()) {
      int b = q.front();
      q.pop_front();
      for (int u : adj[b])
        if (!seen[u]) {
          seen[u] = true;
          q.push_back(u);
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      out.push_back("tree is disconnected");
  }
  // Vertex cover.
  std::vector<std::vector<int>> bags_of(n);
  for (int b = 0; b < m; ++b)
    for (int v : td.bags[b]) bags_of[v].push_back(b);
  for (int v = 0; v < n; ++v)
    if (bags_of[v].empty()) out.push_back("vertex-cover violation: " + h.vertex_ids[v]);
  // Edge cover.
  for (const auto& e : h.edges) {
    bool covered = false;
    for (int b = 0; b < m && !covered; ++b)
      covered = std::includes(td.bags[b].begin(), td.bags[b].end(), e.begin(), e.end());
    if (!covered) {
      std::string msg = "edge-cover violation: {";
      for (size_t i = 0; i < e.size(); ++i) msg += (i ? "," : "") + h.vertex_ids[e[i]];
      out.push_back(msg + "}");
    }
  }
  // Running intersection: bags containing v induce a connected subtree.
  for (int v = 0; v < n; ++v) {
    if (bags_of[v].empty()) continue;
    std::set<int> member(bags_of[v].begin(), bags_of[v].end());
    std::deque<int> q{bags_of[v][0]};
    std::set<int> seen{bags_of[v][0]};
    while (!q.empty()) {
      int b = q.front();
      q.pop_front();
      for (int u : adj[b])
        if (member.count(u) && !seen.count(u)) {
          seen.insert(u);
          q.push_back(u);
        }
    }
    if (seen.size() != member.size())
      out.push_back("running-intersection violation: " + h.vertex_ids[v]);
  }
  return out;
}

bool check_edge_separation(const Hypergraph& h, const TreeDecomposition& td, int edge_index) {
  auto [x, y] = td.edges[edge_index];
  std::vector<int> sep;
  std::set_intersection(td.bags[x].begin(), td.bags[x].end(), td.bags[y].begin(), td.bags[y].end(),
                        std::back_inserter(sep));
  std::set<int> sepset(sep.begin(), sep.end());
  // Bags on the x-side of the removed edge.
  auto adj = td.adjacency();
  std::vector<bool> on_x(td.num_bags(), false);
  std::deque<int> q{x};
  on_x[x] = true;
  while (!q.empty()) {
    int b = q.front();
    q.pop_front();
    for (int u : adj[b]) {
      if ((b == x && u == y) || (b == y && u == x)) continue;
      if (!on_x[u]) {
        on_x[u] = true;
        q.push_back(u);
      }
    }
  }
  if (on_x[y]) return false;  // not actually a tree edge split
  std::set<int> va, vb;
  for (int b = 0; b < td.num_bags(); ++b)
    for (int v : td.bags[b])
      if (!sepset.count(v)) (on_x[b] ? va : vb).insert(v);
  for (const auto& e : h.edges) {
    bool ina = false, inb = false;
    for (int v : e) {
      if (sepset.count(v)) continue;
      ina = ina || va.count(v);
      inb = inb || vb.count(v);
    }
    if (ina && inb) return false;
  }
  return true;
}

int exact_treewidth(const Hypergraph& h) {
  const int n = h.num_vertices();
  if (n == 0) return -1;
  if (n > 25) throw GraphError("exact_treewidth: too many vertices");
  auto pal = h.primal_adjacency();
  std::vector<uint32_t> nbr(n, 0);
  for (int v = 0; v < n; ++v)
    for (int u : pal[v]) nbr[v] |= (1u << u);

  // Q(S, v): vertices outside S u {v} reachable from v through S.
  auto q_count = [&](uint32_t S, int v) {
    uint32_t reach = nbr[v] & S;
    uint32_t frontier = reach;
    while (frontier) {
      uint32_t next = 0;
      uint32_t f = frontier;
      while (f) {
        int u = __builtin_ctz(f);
        f &= f - 1;
        next |= nbr[u] & S;
      }
      next &= ~reach;
      reach |= next;
      frontier = next;
    }
    uint32_t outside = 0;
    uint32_t r = reach;
    while (r) {
      int u = __builtin_ctz(r);
      r &= r - 1;
      outside |= nbr[u];
    }
    outside |= nbr[v];
    outside &= ~(S | (1u << v));
    return __builtin_popcount(outside);
  };

  const uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);
  std::vector<int8_t> tw(full + 1, 0);
  tw[0] = -1;
  for (uint32_t S = 1; S <= full; ++S) {
    int best = n;  // upper bound
    uint32_t s = S;
    while (s) {
      int v = __builtin_ctz(s);
      s &= s - 1;
      uint32_t rest = S & ~(1u << v);
      int cand = std::max<int>(q_count(rest, v), tw[rest]);
      best = std::min(best, cand);
    }
    tw[S] = static_cast<int8_t>(best);
  }
  return tw[full];
}

}  // namespace gn

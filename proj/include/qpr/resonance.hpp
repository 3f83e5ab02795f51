#pragma once

// Resonance combinatorics: lattice witness search for (N, rho)-links between
// eigenvalues, the link graph, chain-linked classes with odd-loop detection
// and bipartition, and chain witness composition.

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "qpr/certificates.hpp"
#include "qpr/frequency.hpp"
#include "qpr/matrixutil.hpp"

namespace qpr::resonance {

using harmonics::FrequencyVector;
using harmonics::LatticeVector;
using harmonics::l1_norm;

inline constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

struct ResonanceWitness {
  LatticeVector k;
  double defect = 0.0;
  int N_used = 0;
};

/// |2 i pi <k, omega> - (alpha - conj(beta))|.
inline double link_defect(Complex alpha, Complex beta, const FrequencyVector& omega,
                          const LatticeVector& k) {
  const Complex target = alpha - std::conj(beta);
  return std::abs(Complex(0.0, kTwoPi * omega.pairing(k)) - target);
}

namespace detail {

/// Exhaustive scan of |k|_1 <= N in ascending lexicographic order; returns
/// the best and second-best defects (ties broken by first occurrence, i.e.
/// lexicographically smallest k).
inline std::pair<ResonanceWitness, double> scan_two_best(Complex alpha, Complex beta,
                                                         const FrequencyVector& omega, int N) {
  const int d = omega.dimension();
  const Complex target = alpha - std::conj(beta);
  ResonanceWitness best;
  best.N_used = N;
  double best_defect = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  LatticeVector k(d, -N);
  while (true) {
    if (l1_norm(k) <= N) {
      const double defect = std::abs(Complex(0.0, kTwoPi * omega.pairing(k)) - target);
      if (defect < best_defect) {
        second = best_defect;
        best_defect = defect;
        best.k = k;
      } else if (defect < second) {
        second = defect;
      }
    }
    int i = d - 1;
    while (i >= 0 && k[i] == N) {
      k[i] = -N;
      --i;
    }
    if (i < 0) break;
    ++k[i];
  }
  best.defect = best_defect;
  return {best, second};
}

}  // namespace detail

/// Minimizer of the link defect over the l1 ball |k|_1 <= N.
inline ResonanceWitness best_witness(Complex alpha, Complex beta, const FrequencyVector& omega,
                                     int N) {
  if (N < 0) throw std::invalid_argument("best_witness: N must be >= 0");
  return detail::scan_two_best(alpha, beta, omega, N).first;
}

struct ResonanceEdge {
  int i = 0;
  int j = 0;  // i <= j; witness measured for the ordered pair (node i, node j)
  ResonanceWitness witness;
};

struct ResonanceGraph {
  std::vector<Complex> nodes;       // distinct eigenvalues, (Re, Im)-sorted
  std::vector<int> multiplicities;
  std::vector<ResonanceEdge> edges;
  int N = 0;
  double rho = 0.0;
  bool star = false;  // every node has an incident edge
  bool certified = false;

  int total_dimension() const {
    int s = 0;
    for (int m : multiplicities) s += m;
    return s;
  }

  bool has_incident_edge(int v) const {
    for (const auto& e : edges)
      if (e.i == v || e.j == v) return true;
    return false;
  }
};

/// All-pairs (including self-pairs) witness search; an edge is recorded when
/// the defect is below rho. In certified mode the second-best defect must be
/// >= rho for every recorded edge (witness uniqueness) and rho must satisfy
/// rho < (2N)^{-tau} kappa.
inline ResonanceGraph build_graph(const std::vector<Complex>& spectrum,
                                  const FrequencyVector& omega, int N, double rho,
                                  bool certified = false) {
  if (!(rho > 0.0)) throw std::invalid_argument("build_graph: rho must be positive");
  if (spectrum.empty()) throw std::invalid_argument("build_graph: empty spectrum");
  if (certified) {
    const double cap = omega.kappa() * std::pow(2.0 * std::max(1, N), -omega.tau());
    if (!(rho < cap))
      throw HypothesisFailure("build_graph: certified mode needs rho < (2N)^{-tau} kappa = " +
                              std::to_string(cap));
  }

  ResonanceGraph g;
  g.N = N;
  g.rho = rho;
  g.certified = certified;

  // Distinct nodes with multiplicities, sorted lexicographically.
  std::vector<Complex> sorted(spectrum);
  std::sort(sorted.begin(), sorted.end(), [](const Complex& a, const Complex& b) {
    return lex_less(a, b);
  });
  for (const Complex& v : sorted) {
    if (!g.nodes.empty() && g.nodes.back() == v) {
      ++g.multiplicities.back();
    } else {
      g.nodes.push_back(v);
      g.multiplicities.push_back(1);
    }
  }

  const int l = static_cast<int>(g.nodes.size());
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      const auto [best, second] = detail::scan_two_best(g.nodes[i], g.nodes[j], omega, N);
      if (best.defect < rho) {
        if (certified && second < rho) {
          throw CertificateFailure(
              "build_graph: duplicate witness within rho for node pair (" + std::to_string(i) +
              ", " + std::to_string(j) + "): best defect " + std::to_string(best.defect) +
              ", second " + std::to_string(second));
        }
        g.edges.push_back({i, j, best});
      }
    }
  }
  g.star = true;
  for (int v = 0; v < l; ++v)
    if (!g.has_incident_edge(v)) g.star = false;
  return g;
}

// ---------------------------------------------------------------------------
// Chain composition
// ---------------------------------------------------------------------------

/// k = sum_{t odd} k_t - sum_{t even} k_t (1-based positions), after applying
/// per-witness orientations (+1 keeps k_t, -1 negates it; empty = all +1).
/// The composed defect is the triangle-inequality bound sum of the defects.
inline ResonanceWitness compose_chain(const std::vector<ResonanceWitness>& witnesses,
                                      const std::vector<int>& orientations = {},
                                      int max_links = 0) {
  if (witnesses.empty()) throw std::invalid_argument("compose_chain: empty chain");
  if (!orientations.empty() && orientations.size() != witnesses.size())
    throw std::invalid_argument("compose_chain: orientation count mismatch");
  if (max_links > 0 && static_cast<int>(witnesses.size()) > max_links)
    throw std::invalid_argument("compose_chain: chain too long (" +
                                std::to_string(witnesses.size()) + " > " +
                                std::to_string(max_links) + "); shorten it first");
  const size_t d = witnesses.front().k.size();
  ResonanceWitness out;
  out.k.assign(d, 0);
  for (size_t t = 0; t < witnesses.size(); ++t) {
    if (witnesses[t].k.size() != d)
      throw std::invalid_argument("compose_chain: mixed lattice dimensions");
    const int orient = orientations.empty() ? 1 : orientations[t];
    const int position_sign = (t % 2 == 0) ? 1 : -1;  // positions are 1-based odd/even
    for (size_t c = 0; c < d; ++c) out.k[c] += position_sign * orient * witnesses[t].k[c];
    out.defect += witnesses[t].defect;
    out.N_used += witnesses[t].N_used;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Class analysis
// ---------------------------------------------------------------------------

enum class CaseTag { OddLoop, BipartiteS1, BipartiteS2 };

inline const char* case_tag_name(CaseTag t) {
  switch (t) {
    case CaseTag::OddLoop: return "odd-loop";
    case CaseTag::BipartiteS1: return "bipartite-S1";
    case CaseTag::BipartiteS2: return "bipartite-S2";
  }
  return "?";
}

struct NodeAssignment {
  int node = 0;
  CaseTag tag = CaseTag::OddLoop;
  LatticeVector k;            // composed witness
  double defect_bound = 0.0;  // sum of defects along the composing walk
  int walk_length = 0;
};

struct ResonanceClass {
  std::vector<int> nodes;
  bool odd_loop = false;
  std::vector<int> sigma1, sigma2;
  int anchor = -1;  // lexicographically smallest node; in sigma1 when bipartite
  std::vector<NodeAssignment> assignments;
  CheckList checks;
};

struct ClassReport {
  std::vector<ResonanceClass> classes;
  std::vector<Complex> node_values;  // copied from the graph, same indexing
  int N = 0;
  double rho = 0.0;
  CheckList checks;
};

namespace detail {

struct Traversal {
  int from = 0, to = 0;
  LatticeVector k;  // oriented for from -> to
  double defect = 0.0;
};

/// Adjacency with witnesses (self-loops included once). A link witness is
/// orientation independent: beta - conj(alpha) = -conj(alpha - conj(beta)),
/// so |2 i pi <k, w> - (beta - conj(alpha))| equals the (alpha, beta) defect
/// with the SAME k.
inline std::vector<std::vector<Traversal>> adjacency(const ResonanceGraph& g) {
  std::vector<std::vector<Traversal>> adj(g.nodes.size());
  for (const auto& e : g.edges) {
    adj[e.i].push_back({e.i, e.j, e.witness.k, e.witness.defect});
    if (e.i != e.j) adj[e.j].push_back({e.j, e.i, e.witness.k, e.witness.defect});
  }
  return adj;
}

/// Shortest walk between parity states (start, 0) and (goal, goal_parity) in
/// the doubled graph; self-loops flip parity. Returns the traversal sequence.
inline std::vector<Traversal> parity_bfs(const std::vector<std::vector<Traversal>>& adj,
                                         int start, int goal, int goal_parity) {
  const int n = static_cast<int>(adj.size());
  std::vector<std::array<int, 2>> prev_state(n, {-1, -1});
  std::vector<std::array<int, 2>> prev_edge(n, {-1, -1});  // index into adj[prev_node]
  std::vector<std::array<bool, 2>> seen(n, {false, false});
  std::deque<std::pair<int, int>> queue;
  seen[start][0] = true;
  queue.push_back({start, 0});
  while (!queue.empty()) {
    const auto [u, p] = queue.front();
    queue.pop_front();
    if (u == goal && p == goal_parity && !(u == start && p == 0)) break;
    for (size_t idx = 0; idx < adj[u].size(); ++idx) {
      const auto& tr = adj[u][idx];
      const int q = 1 - p;
      if (!seen[tr.to][q]) {
        seen[tr.to][q] = true;
        prev_state[tr.to][q] = u * 2 + p;
        prev_edge[tr.to][q] = static_cast<int>(idx);
        queue.push_back({tr.to, q});
      }
    }
  }
  if (!seen[goal][goal_parity]) return {};
  std::vector<Traversal> walk;
  int u = goal, p = goal_parity;
  while (!(u == start && p == 0)) {
    const int enc = prev_state[u][p];
    if (enc < 0) return {};  // start state itself was the goal: empty walk
    const int pu = enc / 2, pp = enc % 2;
    walk.push_back(adj[pu][prev_edge[u][p]]);
    u = pu;
    p = pp;
  }
  std::reverse(walk.begin(), walk.end());
  return walk;
}

inline ResonanceWitness compose_walk(const std::vector<Traversal>& walk, int N) {
  std::vector<ResonanceWitness> ws;
  for (const auto& tr : walk) ws.push_back({tr.k, tr.defect, N});
  return compose_chain(ws);
}

}  // namespace detail

/// Chain-linked classes of a link graph with the star property: connected
/// components, odd-loop detection via bipartiteness, the (Sigma1, Sigma2)
/// bipartition with the lexicographically smallest node as anchor, and
/// per-node composed witnesses.
inline ClassReport analyze_classes(const ResonanceGraph& g) {
  const int l = static_cast<int>(g.nodes.size());
  if (!g.star) {
    std::string uncovered;
    for (int v = 0; v < l; ++v)
      if (!g.has_incident_edge(v))
        uncovered += (uncovered.empty() ? "" : ", ") + std::to_string(v);
    throw HypothesisFailure("analyze_classes: star property fails; uncovered nodes: " +
                            uncovered);
  }
  const auto adj = detail::adjacency(g);

  // Components.
  std::vector<int> comp(l, -1);
  int ncomp = 0;
  for (int s = 0; s < l; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = ncomp;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (const auto& tr : adj[u])
        if (comp[tr.to] < 0) {
          comp[tr.to] = ncomp;
          queue.push_back(tr.to);
        }
    }
    ++ncomp;
  }

  ClassReport report;
  report.node_values = g.nodes;
  report.N = g.N;
  report.rho = g.rho;
  const int n_total = g.total_dimension();
  for (int c = 0; c < ncomp; ++c) {
    ResonanceClass cls;
    for (int v = 0; v < l; ++v)
      if (comp[v] == c) cls.nodes.push_back(v);
    std::sort(cls.nodes.begin(), cls.nodes.end(),
              [&](int a, int b) { return lex_less(g.nodes[a], g.nodes[b]); });
    cls.anchor = cls.nodes.front();

    // Two-coloring; self-loops or odd cycles break it.
    std::map<int, int> color;
    bool bipartite = true;
    color[cls.anchor] = 0;
    std::deque<int> queue{cls.anchor};
    while (!queue.empty() && bipartite) {
      const int u = queue.front();
      queue.pop_front();
      for (const auto& tr : adj[u]) {
        if (tr.to == u) {
          bipartite = false;
          break;
        }
        auto it = color.find(tr.to);
        if (it == color.end()) {
          color[tr.to] = 1 - color[u];
          queue.push_back(tr.to);
        } else if (it->second == color[u]) {
          bipartite = false;
          break;
        }
      }
    }
    cls.odd_loop = !bipartite;

    if (bipartite) {
      for (int v : cls.nodes)
        (color[v] == 0 ? cls.sigma1 : cls.sigma2).push_back(v);
      // Composed witnesses via shortest paths to the anchor. Even paths stay
      // within Sigma1 (case-2 first variant), odd paths land in Sigma2.
      for (int v : cls.nodes) {
        NodeAssignment asg;
        asg.node = v;
        asg.tag = (color[v] == 0) ? CaseTag::BipartiteS1 : CaseTag::BipartiteS2;
        if (v == cls.anchor) {
          asg.k.assign(g.nodes.empty() ? 0 : g.edges.front().witness.k.size(), 0);
          asg.walk_length = 0;
        } else {
          const auto walk = detail::parity_bfs(adj, v, cls.anchor, color[v] == 0 ? 0 : 1);
          if (walk.empty())
            throw std::logic_error("analyze_classes: missing witness path in component");
          const ResonanceWitness w = detail::compose_walk(walk, g.N);
          asg.k = w.k;
          asg.defect_bound = w.defect;
          asg.walk_length = static_cast<int>(walk.size());
        }
        report.checks.add(Check::leq("class.k_bound(node " + std::to_string(v) + ")",
                                     static_cast<double>(l1_norm(asg.k)),
                                     static_cast<double>(std::max(1, asg.walk_length) * g.N)));
        report.checks.add(Check::leq("class.defect_bound(node " + std::to_string(v) + ")",
                                     asg.defect_bound, std::max(1, asg.walk_length) * g.rho));
        report.checks.add(Check::leq("class.paper_nN(node " + std::to_string(v) + ")",
                                     static_cast<double>(l1_norm(asg.k)),
                                     static_cast<double>(n_total * g.N))
                              .as_advisory());
        cls.assignments.push_back(asg);
      }
    } else {
      // Odd-loop class: every node gets a self-witness composed from the
      // shortest odd closed walk through it.
      for (int v : cls.nodes) {
        const auto walk = detail::parity_bfs(adj, v, v, 1);
        if (walk.empty())
          throw std::logic_error("analyze_classes: odd component without odd walk");
        const ResonanceWitness w = detail::compose_walk(walk, g.N);
        NodeAssignment asg;
        asg.node = v;
        asg.tag = CaseTag::OddLoop;
        asg.k = w.k;
        asg.defect_bound = w.defect;
        asg.walk_length = static_cast<int>(walk.size());
        report.checks.add(Check::leq("class.defect_bound(node " + std::to_string(v) + ")",
                                     asg.defect_bound, asg.walk_length * g.rho));
        report.checks.add(Check::leq("class.paper_n_rho(node " + std::to_string(v) + ")",
                                     asg.defect_bound, n_total * g.rho)
                              .as_advisory());
        cls.assignments.push_back(asg);
      }
    }
    report.classes.push_back(std::move(cls));
  }
  return report;
}

}  // namespace qpr::resonance

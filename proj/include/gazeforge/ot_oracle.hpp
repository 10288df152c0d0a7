// Exact discrete optimal transport by successive shortest paths on the full bipartite cost graph.
// Used to validate the 1-D closed form; quadratic memory, intended for small n.
#ifndef GAZEFORGE_OT_ORACLE_HPP
#define GAZEFORGE_OT_ORACLE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gazeforge/error.hpp"

namespace gazeforge {

struct TransportPlan {
  double cost = 0;
  Eigen::MatrixXd flow;  // flow(i, j): mass moved from source bin i to target bin j
};

/// Minimum-cost transport between p and q for an arbitrary non-negative cost matrix.
inline TransportPlan solve_transport(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::MatrixXd& cost) {
  const Eigen::Index n = p.size();
  const Eigen::Index m = q.size();
  if (cost.rows() != n || cost.cols() != m) throw Error(ErrorCode::shape, "cost matrix does not match marginals");
  if ((cost.array() < 0).any()) throw Error(ErrorCode::domain, "transport costs must be non-negative");

  constexpr double tol = 1e-15;
  constexpr double inf = std::numeric_limits<double>::infinity();

  Eigen::VectorXd supply = p;
  Eigen::VectorXd demand = q;
  TransportPlan plan;
  plan.flow = Eigen::MatrixXd::Zero(n, m);

  // Node potentials keep reduced costs non-negative so Dijkstra applies to the residual graph.
  // Node layout: sources [0, n), sinks [n, n + m).
  const Eigen::Index nodes = n + m;
  Eigen::VectorXd potential = Eigen::VectorXd::Zero(nodes);
  Eigen::VectorXd dist(nodes);
  std::vector<Eigen::Index> parent(nodes);
  std::vector<char> done(nodes);

  for (;;) {
    if (supply.maxCoeff() <= tol || demand.maxCoeff() <= tol) break;

    dist.setConstant(inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (supply(i) > tol) dist(i) = 0;
    }
    // Dense Dijkstra: O(nodes^2) per path, fine at this scale.
    for (;;) {
      Eigen::Index u = -1;
      double best = inf;
      for (Eigen::Index v = 0; v < nodes; ++v) {
        if (!done[v] && dist(v) < best) {
          best = dist(v);
          u = v;
        }
      }
      if (u < 0) break;
      done[u] = 1;
      if (u < n) {
        for (Eigen::Index j = 0; j < m; ++j) {
          const Eigen::Index v = n + j;
          const double reduced = std::max(0.0, cost(u, j) + potential(u) - potential(v));
          if (dist(u) + reduced < dist(v)) {
            dist(v) = dist(u) + reduced;
            parent[v] = u;
          }
        }
      } else {
        const Eigen::Index j = u - n;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (plan.flow(i, j) <= tol) continue;
          const double reduced = std::max(0.0, -cost(i, j) + potential(u) - potential(i));
          if (dist(u) + reduced < dist(i)) {
            dist(i) = dist(u) + reduced;
            parent[i] = u;
          }
        }
      }
    }

    Eigen::Index sink = -1;
    double best = inf;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (demand(j) > tol && dist(n + j) < best) {
        best = dist(n + j);
        sink = n + j;
      }
    }
    if (sink < 0) break;

    // Bottleneck along the path: remaining demand, remaining supply at its root, reverse-edge flows.
    double amount = demand(sink - n);
    Eigen::Index v = sink;
    while (parent[v] >= 0) {
      const Eigen::Index u = parent[v];
      if (u >= n) amount = std::min(amount, plan.flow(v, u - n));  // u sink -> v source reverses flow(v, u)
      v = u;
    }
    amount = std::min(amount, supply(v));
    if (!(amount > 0)) break;

    v = sink;
    while (parent[v] >= 0) {
      const Eigen::Index u = parent[v];
      if (u < n) {
        plan.flow(u, v - n) += amount;
      } else {
        plan.flow(v, u - n) -= amount;
      }
      v = u;
    }
    supply(v) -= amount;
    demand(sink - n) -= amount;

    for (Eigen::Index k = 0; k < nodes; ++k) potential(k) += std::min(dist(k), best);
  }

  plan.cost = (plan.flow.array() * cost.array()).sum();
  return plan;
}

/// Exact W1 between two distributions on n bins with ground cost |i - j| / n.
inline double exact_ot_oracle(const Eigen::VectorXd& p, const Eigen::VectorXd& q, Eigen::Index max_size = 64) {
  const Eigen::Index n = p.size();
  if (q.size() != n) throw Error(ErrorCode::shape, "distributions differ in length");
  if (n == 0) throw Error(ErrorCode::empty, "empty distribution");
  if (n > max_size) {
    throw Error(ErrorCode::parameter, "oracle limited to " + std::to_string(max_size) + " bins, got " + std::to_string(n));
  }
  for (const Eigen::VectorXd* v : {&p, &q}) {
    if (!v->allFinite() || (v->array() < 0).any() || std::abs(v->sum() - 1.0) > 1e-9) {
      throw Error(ErrorCode::domain, "oracle inputs must be probability vectors");
    }
  }
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = std::abs(static_cast<double>(i - j)) / static_cast<double>(n);
  }
  return solve_transport(p, q, cost).cost;
}

}  // namespace gazeforge

#endif  // GAZEFORGE_OT_ORACLE_HPP

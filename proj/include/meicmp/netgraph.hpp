#pragma once

#include "meicmp/linalg.hpp"

#include <utility>
#include <vector>

namespace meicmp {

struct Edge {
  int tail = 0;
  int head = 0;
  bool operator==(const Edge&) const = default;
};

/// Connected directed graph without self-loops. Edge orientation is kept
/// exactly as given; it only fixes the sign convention of the incidence map.
class DirectedGraph {
 public:
  DirectedGraph(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  int node_count_;
  std::vector<Edge> edges_;
};

DirectedGraph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges);

/// The incidence matrix E (n x m) and its lift E (x) I_d.
class IncidenceOperator {
 public:
  IncidenceOperator(const DirectedGraph& graph, int d);

  int dim() const { return d_; }
  int node_count() const { return static_cast<int>(base_.rows()); }
  int edge_count() const { return static_cast<int>(base_.cols()); }
  int node_space() const { return node_count() * d_; }
  int edge_space() const { return edge_count() * d_; }

  const Mat& base() const { return base_; }
  const Mat& lifted() const { return lifted_; }
  const DirectedGraph& graph() const { return graph_; }

  /// zeta = E^T y
  Vec tensions(const Vec& y) const;
  /// E mu (the divergence is u = -E mu)
  Vec apply(const Vec& mu) const;

 private:
  DirectedGraph graph_;
  int d_;
  Mat base_;
  Mat lifted_;
};

IncidenceOperator incidence(const DirectedGraph& graph, int d);

/// Stacked copies of the mean of the per-node blocks (projection onto Ker E^T).
Vec project_agreement(const IncidenceOperator& op, const Vec& u);

/// True iff the blockwise sum of node vectors has norm <= tol (membership in Im E).
bool in_cut_space(const IncidenceOperator& op, const Vec& u, double tol);

/// Blockwise sum of a stacked node vector.
Vec block_sum(const Vec& u, int d);

/// beta (x) 1_n
Vec agreement_vector(const Vec& beta, int node_count);

}  // namespace meicmp

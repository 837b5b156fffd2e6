#include "meicmp/netgraph.hpp"

#include "meicmp/error.hpp"

#include <numeric>
#include <string>

namespace meicmp {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

DirectedGraph::DirectedGraph(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  require(node_count_ > 0, ErrorCode::IndexOutOfRange, "node_count must be positive");
  UnionFind uf(node_count_);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    if (e.tail < 0 || e.tail >= node_count_ || e.head < 0 || e.head >= node_count_)
      fail(ErrorCode::IndexOutOfRange, "edge " + std::to_string(k) + " references a missing node");
    if (e.tail == e.head) fail(ErrorCode::SelfLoop, "edge " + std::to_string(k) + " is a self-loop");
    uf.unite(e.tail, e.head);
  }
  const int root = uf.find(0);
  for (int i = 1; i < node_count_; ++i)
    if (uf.find(i) != root) fail(ErrorCode::Disconnected, "node " + std::to_string(i) + " is not reachable");
}

DirectedGraph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges) {
  std::vector<Edge> list;
  list.reserve(edges.size());
  for (const auto& [t, h] : edges) list.push_back({t, h});
  return DirectedGraph(node_count, std::move(list));
}

IncidenceOperator::IncidenceOperator(const DirectedGraph& graph, int d) : graph_(graph), d_(d) {
  require(d > 0, ErrorCode::DimensionMismatch, "io dimension must be positive");
  base_ = Mat::Zero(graph.node_count(), graph.edge_count());
  for (int k = 0; k < graph.edge_count(); ++k) {
    base_(graph.edges()[k].tail, k) = -1.0;
    base_(graph.edges()[k].head, k) = 1.0;
  }
  lifted_ = kron_identity(base_, d);
}

Vec IncidenceOperator::tensions(const Vec& y) const {
  require(y.size() == node_space(), ErrorCode::DimensionMismatch, "node vector has wrong length");
  return lifted_.transpose() * y;
}

Vec IncidenceOperator::apply(const Vec& mu) const {
  require(mu.size() == edge_space(), ErrorCode::DimensionMismatch, "edge vector has wrong length");
  return lifted_ * mu;
}

IncidenceOperator incidence(const DirectedGraph& graph, int d) { return IncidenceOperator(graph, d); }

Vec block_sum(const Vec& u, int d) {
  Vec s = Vec::Zero(d);
  for (Eigen::Index i = 0; i + d <= u.size(); i += d) s += u.segment(i, d);
  return s;
}

Vec agreement_vector(const Vec& beta, int node_count) {
  return beta.replicate(node_count, 1);
}

Vec project_agreement(const IncidenceOperator& op, const Vec& u) {
  require(u.size() == op.node_space(), ErrorCode::DimensionMismatch, "node vector has wrong length");
  Vec mean = block_sum(u, op.dim()) / op.node_count();
  return agreement_vector(mean, op.node_count());
}

bool in_cut_space(const IncidenceOperator& op, const Vec& u, double tol) {
  require(u.size() == op.node_space(), ErrorCode::DimensionMismatch, "node vector has wrong length");
  return block_sum(u, op.dim()).norm() <= tol;
}

}  // namespace meicmp

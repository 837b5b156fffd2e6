#include "meicmp/relations.hpp"

#include "meicmp/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace meicmp {

namespace {

constexpr double kZeroInputTol = 1e-12;

}  // namespace

struct VectorRelation::Node {
  Kind kind = Kind::Affine;
  int dim = 0;
  Mat S;
  Vec v;
  std::optional<IntegralPair> integrals;
  std::vector<VectorRelation> children;
  Vec alpha;
  Vec beta;
  std::string name;
  PointFn fwd;
  PointFn inv;
};

VectorRelation::VectorRelation(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

VectorRelation VectorRelation::affine(Mat S, Vec v) {
  require(S.rows() == S.cols() && S.rows() == v.size(), ErrorCode::DimensionMismatch,
          "affine relation needs square S matching v");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Affine;
  n->dim = static_cast<int>(v.size());
  // Integral functions exist in closed form only for symmetric PSD S.
  if (is_numerically_symmetric(S)) {
    const Mat Ss = 0.5 * (S + S.transpose());
    const double lmin = min_symmetric_eigenvalue(Ss);
    if (lmin > 1e-12 * std::max(1.0, Ss.norm())) {
      const Mat Sinv = Ss.ldlt().solve(Mat::Identity(n->dim, n->dim));
      const Vec sv = Sinv * v;
      IntegralFunction K = IntegralFunction::quadratic(Ss, v, 0.5 * v.dot(sv));
      IntegralFunction Ks = IntegralFunction::quadratic(0.5 * (Sinv + Sinv.transpose()), -sv, 0.0);
      n->integrals = IntegralPair{K, Ks};
    } else if (lmin >= -1e-12 * std::max(1.0, Ss.norm())) {
      IntegralFunction K = IntegralFunction::quadratic(Ss, v, 0.0);
      n->integrals = IntegralPair{K, K.conjugate()};
    }
  }
  n->S = std::move(S);
  n->v = std::move(v);
  return VectorRelation(n);
}

VectorRelation VectorRelation::gradient_of(const IntegralFunction& chi) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::GradientOfConvex;
  n->dim = chi.dim();
  n->integrals = IntegralPair{chi, chi.conjugate()};
  n->name = "gradient";
  return VectorRelation(n);
}

VectorRelation VectorRelation::inverse_gradient_of(const IntegralFunction& chi) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::GradientOfConvex;
  n->dim = chi.dim();
  n->integrals = IntegralPair{chi.conjugate(), chi};
  n->name = "inverse-gradient";
  return VectorRelation(n);
}

VectorRelation VectorRelation::integrator(int dim) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Integrator;
  n->dim = dim;
  n->integrals = IntegralPair{IntegralFunction::indicator_zero(dim), IntegralFunction::zero(dim)};
  return VectorRelation(n);
}

VectorRelation VectorRelation::stacked(std::vector<VectorRelation> children) {
  require(!children.empty(), ErrorCode::EmptyList, "stack of no relations");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Stacked;
  bool all = true;
  for (const auto& c : children) {
    n->dim += c.dim();
    all = all && c.has_integrals();
  }
  if (all) {
    std::vector<IntegralFunction> Ks;
    std::vector<IntegralFunction> Kss;
    for (const auto& c : children) {
      const IntegralPair p = c.integrals();
      Ks.push_back(p.K);
      Kss.push_back(p.Kstar);
    }
    n->integrals = IntegralPair{IntegralFunction::block_stack(Ks), IntegralFunction::block_stack(Kss)};
  }
  n->children = std::move(children);
  return VectorRelation(n);
}

VectorRelation VectorRelation::shifted(VectorRelation inner, Vec alpha, Vec beta) {
  const int d = inner.dim();
  if (alpha.size() == 0) alpha = Vec::Zero(d);
  if (beta.size() == 0) beta = Vec::Zero(d);
  require(alpha.size() == d && beta.size() == d, ErrorCode::DimensionMismatch, "relation shifts have wrong length");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Shifted;
  n->dim = d;
  if (inner.has_integrals()) {
    const IntegralPair p = inner.integrals();
    n->integrals = IntegralPair{IntegralFunction::shifted(p.K, alpha, beta, 0.0),
                                IntegralFunction::shifted(p.Kstar, beta, alpha, -alpha.dot(beta))};
  }
  n->children = {std::move(inner)};
  n->alpha = std::move(alpha);
  n->beta = std::move(beta);
  return VectorRelation(n);
}

VectorRelation VectorRelation::map(int dim, std::string name, PointFn forward, PointFn inverse) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Map;
  n->dim = dim;
  n->name = std::move(name);
  n->fwd = std::move(forward);
  n->inv = std::move(inverse);
  return VectorRelation(n);
}

VectorRelation::Kind VectorRelation::kind() const { return node_->kind; }
int VectorRelation::dim() const { return node_->dim; }
const Mat& VectorRelation::S() const { return node_->S; }
const Vec& VectorRelation::v() const { return node_->v; }
const std::vector<VectorRelation>& VectorRelation::children() const { return node_->children; }
const VectorRelation& VectorRelation::inner() const {
  require(node_->kind == Kind::Shifted, ErrorCode::UnsupportedKind, "relation has no inner relation");
  return node_->children.front();
}
const Vec& VectorRelation::alpha() const { return node_->alpha; }
const Vec& VectorRelation::beta() const { return node_->beta; }

bool VectorRelation::has_integrals() const { return node_->integrals.has_value(); }

IntegralPair VectorRelation::integrals() const {
  require(has_integrals(), ErrorCode::UnsupportedKind,
          "no closed-form integral function for relation " + describe());
  return *node_->integrals;
}

std::string VectorRelation::describe() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::Affine: os << "Affine(dim=" << dim() << ")"; break;
    case Kind::GradientOfConvex: os << "GradientOfConvex[" << node_->name << "](dim=" << dim() << ")"; break;
    case Kind::Integrator: os << "Integrator(dim=" << dim() << ")"; break;
    case Kind::Stacked: os << "Stacked(" << children().size() << " blocks)"; break;
    case Kind::Shifted: os << "Shifted(" << inner().describe() << ")"; break;
    case Kind::Map: os << "Map[" << node_->name << "](dim=" << dim() << ")"; break;
  }
  return os.str();
}

SetDescriptor VectorRelation::forward(const Vec& u) const {
  require(u.size() == dim(), ErrorCode::DimensionMismatch, "relation input has wrong length");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Affine: return SetDescriptor::point(n.S * u + n.v);
    case Kind::Integrator:
      return u.lpNorm<Eigen::Infinity>() <= kZeroInputTol ? SetDescriptor::everything(n.dim)
                                                         : SetDescriptor::empty(n.dim);
    case Kind::GradientOfConvex: {
      try {
        return n.integrals->K.subgradient(u);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutsideDomain || e.code() == ErrorCode::Unbounded)
          return SetDescriptor::empty(n.dim);
        throw;
      }
    }
    case Kind::Stacked: {
      std::vector<SetDescriptor> parts;
      int at = 0;
      for (const auto& c : n.children) {
        parts.push_back(c.forward(u.segment(at, c.dim())));
        at += c.dim();
      }
      return cartesian(parts);
    }
    case Kind::Shifted: return n.children[0].forward(u - n.alpha).translate(n.beta);
    case Kind::Map: {
      require(static_cast<bool>(n.fwd), ErrorCode::RelationNotEvaluable, "relation has no forward map");
      return SetDescriptor::point(n.fwd(u));
    }
  }
  return SetDescriptor::empty(n.dim);
}

SetDescriptor VectorRelation::inverse(const Vec& y) const {
  require(y.size() == dim(), ErrorCode::DimensionMismatch, "relation output has wrong length");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Affine: {
      const Vec rhs = y - n.v;
      const Vec u0 = pinv_solve(n.S, rhs);
      if ((n.S * u0 - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) return SetDescriptor::empty(n.dim);
      return SetDescriptor::affine(u0, null_space(n.S));
    }
    case Kind::Integrator: return SetDescriptor::point(Vec::Zero(n.dim));
    case Kind::GradientOfConvex: {
      try {
        return n.integrals->Kstar.subgradient(y);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutsideDomain || e.code() == ErrorCode::Unbounded)
          return SetDescriptor::empty(n.dim);
        throw;
      }
    }
    case Kind::Stacked: {
      std::vector<SetDescriptor> parts;
      int at = 0;
      for (const auto& c : n.children) {
        parts.push_back(c.inverse(y.segment(at, c.dim())));
        at += c.dim();
      }
      return cartesian(parts);
    }
    case Kind::Shifted: return n.children[0].inverse(y - n.beta).translate(n.alpha);
    case Kind::Map: {
      require(static_cast<bool>(n.inv), ErrorCode::RelationNotEvaluable, "relation has no inverse map");
      return SetDescriptor::point(n.inv(y));
    }
  }
  return SetDescriptor::empty(n.dim);
}

double cyclic_sum(const CyclePairs& pairs) {
  require(!pairs.empty(), ErrorCode::EmptyList, "cyclic sum of an empty cycle");
  const auto d = pairs.front().first.size();
  for (const auto& [u, y] : pairs)
    require(u.size() == d && y.size() == d, ErrorCode::DimensionMismatch, "cycle vectors differ in dimension");
  const size_t N = pairs.size();
  double s = 0.0;
  for (size_t i = 0; i < N; ++i) {
    const Vec& prev = pairs[(i + N - 1) % N].first;
    s += pairs[i].second.dot(pairs[i].first - prev);
  }
  return s;
}

namespace {

// Draw a pair of the relation near the requested input; falls back to the
// inverse when the input is not admissible (e.g. integrators).
std::pair<Vec, Vec> sample_pair(const VectorRelation& rel, const Vec& u, double scale, std::mt19937_64& rng) {
  const SetDescriptor out = rel.forward(u);
  if (!out.is_empty()) return {u, out.sample(rng, scale)};
  std::normal_distribution<double> g(0.0, scale);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Vec y = u;
    if (attempt > 0)
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = g(rng);
    const SetDescriptor in = rel.inverse(y);
    if (!in.is_empty()) return {in.sample(rng, scale), y};
  }
  fail(ErrorCode::RelationNotEvaluable, "could not sample a pair of " + rel.describe());
}

}  // namespace

CmReport check_cm(const VectorRelation& rel, const CmSampler& sampler, int cycles, int max_cycle_len, double tol) {
  require(cycles > 0 && max_cycle_len >= 2, ErrorCode::RelationNotEvaluable, "check_cm needs a positive budget");
  const int d = rel.dim();
  const Vec center = sampler.center.size() == 0 ? Vec::Zero(d) : sampler.center;
  require(center.size() == d, ErrorCode::DimensionMismatch, "sampler center has wrong length");
  std::mt19937_64 rng(sampler.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> len_dist(2, max_cycle_len);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CmReport rep;
  rep.selection_rule = "forward set sampled as basepoint + N(0, scale^2) along its directions";
  auto gauss = [&]() {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = g(rng);
    return x;
  };

  for (int c = 0; c < cycles; ++c) {
    const int L = len_dist(rng);
    CyclePairs pairs;
    pairs.reserve(L);
    const bool polygon = d >= 2 && (c % 2 == 1);
    if (polygon) {
      Mat plane(d, 2);
      plane.col(0) = gauss();
      plane.col(1) = gauss();
      plane = orthonormal_span(plane);
      if (plane.cols() < 2) continue;
      const Vec mid = center + 0.5 * sampler.scale * gauss();
      const double r = sampler.scale * (0.25 + unit(rng));
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      const double dir = unit(rng) < 0.5 ? 1.0 : -1.0;
      for (int k = 0; k < L; ++k) {
        const double th = phase + dir * 2.0 * std::numbers::pi * k / L;
        const Vec u = mid + r * (std::cos(th) * plane.col(0) + std::sin(th) * plane.col(1));
        pairs.push_back(sample_pair(rel, u, sampler.scale, rng));
      }
    } else {
      for (int k = 0; k < L; ++k) pairs.push_back(sample_pair(rel, center + sampler.scale * gauss(), sampler.scale, rng));
    }
    ++rep.cycles_tested;
    const double s = cyclic_sum(pairs);
    if (s < rep.worst_sum) rep.worst_sum = s;
    if (s < -tol) {
      rep.pass = false;
      rep.counterexample = std::move(pairs);
      break;
    }
  }
  return rep;
}

}  // namespace meicmp

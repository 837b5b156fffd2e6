#include "meicmp/integral_function.hpp"

#include "meicmp/error.hpp"
#include "meicmp/minimize.hpp"

#include <cmath>
#include <sstream>

namespace meicmp {

namespace {

// Points within this sup-norm of the origin count as the origin for I_0.
constexpr double kIndicatorTol = 1e-9;

Mat block_diag(const std::vector<Mat>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Mat out = Mat::Zero(n, n);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

// Solve z + t * phi(z) = x for z (phi nondecreasing, possibly infinite off its domain).
double scalar_prox(const ScalarMap& phi, double x, double t) {
  auto g = [&](double z) { return z + t * phi(z) - x; };
  double lo = x - 1.0;
  double hi = x + 1.0;
  for (double w = 1.0; g(lo) > 0.0; w *= 2.0) lo = x - w;
  for (double w = 1.0; g(hi) < 0.0; w *= 2.0) hi = x + w;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if (gm < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

struct IntegralFunction::Node {
  Kind kind = Kind::Quadratic;
  int dim = 0;
  Mat P;
  Vec q;
  double c = 0.0;
  std::vector<ScalarMap> maps;
  Vec lower;
  std::vector<IntegralFunction> children;  // also holds the inner function of Shifted/Conjugate
  Vec offset;
  Vec linear;
  double constant = 0.0;
};

IntegralFunction::IntegralFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

IntegralFunction IntegralFunction::quadratic(Mat P, Vec q, double c) {
  require(P.rows() == P.cols() && P.rows() == q.size(), ErrorCode::DimensionMismatch,
          "quadratic needs square P matching q");
  require(is_numerically_symmetric(P), ErrorCode::UnsupportedKind, "quadratic P must be symmetric");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Quadratic;
  n->dim = static_cast<int>(q.size());
  n->P = 0.5 * (P + P.transpose());
  n->q = std::move(q);
  n->c = c;
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::zero(int dim) { return quadratic(Mat::Zero(dim, dim), Vec::Zero(dim), 0.0); }

IntegralFunction IntegralFunction::indicator_zero(int dim) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::IndicatorZero;
  n->dim = dim;
  n->P = Mat::Identity(dim, dim);
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::indicator_kernel(const Mat& constraints) {
  const int dim = static_cast<int>(constraints.rows());
  const Mat N = orthonormal_span(constraints);
  if (N.cols() == 0) return zero(dim);
  auto n = std::make_shared<Node>();
  n->kind = Kind::IndicatorZero;
  n->dim = dim;
  n->P = N;
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::separable(std::vector<ScalarMap> maps, Vec lower, double constant) {
  require(!maps.empty(), ErrorCode::EmptyList, "separable function needs at least one map");
  const int d = static_cast<int>(maps.size());
  if (lower.size() == 0) lower = Vec::Zero(d);
  require(lower.size() == d, ErrorCode::DimensionMismatch, "separable lower limits have wrong length");
  auto n = std::make_shared<Node>();
  n->kind = Kind::ScalarSeparable;
  n->dim = d;
  n->maps = std::move(maps);
  n->lower = std::move(lower);
  n->constant = constant;
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::separable(const ScalarMap& map, int dim) {
  return separable(std::vector<ScalarMap>(dim, map));
}

IntegralFunction IntegralFunction::sum(std::vector<IntegralFunction> terms) {
  require(!terms.empty(), ErrorCode::EmptyList, "sum of no functions");
  const int d = terms.front().dim();
  for (const auto& t : terms) require(t.dim() == d, ErrorCode::DimensionMismatch, "sum terms differ in dimension");
  if (terms.size() == 1) return terms.front();
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sum;
  n->dim = d;
  n->children = std::move(terms);
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::shifted(IntegralFunction inner, Vec offset, Vec linear, double constant) {
  const int d = inner.dim();
  if (offset.size() == 0) offset = Vec::Zero(d);
  if (linear.size() == 0) linear = Vec::Zero(d);
  require(offset.size() == d && linear.size() == d, ErrorCode::DimensionMismatch, "shift vectors have wrong length");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Shifted;
  n->dim = d;
  n->children = {std::move(inner)};
  n->offset = std::move(offset);
  n->linear = std::move(linear);
  n->constant = constant;
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::block_stack(std::vector<IntegralFunction> blocks) {
  require(!blocks.empty(), ErrorCode::EmptyList, "block stack of no functions");
  if (blocks.size() == 1) return blocks.front();
  auto n = std::make_shared<Node>();
  n->kind = Kind::BlockStack;
  for (const auto& b : blocks) n->dim += b.dim();
  n->children = std::move(blocks);
  return IntegralFunction(n);
}

IntegralFunction IntegralFunction::numeric_conjugate(IntegralFunction inner) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Conjugate;
  n->dim = inner.dim();
  n->children = {std::move(inner)};
  return IntegralFunction(n);
}

IntegralFunction::Kind IntegralFunction::kind() const { return node_->kind; }
int IntegralFunction::dim() const { return node_->dim; }

const Mat& IntegralFunction::P() const { return node_->P; }
const Vec& IntegralFunction::q() const { return node_->q; }
double IntegralFunction::c() const { return node_->c; }
const std::vector<ScalarMap>& IntegralFunction::maps() const { return node_->maps; }
const Vec& IntegralFunction::lower() const { return node_->lower; }
const std::vector<IntegralFunction>& IntegralFunction::children() const { return node_->children; }
const IntegralFunction& IntegralFunction::inner() const {
  require(node_->kind == Kind::Shifted || node_->kind == Kind::Conjugate, ErrorCode::UnsupportedKind,
          "function has no inner function");
  return node_->children.front();
}
const Vec& IntegralFunction::offset() const { return node_->offset; }
const Vec& IntegralFunction::linear() const { return node_->linear; }
double IntegralFunction::constant() const { return node_->constant; }

std::string IntegralFunction::describe() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::Quadratic: os << "Quadratic(dim=" << dim() << ")"; break;
    case Kind::IndicatorZero: os << "IndicatorZero(dim=" << dim() << ", rank=" << P().cols() << ")"; break;
    case Kind::ScalarSeparable: os << "Separable(" << maps().front().name() << ", dim=" << dim() << ")"; break;
    case Kind::Sum:
    case Kind::BlockStack: {
      os << (kind() == Kind::Sum ? "Sum[" : "Blocks[");
      for (size_t i = 0; i < children().size(); ++i) os << (i ? ", " : "") << children()[i].describe();
      os << "]";
      break;
    }
    case Kind::Shifted: os << "Shifted(" << inner().describe() << ")"; break;
    case Kind::Conjugate: os << "Conjugate(" << inner().describe() << ")"; break;
  }
  return os.str();
}

double IntegralFunction::value(const Vec& x) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch, "function argument has wrong length");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Quadratic: return 0.5 * x.dot(n.P * x) + n.q.dot(x) + n.c;
    case Kind::IndicatorZero: return (n.P.transpose() * x).lpNorm<Eigen::Infinity>() <= kIndicatorTol ? 0.0 : kInf;
    case Kind::ScalarSeparable: {
      double s = n.constant;
      for (int j = 0; j < n.dim; ++j) {
        s += n.maps[j].integral(n.lower(j), x(j));
        if (!std::isfinite(s)) return kInf;
      }
      return s;
    }
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& t : n.children) {
        s += t.value(x);
        if (!(s < kInf)) return kInf;
      }
      return s;
    }
    case Kind::Shifted: {
      const double v = n.children[0].value(x - n.offset);
      return v < kInf ? v + n.linear.dot(x) + n.constant : kInf;
    }
    case Kind::BlockStack: {
      double s = 0.0;
      int at = 0;
      for (const auto& b : n.children) {
        s += b.value(x.segment(at, b.dim()));
        if (!(s < kInf)) return kInf;
        at += b.dim();
      }
      return s;
    }
    case Kind::Conjugate: {
      try {
        return n.children[0].numeric_conjugate_value(x).value;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Unbounded) return kInf;
        throw;
      }
    }
  }
  return kInf;
}

bool IntegralFunction::is_smooth() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Quadratic: return true;
    case Kind::IndicatorZero: return false;
    case Kind::ScalarSeparable:
      for (const auto& m : n.maps)
        if (!m.smooth()) return false;
      return true;
    case Kind::Sum:
    case Kind::BlockStack:
      for (const auto& c : n.children)
        if (!c.is_smooth()) return false;
      return true;
    case Kind::Shifted: return n.children[0].is_smooth();
    case Kind::Conjugate: return n.children[0].is_smooth();
  }
  return false;
}

bool IntegralFunction::as_quadratic(Mat* P, Vec* q, double* c) const {
  const Node& n = *node_;
  Mat Pl;
  Vec ql;
  double cl = 0.0;
  switch (n.kind) {
    case Kind::Quadratic:
      Pl = n.P;
      ql = n.q;
      cl = n.c;
      break;
    case Kind::ScalarSeparable: {
      Pl = Mat::Zero(n.dim, n.dim);
      ql = Vec::Zero(n.dim);
      cl = n.constant;
      for (int j = 0; j < n.dim; ++j) {
        if (n.maps[j].kind() != ScalarMap::Kind::Linear) return false;
        const double a = n.maps[j].coefficient_a();
        Pl(j, j) = a;
        cl -= 0.5 * a * n.lower(j) * n.lower(j);
      }
      break;
    }
    case Kind::Sum: {
      Pl = Mat::Zero(n.dim, n.dim);
      ql = Vec::Zero(n.dim);
      for (const auto& t : n.children) {
        Mat Pt;
        Vec qt;
        double ct = 0.0;
        if (!t.as_quadratic(&Pt, &qt, &ct)) return false;
        Pl += Pt;
        ql += qt;
        cl += ct;
      }
      break;
    }
    case Kind::Shifted: {
      Mat Pi;
      Vec qi;
      double ci = 0.0;
      if (!n.children[0].as_quadratic(&Pi, &qi, &ci)) return false;
      const Vec& a = n.offset;
      Pl = Pi;
      ql = qi - Pi * a + n.linear;
      cl = 0.5 * a.dot(Pi * a) - qi.dot(a) + ci + n.constant;
      break;
    }
    case Kind::BlockStack: {
      std::vector<Mat> Ps;
      std::vector<Vec> qs;
      for (const auto& b : n.children) {
        Mat Pb;
        Vec qb;
        double cb = 0.0;
        if (!b.as_quadratic(&Pb, &qb, &cb)) return false;
        Ps.push_back(Pb);
        qs.push_back(qb);
        cl += cb;
      }
      Pl = block_diag(Ps);
      ql = stack(qs);
      break;
    }
    default: return false;
  }
  if (P) *P = std::move(Pl);
  if (q) *q = std::move(ql);
  if (c) *c = cl;
  return true;
}

bool IntegralFunction::closed_form() const {
  if (kind() == Kind::Conjugate) return false;
  for (const auto& c : children())
    if (!c.closed_form()) return false;
  return true;
}

Vec IntegralFunction::gradient(const Vec& x) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch, "gradient argument has wrong length");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Quadratic: return n.P * x + n.q;
    case Kind::IndicatorZero: fail(ErrorCode::OutsideDomain, "indicator function has no gradient");
    case Kind::ScalarSeparable: {
      Vec g(n.dim);
      for (int j = 0; j < n.dim; ++j) g(j) = n.maps[j](x(j));
      return g;
    }
    case Kind::Sum: {
      Vec g = Vec::Zero(n.dim);
      for (const auto& t : n.children) g += t.gradient(x);
      return g;
    }
    case Kind::Shifted: return n.children[0].gradient(x - n.offset) + n.linear;
    case Kind::BlockStack: {
      Vec g(n.dim);
      int at = 0;
      for (const auto& b : n.children) {
        g.segment(at, b.dim()) = b.gradient(x.segment(at, b.dim()));
        at += b.dim();
      }
      return g;
    }
    case Kind::Conjugate: return n.children[0].numeric_conjugate_value(x).argmax;
  }
  return Vec();
}

Mat IntegralFunction::hessian(const Vec& x) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch, "Hessian argument has wrong length");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Quadratic: return n.P;
    case Kind::IndicatorZero: fail(ErrorCode::OutsideDomain, "indicator function has no Hessian");
    case Kind::ScalarSeparable: {
      Vec h(n.dim);
      for (int j = 0; j < n.dim; ++j) h(j) = n.maps[j].derivative(x(j));
      return h.asDiagonal();
    }
    case Kind::Sum: {
      Mat h = Mat::Zero(n.dim, n.dim);
      for (const auto& t : n.children) h += t.hessian(x);
      return h;
    }
    case Kind::Shifted: return n.children[0].hessian(x - n.offset);
    case Kind::BlockStack: {
      std::vector<Mat> hs;
      int at = 0;
      for (const auto& b : n.children) {
        hs.push_back(b.hessian(x.segment(at, b.dim())));
        at += b.dim();
      }
      return block_diag(hs);
    }
    case Kind::Conjugate: {
      const Vec u = n.children[0].numeric_conjugate_value(x).argmax;
      return n.children[0].hessian(u).completeOrthogonalDecomposition().pseudoInverse();
    }
  }
  return Mat();
}

SetDescriptor IntegralFunction::subgradient(const Vec& x) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch, "subgradient argument has wrong length");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::IndicatorZero:
      require((n.P.transpose() * x).lpNorm<Eigen::Infinity>() <= kIndicatorTol, ErrorCode::OutsideDomain,
              "point outside the domain of the indicator");
      if (n.P.cols() == n.dim) return SetDescriptor::everything(n.dim);
      return SetDescriptor::affine(Vec::Zero(n.dim), n.P);
    case Kind::ScalarSeparable:
    case Kind::Conjugate: {
      require(value(x) < kInf, ErrorCode::OutsideDomain, "point outside the effective domain");
      return SetDescriptor::point(gradient(x));
    }
    case Kind::Quadratic: return SetDescriptor::point(gradient(x));
    case Kind::Sum: {
      SetDescriptor s = n.children[0].subgradient(x);
      for (size_t i = 1; i < n.children.size(); ++i) s = minkowski_sum(s, n.children[i].subgradient(x));
      return s;
    }
    case Kind::Shifted: return n.children[0].subgradient(x - n.offset).translate(n.linear);
    case Kind::BlockStack: {
      std::vector<SetDescriptor> parts;
      int at = 0;
      for (const auto& b : n.children) {
        parts.push_back(b.subgradient(x.segment(at, b.dim())));
        at += b.dim();
      }
      return cartesian(parts);
    }
  }
  return SetDescriptor::empty(n.dim);
}

Vec IntegralFunction::prox(const Vec& x, double step) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch, "prox argument has wrong length");
  require(step > 0.0, ErrorCode::SolverFailure, "prox step must be positive");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Quadratic: {
      Mat m = Mat::Identity(n.dim, n.dim) + step * n.P;
      return m.ldlt().solve(x - step * n.q);
    }
    case Kind::IndicatorZero: return x - n.P * (n.P.transpose() * x);
    case Kind::ScalarSeparable: {
      Vec z(n.dim);
      for (int j = 0; j < n.dim; ++j) z(j) = scalar_prox(n.maps[j], x(j), step);
      return z;
    }
    case Kind::Shifted: return n.offset + n.children[0].prox(x - step * n.linear - n.offset, step);
    case Kind::BlockStack: {
      Vec z(n.dim);
      int at = 0;
      for (const auto& b : n.children) {
        z.segment(at, b.dim()) = b.prox(x.segment(at, b.dim()), step);
        at += b.dim();
      }
      return z;
    }
    case Kind::Conjugate: {
      // Moreau decomposition.
      const IntegralFunction& f = n.children[0];
      return x - step * f.prox(x / step, 1.0 / step);
    }
    case Kind::Sum: {
      Mat P;
      Vec q;
      double c = 0.0;
      if (as_quadratic(&P, &q, &c)) return quadratic(P, q, c).prox(x, step);
      std::vector<IntegralFunction> smooth;
      std::vector<IntegralFunction> rough;
      for (const auto& t : n.children) (t.is_smooth() ? smooth : rough).push_back(t);
      require(rough.size() <= 1, ErrorCode::UnsupportedKind, "prox of a sum with several nonsmooth terms");
      auto f = [&](const Vec& z) {
        double v = (z - x).squaredNorm() / (2.0 * step);
        for (const auto& t : smooth) v += t.value(z);
        return v;
      };
      auto g = [&](const Vec& z) {
        Vec v = (z - x) / step;
        for (const auto& t : smooth) v += t.gradient(z);
        return v;
      };
      MinimizeOptions opts;
      opts.tol = 1e-11;
      opts.max_iter = 5000;
      opts.trace_every = 0;
      MinimizeResult r;
      if (rough.empty()) {
        auto h = [&](const Vec& z) {
          Mat m = Mat::Identity(n.dim, n.dim) / step;
          for (const auto& t : smooth) m += t.hessian(z);
          return m;
        };
        r = newton_minimize(f, g, h, x, opts);
      } else {
        const IntegralFunction& ns = rough.front();
        r = proximal_gradient(
            f, g, [&](const Vec& z) { return ns.value(z); }, [&](const Vec& z, double t) { return ns.prox(z, t); }, x,
            opts);
      }
      require(r.converged, ErrorCode::SolverFailure, "prox subproblem did not converge");
      return r.x;
    }
  }
  return x;
}

IntegralFunction IntegralFunction::conjugate() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Quadratic: {
      if (n.P.isZero(0.0)) return shifted(indicator_zero(n.dim), n.q, Vec::Zero(n.dim), -n.c);
      const double lmin = min_symmetric_eigenvalue(n.P);
      if (lmin > 1e-12 * std::max(1.0, max_symmetric_eigenvalue(n.P))) {
        const Mat Pinv = n.P.ldlt().solve(Mat::Identity(n.dim, n.dim));
        const Vec pq = Pinv * n.q;
        return quadratic(0.5 * (Pinv + Pinv.transpose()), -pq, 0.5 * n.q.dot(pq) - n.c);
      }
      if (lmin >= -1e-12 * std::max(1.0, max_symmetric_eigenvalue(n.P))) {
        // Singular PSD: finite only where y - q lies in the range of P.
        const Mat Pp = n.P.completeOrthogonalDecomposition().pseudoInverse();
        const IntegralFunction core =
            sum({quadratic(0.5 * (Pp + Pp.transpose()), Vec::Zero(n.dim), 0.0), indicator_kernel(null_space(n.P))});
        return shifted(core, n.q, Vec::Zero(n.dim), -n.c);
      }
      return numeric_conjugate(*this);
    }
    case Kind::IndicatorZero: {
      if (n.P.cols() == n.dim) return zero(n.dim);
      return indicator_kernel(null_space(n.P.transpose()));
    }
    case Kind::ScalarSeparable: {
      bool all_zero = true;
      bool all_strict = true;
      for (const auto& m : n.maps) {
        all_zero = all_zero && m.is_zero();
        all_strict = all_strict && m.strictly_increasing();
      }
      if (all_zero) return shifted(indicator_zero(n.dim), Vec(), Vec(), -n.constant);
      if (all_strict) {
        std::vector<ScalarMap> inv;
        Vec lo(n.dim);
        double k = -n.constant;
        for (int j = 0; j < n.dim; ++j) {
          inv.push_back(n.maps[j].inverse());
          lo(j) = n.maps[j](n.lower(j));
          require(std::isfinite(lo(j)), ErrorCode::OutsideDomain, "separable lower limit outside the map domain");
          k += n.lower(j) * lo(j);
        }
        return separable(std::move(inv), lo, k);
      }
      // Mixed coordinates: conjugate each coordinate on its own.
      std::vector<IntegralFunction> parts;
      for (int j = 0; j < n.dim; ++j) {
        const double cj = j == 0 ? n.constant : 0.0;
        parts.push_back(separable({n.maps[j]}, Vec::Constant(1, n.lower(j)), cj).conjugate());
      }
      return block_stack(std::move(parts));
    }
    case Kind::Sum: {
      Mat P;
      Vec q;
      double c = 0.0;
      if (as_quadratic(&P, &q, &c)) return quadratic(P, q, c).conjugate();
      return numeric_conjugate(*this);
    }
    case Kind::Shifted:
      return shifted(n.children[0].conjugate(), n.linear, n.offset, -n.offset.dot(n.linear) - n.constant);
    case Kind::BlockStack: {
      std::vector<IntegralFunction> parts;
      for (const auto& b : n.children) parts.push_back(b.conjugate());
      return block_stack(std::move(parts));
    }
    case Kind::Conjugate: return n.children[0];
  }
  return numeric_conjugate(*this);
}

ConjugateValue IntegralFunction::conjugate_value(const Vec& y, const ConjugateOptions& opts) const {
  require(y.size() == dim(), ErrorCode::DimensionMismatch, "conjugate argument has wrong length");
  const IntegralFunction fs = conjugate();
  if (fs.closed_form()) {
    ConjugateValue cv;
    cv.value = fs.value(y);
    cv.closed_form = true;
    return cv;
  }
  return numeric_conjugate_value(y, opts);
}

ConjugateValue IntegralFunction::numeric_conjugate_value(const Vec& y, const ConjugateOptions& opts) const {
  require(y.size() == dim(), ErrorCode::DimensionMismatch, "conjugate argument has wrong length");
  // sup_u y^T u - f(u), as a minimization of h(u) = f(u) - y^T u.
  Vec u = Vec::Zero(dim());
  if (!(value(u) < kInf) && kind() != Kind::IndicatorZero) u = prox(u, 1.0);
  require(value(u) < kInf, ErrorCode::SolverFailure, "no feasible start for the conjugate problem");
  MinimizeOptions mo;
  mo.max_iter = opts.max_iter;
  mo.tol = opts.tol * (1.0 + y.norm());
  mo.trace_every = 0;
  if (is_smooth()) {
    auto h = [&](const Vec& z) { return value(z) - y.dot(z); };
    auto g = [&](const Vec& z) { return Vec(gradient(z) - y); };
    auto H = [&](const Vec& z) { return hessian(z); };
    MinimizeResult r = newton_minimize(h, g, H, u, mo);
    if (r.x.norm() > opts.bound || !std::isfinite(r.objective))
      fail(ErrorCode::Unbounded, "conjugate inner problem diverges");
    if (!r.converged) {
      // Gradient still large while the objective keeps decreasing: no maximizer.
      if (r.x.norm() > 1e3 * (1.0 + u.norm())) fail(ErrorCode::Unbounded, "conjugate inner problem diverges");
      // Flat directions of the Hessian along which the gradient does not
      // vanish: follow the ray and check that h keeps decreasing.
      const Mat Hx = hessian(r.x);
      const Mat N = null_space(0.5 * (Hx + Hx.transpose()), 1e-9);
      if (N.cols() > 0) {
        const Vec gx = g(r.x);
        const Vec d = -(N * (N.transpose() * gx));
        if (d.norm() > 1e-8 * (1.0 + y.norm())) {
          const Vec dir = d.normalized();
          double prev = h(r.x);
          bool descending = true;
          for (double s = 1e2; s <= 1e6 && descending; s *= 1e2) {
            const double hv = h(r.x + s * dir);
            descending = hv < prev - 1e-3 * s * d.norm();
            prev = hv;
          }
          if (descending) fail(ErrorCode::Unbounded, "conjugate inner problem is unbounded along a flat direction");
        }
      }
      require(r.residual <= 1e-6 * (1.0 + y.norm()), ErrorCode::SolverFailure, "conjugate inner problem stalled");
    }
    u = r.x;
  } else {
    // Proximal-point iteration on h with growing steps.
    double t = 1.0;
    bool done = false;
    for (int it = 0; it < opts.max_iter; ++it) {
      const Vec un = prox(u + t * y, t);
      const double delta = (un - u).norm();
      u = un;
      if (u.norm() > opts.bound) fail(ErrorCode::Unbounded, "conjugate inner problem diverges");
      if (delta <= opts.tol * (1.0 + u.norm())) {
        done = true;
        break;
      }
      t = std::min(2.0 * t, 1e6);
    }
    require(done, ErrorCode::SolverFailure, "conjugate proximal-point iteration did not converge");
  }
  ConjugateValue cv;
  cv.argmax = u;
  cv.value = y.dot(u) - value(u);
  cv.closed_form = false;
  return cv;
}

double fenchel_young_residual(const IntegralFunction& f, const IntegralFunction& fstar, const Vec& x, const Vec& g) {
  return std::abs(f.value(x) + fstar.value(g) - g.dot(x));
}

}  // namespace meicmp

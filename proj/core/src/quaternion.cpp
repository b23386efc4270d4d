#include "hqf/quaternion.hpp"

#include <algorithm>
#include <cmath>

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"
#include "hqf/field_io.hpp"

namespace hqf {

Quaternion qmul(const Quaternion& p, const Quaternion& q, const MetricField& g) {
  if (p.node != q.node) throw PreconditionError("qmul: quaternions attached to different nodes");
  const NodeId n = p.node;
  Quaternion r;
  r.node = n;
  r.alpha = p.alpha * q.alpha - inner_at(p.u, q.u, g, n);
  r.u = p.alpha * q.u + q.alpha * p.u + vector_product_at(p.u, q.u, g, n);
  return r;
}

double qnorm(const Quaternion& p, const MetricField& g) {
  return std::sqrt(p.alpha * p.alpha + inner_at(p.u, p.u, g, p.node));
}

std::array<double, 4> to_standard(const Quaternion& p, const std::array<Vec3, 3>& frame, const MetricField& g) {
  const NodeId n = p.node;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double want = a == b ? 1.0 : 0.0;
      if (std::abs(inner_at(frame[a], frame[b], g, n) - want) > 1e-10) {
        throw PreconditionError("to_standard: frame is not g-orthonormal");
      }
    }
  }
  const double orientation = frame[0].cross(frame[1]).dot(frame[2]);
  if (!(orientation > 0.0)) throw PreconditionError("to_standard: frame is not positively oriented");
  return {p.alpha, inner_at(p.u, frame[0], g, n), inner_at(p.u, frame[1], g, n), inner_at(p.u, frame[2], g, n)};
}

std::array<double, 4> hamilton_product(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return {
      a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
      a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
      a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
      a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
  };
}

QuaternionField::QuaternionField(ScalarField alpha, VectorField u) : alpha_(std::move(alpha)), u_(std::move(u)) {
  require_same_domain(alpha_.domain(), u_.domain(), "QuaternionField");
}

QuaternionField& QuaternionField::operator+=(const QuaternionField& o) {
  alpha_ += o.alpha_;
  u_ += o.u_;
  return *this;
}

QuaternionField& QuaternionField::operator*=(double s) {
  alpha_ *= s;
  u_ *= s;
  return *this;
}

QuaternionField field_mul(const QuaternionField& p, const QuaternionField& q, const MetricField& g) {
  require_same_domain(p.domain(), q.domain(), "field_mul");
  require_same_domain(p.domain(), g.domain(), "field_mul");
  QuaternionField out(p.domain());
  const auto& dom = *p.domain();
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.in_domain(n)) out.set(n, qmul(p.at(n), q.at(n), g));
  }
  return out;
}

QuaternionField scalar_embed(const ScalarField& alpha) { return QuaternionField(alpha, VectorField(alpha.domain())); }

double sup_norm(const QuaternionField& p, const MetricField& g) {
  const auto& dom = *p.domain();
  double m = 0.0;
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.in_domain(n)) m = std::max(m, qnorm(p.at(n), g));
  }
  return m;
}

QResidual q_residual(const QuaternionField& p, const MetricField& g, int min_depth) {
  const auto& dom = *p.domain();
  const VectorField ga = grad(p.scalar(), g);
  const VectorField ru = rot(p.vector(), g);
  const ScalarField du = div(p.vector(), g);
  QResidual r;
  for (NodeId n : dom.interior_nodes()) {
    if (dom.depth(n) < min_depth) continue;
    r.curl_defect = std::max(r.curl_defect, (ga[n] - ru[n]).norm());
    r.div_defect = std::max(r.div_defect, std::abs(du[n]));
  }
  return r;
}

int collar_depth(const GridDomain& dom) {
  const int n = std::min({dom.dims()[0], dom.dims()[1], dom.dims()[2]});
  return std::max(2, (n - 1) / 8);
}

namespace io {

void write_quaternion(const std::filesystem::path& stem, const QuaternionField& p, const std::string& extra_json) {
  std::vector<double> data;
  data.reserve(p.scalar().size() * 4);
  for (NodeId n = 0; n < p.scalar().size(); ++n) {
    const Vec3& u = p.vector()[n];
    data.insert(data.end(), {p.scalar()[n], u[0], u[1], u[2]});
  }
  write_raw(stem, *p.domain(), 4, data, extra_json);
}

QuaternionField read_quaternion(const std::filesystem::path& stem, const DomainPtr& dom) {
  const RawField raw = read_raw(stem);
  if (raw.components != 4) throw PreconditionError("expected a quaternion field file: " + stem.string());
  if (raw.spec.resolution != dom->dims()) throw PreconditionError("field file geometry does not match the domain");
  QuaternionField out(dom);
  for (NodeId n = 0; n < dom->node_count(); ++n) {
    out.set(n, {raw.data[4 * n], Vec3(raw.data[4 * n + 1], raw.data[4 * n + 2], raw.data[4 * n + 3]), n});
  }
  return out;
}

}  // namespace io
}  // namespace hqf

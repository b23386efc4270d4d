#include "hqf/density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "hqf/calculus.hpp"
#include "hqf/error.hpp"
#include "json.hpp"

namespace hqf {

namespace {

ScalarField squared_gradient(const ScalarField& w, const MetricField& g, bool with_boundary) {
  const VectorField gw = with_boundary ? gradient_with_boundary(w, g) : grad(w, g);
  return inner(gw, gw, g);
}

double condition3(const Mat3& f) {
  Eigen::JacobiSVD<Mat3> svd(f);
  const auto& s = svd.singularValues();
  return s[2] > 0.0 ? s[0] / s[2] : std::numeric_limits<double>::infinity();
}

Mat3 frame_at(const FrameBall& b, NodeId n) {
  Mat3 f;
  for (int k = 0; k < 3; ++k) f.col(k) = b.gradients[static_cast<std::size_t>(k)][n];
  return f;
}

}  // namespace

ScalarSeparationReport scalar_separation_check(const MetricField& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                               const std::vector<ScalarField>& dictionary_harmonics, double threshold) {
  const auto& dom = *g.domain();
  ScalarSeparationReport rep;
  rep.threshold = threshold;
  rep.small_dictionary = dictionary_harmonics.size() < 10;
  std::vector<ScalarField> feat;
  feat.reserve(dictionary_harmonics.size());
  for (const auto& w : dictionary_harmonics) feat.push_back(squared_gradient(w, g, false));

  bool all = true;
  for (const auto& [a, b] : pairs) {
    if (!dom.is_interior(a) || !dom.is_interior(b)) throw PreconditionError("scalar_separation_check: pair node not interior");
    PairSeparation ps{a, b};
    for (const auto& f : feat) ps.margin = std::max(ps.margin, std::abs(f[a] - f[b]));
    ps.degenerate = a == b;
    ps.separated = !ps.degenerate && ps.margin > threshold;
    if (!ps.degenerate && !ps.separated) all = false;
    rep.pairs.push_back(ps);
  }
  rep.min_coverage = std::numeric_limits<double>::infinity();
  for (NodeId n : dom.interior_nodes()) {
    double m = 0.0;
    for (const auto& f : feat) m = std::max(m, f[n]);
    rep.min_coverage = std::min(rep.min_coverage, m);
  }
  if (dom.interior_nodes().empty()) rep.min_coverage = 0.0;
  rep.pass = all && rep.min_coverage > threshold;
  return rep;
}

FrameCover build_frame_cover(const DirichletOperator& op, const ControlBasis& basis,
                             const std::vector<ScalarField>& harmonics, const FrameCoverOptions& opts) {
  const auto& dp = op.domain();
  const auto& dom = *dp;
  const auto& g = op.metric();
  const Box& box = dom.box();
  const double extent = std::max({box[0].length(), box[1].length(), box[2].length()});
  const auto& d = dom.dims();

  std::vector<char> covered(dom.node_count(), 0);
  std::size_t uncovered = 0;
  for (NodeId n = 0; n < dom.node_count(); ++n) uncovered += dom.in_domain(n) ? 1 : 0;

  FrameCover cover;
  cover.max_condition = opts.max_condition;
  for (int level = 0; level < opts.max_levels && uncovered > 0; ++level) {
    const int per_axis = 2 << level;
    const double r_level = opts.initial_radius * extent / static_cast<double>(1 << level);
    for (int ck = 0; ck < per_axis; ++ck) {
      for (int cj = 0; cj < per_axis; ++cj) {
        for (int ci = 0; ci < per_axis; ++ci) {
          if (uncovered == 0) break;
          const std::array<int, 3> cc{ci, cj, ck};
          Index3 idx;
          for (int a = 0; a < 3; ++a) {
            const double frac = (2.0 * cc[a] + 1.0) / (2.0 * per_axis);
            idx[a] = std::clamp(static_cast<int>(std::lround(frac * (d[a] - 1))), 2, d[a] - 3);
          }
          const NodeId c = dom.id(idx);
          if (dom.depth(c) < 2) continue;
          const Vec3 xc = dom.position(c);

          std::vector<std::pair<double, NodeId>> near;
          bool useful = false;
          for (NodeId n = 0; n < dom.node_count(); ++n) {
            if (!dom.in_domain(n)) continue;
            const double r = (dom.position(n) - xc).norm();
            if (r < r_level) {
              near.emplace_back(r, n);
              if (!covered[n]) useful = true;
            }
          }
          if (!useful) continue;

          const ControlMatrix m = ma_matrix(g, {c}, basis, harmonics);
          FrameBall ball;
          ball.center = c;
          bool ok = true;
          for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd t = Eigen::VectorXd::Zero(4);
            t[1 + k] = 1.0;
            const ControlSolution s = solve_control(m, t, {false, true, true, true});
            if (!s.success) {
              ok = false;
              break;
            }
            ScalarField w(dp);
            for (std::size_t q = 0; q < harmonics.size(); ++q) {
              const double cq = s.coefficients[static_cast<Eigen::Index>(q)];
              if (cq == 0.0) continue;
              const auto& hv = harmonics[q].values();
              auto& wv = w.values();
              for (std::size_t n = 0; n < wv.size(); ++n) wv[n] += cq * hv[n];
            }
            ball.controls[static_cast<std::size_t>(k)] = s.control;
            ball.gradients[static_cast<std::size_t>(k)] = gradient_with_boundary(w, g);
          }
          if (!ok) continue;

          std::sort(near.begin(), near.end());
          double r = r_level, worst = 0.0;
          std::size_t inside = near.size();
          for (std::size_t i = 0; i < near.size(); ++i) {
            const double cond = condition3(frame_at(ball, near[i].second));
            if (!(cond < opts.max_condition)) {
              inside = i;
              break;
            }
            worst = std::max(worst, cond);
          }
          if (inside < near.size()) {
            // Shrink until the ball excludes the first ill-conditioned node.
            const double limit = near[inside].first;
            while (r >= limit) r *= opts.shrink;
            worst = 0.0;
            inside = 0;
            while (inside < near.size() && near[inside].first < r) {
              worst = std::max(worst, condition3(frame_at(ball, near[inside].second)));
              ++inside;
            }
          }
          bool adds = false;
          for (std::size_t i = 0; i < inside; ++i) adds = adds || !covered[near[i].second];
          if (!adds || r < 1e-12) continue;
          for (std::size_t i = 0; i < inside; ++i) {
            if (!covered[near[i].second]) {
              covered[near[i].second] = 1;
              --uncovered;
            }
          }
          ball.radius = r;
          ball.worst_condition = worst;
          cover.balls.push_back(std::move(ball));
        }
      }
    }
  }
  if (uncovered > 0) {
    for (NodeId n = 0; n < dom.node_count(); ++n) {
      if (dom.in_domain(n) && !covered[n]) {
        throw NumericalError("build_frame_cover: no admissible ball covers node " + std::to_string(n));
      }
    }
  }

  std::vector<double> total(dom.node_count(), 0.0);
  cover.eta.assign(cover.balls.size(), ScalarField(dp));
  for (std::size_t b = 0; b < cover.balls.size(); ++b) {
    const Vec3 xc = dom.position(cover.balls[b].center);
    const double r = cover.balls[b].radius;
    for (NodeId n = 0; n < dom.node_count(); ++n) {
      if (!dom.in_domain(n)) continue;
      const double q = (dom.position(n) - xc).norm() / r;
      if (q < 1.0) {
        const double s = 1.0 - q * q;
        cover.eta[b][n] = s * s * s;
        total[n] += s * s * s;
      }
    }
  }
  for (auto& e : cover.eta) {
    for (NodeId n = 0; n < dom.node_count(); ++n) {
      if (total[n] > 0.0) e[n] /= total[n];
    }
  }
  return cover;
}

Representation represent(const QuaternionField& p, const FrameCover& cover, const MetricField& g) {
  const auto& dp = p.domain();
  const auto& dom = *dp;
  require_same_domain(dp, g.domain(), "represent");
  if (!cover.eta.empty()) require_same_domain(dp, cover.eta.front().domain(), "represent");
  Representation rep;
  const std::size_t nb = cover.balls.size();
  rep.eta_alpha.assign(nb, ScalarField(dp));
  rep.kappa.assign(nb, {ScalarField(dp), ScalarField(dp), ScalarField(dp)});
  ScalarField alpha(dp);
  VectorField u(dp);
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    for (std::size_t b = 0; b < nb; ++b) {
      const double e = cover.eta[b][n];
      if (e == 0.0) continue;
      rep.eta_alpha[b][n] = e * p.scalar()[n];
      alpha[n] += rep.eta_alpha[b][n];
      const Mat3 f = frame_at(cover.balls[b], n);
      Eigen::FullPivLU<Mat3> lu(f);
      if (!lu.isInvertible()) throw NumericalError("represent: singular frame at node " + std::to_string(n));
      const Vec3 k = lu.solve(e * p.vector()[n]);
      for (int c = 0; c < 3; ++c) rep.kappa[b][static_cast<std::size_t>(c)][n] = k[c];
      u[n] += f * k;
    }
  }
  rep.reconstruction = QuaternionField(std::move(alpha), std::move(u));
  QuaternionField diff = rep.reconstruction;
  QuaternionField neg = p;
  neg *= -1.0;
  diff += neg;
  rep.error = sup_norm(diff, g);
  return rep;
}

std::size_t AlgebraElement::depth() const {
  std::size_t m = 0;
  for (const auto& t : terms) m = std::max(m, monomials[t.monomial].size() + (t.frame >= 0 ? 1 : 0));
  return m;
}

std::string AlgebraElement::to_json() const {
  using nlohmann::json;
  json out;
  out["op"] = "sum";
  out["dictionary"] = dictionary_labels;
  json terms_j = json::array();
  for (const auto& t : terms) {
    json leaves = json::array();
    const auto& mono = monomials[t.monomial];
    if (mono.empty() && t.frame < 0) leaves.push_back({{"generator", "unit"}});
    for (int id : mono) leaves.push_back({{"generator", "gradient"}, {"source", "dictionary"}, {"control", id}});
    if (t.frame >= 0) {
      leaves.push_back({{"generator", "gradient"}, {"source", "frame"}, {"ball", t.frame / 3}, {"k", t.frame % 3}});
    }
    terms_j.push_back({{"op", "prod"}, {"coeff", t.coeff}, {"leaves", leaves}});
  }
  out["terms"] = terms_j;
  return out.dump();
}

QuaternionField AlgebraElement::evaluate(const MetricField& g, const std::vector<VectorField>& dictionary_gradients,
                                         const FrameCover& cover) const {
  const auto& dp = g.domain();
  auto generator = [&](const VectorField& v) { return QuaternionField(ScalarField(dp), v); };
  std::vector<QuaternionField> mono(monomials.size());
  for (std::size_t m = 0; m < monomials.size(); ++m) {
    QuaternionField acc = scalar_embed(ScalarField(dp, 1.0));
    for (int id : monomials[m]) acc = field_mul(acc, generator(dictionary_gradients.at(static_cast<std::size_t>(id))), g);
    mono[m] = std::move(acc);
  }
  QuaternionField out(dp);
  std::vector<QuaternionField> by_frame(3 * cover.balls.size());
  std::vector<char> used(by_frame.size(), 0);
  for (const auto& t : terms) {
    QuaternionField term = mono[t.monomial];
    term *= t.coeff;
    if (t.frame < 0) {
      out += term;
      continue;
    }
    const auto f = static_cast<std::size_t>(t.frame);
    if (!used[f]) {
      by_frame[f] = QuaternionField(dp);
      used[f] = 1;
    }
    by_frame[f] += term;
  }
  for (std::size_t f = 0; f < by_frame.size(); ++f) {
    if (!used[f]) continue;
    out += field_mul(by_frame[f], generator(cover.balls[f / 3].gradients[f % 3]), g);
  }
  return out;
}

namespace {

void combos(std::size_t k, std::size_t degree, std::size_t start, std::vector<int>& cur,
            std::vector<std::vector<int>>& out) {
  if (cur.size() == degree) {
    out.push_back(cur);
    return;
  }
  for (std::size_t j = start; j < k; ++j) {
    cur.push_back(static_cast<int>(j));
    combos(k, degree, j, cur, out);
    cur.pop_back();
  }
}

}  // namespace

Approximation approximate_in_algebra(const QuaternionField& p, const FrameCover& cover, const MetricField& g,
                                     const ControlBasis& dictionary, const std::vector<ScalarField>& harmonics,
                                     int degree, const FeatureCaps& caps) {
  const auto& dp = p.domain();
  const auto& dom = *dp;
  if (harmonics.size() != dictionary.size()) {
    throw PreconditionError("approximate_in_algebra: harmonics do not match the dictionary");
  }
  if (degree < 0) throw PreconditionError("approximate_in_algebra: negative degree");
  const Representation rep = represent(p, cover, g);

  std::vector<NodeId> rows;
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.in_domain(n)) rows.push_back(n);
  }
  const auto nr = static_cast<Eigen::Index>(rows.size());

  std::vector<int> feature_ids;
  std::vector<double> feature_scale;
  std::vector<ScalarField> features;
  for (std::size_t j = 0; j < harmonics.size(); ++j) {
    ScalarField f = squared_gradient(harmonics[j], g, true);
    double m = 0.0;
    for (NodeId n : rows) m = std::max(m, f[n]);
    if (m < 1e-14) continue;
    feature_ids.push_back(static_cast<int>(j));
    feature_scale.push_back(m);
    features.push_back(std::move(f));
  }
  const std::size_t nf = features.size();

  std::vector<std::vector<int>> monos{{}};
  const std::array<std::size_t, 5> limit{0, nf, std::min(caps.degree2, nf), std::min(caps.degree3, nf),
                                         std::min(caps.degree4, nf)};
  for (int dgr = 1; dgr <= degree; ++dgr) {
    const std::size_t k = dgr < 5 ? limit[static_cast<std::size_t>(dgr)] : 0;
    std::vector<int> cur;
    combos(k, static_cast<std::size_t>(dgr), 0, cur, monos);
  }
  const auto nc = static_cast<Eigen::Index>(monos.size());
  Eigen::MatrixXd a(nr, nc);
  for (Eigen::Index c = 0; c < nc; ++c) {
    const auto& mono = monos[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < nr; ++r) {
      double v = 1.0;
      for (int j : mono) v *= features[static_cast<std::size_t>(j)][rows[static_cast<std::size_t>(r)]] /
                               feature_scale[static_cast<std::size_t>(j)];
      a(r, c) = v;
    }
  }

  const std::size_t nb = cover.balls.size();
  Eigen::MatrixXd rhs(nr, static_cast<Eigen::Index>(1 + 3 * nb));
  for (Eigen::Index r = 0; r < nr; ++r) {
    const NodeId n = rows[static_cast<std::size_t>(r)];
    rhs(r, 0) = p.scalar()[n];
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t k = 0; k < 3; ++k) rhs(r, static_cast<Eigen::Index>(1 + 3 * b + k)) = rep.kappa[b][k][n];
    }
  }
  // Monomials of the features are strongly collinear (|grad x|^2 = 1 for
  // instance); unit columns and a 1e-9 rank cut keep the coefficients O(1),
  // so the expression tree evaluates to the fitted value without cancellation.
  Eigen::VectorXd col_norm = a.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < nc; ++c) {
    if (col_norm[c] == 0.0) col_norm[c] = 1.0;
    a.col(c) /= col_norm[c];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-9);
  cod.compute(a);
  Eigen::MatrixXd coef = cod.solve(rhs);
  const Eigen::MatrixXd fit = a * coef;
  for (Eigen::Index c = 0; c < nc; ++c) coef.row(c) /= col_norm[c];

  Approximation out;
  out.columns = static_cast<std::size_t>(nc);
  out.ls_objective = (fit - rhs).squaredNorm();

  ScalarField alpha(dp);
  VectorField u(dp);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const NodeId n = rows[static_cast<std::size_t>(r)];
    alpha[n] = fit(r, 0);
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t k = 0; k < 3; ++k) {
        u[n] += fit(r, static_cast<Eigen::Index>(1 + 3 * b + k)) * cover.balls[b].gradients[k][n];
      }
    }
  }
  out.value = QuaternionField(std::move(alpha), std::move(u));
  QuaternionField diff = out.value;
  QuaternionField neg = p;
  neg *= -1.0;
  diff += neg;
  out.sup_error = sup_norm(diff, g);

  AlgebraElement& el = out.element;
  el.dictionary_labels = dictionary.labels;
  std::vector<double> mono_factor(monos.size(), 1.0);
  for (std::size_t m = 0; m < monos.size(); ++m) {
    std::vector<int> leaves;
    for (int j : monos[m]) {
      // |grad w|^2 = -({0, grad w}^2)
      leaves.push_back(feature_ids[static_cast<std::size_t>(j)]);
      leaves.push_back(feature_ids[static_cast<std::size_t>(j)]);
      mono_factor[m] *= -1.0 / feature_scale[static_cast<std::size_t>(j)];
    }
    el.monomials.push_back(std::move(leaves));
  }
  for (Eigen::Index col = 0; col < coef.cols(); ++col) {
    for (Eigen::Index m = 0; m < nc; ++m) {
      const double c = coef(m, col);
      if (c == 0.0) continue;
      el.terms.push_back({c * mono_factor[static_cast<std::size_t>(m)], static_cast<std::size_t>(m),
                          col == 0 ? -1 : static_cast<int>(col - 1)});
    }
  }
  return out;
}

}  // namespace hqf

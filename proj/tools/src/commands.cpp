#include "commands.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <random>

#include "hqf/analysis.hpp"
#include "hqf/calculus.hpp"
#include "hqf/control.hpp"
#include "hqf/controls.hpp"
#include "hqf/density.hpp"
#include "hqf/elliptic.hpp"
#include "hqf/error.hpp"
#include "hqf/field_io.hpp"
#include "hqf/jets.hpp"
#include "hqf/manufactured.hpp"
#include "hqf/recovery.hpp"
#include "hqf/version.hpp"
#include "report.hpp"

namespace hqf::cli {

using nlohmann::json;
using std::numbers::pi;

namespace {

struct Context {
  const ExperimentConfig& cfg;
  int jobs = 1;
  DomainPtr dom;
  std::shared_ptr<const MetricField> g;

  Context(const ExperimentConfig& c, int j) : cfg(c), jobs(j) {}

  void set_domain(const DomainSpec& spec) {
    dom = build_domain(spec);
    g = std::make_shared<const MetricField>(make_metric(cfg.metric, dom));
    op_.reset();
  }

  const DirichletOperator& op() {
    if (!op_) op_ = std::make_unique<DirichletOperator>(g, CgOptions{});
    return *op_;
  }

  std::uint64_t seed() const {
    if (!cfg.seed) throw ConfigError({"missing required keys: seed"});
    return *cfg.seed;
  }

  ControlBasis dictionary() const { return default_dictionary(dom, cfg.dictionary_size, seed()); }

  template <class T>
  T param(const char* key, T fallback) const {
    return cfg.params.contains(key) ? cfg.params[key].get<T>() : fallback;
  }

 private:
  std::unique_ptr<DirichletOperator> op_;
};

NodeId node_at(const GridDomain& dom, const json& idx, int min_depth, const std::string& what) {
  const int i = idx[0].get<int>(), j = idx[1].get<int>(), k = idx[2].get<int>();
  if (!dom.in_grid(i, j, k)) throw PreconditionError(what + ": node index outside the grid");
  const NodeId n = dom.id(i, j, k);
  if (!dom.is_interior(n) || dom.depth(n) < min_depth)
    throw PreconditionError(what + ": node must lie at least " + std::to_string(min_depth) + " layers inside");
  return n;
}

NodeId center_node(const GridDomain& dom) { return dom.id(dom.dims()[0] / 2, dom.dims()[1] / 2, dom.dims()[2] / 2); }

json index_json(const GridDomain& dom, NodeId n) {
  const Index3 c = dom.index(n);
  return json::array({c.i, c.j, c.k});
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const json& j) { return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()); }

Csv sigma_table(const Eigen::VectorXd& sigma) {
  Csv t({"index", "sigma"});
  for (Eigen::Index i = 0; i < sigma.size(); ++i) t.row() << static_cast<long long>(i) << sigma[i];
  return t;
}

Manufactured manufactured_for(const ExperimentConfig& cfg) {
  if (cfg.metric.preset.empty())
    throw PreconditionError("manufactured problems need a metric preset (the metric must be known pointwise)");
  return default_manufactured(metrics::sampler_by_name(cfg.metric.preset, cfg.metric.diag));
}

double manufactured_error(const DirichletOperator& op, const Manufactured& m, SolveStats* stats, ScalarField* out) {
  const DomainPtr& dom = op.domain();
  ScalarField h = ScalarField::sample(dom, [&](const Vec3& x) { return m.laplacian(x); });
  BoundaryControl f = BoundaryControl::sample(dom, m.u);
  ScalarField sol = solve_dirichlet(op, h, f, stats);
  double err = 0.0;
  for (NodeId n = 0; n < dom->node_count(); ++n)
    if (dom->in_domain(n)) err = std::max(err, std::abs(sol[n] - m.u(dom->position(n))));
  if (out) *out = std::move(sol);
  return err;
}

json stats_json(const SolveStats& s) {
  return {{"iterations", s.iterations},
          {"cg_relative_residual", s.cg_relative_residual},
          {"relative_residual", s.relative_residual}};
}

// Smooth test fields used by the checks and studies.
ScalarField smooth_scalar(const DomainPtr& dom) {
  return ScalarField::sample(dom, [](const Vec3& x) {
    return std::sin(pi * x[0]) * std::cos(0.5 * pi * x[1]) * std::exp(0.5 * x[2]) + x[0] * x[1] * x[2];
  });
}

VectorField smooth_vector(const DomainPtr& dom) {
  return VectorField::sample(dom, [](const Vec3& x) {
    return Vec3(std::sin(pi * x[1]) * x[2], x[0] * x[0] * std::cos(x[2]), std::cos(x[0] * x[1]) + x[2] * x[0]);
  });
}

ScalarField conformal_factor(const DomainPtr& dom) {
  return ScalarField::sample(dom, [](const Vec3& x) {
    return 1.0 + 0.3 * std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::cos(0.5 * pi * x[2]);
  });
}

double conformal_identity_sup(const MetricField& g) {
  const DomainPtr& dom = g.domain();
  ScalarField y = ScalarField::sample(dom, [](const Vec3& x) { return x[0] * x[0]; });
  return sup_at_depth(conformal_identity_check(conformal_factor(dom), g, y), 2);
}

double surface_identity_residual(const MetricField& g, int axis, double coordinate) {
  SurfacePatch patch = make_plane_patch(*g.domain(), axis, coordinate);
  return surface_identity_check(smooth_vector(g.domain()), patch, g).residual;
}

std::vector<ScalarField> read_samples(const std::string& dir, DomainPtr& dom) {
  std::vector<std::filesystem::path> stems;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") stems.push_back(e.path().parent_path() / e.path().stem());
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw PreconditionError("samples_dir '" + dir + "' holds no field files");
  dom = io::domain_from_sidecar(stems.front());
  std::vector<ScalarField> out;
  for (const auto& s : stems) out.push_back(io::read_scalar(s, dom));
  return out;
}

void write_samples(Artifacts& art, const std::vector<ScalarField>& hs) {
  for (std::size_t m = 0; m < hs.size(); ++m) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "samples/sample_%03zu", m);
    std::filesystem::create_directories(art.path("samples"));
    io::write_scalar(art.path(stem), hs[m]);
    art.add_field(stem);
  }
}

// --- subcommands ---------------------------------------------------------

json cmd_solve(Context& ctx, Artifacts& art) {
  const std::string problem = ctx.param<std::string>("problem", "manufactured");
  const bool write_field = ctx.param<bool>("write_field", true);
  json r = {{"problem", problem}, {"nodes", ctx.dom->node_count()}};
  if (problem == "manufactured") {
    SolveStats st;
    ScalarField sol;
    r["linf_error"] = manufactured_error(ctx.op(), manufactured_for(ctx.cfg), &st, &sol);
    r["stats"] = stats_json(st);
    if (write_field) {
      io::write_scalar(art.path("solution"), sol);
      art.add_field("solution");
    }
    return r;
  }
  ControlBasis basis = ctx.dictionary();
  if (problem == "dictionary") {
    auto hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
    write_samples(art, hs);
    Csv t({"index", "label"});
    for (std::size_t m = 0; m < basis.size(); ++m) t.row() << m << basis.labels[m];
    art.write_csv("controls.csv", t);
    r["samples"] = hs.size();
    return r;
  }
  const auto idx = ctx.param<long long>("control_index", 0);
  if (idx < 0 || static_cast<std::size_t>(idx) >= basis.size())
    throw PreconditionError("control_index outside the dictionary");
  SolveStats st;
  const BoundaryControl& f = basis.controls[static_cast<std::size_t>(idx)];
  ScalarField w = harmonic_extension(ctx.op(), f, &st);
  double lo = 1e300, hi = -1e300, blo = 1e300, bhi = -1e300;
  for (NodeId n : ctx.dom->interior_nodes()) lo = std::min(lo, w[n]), hi = std::max(hi, w[n]);
  for (double v : f.values()) blo = std::min(blo, v), bhi = std::max(bhi, v);
  r["label"] = basis.labels[static_cast<std::size_t>(idx)];
  r["stats"] = stats_json(st);
  r["interior_range"] = {lo, hi};
  r["boundary_range"] = {blo, bhi};
  r["maximum_principle"] = lo >= blo - 1e-10 * std::max(1.0, std::abs(blo)) && hi <= bhi + 1e-10 * std::max(1.0, std::abs(bhi));
  if (write_field) {
    io::write_scalar(art.path("harmonic"), w);
    art.add_field("harmonic");
  }
  return r;
}

json cmd_green(Context& ctx, Artifacts& art) {
  const GridDomain& dom = *ctx.dom;
  const NodeId x = ctx.cfg.params.contains("source") ? node_at(dom, ctx.cfg.params["source"], 1, "source")
                                                      : center_node(dom);
  const std::string kind_name = ctx.param<std::string>("kind", "value");
  const KernelKind kind = kind_name == "gradient" ? KernelKind::gradient : KernelKind::value;
  const Vec3 dir = ctx.cfg.params.contains("direction") ? vec3_from(ctx.cfg.params["direction"]) : Vec3(1, 0, 0);

  GreenColumn col = green_column(ctx.op(), x);
  export_green_column(art.path("green_column"), col);
  art.add_field("green_column");
  PoissonKernel k = poisson_kernel(ctx.op(), x, kind, dir);
  export_kernel(art.path("poisson_kernel"), dom, k);
  art.add_field("poisson_kernel");

  double gmax = -1e300, trace = 0.0;
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (dom.is_interior(n)) gmax = std::max(gmax, col.values[n]);
    if (dom.is_boundary(n)) trace = std::max(trace, std::abs(col.values[n]));
  }
  json r = {{"source_node", x},
            {"source_index", index_json(dom, x)},
            {"kind", kind_name},
            {"kernel_total", k.total()},
            {"green_max_interior", gmax},
            {"green_boundary_trace_max", trace}};
  if (kind == KernelKind::gradient) r["direction"] = vec3_json(dir);
  if (ctx.cfg.params.contains("partner")) {
    const NodeId y = node_at(dom, ctx.cfg.params["partner"], 1, "partner");
    GreenColumn other = green_column(ctx.op(), y);
    r["partner_index"] = index_json(dom, y);
    r["symmetry_defect"] = std::abs(col.values[y] - other.values[x]);
  }
  return r;
}

json cmd_control(Context& ctx, Artifacts& art) {
  const GridDomain& dom = *ctx.dom;
  std::vector<NodeId> pts;
  for (const auto& p : ctx.cfg.params["points"]) pts.push_back(node_at(dom, p, 2, "points"));
  ControlBasis basis = ctx.dictionary();
  auto hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
  ControlMatrix m = ma_matrix(*ctx.g, pts, basis, hs);

  std::vector<PointTarget> targets;
  if (ctx.cfg.params.contains("targets")) {
    const json& t = ctx.cfg.params["targets"];
    if (t.size() != pts.size()) throw PreconditionError("targets: one [c, k1, k2, k3] per point required");
    for (std::size_t i = 0; i < pts.size(); ++i)
      targets.push_back({pts[i], t[i][0].get<double>(), Vec3(t[i][1].get<double>(), t[i][2].get<double>(), t[i][3].get<double>())});
  } else {
    for (NodeId p : pts) targets.push_back({p, 1.0, Vec3::Zero()});
  }
  ControlSolution sol = solve_control(m, targets);
  io::write_scalar(art.path("control"), sol.control.as_field());
  art.add_field("control");
  art.write_csv("singular_values.csv", sigma_table(m.sigma));

  json points = json::array();
  for (NodeId p : pts) points.push_back(index_json(dom, p));
  return {{"points", points},
          {"rank", m.rank()},
          {"rows", m.rows()},
          {"singular_values", vec_json(m.sigma)},
          {"defect", sol.defect},
          {"control_norm", sol.control_norm},
          {"full_rank", sol.full_rank},
          {"success", sol.success},
          {"target", vec_json(sol.target)},
          {"achieved", vec_json(sol.achieved)},
          {"dictionary_size", basis.size()}};
}

Quaternion quat_from(const json& j, NodeId n) {
  return {j[0].get<double>(), Vec3(j[1].get<double>(), j[2].get<double>(), j[3].get<double>()), n};
}

json cmd_separate(Context& ctx, Artifacts& art) {
  const GridDomain& dom = *ctx.dom;
  const NodeId a = node_at(dom, ctx.cfg.params["a"], 2, "a");
  const NodeId b = node_at(dom, ctx.cfg.params["b"], 2, "b");
  ControlBasis basis = ctx.dictionary();
  auto hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
  SeparationResult s = separate(ctx.op(), a, b, quat_from(ctx.cfg.params["h_a"], a), quat_from(ctx.cfg.params["h_b"], b),
                                basis, hs);
  io::write_quaternion(art.path("separation"), s.q);
  art.add_field("separation");
  return {{"a", index_json(dom, a)},
          {"b", index_json(dom, b)},
          {"error_a", s.error_a},
          {"error_b", s.error_b},
          {"threshold", s.threshold},
          {"scalar_defect", s.scalar_defect},
          {"gradient_defect", s.gradient_defect},
          {"q_curl_defect", s.residual.curl_defect},
          {"q_div_defect", s.residual.div_defect},
          {"q_collar_curl_defect", s.collar_residual.curl_defect},
          {"q_collar_div_defect", s.collar_residual.div_defect},
          {"divcurl_relative_curl_defect", s.divcurl.relative_curl_defect},
          {"divcurl_flagged", s.divcurl.flagged},
          {"success", s.success},
          {"note", s.note}};
}

json cmd_jets(Context& ctx, Artifacts& art) {
  const GridDomain& dom = *ctx.dom;
  const NodeId a = ctx.cfg.params.contains("point") ? node_at(dom, ctx.cfg.params["point"], 3, "point") : center_node(dom);
  const int degree = ctx.param<int>("fit_degree", 2);
  ControlBasis basis = ctx.dictionary();
  auto hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
  const LaplaceJet lambda = laplace_jet(*ctx.g, a);
  JetRankStudy study = jet_rank_study(hs, a, lambda, ctx.param<double>("threshold", 1e-3));

  Csv jets({"sample", "i", "j", "k", "j0", "j1", "j2", "j3", "j4", "j5", "j6", "j7", "j8", "j9"});
  const Index3 c = dom.index(a);
  for (std::size_t m = 0; m < hs.size(); ++m) {
    const Jet2 jet = extract_jet(hs[m], a, degree);
    auto& row = jets.row() << m << c.i << c.j << c.k;
    for (int s = 0; s < 10; ++s) row << jet[s];
  }
  art.write_csv("jets.csv", jets);
  art.write_csv("singular_values.csv", sigma_table(study.sigma));

  json r = {{"point", index_json(dom, a)},
            {"rank", study.rank},
            {"singular_values", vec_json(study.sigma)},
            {"null_vector", vec_json(study.null_vector)},
            {"laplace_jet", vec_json(lambda)},
            {"cosine", study.cosine}};

  if (basis.size() >= 20) {
    Jet2 s;
    if (ctx.cfg.params.contains("target")) {
      for (int i = 0; i < 10; ++i) s[i] = ctx.cfg.params["target"][i].get<double>();
    } else {
      std::mt19937_64 rng(ctx.seed());
      std::normal_distribution<double> nd;
      for (int i = 0; i < 10; ++i) s[i] = nd(rng);
      s -= (s.dot(lambda) / lambda.squaredNorm()) * lambda;
    }
    JetControlResult jc = jet_control(*ctx.g, a, s, basis, hs);
    io::write_scalar(art.path("jet_control"), jc.control.as_field());
    art.add_field("jet_control");
    r["jet_control"] = {{"target", vec_json(s)}, {"achieved", vec_json(jc.achieved)}, {"relative_defect", jc.relative_defect}};
  }
  return r;
}

QuaternionField density_target(const DomainPtr& dom) {
  ScalarField alpha = ScalarField::sample(dom, [](const Vec3& x) { return std::cos(x[0] + 0.5 * x[1]) * (1.0 + x[2]); });
  VectorField u = VectorField::sample(dom, [](const Vec3& x) {
    return Vec3(x[1] * x[2], std::sin(x[2]) + 0.5, 1.0 + x[0] * x[0]);
  });
  return QuaternionField(std::move(alpha), std::move(u));
}

json cmd_density(Context& ctx, Artifacts& art) {
  const GridDomain& dom = *ctx.dom;
  ControlBasis basis = ctx.dictionary();
  auto hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
  FrameCoverOptions fo;
  fo.initial_radius = ctx.param<double>("initial_radius", fo.initial_radius);
  fo.max_levels = ctx.param<int>("max_levels", fo.max_levels);
  FrameCover cover = build_frame_cover(ctx.op(), basis, hs, fo);
  QuaternionField p = density_target(ctx.dom);
  Representation rep = represent(p, cover, *ctx.g);

  std::vector<std::pair<NodeId, NodeId>> pairs;
  const NodeId c = center_node(dom);
  for (int s : {2, 4}) {
    const Index3 ci = dom.index(c);
    pairs.emplace_back(c, dom.id(ci.i + s, ci.j - s / 2, ci.k + 1));
  }
  ScalarSeparationReport sep = scalar_separation_check(*ctx.g, pairs, hs);

  const int max_degree = ctx.param<int>("max_degree", 4);
  Csv t({"degree", "columns", "ls_objective", "sup_error"});
  json degrees = json::array();
  bool nonincreasing = true;
  double prev = 1e300;
  std::string element;
  for (int d = 1; d <= max_degree; ++d) {
    Approximation ap = approximate_in_algebra(p, cover, *ctx.g, basis, hs, d);
    t.row() << d << ap.columns << ap.ls_objective << ap.sup_error;
    degrees.push_back({{"degree", d}, {"ls_objective", ap.ls_objective}, {"sup_error", ap.sup_error}});
    nonincreasing = nonincreasing && ap.ls_objective <= prev;
    prev = ap.ls_objective;
    if (d == max_degree) element = ap.element.to_json();
  }
  art.write_csv("approximation.csv", t);
  if (!element.empty()) art.write_json("algebra_element.json", json::parse(element));
  io::write_quaternion(art.path("reconstruction"), rep.reconstruction);
  art.add_field("reconstruction");

  json balls = json::array();
  for (const auto& b : cover.balls)
    balls.push_back({{"center", index_json(dom, b.center)}, {"radius", b.radius}, {"worst_condition", b.worst_condition}});
  return {{"balls", balls},
          {"represent_error", rep.error},
          {"approximation", degrees},
          {"objective_nonincreasing", nonincreasing},
          {"scalar_separation", {{"min_coverage", sep.min_coverage}, {"pass", sep.pass}, {"small_dictionary", sep.small_dictionary}}}};
}

json cmd_recover(Context& ctx, Artifacts& art) {
  std::vector<ScalarField> hs;
  if (ctx.cfg.params.contains("samples_dir")) {
    DomainPtr dom;
    hs = read_samples(ctx.cfg.params["samples_dir"].get<std::string>(), dom);
    ctx.set_domain(dom->spec());
    for (auto& h : hs) h = ScalarField(ctx.dom, h.values());
  } else {
    ControlBasis basis = ctx.dictionary();
    hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
  }
  if (ctx.param<bool>("write_samples", false)) write_samples(art, hs);
  const GridDomain& dom = *ctx.dom;

  RecoveryOptions ro;
  ro.scale = ctx.param<std::string>("scale", "drift") == "drift" ? ScaleMode::drift : ScaleMode::det_normalized;
  ro.fit_degree = ctx.param<int>("fit_degree", 2);
  ro.min_depth = ctx.param<int>("min_depth", 3);
  ro.jobs = ctx.jobs;
  RecoveryResult rec = recover_metric(hs, ro);
  const NodeId anchor =
      ctx.cfg.params.contains("anchor") ? node_at(dom, ctx.cfg.params["anchor"], ro.min_depth, "anchor") : center_node(dom);
  Calibration cal = calibrate(rec, anchor, ctx.g->at(anchor));
  RecoveryComparison cmp = compare_with_truth(rec, cal, *ctx.g);

  std::vector<double> data(6 * dom.node_count(), 0.0);
  for (NodeId n = 0; n < dom.node_count(); ++n) {
    if (!dom.in_domain(n)) continue;
    const Mat3& m = cal.metric->at(n);
    const double v[6] = {m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)};
    std::copy(v, v + 6, &data[6 * n]);
  }
  io::write_raw(art.path("recovered_metric"), dom, 6, data, R"({"layout_components": ["g11","g12","g13","g22","g23","g33"]})");
  art.add_field("recovered_metric");

  Csv t({"node", "i", "j", "k", "depth", "residual", "drift_mismatch", "implied_scale", "relative_error"});
  double max_res = 0.0;
  for (std::size_t i = 0; i < rec.nodes.size(); ++i) {
    const NodeId n = rec.nodes[i];
    const Index3 c = dom.index(n);
    t.row() << n << c.i << c.j << c.k << dom.depth(n) << rec.residual[i] << rec.drift_mismatch[i] << cmp.implied_scale[i]
            << cmp.relative_error[i];
    max_res = std::max(max_res, rec.residual[i]);
  }
  art.write_csv("nodes.csv", t);
  return {{"anchor", index_json(dom, anchor)},
          {"samples", hs.size()},
          {"recovered_nodes", rec.nodes.size()},
          {"scale_mode", ro.scale == ScaleMode::drift ? "drift" : "det_normalized"},
          {"calibration_constant", cal.constant},
          {"anchor_residual", cal.anchor_residual},
          {"max_residual", max_res},
          {"max_relative_error", cmp.max_relative_error},
          {"scale_mean", cmp.scale_mean},
          {"scale_spread", cmp.scale_spread},
          {"spread_flagged", cmp.spread_flagged}};
}

VectorField angle_field(const DomainPtr& dom) {
  const DomainSpec& s = dom->spec();
  const double cx = 0.5 * (s.inner[0].lo + s.inner[0].hi), cy = 0.5 * (s.inner[1].lo + s.inner[1].hi);
  return VectorField::sample(dom, [=](const Vec3& x) {
    const double dx = x[0] - cx, dy = x[1] - cy, r2 = dx * dx + dy * dy;
    return r2 > 0 ? Vec3(-dy / r2, dx / r2, 0.0) : Vec3::Zero();
  });
}

GridLoop column_loop(const GridDomain& dom) {
  const DomainSpec& s = dom.spec();
  GridLoop loop;
  loop.normal_axis = 2;
  loop.level = dom.dims()[2] / 2;
  for (int a = 0; a < 2; ++a) {
    const double h = dom.spacing()[a];
    const int lo = static_cast<int>(std::floor((s.inner[a].lo - s.box[a].lo) / h));
    const int hi = static_cast<int>(std::ceil((s.inner[a].hi - s.box[a].lo) / h));
    loop.lo[a] = std::max(1, (lo + 1) / 2);
    loop.hi[a] = std::min(dom.dims()[a] - 2, (hi + dom.dims()[a] - 1) / 2);
  }
  return loop;
}

json cmd_analyze(Context& ctx, Artifacts& art) {
  const GridDomain& dom = *ctx.dom;
  std::vector<std::string> checks;
  if (ctx.cfg.params.contains("checks")) {
    checks = ctx.cfg.params["checks"].get<std::vector<std::string>>();
  } else {
    checks = {"conformal", "uniqueness"};
    if (ctx.g->is_constant() && ctx.g->at(0).isIdentity()) checks.push_back("surface");
    if (dom.mask() == MaskSpec::box_minus_box) checks.push_back("hodge");
    if (dom.mask() == MaskSpec::box_minus_column) checks.push_back("circulation");
  }
  const int axis = ctx.param<int>("patch_axis", 2);
  const double coord = ctx.param<double>("patch_coordinate", 0.5 * (dom.box()[axis].lo + dom.box()[axis].hi));
  json r = json::object();
  for (const auto& c : checks) {
    if (c == "conformal") {
      r["conformal"] = {{"sup_residual", conformal_identity_sup(*ctx.g)}};
    } else if (c == "surface") {
      SurfacePatch patch = make_plane_patch(dom, axis, coord);
      SurfaceIdentityResult s = surface_identity_check(smooth_vector(ctx.dom), patch, *ctx.g);
      r["surface"] = {{"residual", s.residual}, {"lhs_sup", s.lhs_sup}, {"rhs_sup", s.rhs_sup}, {"patch_nodes", patch.nodes.size()}};
    } else if (c == "uniqueness") {
      ControlBasis basis = ctx.dictionary();
      auto hs = harmonic_extensions(ctx.op(), basis.controls, ctx.jobs);
      SurfacePatch patch = make_plane_patch(dom, axis, coord);
      ProbeResult p = uniqueness_probe(default_probe_basis(*ctx.g, hs), patch, *ctx.g,
                                       ctx.param<double>("q_tolerance", 5e-2));
      Csv t({"field_id", "sup_on_patch", "sup_on_domain", "ratio"});
      for (const auto& row : p.table) t.row() << row.field << row.sup_on_patch << row.sup_on_domain << row.ratio;
      art.write_csv("uniqueness_certificate.csv", t);
      r["uniqueness"] = {{"ratio", p.ratio},
                         {"sigma_min", p.sigma_min},
                         {"sigma_max", p.sigma_max},
                         {"rank_deficient", p.rank_deficient},
                         {"patch_nodes", patch.nodes.size()}};
    } else if (c == "hodge") {
      DirichletFieldBasis d = dirichlet_basis(ctx.op());
      json fields = json::array();
      for (std::size_t i = 0; i < d.fields.size(); ++i) {
        const double outer = std::abs(d.component_flux[i][0]);
        fields.push_back({{"curl_residual", d.curl_residual[i]},
                          {"div_residual", d.div_residual[i]},
                          {"tangential_residual", d.tangential_residual[i]},
                          {"component_flux", d.component_flux[i]},
                          {"total_flux", d.total_flux[i]},
                          {"quadrature_flux", d.quadrature_flux[i]},
                          {"relative_total_flux", outer > 0 ? std::abs(d.total_flux[i]) / outer : 0.0}});
        const std::string stem = "dirichlet_potential_" + std::to_string(i);
        io::write_scalar(art.path(stem), d.potentials[i]);
        art.add_field(stem);
      }
      r["hodge"] = {{"dimension", d.fields.size()}, {"fields", fields}};
    } else if (c == "circulation") {
      if (dom.mask() != MaskSpec::box_minus_column)
        throw PreconditionError("circulation check needs a box_minus_column domain");
      const GridLoop loop = column_loop(dom);
      const double circ = circulation(angle_field(ctx.dom), loop, *ctx.g);
      r["circulation"] = {{"value", circ}, {"expected", 2 * pi}, {"relative_error", std::abs(circ - 2 * pi) / (2 * pi)},
                          {"loop_lo", loop.lo}, {"loop_hi", loop.hi}, {"level", loop.level}};
    }
  }
  return r;
}

json cmd_convergence(Context& ctx, Artifacts& art) {
  const std::string study = ctx.cfg.params["study"].get<std::string>();
  std::vector<std::string> header = {"n", "h"};
  std::vector<std::string> names;
  if (study == "calculus")
    names = {"rot_grad", "div_rot"};
  else
    names = {"error"};
  for (const auto& n : names) {
    header.push_back(n);
    header.push_back(n + "_ratio");
  }
  Csv t(header);
  std::vector<double> prev(names.size(), 0.0);
  json rows = json::array();
  for (std::size_t r = 0; r < ctx.cfg.resolutions.size(); ++r) {
    const int n = ctx.cfg.resolutions[r];
    ctx.set_domain(with_resolution(ctx.cfg.domain, n));
    std::vector<double> err;
    if (study == "manufactured") {
      err.push_back(manufactured_error(ctx.op(), manufactured_for(ctx.cfg), nullptr, nullptr));
    } else if (study == "calculus") {
      ScalarField a = smooth_scalar(ctx.dom);
      VectorField v = smooth_vector(ctx.dom);
      err.push_back(sup_at_depth(rot(grad(a, *ctx.g), *ctx.g), 2));
      err.push_back(sup_at_depth(div(rot(v, *ctx.g), *ctx.g), 2));
    } else if (study == "poisson") {
      err.push_back(std::abs(1.0 - poisson_kernel(ctx.op(), center_node(*ctx.dom)).total()));
    } else if (study == "conformal") {
      err.push_back(conformal_identity_sup(*ctx.g));
    } else if (study == "surface") {
      err.push_back(surface_identity_residual(*ctx.g, 2, 0.5 * (ctx.dom->box()[2].lo + ctx.dom->box()[2].hi)));
    }
    auto& row = t.row() << n << ctx.dom->spacing()[0];
    json jr = {{"n", n}, {"h", ctx.dom->spacing()[0]}};
    for (std::size_t q = 0; q < names.size(); ++q) {
      row << err[q];
      jr[names[q]] = err[q];
      if (r == 0) {
        row << "";
      } else {
        const double ratio = err[q] > 0 ? prev[q] / err[q] : std::numeric_limits<double>::infinity();
        row << ratio;
        jr[names[q] + "_ratio"] = ratio;
      }
      prev[q] = err[q];
    }
    rows.push_back(jr);
  }
  art.write_csv("convergence.csv", t);
  return {{"study", study}, {"rows", rows}};
}

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

int run(const std::string& subcommand, const json& doc, const RunOptions& opts, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = parse_config(subcommand_from_string(subcommand), doc, opts.seed);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitSchema;
  }

  std::string out = opts.out_dir;
  if (out.empty())
    if (const char* env = std::getenv("HQF_OUT_DIR")) out = env;
  if (out.empty()) out = cfg.output_dir;
  if (out.empty()) out = "hqf_out";

  std::optional<Artifacts> art;
  try {
    art.emplace(out);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitFailure;
  }

  json manifest = {{"subcommand", subcommand},
                   {"config_hash", "fnv1a64:" + hex64(fnv1a64(cfg.canonical.dump()))},
                   {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
                   {"versions", {{"hqf", HQF_VERSION}, {"eigen", eigen_version()}, {"cxx", __VERSION__}}}};
  int code = kExitOk;
  try {
    Context ctx(cfg, std::max(1, opts.jobs));
    ctx.set_domain(cfg.domain);
    json report;
    switch (cfg.subcommand) {
      case Subcommand::solve: report = cmd_solve(ctx, *art); break;
      case Subcommand::green: report = cmd_green(ctx, *art); break;
      case Subcommand::control: report = cmd_control(ctx, *art); break;
      case Subcommand::separate: report = cmd_separate(ctx, *art); break;
      case Subcommand::jets: report = cmd_jets(ctx, *art); break;
      case Subcommand::density: report = cmd_density(ctx, *art); break;
      case Subcommand::recover: report = cmd_recover(ctx, *art); break;
      case Subcommand::analyze: report = cmd_analyze(ctx, *art); break;
      case Subcommand::convergence: report = cmd_convergence(ctx, *art); break;
    }
    art->write_json("report.json", report);
    manifest["status"] = "ok";
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    manifest["status"] = "schema_error";
    manifest["error"] = e.what();
    code = kExitSchema;
  } catch (const PreconditionError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    manifest["status"] = "schema_error";
    manifest["error"] = e.what();
    code = kExitSchema;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    manifest["status"] = "numerical_failure";
    manifest["error"] = e.what();
    art->write_json("diagnostics.json", {{"subcommand", subcommand}, {"error", e.what()}});
    code = kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    manifest["status"] = "error";
    manifest["error"] = e.what();
    code = kExitFailure;
  }
  manifest["outputs"] = art->files();
  manifest["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    art->write_json("manifest.json", manifest);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitFailure;
  }
  return code;
}

int run_file(const std::string& subcommand, const std::string& config_path, const RunOptions& opts, std::ostream& err) {
  json doc;
  try {
    doc = load_config_file(config_path);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitSchema;
  }
  return run(subcommand, doc, opts, err);
}

}  // namespace hqf::cli

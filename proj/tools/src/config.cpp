#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hqf/error.hpp"
#include "hqf/field_io.hpp"

namespace hqf::cli {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

enum class Kind { integer, number, string, boolean, index3, vec3, quat, jet, index3_list, quat_list, string_list };

struct ParamSpec {
  Kind kind;
  bool required = false;
  std::vector<std::string> choices = {};
};

using ParamTable = std::map<std::string, ParamSpec>;

const ParamTable& param_table(Subcommand s) {
  static const std::map<Subcommand, ParamTable> tables = {
      {Subcommand::solve,
       {{"problem", {Kind::string, false, {"manufactured", "harmonic", "dictionary"}}},
        {"control_index", {Kind::integer}},
        {"write_field", {Kind::boolean}}}},
      {Subcommand::green,
       {{"source", {Kind::index3}},
        {"partner", {Kind::index3}},
        {"kind", {Kind::string, false, {"value", "gradient"}}},
        {"direction", {Kind::vec3}}}},
      {Subcommand::control, {{"points", {Kind::index3_list, true}}, {"targets", {Kind::quat_list}}}},
      {Subcommand::separate,
       {{"a", {Kind::index3, true}},
        {"b", {Kind::index3, true}},
        {"h_a", {Kind::quat, true}},
        {"h_b", {Kind::quat, true}}}},
      {Subcommand::jets,
       {{"point", {Kind::index3}}, {"threshold", {Kind::number}}, {"target", {Kind::jet}}, {"fit_degree", {Kind::integer}}}},
      {Subcommand::density,
       {{"max_degree", {Kind::integer}}, {"initial_radius", {Kind::number}}, {"max_levels", {Kind::integer}}}},
      {Subcommand::recover,
       {{"samples_dir", {Kind::string}},
        {"anchor", {Kind::index3}},
        {"scale", {Kind::string, false, {"drift", "det_normalized"}}},
        {"fit_degree", {Kind::integer}},
        {"min_depth", {Kind::integer}},
        {"write_samples", {Kind::boolean}}}},
      {Subcommand::analyze,
       {{"checks", {Kind::string_list, false, {"hodge", "uniqueness", "surface", "circulation", "conformal"}}},
        {"patch_axis", {Kind::integer}},
        {"patch_coordinate", {Kind::number}},
        {"q_tolerance", {Kind::number}}}},
      {Subcommand::convergence,
       {{"study", {Kind::string, true, {"manufactured", "calculus", "poisson", "conformal", "surface"}}}}},
  };
  return tables.at(s);
}

bool is_number_array(const json& v, std::size_t n) {
  if (!v.is_array() || v.size() != n) return false;
  return std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
}

bool is_int_array(const json& v, std::size_t n) {
  if (!v.is_array() || v.size() != n) return false;
  return std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
}

std::string check_kind(const json& v, const ParamSpec& spec) {
  switch (spec.kind) {
    case Kind::integer:
      return v.is_number_integer() ? "" : "expected an integer";
    case Kind::number:
      return v.is_number() ? "" : "expected a number";
    case Kind::boolean:
      return v.is_boolean() ? "" : "expected true or false";
    case Kind::string:
      if (!v.is_string()) return "expected a string";
      if (!spec.choices.empty() &&
          std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) == spec.choices.end())
        return "expected one of " + join(spec.choices, ", ");
      return "";
    case Kind::index3:
      return is_int_array(v, 3) ? "" : "expected [i, j, k] node indices";
    case Kind::vec3:
      return is_number_array(v, 3) ? "" : "expected 3 numbers";
    case Kind::quat:
      return is_number_array(v, 4) ? "" : "expected [alpha, u1, u2, u3]";
    case Kind::jet:
      return is_number_array(v, 10) ? "" : "expected 10 numbers";
    case Kind::index3_list:
      if (!v.is_array() || v.empty()) return "expected a nonempty list of [i, j, k]";
      for (const auto& e : v)
        if (!is_int_array(e, 3)) return "expected a nonempty list of [i, j, k]";
      return "";
    case Kind::quat_list:
      if (!v.is_array()) return "expected a list of [alpha, u1, u2, u3]";
      for (const auto& e : v)
        if (!is_number_array(e, 4)) return "expected a list of [alpha, u1, u2, u3]";
      return "";
    case Kind::string_list:
      if (!v.is_array()) return "expected a list of strings";
      for (const auto& e : v) {
        if (!e.is_string()) return "expected a list of strings";
        if (std::find(spec.choices.begin(), spec.choices.end(), e.get<std::string>()) == spec.choices.end())
          return "unknown entry '" + e.get<std::string>() + "', expected any of " + join(spec.choices, ", ");
      }
      return "";
  }
  return "";
}

class Checker {
 public:
  void unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) problems.push_back("unknown key '" + where + k + "'");
  }
  void fail(const std::string& msg) { problems.push_back(msg); }
  std::vector<std::string> problems;
};

Box parse_box(const json& v, Checker& c, const std::string& name) {
  Box b{};
  if (!v.is_array() || v.size() != 3) {
    c.fail("'" + name + "' must be three [lo, hi] intervals");
    return b;
  }
  for (int a = 0; a < 3; ++a) {
    if (!is_number_array(v[a], 2) || v[a][0].get<double>() >= v[a][1].get<double>()) {
      c.fail("'" + name + "' interval " + std::to_string(a) + " must be [lo, hi] with lo < hi");
      continue;
    }
    b[a] = {v[a][0].get<double>(), v[a][1].get<double>()};
  }
  return b;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error("config schema violation:\n  " + join(problems, "\n  ")), problems_(problems) {}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"solve", "green",   "control", "separate",   "jets",
                                                 "density", "recover", "analyze", "convergence"};
  return names;
}

Subcommand subcommand_from_string(const std::string& s) {
  const auto& n = subcommand_names();
  auto it = std::find(n.begin(), n.end(), s);
  if (it == n.end()) throw ConfigError({"unknown subcommand '" + s + "'"});
  return static_cast<Subcommand>(it - n.begin());
}

std::string to_string(Subcommand s) { return subcommand_names()[static_cast<std::size_t>(s)]; }

bool needs_seed(Subcommand s) {
  switch (s) {
    case Subcommand::control:
    case Subcommand::separate:
    case Subcommand::jets:
    case Subcommand::density:
    case Subcommand::recover:
    case Subcommand::analyze:
      return true;
    default:
      return false;
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
}

ExperimentConfig parse_config(Subcommand sub, const json& doc, std::optional<std::uint64_t> seed_override) {
  Checker c;
  ExperimentConfig cfg;
  cfg.subcommand = sub;
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});

  c.unknown_keys(doc, {"domain", "metric", "resolutions", "dictionary", "seed", "params", "output"}, "");
  std::vector<std::string> missing;
  for (const char* k : {"domain", "metric"})
    if (!doc.contains(k)) missing.emplace_back(k);
  if (sub == Subcommand::convergence && !doc.contains("resolutions")) missing.emplace_back("resolutions");
  if (needs_seed(sub) && !doc.contains("seed") && !seed_override) missing.emplace_back("seed");
  for (const auto& [k, spec] : param_table(sub))
    if (spec.required && !(doc.contains("params") && doc["params"].is_object() && doc["params"].contains(k)))
      missing.push_back("params." + k);
  if (!missing.empty()) c.fail("missing required keys: " + join(missing, ", "));

  if (doc.contains("domain")) {
    const json& d = doc["domain"];
    if (!d.is_object()) {
      c.fail("'domain' must be an object");
    } else {
      c.unknown_keys(d, {"resolution", "box", "mask", "inner"}, "domain.");
      if (!d.contains("resolution")) {
        c.fail("missing required keys: domain.resolution");
      } else if (d["resolution"].is_number_integer()) {
        const int n = d["resolution"].get<int>();
        cfg.domain.resolution = {n, n, n};
      } else if (is_int_array(d["resolution"], 3)) {
        for (int a = 0; a < 3; ++a) cfg.domain.resolution[a] = d["resolution"][a].get<int>();
      } else {
        c.fail("'domain.resolution' must be an integer or three integers");
      }
      for (int n : cfg.domain.resolution)
        if (n < 5) c.fail("'domain.resolution' must be at least 5 per axis");
      cfg.domain.box = d.contains("box") ? parse_box(d["box"], c, "domain.box") : Box{};
      if (d.contains("mask")) {
        if (!d["mask"].is_string()) {
          c.fail("'domain.mask' must be a string");
        } else {
          try {
            cfg.domain.mask = mask_from_string(d["mask"].get<std::string>());
          } catch (const std::exception&) {
            c.fail("'domain.mask' must be one of box, box_minus_box, box_minus_column");
          }
        }
      }
      if (d.contains("inner")) {
        cfg.domain.inner = parse_box(d["inner"], c, "domain.inner");
      } else if (cfg.domain.mask != MaskSpec::box) {
        for (int a = 0; a < 3; ++a) {
          const Interval& iv = cfg.domain.box[a];
          cfg.domain.inner[a] = {iv.lo + 0.4 * iv.length(), iv.lo + 0.6 * iv.length()};
        }
      }
    }
  }

  if (doc.contains("metric")) {
    const json& m = doc["metric"];
    if (!m.is_object()) {
      c.fail("'metric' must be an object");
    } else {
      c.unknown_keys(m, {"preset", "diag", "file"}, "metric.");
      if (m.contains("preset") == m.contains("file")) c.fail("'metric' needs exactly one of 'preset' or 'file'");
      if (m.contains("preset")) {
        static const std::vector<std::string> presets = {"flat", "diag", "conformal-sine", "generic-smooth"};
        if (!m["preset"].is_string() ||
            std::find(presets.begin(), presets.end(), m["preset"].get<std::string>()) == presets.end())
          c.fail("'metric.preset' must be one of " + join(presets, ", "));
        else
          cfg.metric.preset = m["preset"].get<std::string>();
      }
      if (m.contains("file")) {
        if (!m["file"].is_string())
          c.fail("'metric.file' must be a string");
        else
          cfg.metric.file = m["file"].get<std::string>();
      }
      if (m.contains("diag")) {
        if (!is_number_array(m["diag"], 3)) {
          c.fail("'metric.diag' must be 3 positive numbers");
        } else {
          for (int a = 0; a < 3; ++a) cfg.metric.diag[a] = m["diag"][a].get<double>();
          if (cfg.metric.diag.minCoeff() <= 0) c.fail("'metric.diag' must be 3 positive numbers");
        }
      }
    }
  }

  if (doc.contains("resolutions")) {
    const json& r = doc["resolutions"];
    if (!r.is_array() || r.size() < 2) {
      c.fail("'resolutions' must list at least two node counts");
    } else {
      for (const auto& e : r) {
        if (!e.is_number_integer() || e.get<int>() < 5) {
          c.fail("'resolutions' entries must be integers >= 5");
          break;
        }
        cfg.resolutions.push_back(e.get<int>());
      }
      if (!std::is_sorted(cfg.resolutions.begin(), cfg.resolutions.end()))
        c.fail("'resolutions' must be increasing");
    }
  }

  if (doc.contains("dictionary")) {
    const json& d = doc["dictionary"];
    if (!d.is_object()) {
      c.fail("'dictionary' must be an object");
    } else {
      c.unknown_keys(d, {"size"}, "dictionary.");
      if (d.contains("size")) {
        if (!d["size"].is_number_integer() || d["size"].get<long long>() < 1)
          c.fail("'dictionary.size' must be a positive integer");
        else
          cfg.dictionary_size = d["size"].get<std::size_t>();
      }
    }
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned())
      c.fail("'seed' must be a nonnegative integer");
    else
      cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (seed_override) cfg.seed = seed_override;

  if (doc.contains("output")) {
    if (!doc["output"].is_string())
      c.fail("'output' must be a string");
    else
      cfg.output_dir = doc["output"].get<std::string>();
  }

  if (doc.contains("params")) {
    const json& p = doc["params"];
    if (!p.is_object()) {
      c.fail("'params' must be an object");
    } else {
      const ParamTable& table = param_table(sub);
      for (const auto& [k, v] : p.items()) {
        auto it = table.find(k);
        if (it == table.end()) {
          c.fail("unknown key 'params." + k + "' for " + to_string(sub));
          continue;
        }
        if (std::string e = check_kind(v, it->second); !e.empty()) c.fail("'params." + k + "': " + e);
      }
      cfg.params = p;
    }
  }
  if (!c.problems.empty()) throw ConfigError(c.problems);

  cfg.canonical = doc;
  cfg.canonical.erase("output");
  if (cfg.seed) cfg.canonical["seed"] = *cfg.seed;
  return cfg;
}

MetricField make_metric(const MetricSpec& m, const DomainPtr& dom) {
  if (!m.preset.empty()) return metrics::by_name(dom, m.preset, m.diag);
  const io::RawField raw = io::read_raw(m.file);
  if (raw.components != 6) throw PreconditionError("metric file must have 6 components (g11 g12 g13 g22 g23 g33)");
  if (raw.spec.resolution != dom->dims())
    throw PreconditionError("metric file resolution does not match the configured domain");
  std::vector<Mat3> g(dom->node_count(), Mat3::Identity());
  for (NodeId n = 0; n < dom->node_count(); ++n) {
    if (!dom->in_domain(n)) continue;
    const double* d = &raw.data[6 * n];
    g[n] << d[0], d[1], d[2], d[1], d[3], d[4], d[2], d[4], d[5];
  }
  return MetricField(dom, std::move(g));
}

DomainSpec with_resolution(DomainSpec d, int n) {
  d.resolution = {n, n, n};
  return d;
}

}  // namespace hqf::cli

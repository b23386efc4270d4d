#include "hqf/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hqf/error.hpp"
#include "json.hpp"

namespace hqf::io {

using nlohmann::json;

namespace {

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  stem += ext;
  return stem;
}

json box_json(const Box& b) {
  json out = json::array();
  for (const auto& iv : b) out.push_back({iv.lo, iv.hi});
  return out;
}

Box box_from(const json& j) {
  Box b;
  for (int a = 0; a < 3; ++a) b[a] = Interval{j.at(a).at(0).get<double>(), j.at(a).at(1).get<double>()};
  return b;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

bool same_geometry(const DomainSpec& a, const DomainSpec& b) {
  if (a.resolution != b.resolution || a.mask != b.mask) return false;
  for (int i = 0; i < 3; ++i) {
    if (a.box[i].lo != b.box[i].lo || a.box[i].hi != b.box[i].hi) return false;
    if (a.mask != MaskSpec::box && (a.inner[i].lo != b.inner[i].lo || a.inner[i].hi != b.inner[i].hi)) return false;
  }
  return true;
}

}  // namespace

void write_raw(const std::filesystem::path& stem, const GridDomain& dom, int components,
               const std::vector<double>& data, const std::string& extra_json) {
  if (data.size() != dom.node_count() * static_cast<std::size_t>(components)) {
    throw PreconditionError("write_raw: data size does not match domain and component count");
  }
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());

  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error("cannot open " + with_ext(stem, ".bin").string());
  for (double x : data) {
    const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(x));
    bin.write(reinterpret_cast<const char*>(&le), sizeof le);
  }

  json side;
  side["dims"] = dom.dims();
  side["spacing"] = dom.spacing();
  side["box"] = box_json(dom.box());
  side["components"] = components;
  side["mask_spec"] = to_string(dom.mask());
  if (dom.mask() != MaskSpec::box) side["inner_box"] = box_json(dom.spec().inner);
  side["layout"] = "node-major, x1 fastest, components contiguous";
  side["dtype"] = "float64-le";
  if (!extra_json.empty()) {
    const json extra = json::parse(extra_json);
    for (const auto& [k, v] : extra.items()) side[k] = v;
  }
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw Error("cannot open " + with_ext(stem, ".json").string());
  js << side.dump(2) << '\n';
}

RawField read_raw(const std::filesystem::path& stem) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw Error("cannot open " + with_ext(stem, ".json").string());
  const std::string text((std::istreambuf_iterator<char>(js)), std::istreambuf_iterator<char>());
  const json side = json::parse(text);

  RawField out;
  out.sidecar_json = text;
  out.spec.resolution = side.at("dims").get<std::array<int, 3>>();
  out.spec.box = box_from(side.at("box"));
  out.spec.mask = mask_from_string(side.at("mask_spec").get<std::string>());
  if (side.contains("inner_box")) out.spec.inner = box_from(side.at("inner_box"));
  out.components = side.at("components").get<int>();

  const std::size_t count = static_cast<std::size_t>(out.spec.resolution[0]) * out.spec.resolution[1] *
                            out.spec.resolution[2] * out.components;
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error("cannot open " + with_ext(stem, ".bin").string());
  out.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t le = 0;
    if (!bin.read(reinterpret_cast<char*>(&le), sizeof le)) throw Error("field file truncated: " + stem.string());
    out.data[i] = std::bit_cast<double>(to_le(le));
  }
  return out;
}

void write_scalar(const std::filesystem::path& stem, const ScalarField& f, const std::string& extra_json) {
  write_raw(stem, *f.domain(), 1, f.values(), extra_json);
}

void write_vector(const std::filesystem::path& stem, const VectorField& f, const std::string& extra_json) {
  std::vector<double> data;
  data.reserve(f.size() * 3);
  for (const auto& v : f.values()) data.insert(data.end(), {v[0], v[1], v[2]});
  write_raw(stem, *f.domain(), 3, data, extra_json);
}

ScalarField read_scalar(const std::filesystem::path& stem, const DomainPtr& dom) {
  RawField raw = read_raw(stem);
  if (raw.components != 1) throw PreconditionError("expected a scalar field file: " + stem.string());
  if (!same_geometry(raw.spec, dom->spec())) throw PreconditionError("field file geometry does not match the domain");
  return ScalarField(dom, std::move(raw.data));
}

VectorField read_vector(const std::filesystem::path& stem, const DomainPtr& dom) {
  const RawField raw = read_raw(stem);
  if (raw.components != 3) throw PreconditionError("expected a vector field file: " + stem.string());
  if (!same_geometry(raw.spec, dom->spec())) throw PreconditionError("field file geometry does not match the domain");
  std::vector<Vec3> v(dom->node_count());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = Vec3(raw.data[3 * n], raw.data[3 * n + 1], raw.data[3 * n + 2]);
  return VectorField(dom, std::move(v));
}

DomainPtr domain_from_sidecar(const std::filesystem::path& stem) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw Error("cannot open " + with_ext(stem, ".json").string());
  const json side = json::parse(js);
  DomainSpec spec;
  spec.resolution = side.at("dims").get<std::array<int, 3>>();
  spec.box = box_from(side.at("box"));
  spec.mask = mask_from_string(side.at("mask_spec").get<std::string>());
  if (side.contains("inner_box")) spec.inner = box_from(side.at("inner_box"));
  return build_domain(spec);
}

}  // namespace hqf::io

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hqf/field.hpp"

namespace hqf::io {

// Field files: `<stem>.bin` holds raw little-endian float64 values, nodes in
// x1-fastest order with the components of each node stored contiguously;
// `<stem>.json` is the sidecar {dims, spacing, box, components, mask_spec,
// inner_box, layout, ...extra}.

struct RawField {
  DomainSpec spec;
  int components = 1;
  std::vector<double> data;  // node_count * components
  std::string sidecar_json;  // full sidecar text as read
};

/// Writes data (node_count * components values). `extra_json` is an optional
/// JSON object whose keys are merged into the sidecar.
void write_raw(const std::filesystem::path& stem, const GridDomain& dom, int components,
               const std::vector<double>& data, const std::string& extra_json = "");

RawField read_raw(const std::filesystem::path& stem);

void write_scalar(const std::filesystem::path& stem, const ScalarField& f, const std::string& extra_json = "");
void write_vector(const std::filesystem::path& stem, const VectorField& f, const std::string& extra_json = "");

/// Reads a 1-component file onto `dom`, which must match the sidecar geometry.
ScalarField read_scalar(const std::filesystem::path& stem, const DomainPtr& dom);
VectorField read_vector(const std::filesystem::path& stem, const DomainPtr& dom);

/// Rebuilds the domain described by a sidecar.
DomainPtr domain_from_sidecar(const std::filesystem::path& stem);

}  // namespace hqf::io

#pragma once

#include <string>

#include "rshom/field.hpp"

namespace rshom {

/**
 * Binary field dump. Layout:
 *   magic "RSHF", then little-endian u32 fields: version (1), dim,
 *   points_per_dim, component count; then 64-bit little-endian floats,
 *   nodes in row-major order with all components of a node interleaved.
 */
void dump_field(const Field& f, const std::string& path);
Field load_field(const std::string& path);

/// A Y x Z family is dumped as a stack of Z-fields (component index
/// c * ny + ynode) plus a sidecar text header <path>.txt documenting the
/// layout and the Y grid.
void dump_two_scale(const TwoScaleField& f, const std::string& path);
TwoScaleField load_two_scale(const std::string& path);

}  // namespace rshom

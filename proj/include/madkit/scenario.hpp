#pragma once

#include "madkit/field.hpp"

#include <iosfwd>
#include <string>

namespace madkit {

/// A trajectory geometry plus the multipole sources seen along it.
struct Scenario {
  TrajectoryGeometry geometry;
  std::vector<MultipoleSource> sources;
};

/// Parses the block-structured scenario text format:
///
///   geometry {
///     V 85  D 100  t0 0  beta -0.95  K 1001  R 20  d 3
///     Pi 1 0 0
///     Pi 0 1 0
///     Pi 0 0 1
///   }
///   source {            # one block per source order
///     l 2
///     a 0 -1.23         # cosine coefficient a_{l,m}: "a m value"
///     b 1  0.77         # sine coefficient  b_{l,m}: "b m value"
///   }
///   source {
///     l 2
///     tensor 1 0 0 0 -0.5 0 0 0 -0.5    # 3^l row-major entries, may span lines
///   }
///
/// '#' starts a comment. Scalar geometry keys may share a line. Unknown keys,
/// unknown blocks, duplicate or malformed entries raise std::runtime_error
/// with the offending line number.
Scenario parse_scenario(std::istream& in, const std::string& name);

/// Loads and parses a scenario file; I/O failures carry the path.
Scenario load_scenario(const std::string& path);

}  // namespace madkit

#pragma once

#include <string>

#include "motionnet/tensor.hpp"

namespace motionnet {

/// Middlebury .flo interchange, little-endian:
///   bytes 0-3   float32 202021.25 (reads as "PIEH")
///   bytes 4-7   int32 width
///   bytes 8-11  int32 height
///   then height*width interleaved (u,v) float32 pairs, row-major.
///
/// Payload values are float32; round-trips are bit-exact for values already
/// representable in float32 (write casts, read promotes).

/// Returns a [2,H,W] tensor (channel 0 = u, 1 = v). Throws ParseError naming
/// the byte offset for bad magic, nonpositive dimensions, or truncation.
Tensor read_flo(const std::string& path);

/// Accepts [2,H,W] or [1,2,H,W].
void write_flo(const std::string& path, const Tensor& flow);

}  // namespace motionnet

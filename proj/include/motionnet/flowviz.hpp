#pragma once

#include "motionnet/pngio.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

/// Standard 55-segment Middlebury flow color coding: hue encodes direction,
/// saturation encodes magnitude (zero flow is white). Magnitudes are
/// normalized by max_mag, or by the field's 99th-percentile magnitude when
/// max_mag <= 0; over-range vectors are darkened.
ColorImage flow_to_color(const Tensor& flow, double max_mag = 0.0);

/// The wheel itself: 55 RGB rows (useful for tests and documentation).
const unsigned char (*flow_color_wheel())[3];
int flow_color_wheel_size();

}  // namespace motionnet

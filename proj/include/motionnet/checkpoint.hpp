#pragma once

#include <string>
#include <utility>
#include <vector>

#include "motionnet/tensor.hpp"

namespace motionnet {

/// Checkpoints are flat containers of named tensors, little-endian on disk:
///   8 bytes  magic "MNCKPT01"
///   u32      tensor count
///   per tensor:
///     u32    name length, then the name bytes
///     u32    ndim, then ndim i64 extents
///     f64[]  payload, row-major, bit-exact
/// Model parameters are stored under their registration names, optimizer
/// state under "opt.*", and scalar run metadata under "meta.*".
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_checkpoint(const std::string& path, const NamedTensors& tensors);

/// Throws ParseError naming the byte offset on truncation or corruption.
NamedTensors read_checkpoint(const std::string& path);

/// nullptr when absent.
const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace motionnet

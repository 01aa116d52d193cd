#pragma once

#include <span>
#include <vector>

#include "herosnet/tensor.hpp"

namespace herosnet::ops {

/// 2-D cross-correlation over [B,Cin,H,W] with weight [Cout,Cin,kh,kw] and
/// bias [Cout] (bias may be undefined). Out-of-range taps read zero.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Elementwise 1/x; throws UsageError on a zero entry.
Tensor reciprocal(const Tensor& x);

/// [B,C,H,W] -> [B,C,1,1] spatial mean.
Tensor global_avg_pool(const Tensor& x);

/// Nearest-neighbour x2 upsampling of the last two axes.
Tensor upsample_nearest2x(const Tensor& x);

// Elementwise with broadcasting: operands have equal rank and each axis
// either matches or is 1 on one side.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

/// Concatenation along axis 1 of rank-4 tensors.
Tensor concat_channels(const std::vector<Tensor>& parts);

Tensor reshape(const Tensor& x, Shape shape);
Tensor sum(const Tensor& x);
Tensor sum_squares(const Tensor& x);

/// Rows of a [B,...] tensor selected by batch index (values copied).
Tensor slice_batch(const Tensor& x, std::size_t index);

/// Forward thresholds at `threshold` (>= maps to 1); backward passes the
/// upstream gradient through unchanged.
Tensor binarize_ste(const Tensor& latent, double threshold);

/// Places band c of [B,C,H,W] at column offset shifts[c] and sums the bands
/// into [B,1,H,W+shifts.back()].
Tensor shift_sum(const Tensor& cube, std::span<const int> shifts);

/// Linear adjoint of shift_sum: band c of the [B,C,H,width] result reads
/// columns [shifts[c], shifts[c]+width) of a [B,1,H,W'] input.
Tensor shift_split(const Tensor& meas, std::span<const int> shifts, std::size_t width);

}  // namespace herosnet::ops

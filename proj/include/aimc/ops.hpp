#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "aimc/tape.hpp"

namespace aimc::ops {

// --- raw kernels ------------------------------------------------------------

// C = A[m x k] * B[k x n], accumulated in double and rounded once to float.
void matmul_kernel(const float* a, const float* b, float* out,
                   std::int64_t m, std::int64_t k, std::int64_t n);

Tensor matmul_val(const Tensor& a, const Tensor& b);
Tensor matmul_at_b_val(const Tensor& a, const Tensor& b);  // A^T B, A [m x k], B [m x n]
Tensor matmul_a_bt_val(const Tensor& a, const Tensor& b);  // A B^T, A [m x n], B [k x n]

// Patch extraction for NCHW input: rows are (n, oh, ow) positions, columns are
// (c, kh, kw) taps. Zero padding.
Tensor im2col_val(const Tensor& x, int k, int stride, int pad);
void col2im_accum(const Tensor& cols, Tensor& dx, int k, int stride, int pad);

Tensor softmax_val(const Tensor& logits);

// Ties resolved to the lowest class index.
std::vector<int> argmax_rows(const Tensor& logits);

// Round-to-nearest (even at midpoints) onto a uniform grid of size `step`.
inline double quantize_grid(double v, double step) {
    return step <= 0.0 ? v : std::nearbyint(v / step) * step;
}

// Symmetric quantizer: levels -max_level..max_level of width `step`.
inline double quantize_symmetric(double v, double step, int max_level) {
    if (step <= 0.0) return v;
    double q = std::nearbyint(v / step);
    if (q > max_level) q = max_level;
    if (q < -max_level) q = -max_level;
    return q * step;
}

// --- tape ops ---------------------------------------------------------------

NodeId matmul(Tape& t, NodeId a, NodeId b);
NodeId im2col(Tape& t, NodeId x, int k, int stride, int pad);
NodeId cols_to_nchw(Tape& t, NodeId cols, std::int64_t n, std::int64_t out_ch,
                    std::int64_t oh, std::int64_t ow);
NodeId conv2d(Tape& t, NodeId x, NodeId w, int stride, int pad);
NodeId relu(Tape& t, NodeId x);
NodeId maxpool2d(Tape& t, NodeId x, int k, int stride);
NodeId reshape(Tape& t, NodeId x, std::vector<std::int64_t> shape);
NodeId add(Tape& t, NodeId a, NodeId b);
NodeId add_rowvec(Tape& t, NodeId x, NodeId b);
NodeId affine_channels(Tape& t, NodeId x, std::vector<float> scale, std::vector<float> shift);
NodeId scale_columns(Tape& t, NodeId x, std::vector<float> s);
NodeId scalar_mul(Tape& t, NodeId x, float s);
NodeId slice_cols(Tape& t, NodeId x, std::int64_t start, std::int64_t len);

// Elementwise forward transform with identity backward (straight-through).
NodeId ste_unary(Tape& t, NodeId x, std::function<double(double)> f, const char* name);

// Mean cross-entropy over the batch from raw logits.
NodeId softmax_cross_entropy(Tape& t, NodeId logits, std::vector<int> labels);

}  // namespace aimc::ops

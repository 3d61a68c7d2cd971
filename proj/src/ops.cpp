#include "aimc/ops.hpp"

#include <algorithm>
#include <cstring>

namespace aimc::ops {

void matmul_kernel(const float* a, const float* b, float* out,
                   std::int64_t m, std::int64_t k, std::int64_t n) {
    std::vector<double> acc(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* arow = a + i * k;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const float* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) acc[static_cast<std::size_t>(j)] += av * brow[j];
        }
        float* orow = out + i * n;
        for (std::int64_t j = 0; j < n; ++j) orow[j] = static_cast<float>(acc[static_cast<std::size_t>(j)]);
    }
}

Tensor matmul_val(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul requires rank-2 tensors");
    if (a.dim(1) != b.dim(0))
        throw DimensionError("matmul inner extents differ: " + a.shape_str() + " vs " + b.shape_str());
    Tensor out({a.dim(0), b.dim(1)});
    matmul_kernel(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1));
    return out;
}

// A^T * B with A [m x k], B [m x n] -> [k x n]
static Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({k, n});
    std::vector<double> acc(static_cast<std::size_t>(k * n), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        const float* arow = a.data() + i * k;
        const float* brow = b.data() + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* accrow = acc.data() + p * n;
            for (std::int64_t j = 0; j < n; ++j) accrow[j] += av * brow[j];
        }
    }
    for (std::int64_t i = 0; i < k * n; ++i) out[i] = static_cast<float>(acc[static_cast<std::size_t>(i)]);
    return out;
}

// A * B^T with A [m x n], B [k x n] -> [m x k]
static Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
    const std::int64_t m = a.dim(0), n = a.dim(1), k = b.dim(0);
    Tensor out({m, k});
    for (std::int64_t i = 0; i < m; ++i) {
        const float* arow = a.data() + i * n;
        for (std::int64_t j = 0; j < k; ++j) {
            const float* brow = b.data() + j * n;
            double s = 0.0;
            for (std::int64_t p = 0; p < n; ++p) s += static_cast<double>(arow[p]) * brow[p];
            out.at(i, j) = static_cast<float>(s);
        }
    }
    return out;
}

static std::int64_t conv_out_extent(std::int64_t in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

Tensor im2col_val(const Tensor& x, int k, int stride, int pad) {
    if (x.rank() != 4) throw DimensionError("im2col expects NCHW input");
    const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t oh = conv_out_extent(h, k, stride, pad);
    const std::int64_t ow = conv_out_extent(w, k, stride, pad);
    if (oh < 1 || ow < 1) throw DimensionError("kernel/stride larger than padded input");
    Tensor cols({n * oh * ow, c * k * k});
    std::int64_t row = 0;
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t y = 0; y < oh; ++y)
            for (std::int64_t xo = 0; xo < ow; ++xo, ++row) {
                float* dst = cols.data() + row * c * k * k;
                for (std::int64_t ic = 0; ic < c; ++ic)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const std::int64_t sy = y * stride + ky - pad;
                            const std::int64_t sx = xo * stride + kx - pad;
                            *dst++ = (sy < 0 || sy >= h || sx < 0 || sx >= w)
                                         ? 0.0f
                                         : x.at4(in, ic, sy, sx);
                        }
            }
    return cols;
}

void col2im_accum(const Tensor& cols, Tensor& dx, int k, int stride, int pad) {
    const std::int64_t n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
    const std::int64_t oh = conv_out_extent(h, k, stride, pad);
    const std::int64_t ow = conv_out_extent(w, k, stride, pad);
    std::int64_t row = 0;
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t y = 0; y < oh; ++y)
            for (std::int64_t xo = 0; xo < ow; ++xo, ++row) {
                const float* src = cols.data() + row * c * k * k;
                for (std::int64_t ic = 0; ic < c; ++ic)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const std::int64_t sy = y * stride + ky - pad;
                            const std::int64_t sx = xo * stride + kx - pad;
                            const float v = *src++;
                            if (sy >= 0 && sy < h && sx >= 0 && sx < w) dx.at4(in, ic, sy, sx) += v;
                        }
            }
}

Tensor softmax_val(const Tensor& logits) {
    const std::int64_t n = logits.dim(0), c = logits.dim(1);
    Tensor p({n, c});
    for (std::int64_t i = 0; i < n; ++i) {
        const float* row = logits.data() + i * c;
        double mx = row[0];
        for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (std::int64_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        for (std::int64_t j = 0; j < c; ++j)
            p.at(i, j) = static_cast<float>(std::exp(static_cast<double>(row[j]) - mx) / z);
    }
    return p;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    const std::int64_t n = logits.dim(0), c = logits.dim(1);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const float* row = logits.data() + i * c;
        int best = 0;
        for (std::int64_t j = 1; j < c; ++j)
            if (row[j] > row[best]) best = static_cast<int>(j);
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

NodeId matmul(Tape& t, NodeId a, NodeId b) {
    return t.add(
        "matmul", {a, b},
        [](const Tape& tp, const TapeNode& n) {
            return matmul_val(tp.value(n.parents[0]), tp.value(n.parents[1]));
        },
        [](Tape& tp, const TapeNode& n) {
            const Tensor& av = tp.value(n.parents[0]);
            const Tensor& bv = tp.value(n.parents[1]);
            if (tp.node(n.parents[0]).requires_grad) tp.accumulate_grad(n.parents[0], matmul_a_bt(n.grad, bv));
            if (tp.node(n.parents[1]).requires_grad) tp.accumulate_grad(n.parents[1], matmul_at_b(av, n.grad));
        });
}

NodeId im2col(Tape& t, NodeId x, int k, int stride, int pad) {
    return t.add(
        "im2col", {x},
        [k, stride, pad](const Tape& tp, const TapeNode& n) {
            return im2col_val(tp.value(n.parents[0]), k, stride, pad);
        },
        [k, stride, pad](Tape& tp, const TapeNode& n) {
            Tensor dx = Tensor::zeros(tp.value(n.parents[0]).shape());
            col2im_accum(n.grad, dx, k, stride, pad);
            tp.accumulate_grad(n.parents[0], dx);
        });
}

// [n*oh*ow, out_ch] -> [n, out_ch, oh, ow]
NodeId cols_to_nchw(Tape& t, NodeId cols, std::int64_t n, std::int64_t out_ch,
                    std::int64_t oh, std::int64_t ow) {
    auto fwd_perm = [n, out_ch, oh, ow](const Tensor& src) {
        Tensor out({n, out_ch, oh, ow});
        std::int64_t row = 0;
        for (std::int64_t in = 0; in < n; ++in)
            for (std::int64_t y = 0; y < oh; ++y)
                for (std::int64_t x = 0; x < ow; ++x, ++row)
                    for (std::int64_t c = 0; c < out_ch; ++c) out.at4(in, c, y, x) = src.at(row, c);
        return out;
    };
    return t.add(
        "cols_to_nchw", {cols},
        [fwd_perm](const Tape& tp, const TapeNode& nd) { return fwd_perm(tp.value(nd.parents[0])); },
        [n, out_ch, oh, ow](Tape& tp, const TapeNode& nd) {
            Tensor d({n * oh * ow, out_ch});
            std::int64_t row = 0;
            for (std::int64_t in = 0; in < n; ++in)
                for (std::int64_t y = 0; y < oh; ++y)
                    for (std::int64_t x = 0; x < ow; ++x, ++row)
                        for (std::int64_t c = 0; c < out_ch; ++c) d.at(row, c) = nd.grad.at4(in, c, y, x);
            tp.accumulate_grad(nd.parents[0], d);
        });
}

NodeId conv2d(Tape& t, NodeId x, NodeId w, int stride, int pad) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    if (xv.rank() != 4 || wv.rank() != 4) throw DimensionError("conv2d expects NCHW input and OCKK weights");
    if (xv.dim(1) != wv.dim(1)) throw DimensionError("conv2d channel mismatch");
    if (wv.dim(2) != wv.dim(3)) throw DimensionError("conv2d expects square kernels");
    const int k = static_cast<int>(wv.dim(2));
    const std::int64_t n = xv.dim(0), out_ch = wv.dim(0);
    const std::int64_t oh = conv_out_extent(xv.dim(2), k, stride, pad);
    const std::int64_t ow = conv_out_extent(xv.dim(3), k, stride, pad);
    NodeId cols = im2col(t, x, k, stride, pad);
    // weights [O, C, k, k] flattened to [C*k*k, O]
    NodeId wmat = t.add(
        "conv_wmat", {w},
        [](const Tape& tp, const TapeNode& nd) {
            const Tensor& wv2 = tp.value(nd.parents[0]);
            const std::int64_t o = wv2.dim(0), ckk = wv2.numel() / wv2.dim(0);
            Tensor out({ckk, o});
            for (std::int64_t oc = 0; oc < o; ++oc)
                for (std::int64_t i = 0; i < ckk; ++i) out.at(i, oc) = wv2[oc * ckk + i];
            return out;
        },
        [](Tape& tp, const TapeNode& nd) {
            const Tensor& wv2 = tp.value(nd.parents[0]);
            const std::int64_t o = wv2.dim(0), ckk = wv2.numel() / wv2.dim(0);
            Tensor d(wv2.shape());
            for (std::int64_t oc = 0; oc < o; ++oc)
                for (std::int64_t i = 0; i < ckk; ++i) d[oc * ckk + i] = nd.grad.at(i, oc);
            tp.accumulate_grad(nd.parents[0], d);
        });
    NodeId prod = matmul(t, cols, wmat);
    return cols_to_nchw(t, prod, n, out_ch, oh, ow);
}

NodeId relu(Tape& t, NodeId x) {
    return t.add(
        "relu", {x},
        [](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            for (auto& v : out.vec()) v = v > 0.0f ? v : 0.0f;
            return out;
        },
        [](Tape& tp, const TapeNode& n) {
            const Tensor& xv = tp.value(n.parents[0]);
            Tensor d(xv.shape());
            // subgradient at exactly 0 is defined as 0
            for (std::int64_t i = 0; i < xv.numel(); ++i) d[i] = xv[i] > 0.0f ? n.grad[i] : 0.0f;
            tp.accumulate_grad(n.parents[0], d);
        });
}

NodeId maxpool2d(Tape& t, NodeId x, int k, int stride) {
    const Tensor& xv = t.value(x);
    if (xv.rank() != 4) throw DimensionError("maxpool2d expects NCHW");
    return t.add(
        "maxpool2d", {x},
        [k, stride](const Tape& tp, const TapeNode& n) {
            const Tensor& v = tp.value(n.parents[0]);
            const std::int64_t nn = v.dim(0), c = v.dim(1);
            const std::int64_t oh = (v.dim(2) - k) / stride + 1, ow = (v.dim(3) - k) / stride + 1;
            Tensor out({nn, c, oh, ow});
            for (std::int64_t in = 0; in < nn; ++in)
                for (std::int64_t ic = 0; ic < c; ++ic)
                    for (std::int64_t y = 0; y < oh; ++y)
                        for (std::int64_t xo = 0; xo < ow; ++xo) {
                            float best = v.at4(in, ic, y * stride, xo * stride);
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx)
                                    best = std::max(best, v.at4(in, ic, y * stride + ky, xo * stride + kx));
                            out.at4(in, ic, y, xo) = best;
                        }
            return out;
        },
        [k, stride](Tape& tp, const TapeNode& n) {
            const Tensor& v = tp.value(n.parents[0]);
            Tensor d = Tensor::zeros(v.shape());
            const std::int64_t nn = v.dim(0), c = v.dim(1);
            const std::int64_t oh = n.grad.dim(2), ow = n.grad.dim(3);
            // route gradient to the first maximum found (ties)
            for (std::int64_t in = 0; in < nn; ++in)
                for (std::int64_t ic = 0; ic < c; ++ic)
                    for (std::int64_t y = 0; y < oh; ++y)
                        for (std::int64_t xo = 0; xo < ow; ++xo) {
                            std::int64_t by = y * stride, bx = xo * stride;
                            float best = v.at4(in, ic, by, bx);
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    const float cand = v.at4(in, ic, y * stride + ky, xo * stride + kx);
                                    if (cand > best) {
                                        best = cand;
                                        by = y * stride + ky;
                                        bx = xo * stride + kx;
                                    }
                                }
                            d.at4(in, ic, by, bx) += n.grad.at4(in, ic, y, xo);
                        }
            tp.accumulate_grad(n.parents[0], d);
        });
}

NodeId reshape(Tape& t, NodeId x, std::vector<std::int64_t> shape) {
    return t.add(
        "reshape", {x},
        [shape](const Tape& tp, const TapeNode& n) { return tp.value(n.parents[0]).reshaped(shape); },
        [](Tape& tp, const TapeNode& n) {
            tp.accumulate_grad(n.parents[0], n.grad.reshaped(tp.value(n.parents[0]).shape()));
        });
}

NodeId add(Tape& t, NodeId a, NodeId b) {
    if (!t.value(a).same_shape(t.value(b))) throw DimensionError("add shape mismatch");
    return t.add(
        "add", {a, b},
        [](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            const Tensor& bv = tp.value(n.parents[1]);
            for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
            return out;
        },
        [](Tape& tp, const TapeNode& n) {
            tp.accumulate_grad(n.parents[0], n.grad);
            tp.accumulate_grad(n.parents[1], n.grad);
        });
}

NodeId add_rowvec(Tape& t, NodeId x, NodeId b) {
    if (t.value(b).numel() != t.value(x).dim(t.value(x).rank() - 1))
        throw DimensionError("row vector length mismatch");
    return t.add(
        "add_rowvec", {x, b},
        [](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            const Tensor& bv = tp.value(n.parents[1]);
            const std::int64_t c = bv.numel();
            for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += bv[i % c];
            return out;
        },
        [](Tape& tp, const TapeNode& n) {
            tp.accumulate_grad(n.parents[0], n.grad);
            if (tp.node(n.parents[1]).requires_grad) {
                const Tensor& bv = tp.value(n.parents[1]);
                Tensor d = Tensor::zeros(bv.shape());
                const std::int64_t c = bv.numel();
                for (std::int64_t i = 0; i < n.grad.numel(); ++i) d[i % c] += n.grad[i];
                tp.accumulate_grad(n.parents[1], d);
            }
        });
}

NodeId affine_channels(Tape& t, NodeId x, std::vector<float> scale, std::vector<float> shift) {
    const Tensor& xv = t.value(x);
    if (xv.rank() != 4 || xv.dim(1) != static_cast<std::int64_t>(scale.size()) ||
        scale.size() != shift.size())
        throw DimensionError("affine_channels expects NCHW with per-channel scale/shift");
    return t.add(
        "affine_channels", {x},
        [scale, shift](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            const std::int64_t c = out.dim(1), hw = out.dim(2) * out.dim(3);
            for (std::int64_t i = 0; i < out.numel(); ++i) {
                const std::size_t ch = static_cast<std::size_t>((i / hw) % c);
                out[i] = out[i] * scale[ch] + shift[ch];
            }
            return out;
        },
        [scale](Tape& tp, const TapeNode& n) {
            Tensor d = n.grad;
            const std::int64_t c = d.dim(1), hw = d.dim(2) * d.dim(3);
            for (std::int64_t i = 0; i < d.numel(); ++i)
                d[i] *= scale[static_cast<std::size_t>((i / hw) % c)];
            tp.accumulate_grad(n.parents[0], d);
        });
}

NodeId scale_columns(Tape& t, NodeId x, std::vector<float> s) {
    if (t.value(x).dim(1) != static_cast<std::int64_t>(s.size()))
        throw DimensionError("scale_columns length mismatch");
    return t.add(
        "scale_columns", {x},
        [s](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            const std::int64_t c = out.dim(1);
            for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= s[static_cast<std::size_t>(i % c)];
            return out;
        },
        [s](Tape& tp, const TapeNode& n) {
            Tensor d = n.grad;
            const std::int64_t c = d.dim(1);
            for (std::int64_t i = 0; i < d.numel(); ++i) d[i] *= s[static_cast<std::size_t>(i % c)];
            tp.accumulate_grad(n.parents[0], d);
        });
}

NodeId scalar_mul(Tape& t, NodeId x, float s) {
    return t.add(
        "scalar_mul", {x},
        [s](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            for (auto& v : out.vec()) v *= s;
            return out;
        },
        [s](Tape& tp, const TapeNode& n) {
            Tensor d = n.grad;
            for (auto& v : d.vec()) v *= s;
            tp.accumulate_grad(n.parents[0], d);
        });
}

NodeId slice_cols(Tape& t, NodeId x, std::int64_t start, std::int64_t len) {
    const Tensor& xv = t.value(x);
    if (xv.rank() != 2 || start < 0 || start + len > xv.dim(1))
        throw DimensionError("slice_cols out of range");
    return t.add(
        "slice_cols", {x},
        [start, len](const Tape& tp, const TapeNode& n) {
            const Tensor& v = tp.value(n.parents[0]);
            Tensor out({v.dim(0), len});
            for (std::int64_t i = 0; i < v.dim(0); ++i)
                std::memcpy(out.data() + i * len, v.data() + i * v.dim(1) + start,
                            static_cast<std::size_t>(len) * sizeof(float));
            return out;
        },
        [start, len](Tape& tp, const TapeNode& n) {
            const Tensor& v = tp.value(n.parents[0]);
            Tensor d = Tensor::zeros(v.shape());
            for (std::int64_t i = 0; i < v.dim(0); ++i)
                std::memcpy(d.data() + i * v.dim(1) + start, n.grad.data() + i * len,
                            static_cast<std::size_t>(len) * sizeof(float));
            tp.accumulate_grad(n.parents[0], d);
        });
}

NodeId ste_unary(Tape& t, NodeId x, std::function<double(double)> f, const char* name) {
    return t.add(
        name, {x},
        [f](const Tape& tp, const TapeNode& n) {
            Tensor out = tp.value(n.parents[0]);
            for (auto& v : out.vec()) v = static_cast<float>(f(static_cast<double>(v)));
            return out;
        },
        [](Tape& tp, const TapeNode& n) {
            // straight-through: gradient passes unchanged
            tp.accumulate_grad(n.parents[0], n.grad);
        });
}

NodeId softmax_cross_entropy(Tape& t, NodeId logits, std::vector<int> labels) {
    const Tensor& lv = t.value(logits);
    if (lv.rank() != 2 || lv.dim(0) != static_cast<std::int64_t>(labels.size()))
        throw DimensionError("softmax_cross_entropy label count mismatch");
    for (int y : labels)
        if (y < 0 || y >= lv.dim(1)) throw ArgumentError("label out of range");
    return t.add(
        "softmax_ce", {logits},
        [labels](const Tape& tp, const TapeNode& n) {
            const Tensor& z = tp.value(n.parents[0]);
            const std::int64_t nn = z.dim(0), c = z.dim(1);
            double loss = 0.0;
            for (std::int64_t i = 0; i < nn; ++i) {
                const float* row = z.data() + i * c;
                double mx = row[0];
                for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
                double lse = 0.0;
                for (std::int64_t j = 0; j < c; ++j) lse += std::exp(static_cast<double>(row[j]) - mx);
                loss += std::log(lse) + mx - row[labels[static_cast<std::size_t>(i)]];
            }
            return Tensor::scalar(static_cast<float>(loss / static_cast<double>(nn)));
        },
        [labels](Tape& tp, const TapeNode& n) {
            const Tensor& z = tp.value(n.parents[0]);
            Tensor p = softmax_val(z);
            const std::int64_t nn = z.dim(0), c = z.dim(1);
            const float g = n.grad[0] / static_cast<float>(nn);
            for (std::int64_t i = 0; i < nn; ++i) p.at(i, labels[static_cast<std::size_t>(i)]) -= 1.0f;
            for (auto& v : p.vec()) v *= g;
            tp.accumulate_grad(n.parents[0], p);
        });
}

}  // namespace aimc::ops

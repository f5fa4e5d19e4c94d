#include "ace/errors.hpp"
#include "ace/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace ace::nn {

namespace {

using Shape = std::vector<std::int64_t>;
using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapF = Eigen::Map<MatF>;
using CMapF = Eigen::Map<const MatF>;

[[noreturn]] void bad(const Node& node, const std::string& what) {
  fail(ErrorKind::model_format, node.op_type + " '" + node.name + "': " + what);
}

const Tensor& need(const Node& node, const std::vector<const Tensor*>& in, std::size_t k) {
  if (k >= in.size() || !in[k]) bad(node, "missing input " + std::to_string(k));
  return *in[k];
}

const Tensor& need_float(const Node& node, const std::vector<const Tensor*>& in, std::size_t k) {
  const Tensor& t = need(node, in, k);
  if (t.dtype != DType::float32) bad(node, "input " + std::to_string(k) + " must be float");
  return t;
}

std::int64_t product(const Shape& s, std::size_t from = 0, std::size_t to = std::size_t(-1)) {
  std::int64_t p = 1;
  for (std::size_t k = from; k < std::min(to, s.size()); ++k) p *= s[k];
  return p;
}

std::int64_t normalize_axis(const Node& node, std::int64_t axis, std::size_t rank) {
  const auto r = std::int64_t(rank);
  if (axis < -r || axis >= r) bad(node, "axis out of range");
  return axis < 0 ? axis + r : axis;
}

std::vector<std::int64_t> as_ints(const Tensor& t) {
  if (t.dtype == DType::int64) return t.i;
  return {t.f.begin(), t.f.end()};
}

Shape strides_of(const Shape& s) {
  Shape st(s.size(), 1);
  for (std::size_t k = s.size(); k-- > 1;) st[k - 1] = st[k] * s[k];
  return st;
}

// Numpy-style broadcast of two shapes.
Shape broadcast_shape(const Node& node, const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t k = 0; k < r; ++k) {
    const std::int64_t da = k + a.size() >= r ? a[k + a.size() - r] : 1;
    const std::int64_t db = k + b.size() >= r ? b[k + b.size() - r] : 1;
    if (da != db && da != 1 && db != 1) bad(node, "shapes do not broadcast");
    out[k] = std::max(da, db);
  }
  return out;
}

// Strides of `s` viewed inside broadcast shape `out` (0 on broadcast axes).
Shape broadcast_strides(const Shape& s, const Shape& out) {
  const Shape st = strides_of(s);
  Shape res(out.size(), 0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::size_t o = k + out.size() - s.size();
    res[o] = s[k] == 1 ? 0 : st[k];
  }
  return res;
}

template <typename T, typename Op>
std::vector<T> broadcast_apply(const Node& node, const std::vector<T>& a, const Shape& sa, const std::vector<T>& b,
                               const Shape& sb, Shape& out_shape, Op op) {
  out_shape = broadcast_shape(node, sa, sb);
  const std::int64_t n = product(out_shape);
  std::vector<T> out(static_cast<std::size_t>(n));
  if (sa == sb) {
    for (std::int64_t k = 0; k < n; ++k) out[k] = op(a[k], b[k]);
    return out;
  }
  if (b.size() == 1) {
    for (std::int64_t k = 0; k < n; ++k) out[k] = op(a[std::size_t(k) % a.size()], b[0]);
    if (std::int64_t(a.size()) == n) return out;
  }
  const Shape ast = broadcast_strides(sa, out_shape), bst = broadcast_strides(sb, out_shape);
  const std::size_t r = out_shape.size();
  Shape idx(r, 0);
  std::int64_t ia = 0, ib = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    out[k] = op(a[ia], b[ib]);
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) {
        ia += ast[d];
        ib += bst[d];
        break;
      }
      ia -= ast[d] * (out_shape[d] - 1);
      ib -= bst[d] * (out_shape[d] - 1);
      idx[d] = 0;
    }
  }
  return out;
}

template <typename FOp, typename IOp>
Tensor binary(const Node& node, const std::vector<const Tensor*>& in, FOp fop, IOp iop) {
  const Tensor& a = need(node, in, 0);
  const Tensor& b = need(node, in, 1);
  Tensor out;
  if (a.dtype == DType::int64 && b.dtype == DType::int64) {
    out.dtype = DType::int64;
    out.i = broadcast_apply(node, a.i, a.shape, b.i, b.shape, out.shape, iop);
  } else {
    if (a.dtype != b.dtype) bad(node, "mixed input types");
    out.f = broadcast_apply(node, a.f, a.shape, b.f, b.shape, out.shape, fop);
  }
  return out;
}

template <typename F>
Tensor unary(const Node& node, const std::vector<const Tensor*>& in, F f) {
  Tensor out = need_float(node, in, 0);
  for (float& v : out.f) v = f(v);
  return out;
}

Tensor matmul(const Node& node, const Tensor& a, const Tensor& b) {
  if (a.shape.size() < 2 || b.shape.size() < 2) bad(node, "operands must be at least 2-D");
  const std::int64_t m = a.shape[a.shape.size() - 2], k = a.shape.back();
  const std::int64_t kb = b.shape[b.shape.size() - 2], n = b.shape.back();
  if (k != kb) bad(node, "inner dimensions differ");
  Tensor out;
  if (b.shape.size() == 2) {
    const std::int64_t rows = product(a.shape) / k;
    out.shape = a.shape;
    out.shape.back() = n;
    out.f.resize(std::size_t(rows * n));
    MapF(out.f.data(), rows, n).noalias() = CMapF(a.f.data(), rows, k) * CMapF(b.f.data(), k, n);
    return out;
  }
  const Shape batch_a(a.shape.begin(), a.shape.end() - 2), batch_b(b.shape.begin(), b.shape.end() - 2);
  if (batch_a != batch_b) bad(node, "batched MatMul requires equal batch dimensions");
  const std::int64_t batches = product(batch_a);
  out.shape = batch_a;
  out.shape.push_back(m);
  out.shape.push_back(n);
  out.f.resize(std::size_t(batches * m * n));
  for (std::int64_t t = 0; t < batches; ++t)
    MapF(out.f.data() + t * m * n, m, n).noalias() =
        CMapF(a.f.data() + t * m * k, m, k) * CMapF(b.f.data() + t * k * n, k, n);
  return out;
}

Tensor gemm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& a = need_float(node, in, 0);
  const Tensor& b = need_float(node, in, 1);
  if (a.shape.size() != 2 || b.shape.size() != 2) bad(node, "operands must be 2-D");
  const bool ta = node.attr_int("transA", 0) != 0, tb = node.attr_int("transB", 0) != 0;
  const float alpha = node.attr_float("alpha", 1.0f), beta = node.attr_float("beta", 1.0f);
  CMapF A(a.f.data(), a.shape[0], a.shape[1]);
  CMapF B(b.f.data(), b.shape[0], b.shape[1]);
  const std::int64_t m = ta ? a.shape[1] : a.shape[0];
  const std::int64_t ka = ta ? a.shape[0] : a.shape[1];
  const std::int64_t kb = tb ? b.shape[1] : b.shape[0];
  const std::int64_t n = tb ? b.shape[0] : b.shape[1];
  if (ka != kb) bad(node, "inner dimensions differ: " + std::to_string(ka) + " vs " + std::to_string(kb));
  MatF prod;
  if (ta && tb)
    prod.noalias() = A.transpose() * B.transpose();
  else if (ta)
    prod.noalias() = A.transpose() * B;
  else if (tb)
    prod.noalias() = A * B.transpose();
  else
    prod.noalias() = A * B;
  prod *= alpha;
  Tensor out = Tensor::floats({m, n}, std::vector<float>(prod.data(), prod.data() + m * n));
  if (in.size() > 2 && in[2]) {
    const Tensor& c = need_float(node, in, 2);
    Shape s;
    std::vector<float> scaled = c.f;
    for (float& v : scaled) v *= beta;
    out.f = broadcast_apply(node, out.f, out.shape, scaled, c.shape, s, std::plus<float>());
    if (s != out.shape) bad(node, "bias does not broadcast to output");
  }
  return out;
}

struct Window {
  std::vector<std::int64_t> kernel, strides, dilations, pads;  // pads: begin..., end...
};

Window window_of(const Node& node, const Shape& input, std::vector<std::int64_t> kernel) {
  const std::size_t sd = input.size() - 2;
  Window w;
  w.kernel = std::move(kernel);
  w.strides = node.attr_ints("strides", std::vector<std::int64_t>(sd, 1));
  w.dilations = node.attr_ints("dilations", std::vector<std::int64_t>(sd, 1));
  w.pads = node.attr_ints("pads", std::vector<std::int64_t>(2 * sd, 0));
  if (w.kernel.size() != sd || w.strides.size() != sd || w.dilations.size() != sd || w.pads.size() != 2 * sd)
    bad(node, "window attributes do not match spatial rank");
  const Attribute* ap = node.attr("auto_pad");
  const std::string auto_pad = ap ? ap->s : "NOTSET";
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    for (std::size_t d = 0; d < sd; ++d) {
      const std::int64_t in = input[2 + d];
      const std::int64_t out = (in + w.strides[d] - 1) / w.strides[d];
      const std::int64_t eff = (w.kernel[d] - 1) * w.dilations[d] + 1;
      const std::int64_t total = std::max<std::int64_t>(0, (out - 1) * w.strides[d] + eff - in);
      const std::int64_t small = total / 2, large = total - small;
      w.pads[d] = auto_pad == "SAME_UPPER" ? small : large;
      w.pads[d + sd] = auto_pad == "SAME_UPPER" ? large : small;
    }
  } else if (auto_pad == "VALID") {
    std::fill(w.pads.begin(), w.pads.end(), 0);
  } else if (auto_pad != "NOTSET" && !auto_pad.empty()) {
    bad(node, "unsupported auto_pad " + auto_pad);
  }
  return w;
}

std::int64_t out_extent(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d, std::int64_t pb,
                        std::int64_t pe, bool ceil_mode) {
  const std::int64_t eff = (k - 1) * d + 1;
  const std::int64_t num = in + pb + pe - eff;
  if (num < 0) return 0;
  return (ceil_mode ? (num + s - 1) / s : num / s) + 1;
}

Tensor conv(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = need_float(node, in, 0);
  const Tensor& w = need_float(node, in, 1);
  if (x.shape.size() != 4 || w.shape.size() != 4) bad(node, "only 2-D convolution is supported");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const std::int64_t m = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  const std::int64_t group = node.attr_int("group", 1);
  if (cg * group != c || m % group != 0) bad(node, "channel/group mismatch");
  const Window win = window_of(node, x.shape, node.attr_ints("kernel_shape", {kh, kw}));
  const std::int64_t sh = win.strides[0], sw = win.strides[1], dh = win.dilations[0], dw = win.dilations[1];
  const std::int64_t ph = win.pads[0], pw = win.pads[1];
  const std::int64_t oh = out_extent(h, kh, sh, dh, win.pads[0], win.pads[2], false);
  const std::int64_t ow = out_extent(wd, kw, sw, dw, win.pads[1], win.pads[3], false);
  const std::int64_t mg = m / group;
  const std::int64_t patch = cg * kh * kw;
  const std::int64_t spatial = oh * ow;

  Tensor out = Tensor::floats({n, m, oh, ow}, std::vector<float>(std::size_t(n * m * spatial)));
  const bool pointwise = kh == 1 && kw == 1 && sh == 1 && sw == 1 && ph == 0 && pw == 0 && oh == h && ow == wd;
  const Tensor* bias_t = nullptr;
  if (in.size() > 2 && in[2]) {
    bias_t = &need_float(node, in, 2);
    if (bias_t->numel() != m) bad(node, "bias length differs from output channels");
  }
  if (pointwise && cg <= 16) {
    // Few input channels: a direct axpy loop beats a packed GEMM.
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t k = 0; k < m; ++k) {
        const std::int64_t g = k / mg;
        const float* src = x.f.data() + (b * c + g * cg) * spatial;
        const float* wk = w.f.data() + k * cg;
        float* dst = out.f.data() + (b * m + k) * spatial;
        const float b0 = bias_t ? bias_t->f[std::size_t(k)] : 0.0f;
        for (std::int64_t s = 0; s < spatial; ++s) dst[s] = b0;
        for (std::int64_t ci = 0; ci < cg; ++ci) {
          const float wv = wk[ci];
          const float* sp = src + ci * spatial;
          for (std::int64_t s = 0; s < spatial; ++s) dst[s] += wv * sp[s];
        }
      }
    return out;
  }
  MatF cols;
  if (!pointwise) cols.resize(patch, spatial);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t g = 0; g < group; ++g) {
      const float* src = x.f.data() + (b * c + g * cg) * h * wd;
      if (!pointwise) {
        for (std::int64_t ci = 0; ci < cg; ++ci)
          for (std::int64_t ky = 0; ky < kh; ++ky)
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              float* row = cols.data() + ((ci * kh + ky) * kw + kx) * spatial;
              for (std::int64_t oy = 0; oy < oh; ++oy) {
                const std::int64_t iy = oy * sh - ph + ky * dh;
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                  const std::int64_t ix = ox * sw - pw + kx * dw;
                  row[oy * ow + ox] =
                      (iy >= 0 && iy < h && ix >= 0 && ix < wd) ? src[(ci * h + iy) * wd + ix] : 0.0f;
                }
              }
            }
      }
      CMapF weights(w.f.data() + g * mg * patch, mg, patch);
      MapF dst(out.f.data() + (b * m + g * mg) * spatial, mg, spatial);
      if (pointwise)
        dst.noalias() = weights * CMapF(src, patch, spatial);
      else
        dst.noalias() = weights * cols;
    }
  if (bias_t) {
    const Tensor& bias = *bias_t;
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t k = 0; k < m; ++k) {
        float* p = out.f.data() + (b * m + k) * spatial;
        for (std::int64_t s = 0; s < spatial; ++s) p[s] += bias.f[std::size_t(k)];
      }
  }
  return out;
}

Tensor pool(const Node& node, const std::vector<const Tensor*>& in, bool is_max) {
  const Tensor& x = need_float(node, in, 0);
  if (x.shape.size() != 4) bad(node, "only 2-D pooling is supported");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const auto kernel = node.attr_ints("kernel_shape");
  if (kernel.size() != 2) bad(node, "kernel_shape must have two entries");
  const Window win = window_of(node, x.shape, kernel);
  const bool ceil_mode = node.attr_int("ceil_mode", 0) != 0;
  const bool include_pad = node.attr_int("count_include_pad", 0) != 0;
  const std::int64_t kh = kernel[0], kw = kernel[1];
  const std::int64_t sh = win.strides[0], sw = win.strides[1], dh = win.dilations[0], dw = win.dilations[1];
  const std::int64_t ph = win.pads[0], pw = win.pads[1];
  const std::int64_t oh = out_extent(h, kh, sh, dh, win.pads[0], win.pads[2], ceil_mode);
  const std::int64_t ow = out_extent(wd, kw, sw, dw, win.pads[1], win.pads[3], ceil_mode);
  Tensor out = Tensor::floats({n, c, oh, ow}, std::vector<float>(std::size_t(n * c * oh * ow)));
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const float* src = x.f.data() + plane * h * wd;
    float* dst = out.f.data() + plane * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
        std::int64_t count = 0, padded = 0;
        for (std::int64_t ky = 0; ky < kh; ++ky)
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            const std::int64_t iy = oy * sh - ph + ky * dh, ix = ox * sw - pw + kx * dw;
            const bool inside = iy >= 0 && iy < h && ix >= 0 && ix < wd;
            // Window positions within the declared padding count toward the
            // include-pad divisor; positions past it (ceil_mode) never do.
            if (iy >= -ph && iy < h + win.pads[2] && ix >= -pw && ix < wd + win.pads[3]) ++padded;
            if (!inside) continue;
            const float v = src[iy * wd + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
            ++count;
          }
        if (!is_max) acc /= float(include_pad ? padded : std::max<std::int64_t>(count, 1));
        dst[oy * ow + ox] = acc;
      }
  }
  return out;
}

Tensor global_average_pool(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = need_float(node, in, 0);
  if (x.shape.size() < 3) bad(node, "input must have spatial dimensions");
  const std::int64_t planes = x.shape[0] * x.shape[1];
  const std::int64_t spatial = product(x.shape, 2);
  Shape shape = x.shape;
  std::fill(shape.begin() + 2, shape.end(), 1);
  Tensor out = Tensor::floats(shape, std::vector<float>(std::size_t(planes)));
  for (std::int64_t p = 0; p < planes; ++p) {
    double s = 0;
    for (std::int64_t k = 0; k < spatial; ++k) s += x.f[std::size_t(p * spatial + k)];
    out.f[std::size_t(p)] = float(s / double(spatial));
  }
  return out;
}

Tensor batch_norm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = need_float(node, in, 0);
  const Tensor& scale = need_float(node, in, 1);
  const Tensor& bias = need_float(node, in, 2);
  const Tensor& mean = need_float(node, in, 3);
  const Tensor& var = need_float(node, in, 4);
  const float eps = node.attr_float("epsilon", 1e-5f);
  if (x.shape.size() < 2) bad(node, "input must be at least 2-D");
  const std::int64_t n = x.shape[0], c = x.shape[1], spatial = product(x.shape, 2);
  Tensor out = x;
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t k = 0; k < c; ++k) {
      const float a = scale.f[k] / std::sqrt(var.f[k] + eps);
      const float t = bias.f[k] - a * mean.f[k];
      float* p = out.f.data() + (b * c + k) * spatial;
      for (std::int64_t s = 0; s < spatial; ++s) p[s] = a * p[s] + t;
    }
  return out;
}

Tensor softmax(const Node& node, const std::vector<const Tensor*>& in, std::int64_t opset) {
  const Tensor& x = need_float(node, in, 0);
  Tensor out = x;
  const auto rank = x.shape.size();
  const std::int64_t axis = normalize_axis(node, node.attr_int("axis", opset >= 13 ? -1 : 1), rank);
  std::int64_t outer, len, inner;
  if (opset >= 13) {
    outer = product(x.shape, 0, std::size_t(axis));
    len = x.shape[std::size_t(axis)];
    inner = product(x.shape, std::size_t(axis) + 1);
  } else {
    outer = product(x.shape, 0, std::size_t(axis));
    len = product(x.shape, std::size_t(axis));
    inner = 1;
  }
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      float* base = out.f.data() + o * len * inner + i;
      float mx = -std::numeric_limits<float>::infinity();
      for (std::int64_t k = 0; k < len; ++k) mx = std::max(mx, base[k * inner]);
      double sum = 0;
      for (std::int64_t k = 0; k < len; ++k) sum += std::exp(double(base[k * inner]) - mx);
      for (std::int64_t k = 0; k < len; ++k) base[k * inner] = float(std::exp(double(base[k * inner]) - mx) / sum);
    }
  return out;
}

Tensor reduce(const Node& node, const std::vector<const Tensor*>& in, bool mean) {
  const Tensor& x = need_float(node, in, 0);
  std::vector<std::int64_t> axes = node.attr_ints("axes");
  if (in.size() > 1 && in[1]) axes = as_ints(*in[1]);
  const bool keep = node.attr_int("keepdims", 1) != 0;
  const auto rank = x.shape.size();
  std::vector<bool> reduced(rank, axes.empty() && node.attr_int("noop_with_empty_axes", 0) == 0);
  for (auto a : axes) reduced[std::size_t(normalize_axis(node, a, rank))] = true;

  Shape kept_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) kept_shape[d] = reduced[d] ? 1 : x.shape[d];
  std::vector<double> acc(std::size_t(product(kept_shape)), 0.0);
  const Shape xst = strides_of(x.shape), kst = strides_of(kept_shape);
  Shape idx(rank, 0);
  for (std::int64_t k = 0; k < x.numel(); ++k) {
    std::int64_t rem = k, target = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      idx[d] = rem / xst[d];
      rem %= xst[d];
      if (!reduced[d]) target += idx[d] * kst[d];
    }
    acc[std::size_t(target)] += x.f[std::size_t(k)];
  }
  const double count = double(x.numel()) / double(acc.size());
  Tensor out;
  out.f.resize(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out.f[k] = float(mean ? acc[k] / count : acc[k]);
  if (keep) {
    out.shape = kept_shape;
  } else {
    for (std::size_t d = 0; d < rank; ++d)
      if (!reduced[d]) out.shape.push_back(x.shape[d]);
  }
  return out;
}

Tensor transpose(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = need(node, in, 0);
  const auto rank = x.shape.size();
  std::vector<std::int64_t> perm = node.attr_ints("perm");
  if (perm.empty()) {
    perm.resize(rank);
    for (std::size_t d = 0; d < rank; ++d) perm[d] = std::int64_t(rank - 1 - d);
  }
  if (perm.size() != rank) bad(node, "perm length differs from rank");
  Shape out_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) out_shape[d] = x.shape[std::size_t(perm[d])];
  const Shape xst = strides_of(x.shape);
  Tensor out;
  out.dtype = x.dtype;
  out.shape = out_shape;
  const std::int64_t n = x.numel();
  if (x.dtype == DType::float32)
    out.f.resize(std::size_t(n));
  else
    out.i.resize(std::size_t(n));
  Shape idx(rank, 0);
  for (std::int64_t k = 0; k < n; ++k) {
    std::int64_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) src += idx[d] * xst[std::size_t(perm[d])];
    if (x.dtype == DType::float32)
      out.f[std::size_t(k)] = x.f[std::size_t(src)];
    else
      out.i[std::size_t(k)] = x.i[std::size_t(src)];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

Tensor concat(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& first = need(node, in, 0);
  const auto rank = first.shape.size();
  const std::int64_t axis = normalize_axis(node, node.attr_int("axis", 0), rank);
  Tensor out;
  out.dtype = first.dtype;
  out.shape = first.shape;
  out.shape[std::size_t(axis)] = 0;
  for (const Tensor* t : in) {
    if (!t || t->shape.size() != rank || t->dtype != first.dtype) bad(node, "inputs differ in rank or type");
    out.shape[std::size_t(axis)] += t->shape[std::size_t(axis)];
  }
  const std::int64_t outer = product(first.shape, 0, std::size_t(axis));
  for (std::int64_t o = 0; o < outer; ++o)
    for (const Tensor* t : in) {
      const std::int64_t chunk = product(t->shape, std::size_t(axis));
      if (t->dtype == DType::float32)
        out.f.insert(out.f.end(), t->f.begin() + o * chunk, t->f.begin() + (o + 1) * chunk);
      else
        out.i.insert(out.i.end(), t->i.begin() + o * chunk, t->i.begin() + (o + 1) * chunk);
    }
  return out;
}

Tensor gather(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = need(node, in, 0);
  const Tensor& indices = need(node, in, 1);
  const std::int64_t axis = normalize_axis(node, node.attr_int("axis", 0), x.shape.size());
  const auto idx = as_ints(indices);
  const std::int64_t outer = product(x.shape, 0, std::size_t(axis));
  const std::int64_t len = x.shape[std::size_t(axis)];
  const std::int64_t inner = product(x.shape, std::size_t(axis) + 1);
  Tensor out;
  out.dtype = x.dtype;
  out.shape.assign(x.shape.begin(), x.shape.begin() + axis);
  out.shape.insert(out.shape.end(), indices.shape.begin(), indices.shape.end());
  out.shape.insert(out.shape.end(), x.shape.begin() + axis + 1, x.shape.end());
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t j : idx) {
      if (j < 0) j += len;
      if (j < 0 || j >= len) bad(node, "index out of range");
      const std::int64_t base = (o * len + j) * inner;
      if (x.dtype == DType::float32)
        out.f.insert(out.f.end(), x.f.begin() + base, x.f.begin() + base + inner);
      else
        out.i.insert(out.i.end(), x.i.begin() + base, x.i.begin() + base + inner);
    }
  return out;
}

Tensor reshape_to(const Tensor& x, Shape shape) {
  Tensor out = x;
  out.shape = std::move(shape);
  return out;
}

std::vector<std::int64_t> axes_of(const Node& node, const std::vector<const Tensor*>& in) {
  if (in.size() > 1 && in[1]) return as_ints(*in[1]);
  return node.attr_ints("axes");
}

Tensor constant(const Node& node) {
  if (const Attribute* a = node.attr("value"); a && a->t) return *a->t;
  if (const Attribute* a = node.attr("value_float")) return Tensor::floats({}, {a->f});
  if (const Attribute* a = node.attr("value_floats")) return Tensor::floats({std::int64_t(a->floats.size())}, a->floats);
  if (const Attribute* a = node.attr("value_int")) return Tensor::ints({}, {a->i});
  if (const Attribute* a = node.attr("value_ints")) return Tensor::ints({std::int64_t(a->ints.size())}, a->ints);
  bad(node, "unsupported constant form");
}

}  // namespace

std::vector<Tensor> evaluate(const Node& node, const std::vector<const Tensor*>& in, std::int64_t opset) {
  const std::string& op = node.op_type;
  if (op == "Identity" || op == "Dropout") return {need(node, in, 0)};
  if (op == "Constant") return {constant(node)};
  if (op == "Relu") return {unary(node, in, [](float v) { return v > 0 ? v : 0.0f; })};
  if (op == "LeakyRelu") {
    const float alpha = node.attr_float("alpha", 0.01f);
    return {unary(node, in, [alpha](float v) { return v > 0 ? v : alpha * v; })};
  }
  if (op == "Sigmoid") return {unary(node, in, [](float v) { return float(1.0 / (1.0 + std::exp(-double(v)))); })};
  if (op == "Tanh") return {unary(node, in, [](float v) { return std::tanh(v); })};
  if (op == "Exp") return {unary(node, in, [](float v) { return std::exp(v); })};
  if (op == "Sqrt") return {unary(node, in, [](float v) { return std::sqrt(v); })};
  if (op == "Neg") return {unary(node, in, [](float v) { return -v; })};
  if (op == "Abs") return {unary(node, in, [](float v) { return std::abs(v); })};
  if (op == "Clip") {
    float lo = node.attr_float("min", -std::numeric_limits<float>::infinity());
    float hi = node.attr_float("max", std::numeric_limits<float>::infinity());
    if (in.size() > 1 && in[1]) lo = need_float(node, in, 1).f.at(0);
    if (in.size() > 2 && in[2]) hi = need_float(node, in, 2).f.at(0);
    return {unary(node, in, [lo, hi](float v) { return std::clamp(v, lo, hi); })};
  }
  if (op == "Add") return {binary(node, in, std::plus<float>(), std::plus<std::int64_t>())};
  if (op == "Sub") return {binary(node, in, std::minus<float>(), std::minus<std::int64_t>())};
  if (op == "Mul") return {binary(node, in, std::multiplies<float>(), std::multiplies<std::int64_t>())};
  if (op == "Div") return {binary(node, in, std::divides<float>(), [](std::int64_t a, std::int64_t b) { return b ? a / b : 0; })};
  if (op == "Max") return {binary(node, in, [](float a, float b) { return std::max(a, b); }, [](std::int64_t a, std::int64_t b) { return std::max(a, b); })};
  if (op == "Min") return {binary(node, in, [](float a, float b) { return std::min(a, b); }, [](std::int64_t a, std::int64_t b) { return std::min(a, b); })};
  if (op == "MatMul") return {matmul(node, need_float(node, in, 0), need_float(node, in, 1))};
  if (op == "Gemm") return {gemm(node, in)};
  if (op == "Conv") return {conv(node, in)};
  if (op == "MaxPool") return {pool(node, in, true)};
  if (op == "AveragePool") return {pool(node, in, false)};
  if (op == "GlobalAveragePool") return {global_average_pool(node, in)};
  if (op == "BatchNormalization") return {batch_norm(node, in)};
  if (op == "Softmax") return {softmax(node, in, opset)};
  if (op == "ReduceMean") return {reduce(node, in, true)};
  if (op == "ReduceSum") return {reduce(node, in, false)};
  if (op == "Transpose") return {transpose(node, in)};
  if (op == "Concat") return {concat(node, in)};
  if (op == "Gather") return {gather(node, in)};
  if (op == "Shape") {
    const Tensor& x = need(node, in, 0);
    return {Tensor::ints({std::int64_t(x.shape.size())}, x.shape)};
  }
  if (op == "Cast") {
    Tensor x = need(node, in, 0);
    const std::int64_t to = node.attr_int("to", 1);
    if (to == 1 && x.dtype == DType::int64) {
      x.f.assign(x.i.begin(), x.i.end());
      x.i.clear();
      x.dtype = DType::float32;
    } else if (to == 7 && x.dtype == DType::float32) {
      for (float v : x.f) x.i.push_back(std::int64_t(v));
      x.f.clear();
      x.dtype = DType::int64;
    } else if (to != 1 && to != 7) {
      bad(node, "unsupported cast target " + std::to_string(to));
    }
    return {x};
  }
  if (op == "Flatten") {
    const Tensor& x = need(node, in, 0);
    const std::int64_t axis = node.attr_int("axis", 1);
    const std::int64_t a = axis < 0 ? axis + std::int64_t(x.shape.size()) : axis;
    return {reshape_to(x, {product(x.shape, 0, std::size_t(a)), product(x.shape, std::size_t(a))})};
  }
  if (op == "Reshape") {
    const Tensor& x = need(node, in, 0);
    Shape target = as_ints(need(node, in, 1));
    const bool allow_zero = node.attr_int("allowzero", 0) != 0;
    std::int64_t known = 1, infer = -1;
    for (std::size_t d = 0; d < target.size(); ++d) {
      if (target[d] == 0 && !allow_zero) target[d] = x.shape.at(d);
      if (target[d] == -1) {
        if (infer >= 0) bad(node, "more than one -1 in target shape");
        infer = std::int64_t(d);
      } else {
        known *= target[d];
      }
    }
    if (infer >= 0) target[std::size_t(infer)] = known ? x.numel() / known : 0;
    if (product(target) != x.numel()) bad(node, "element count changes");
    return {reshape_to(x, target)};
  }
  if (op == "Squeeze") {
    const Tensor& x = need(node, in, 0);
    const auto axes = axes_of(node, in);
    std::vector<bool> drop(x.shape.size(), false);
    for (auto a : axes) drop[std::size_t(normalize_axis(node, a, x.shape.size()))] = true;
    Shape s;
    for (std::size_t d = 0; d < x.shape.size(); ++d)
      if (!(axes.empty() ? x.shape[d] == 1 : bool(drop[d]))) s.push_back(x.shape[d]);
    return {reshape_to(x, s)};
  }
  if (op == "Unsqueeze") {
    const Tensor& x = need(node, in, 0);
    auto axes = axes_of(node, in);
    const std::size_t rank = x.shape.size() + axes.size();
    for (auto& a : axes) a = normalize_axis(node, a, rank);
    std::sort(axes.begin(), axes.end());
    Shape s = x.shape;
    for (auto a : axes) s.insert(s.begin() + a, 1);
    return {reshape_to(x, s)};
  }
  bad(node, "unsupported operator");
}

}  // namespace ace::nn

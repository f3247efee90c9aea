#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fovrl/errors.hpp"
#include "fovrl/simd.hpp"
#include "fovrl/tensor.hpp"

namespace fovrl::tensor {
namespace {

double sigmoid_of(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) throw InvalidShape(std::string(op) + ": operand sizes differ (" + std::to_string(a) + " vs " +
                                 std::to_string(b) + ")");
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (element_count(shape) != values.size()) {
    throw InvalidShape("tensor of shape " + shape_string(shape) + " given " + std::to_string(values.size()) +
                       " values");
  }
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(element_count(shape), fill) {}

// ---- node plumbing ----------------------------------------------------------

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) throw ContractViolation("Var does not belong to this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw ContractViolation("Var does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::push(Shape shape, std::vector<double> values, bool requires_grad) {
  Node n;
  n.count = values.size();
  n.shape = std::move(shape);
  n.owned = std::move(values);
  n.data = n.owned.data();
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

double* Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  n.touched = true;
  if (n.grad_external) return n.grad_external;
  if (n.grad_owned.size() != n.count) n.grad_owned.assign(n.count, 0.0);
  return n.grad_owned.data();
}

std::span<const double> Tape::grad_of(std::size_t id) const {
  const Node& n = nodes_[id];
  return {n.grad_owned.data(), n.grad_owned.size()};
}

std::span<const double> Tape::data_of(std::size_t id) const {
  const Node& n = nodes_[id];
  return {n.data, n.count};
}

Var Tape::constant(Tensor t) { return push(std::move(t.shape), std::move(t.values), false); }

Var Tape::constant(std::vector<double> values, Shape shape) { return constant(Tensor(std::move(shape), std::move(values))); }

Var Tape::scalar(double v) { return push({1}, {v}, false); }

Var Tape::variable(Tensor t) { return push(std::move(t.shape), std::move(t.values), true); }

Var Tape::external(std::span<const double> values, Shape shape, std::span<double> grad) {
  if (element_count(shape) != values.size()) {
    throw InvalidShape("external leaf of shape " + shape_string(shape) + " given " + std::to_string(values.size()) +
                       " values");
  }
  if (!grad.empty()) require_same_size(grad.size(), values.size(), "external");
  Node n;
  n.shape = std::move(shape);
  n.data = values.data();
  n.count = values.size();
  n.grad_external = grad.empty() ? nullptr : grad.data();
  n.requires_grad = !grad.empty();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

std::span<const double> Tape::value(Var v) const {
  const Node& n = node(v);
  return {n.data, n.count};
}

const Shape& Tape::shape(Var v) const { return node(v).shape; }

double Tape::scalar_value(Var v) const {
  const Node& n = node(v);
  if (n.count != 1) throw ContractViolation("scalar_value on a non-scalar node " + shape_string(n.shape));
  return n.data[0];
}

std::vector<double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad_external) return {n.grad_external, n.grad_external + n.count};
  if (n.grad_owned.size() == n.count) return n.grad_owned;
  return std::vector<double>(n.count, 0.0);
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::backward(Var loss) {
  Node& root = node(loss);
  if (root.count != 1) throw ContractViolation("backward() needs a scalar loss, got " + shape_string(root.shape));
  for (Node& n : nodes_) {
    n.touched = false;
    if (!n.grad_owned.empty()) std::fill(n.grad_owned.begin(), n.grad_owned.end(), 0.0);
  }
  if (!root.requires_grad) return;
  grad_slot(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.touched && n.backward) n.backward();
  }
}

// ---- primitives ---------------------------------------------------------------

Var Tape::conv2d(Var input, Var kernels, Var bias, int stride) {
  const Shape& in_shape = shape(input);
  const Shape& k_shape = shape(kernels);
  if (in_shape.size() != 3 || k_shape.size() != 4) {
    throw InvalidShape("conv2d expects input [C,H,W] and kernels [O,C,kh,kw], got " + shape_string(in_shape) +
                       " and " + shape_string(k_shape));
  }
  if (stride < 1) throw InvalidShape("conv2d stride must be >= 1");
  const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
  const std::size_t O = k_shape[0], kh = k_shape[2], kw = k_shape[3];
  if (k_shape[1] != C) throw InvalidShape("conv2d channel mismatch");
  if (kh > H || kw > W || kh == 0 || kw == 0) throw InvalidShape("conv2d kernel larger than input");
  if (node(bias).count != O) throw InvalidShape("conv2d bias must have one entry per output channel");
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t Ho = (H - kh) / s + 1, Wo = (W - kw) / s + 1;
  const std::size_t P = Ho * Wo, K = C * kh * kw;

  // im2col: col[p] holds the receptive field of output position p.
  std::vector<double> col(P * K);
  const auto x = value(input);
  for (std::size_t oy = 0; oy < Ho; ++oy) {
    for (std::size_t ox = 0; ox < Wo; ++ox) {
      double* dst = col.data() + (oy * Wo + ox) * K;
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const double* src = x.data() + (c * H + oy * s + ky) * W + ox * s;
          std::copy(src, src + kw, dst);
          dst += kw;
        }
      }
    }
  }
  const auto w = value(kernels);
  const auto b = value(bias);
  std::vector<double> out(O * P);
  for (std::size_t o = 0; o < O; ++o) {
    const std::span<const double> wo = w.subspan(o * K, K);
    for (std::size_t p = 0; p < P; ++p) out[o * P + p] = b[o] + simd::dot(wo, {col.data() + p * K, K});
  }
  const bool rg = requires_grad(input) || requires_grad(kernels) || requires_grad(bias);
  Var y = push({O, Ho, Wo}, std::move(out), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, y, input, kernels, bias, col = std::move(col), C, H, W, O, kh, kw, s, Ho, Wo, P,
                           K]() {
    const auto gy = grad_of(y.id);
    if (requires_grad(kernels)) {
      double* gw = grad_slot(kernels.id);
      for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t p = 0; p < P; ++p) {
          const double g = gy[o * P + p];
          if (g != 0.0) simd::axpy(g, {col.data() + p * K, K}, {gw + o * K, K});
        }
      }
    }
    if (requires_grad(bias)) {
      double* gb = grad_slot(bias.id);
      for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t p = 0; p < P; ++p) gb[o] += gy[o * P + p];
      }
    }
    if (requires_grad(input)) {
      const auto wv = data_of(kernels.id);
      std::vector<double> gcol(P * K, 0.0);
      for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t p = 0; p < P; ++p) {
          const double g = gy[o * P + p];
          if (g != 0.0) simd::axpy(g, wv.subspan(o * K, K), {gcol.data() + p * K, K});
        }
      }
      double* gx = grad_slot(input.id);
      for (std::size_t oy = 0; oy < Ho; ++oy) {
        for (std::size_t ox = 0; ox < Wo; ++ox) {
          const double* src = gcol.data() + (oy * Wo + ox) * K;
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              double* dst = gx + (c * H + oy * s + ky) * W + ox * s;
              for (std::size_t kx = 0; kx < kw; ++kx) dst[kx] += *src++;
            }
          }
        }
      }
    }
  };
  return y;
}

Var Tape::affine(Var x, Var weight, Var bias) {
  const Shape& ws = shape(weight);
  if (ws.size() != 2) throw InvalidShape("affine weight must be [out,in], got " + shape_string(ws));
  const std::size_t out_n = ws[0], in_n = ws[1];
  if (node(x).count != in_n) {
    throw InvalidShape("affine input has " + std::to_string(node(x).count) + " elements, weight expects " +
                       std::to_string(in_n));
  }
  if (node(bias).count != out_n) throw InvalidShape("affine bias size mismatch");
  const auto xv = value(x);
  const auto wv = value(weight);
  const auto bv = value(bias);
  std::vector<double> out(out_n);
  for (std::size_t o = 0; o < out_n; ++o) out[o] = bv[o] + simd::dot(wv.subspan(o * in_n, in_n), xv);
  const bool rg = requires_grad(x) || requires_grad(weight) || requires_grad(bias);
  Var y = push({out_n}, std::move(out), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, y, x, weight, bias, out_n, in_n]() {
    const auto gy = grad_of(y.id);
    const auto xv = data_of(x.id);
    const auto wv = data_of(weight.id);
    if (requires_grad(weight)) {
      double* gw = grad_slot(weight.id);
      for (std::size_t o = 0; o < out_n; ++o) {
        if (gy[o] != 0.0) simd::axpy(gy[o], xv, {gw + o * in_n, in_n});
      }
    }
    if (requires_grad(bias)) {
      double* gb = grad_slot(bias.id);
      for (std::size_t o = 0; o < out_n; ++o) gb[o] += gy[o];
    }
    if (requires_grad(x)) {
      double* gx = grad_slot(x.id);
      for (std::size_t o = 0; o < out_n; ++o) {
        if (gy[o] != 0.0) simd::axpy(gy[o], wv.subspan(o * in_n, in_n), {gx, in_n});
      }
    }
  };
  return y;
}

#define FOVRL_UNARY_OP(NAME, FWD, DERIV)                                                   \
  Var Tape::NAME(Var x) {                                                                   \
    const auto xv = value(x);                                                               \
    std::vector<double> out(xv.size());                                                     \
    for (std::size_t i = 0; i < xv.size(); ++i) {                                           \
      const double xi = xv[i];                                                              \
      out[i] = (FWD);                                                                       \
    }                                                                                       \
    const bool rg = requires_grad(x);                                                       \
    Var y = push(shape(x), std::move(out), rg);                                             \
    if (rg) {                                                                               \
      nodes_[y.id].backward = [this, x, y]() {                                              \
        const auto gy = grad_of(y.id);                                                      \
        const auto xs = data_of(x.id);                                                      \
        const auto ys = data_of(y.id);                                                      \
        double* gx = grad_slot(x.id);                                                       \
        for (std::size_t i = 0; i < gy.size(); ++i) {                                       \
          const double xi = xs[i];                                                          \
          const double yi = ys[i];                                                          \
          (void)xi;                                                                         \
          (void)yi;                                                                         \
          gx[i] += gy[i] * (DERIV);                                                         \
        }                                                                                   \
      };                                                                                    \
    }                                                                                       \
    return y;                                                                               \
  }

// relu'(0) is taken as 0.
FOVRL_UNARY_OP(relu, xi > 0.0 ? xi : 0.0, xi > 0.0 ? 1.0 : 0.0)
FOVRL_UNARY_OP(tanh, std::tanh(xi), 1.0 - yi * yi)
FOVRL_UNARY_OP(sigmoid, sigmoid_of(xi), yi * (1.0 - yi))
FOVRL_UNARY_OP(log, std::log(xi), 1.0 / xi)

#undef FOVRL_UNARY_OP

Var Tape::add(Var a, Var b) {
  require_same_size(node(a).count, node(b).count, "add");
  const auto av = value(a), bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(shape(a), std::move(out), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, a, b, y]() {
    const auto gy = grad_of(y.id);
    for (Var in : {a, b}) {
      if (!requires_grad(in)) continue;
      double* g = grad_slot(in.id);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
    }
  };
  return y;
}

Var Tape::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Tape::mul(Var a, Var b) {
  require_same_size(node(a).count, node(b).count, "mul");
  const auto av = value(a), bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(shape(a), std::move(out), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, a, b, y]() {
    const auto gy = grad_of(y.id);
    const auto av = data_of(a.id), bv = data_of(b.id);
    if (requires_grad(a)) {
      double* g = grad_slot(a.id);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * bv[i];
    }
    if (requires_grad(b)) {
      double* g = grad_slot(b.id);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * av[i];
    }
  };
  return y;
}

Var Tape::scale(Var x, double factor) {
  const auto xv = value(x);
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = factor * xv[i];
  const bool rg = requires_grad(x);
  Var y = push(shape(x), std::move(out), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, x, y, factor]() {
    const auto gy = grad_of(y.id);
    double* g = grad_slot(x.id);
    for (std::size_t i = 0; i < gy.size(); ++i) g[i] += factor * gy[i];
  };
  return y;
}

Var Tape::sum(Var x) {
  const auto xv = value(x);
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  const bool rg = requires_grad(x);
  Var y = push({1}, {total}, rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, x, y]() {
    const double gy = grad_of(y.id)[0];
    double* g = grad_slot(x.id);
    const std::size_t n = data_of(x.id).size();
    for (std::size_t i = 0; i < n; ++i) g[i] += gy;
  };
  return y;
}

Var Tape::softmax(Var logits) {
  const auto z = value(logits);
  if (z.empty()) throw InvalidShape("softmax of an empty tensor");
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += (p[i] = std::exp(z[i] - zmax));
  for (double& pi : p) pi /= total;
  const bool rg = requires_grad(logits);
  Var y = push(shape(logits), std::move(p), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, logits, y]() {
    const auto gy = grad_of(y.id);
    const auto p = data_of(y.id);
    double inner = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) inner += gy[i] * p[i];
    double* g = grad_slot(logits.id);
    for (std::size_t i = 0; i < p.size(); ++i) g[i] += p[i] * (gy[i] - inner);
  };
  return y;
}

Var Tape::log_softmax(Var logits) {
  const auto z = value(logits);
  if (z.empty()) throw InvalidShape("log_softmax of an empty tensor");
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double zi : z) total += std::exp(zi - zmax);
  const double lse = zmax + std::log(total);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  const bool rg = requires_grad(logits);
  Var y = push(shape(logits), std::move(out), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, logits, y]() {
    const auto gy = grad_of(y.id);
    const auto ly = data_of(y.id);
    const double gsum = std::accumulate(gy.begin(), gy.end(), 0.0);
    double* g = grad_slot(logits.id);
    for (std::size_t i = 0; i < ly.size(); ++i) g[i] += gy[i] - std::exp(ly[i]) * gsum;
  };
  return y;
}

Var Tape::select(Var x, std::size_t index) {
  const auto xv = value(x);
  if (index >= xv.size()) throw InvalidShape("select index " + std::to_string(index) + " out of range");
  const bool rg = requires_grad(x);
  Var y = push({1}, {xv[index]}, rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, x, y, index]() { grad_slot(x.id)[index] += grad_of(y.id)[0]; };
  return y;
}

Var Tape::reshape(Var x, Shape new_shape) {
  const auto xv = value(x);
  if (element_count(new_shape) != xv.size()) {
    throw InvalidShape("cannot reshape " + shape_string(shape(x)) + " to " + shape_string(new_shape));
  }
  const bool rg = requires_grad(x);
  Var y = push(std::move(new_shape), std::vector<double>(xv.begin(), xv.end()), rg);
  if (!rg) return y;
  nodes_[y.id].backward = [this, x, y]() {
    const auto gy = grad_of(y.id);
    double* g = grad_slot(x.id);
    for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
  };
  return y;
}

std::pair<Var, Var> Tape::lstm_cell(Var x, Var h, Var c, Var wx, Var wh, Var b) {
  const std::size_t H = node(h).count;
  const std::size_t n_in = node(x).count;
  if (node(c).count != H) throw InvalidShape("lstm_cell: h and c sizes differ");
  const Shape& wxs = shape(wx);
  const Shape& whs = shape(wh);
  if (wxs.size() != 2 || wxs[0] != 4 * H || wxs[1] != n_in) {
    throw InvalidShape("lstm_cell: wx must be [4H,n_in], got " + shape_string(wxs));
  }
  if (whs.size() != 2 || whs[0] != 4 * H || whs[1] != H) {
    throw InvalidShape("lstm_cell: wh must be [4H,H], got " + shape_string(whs));
  }
  if (node(b).count != 4 * H) throw InvalidShape("lstm_cell: bias must have 4H entries");

  const auto xv = value(x), hv = value(h), cv = value(c);
  const auto wxv = value(wx), whv = value(wh), bv = value(b);
  // gates = [i | f | g | o] after their nonlinearities.
  std::vector<double> gates(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double z = bv[r] + simd::dot(wxv.subspan(r * n_in, n_in), xv) + simd::dot(whv.subspan(r * H, H), hv);
    gates[r] = (r >= 2 * H && r < 3 * H) ? std::tanh(z) : sigmoid_of(z);
  }
  // Packed output [h' | c'] so one backward sees both incoming gradients.
  std::vector<double> packed(2 * H);
  for (std::size_t j = 0; j < H; ++j) {
    const double cn = gates[H + j] * cv[j] + gates[j] * gates[2 * H + j];
    packed[H + j] = cn;
    packed[j] = gates[3 * H + j] * std::tanh(cn);
  }
  const bool rg = requires_grad(x) || requires_grad(h) || requires_grad(c) || requires_grad(wx) ||
                  requires_grad(wh) || requires_grad(b);
  Var cell = push({2 * H}, std::move(packed), rg);
  if (rg) {
    nodes_[cell.id].backward = [this, cell, x, h, c, wx, wh, b, H, n_in, gates = std::move(gates)]() {
      const auto g_out = grad_of(cell.id);
      const auto out = data_of(cell.id);
      const auto cv = data_of(c.id);
      std::vector<double> dz(4 * H);
      std::vector<double> dc_prev(H);
      for (std::size_t j = 0; j < H; ++j) {
        const double i = gates[j], f = gates[H + j], g = gates[2 * H + j], o = gates[3 * H + j];
        const double tc = std::tanh(out[H + j]);
        const double dh = g_out[j];
        const double dc = g_out[H + j] + dh * o * (1.0 - tc * tc);
        dz[j] = dc * g * i * (1.0 - i);
        dz[H + j] = dc * cv[j] * f * (1.0 - f);
        dz[2 * H + j] = dc * i * (1.0 - g * g);
        dz[3 * H + j] = dh * tc * o * (1.0 - o);
        dc_prev[j] = dc * f;
      }
      const auto xv = data_of(x.id), hv = data_of(h.id);
      const auto wxv = data_of(wx.id), whv = data_of(wh.id);
      double* gwx = requires_grad(wx) ? grad_slot(wx.id) : nullptr;
      double* gwh = requires_grad(wh) ? grad_slot(wh.id) : nullptr;
      double* gx = requires_grad(x) ? grad_slot(x.id) : nullptr;
      double* gh = requires_grad(h) ? grad_slot(h.id) : nullptr;
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const double d = dz[r];
        if (d == 0.0) continue;
        if (gwx) simd::axpy(d, xv, {gwx + r * n_in, n_in});
        if (gwh) simd::axpy(d, hv, {gwh + r * H, H});
        if (gx) simd::axpy(d, wxv.subspan(r * n_in, n_in), {gx, n_in});
        if (gh) simd::axpy(d, whv.subspan(r * H, H), {gh, H});
      }
      if (requires_grad(b)) {
        double* gb = grad_slot(b.id);
        for (std::size_t r = 0; r < 4 * H; ++r) gb[r] += dz[r];
      }
      if (requires_grad(c)) {
        double* gc = grad_slot(c.id);
        for (std::size_t j = 0; j < H; ++j) gc[j] += dc_prev[j];
      }
    };
  }

  auto slice = [&](std::size_t offset) {
    const auto pv = value(cell);
    Var y = push({H}, std::vector<double>(pv.begin() + offset, pv.begin() + offset + H), rg);
    if (rg) {
      nodes_[y.id].backward = [this, cell, y, offset, H]() {
        const auto gy = grad_of(y.id);
        double* g = grad_slot(cell.id);
        for (std::size_t j = 0; j < H; ++j) g[offset + j] += gy[j];
      };
    }
    return y;
  };
  Var h_next = slice(0);
  Var c_next = slice(H);
  return {h_next, c_next};
}

}  // namespace fovrl::tensor

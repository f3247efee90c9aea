#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Reverse-mode automatic differentiation over dense double tensors, limited
// to the primitives the dual-head network and its losses need.
namespace fovrl::tensor {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v);
  explicit Tensor(Shape s, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

// Records primitives in execution order; backward() visits them in exact
// reverse order. A tape is single-owner and must outlive every Var it issued.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var constant(Tensor t);
  Var constant(std::vector<double> values, Shape shape);
  Var scalar(double v);
  // Owned leaf whose gradient is readable through grad().
  Var variable(Tensor t);
  // Leaf viewing external storage (typically a parameter tensor). The
  // gradient is accumulated into `grad`; pass an empty span for no gradient.
  // Both spans must stay alive for the tape's lifetime.
  Var external(std::span<const double> values, Shape shape, std::span<double> grad = {});

  // Valid cross-correlation: input [C,H,W], kernels [O,C,kh,kw], bias [O].
  Var conv2d(Var input, Var kernels, Var bias, int stride);
  // weight [out,in] . x + bias; x may have any shape with `in` elements.
  Var affine(Var x, Var weight, Var bias);
  Var relu(Var x);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var log(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double factor);
  Var sum(Var x);
  Var softmax(Var logits);
  Var log_softmax(Var logits);
  Var select(Var x, std::size_t index);
  Var reshape(Var x, Shape shape);
  // Standard LSTM cell with gate order (i, f, g, o):
  //   z = wx.x + wh.h + b, c' = f*c + i*g, h' = o*tanh(c').
  // wx [4H,n_in], wh [4H,H], b [4H]. Returns (h', c').
  std::pair<Var, Var> lstm_cell(Var x, Var h, Var c, Var wx, Var wh, Var b);

  std::span<const double> value(Var v) const;
  const Shape& shape(Var v) const;
  double scalar_value(Var v) const;
  // Gradient slot of an owned node after backward(); zeros if untouched.
  std::vector<double> grad(Var v) const;
  bool requires_grad(Var v) const;

  // Reverse sweep from a scalar root. Owned gradient slots are reset first;
  // external gradient spans accumulate.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> owned;
    const double* data = nullptr;
    std::size_t count = 0;
    std::vector<double> grad_owned;
    double* grad_external = nullptr;
    bool requires_grad = false;
    bool touched = false;
    std::function<void()> backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Shape shape, std::vector<double> values, bool requires_grad);
  // Mutable gradient buffer of an input node; marks it touched.
  double* grad_slot(std::size_t id);
  std::span<const double> grad_of(std::size_t id) const;
  std::span<const double> data_of(std::size_t id) const;

  std::deque<Node> nodes_;
};

}  // namespace fovrl::tensor

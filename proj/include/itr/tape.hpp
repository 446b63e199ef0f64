#pragma once

#include "itr/rng.hpp"
#include "itr/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

namespace itr {

// A named trainable (or frozen) tensor. Gradients accumulate into `grad`
// across any number of tapes until the optimizer consumes them.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<Scalar> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), trainable(train) {
    grad = Tensor<Scalar>::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  template <typename To>
  Parameter<To> cast() const {
    Parameter<To> p(name, value.template cast<To>(), trainable);
    return p;
  }
};

template <typename Scalar>
class Tape;

// Handle to a value recorded on a tape.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor<Scalar>& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Index size() const { return value().size(); }
  // Value of a 1x1 tensor.
  Scalar item() const;

  Tape<Scalar>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording. Nodes are appended in evaluation order, so the
// node list is always topologically sorted. One tape per instance; a tape is
// single-threaded and may be backpropagated once.
template <typename Scalar>
class Tape {
 public:
  using Matrix = Tensor<Scalar>;
  using VarT = Var<Scalar>;
  // Receives the gradient and value of the node's output and routes the
  // gradient to the inputs through `accumulate`.
  using BackwardFn = std::function<void(Tape&, const Matrix& grad, const Matrix& out)>;

  explicit Tape(std::uint64_t seed = 0) : rng_(seed) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  VarT constant(Matrix value);
  VarT variable(Matrix value);
  // Leaf bound to a parameter. Frozen parameters become constants. The value
  // is referenced, not copied, so the parameter must outlive the tape.
  VarT parameter(Parameter<Scalar>& p);

  // Appends an operation output. The node requires a gradient iff any input
  // does; `backward` is dropped otherwise.
  VarT record(Matrix value, std::initializer_list<VarT> inputs, BackwardFn backward);
  VarT record(Matrix value, const std::vector<VarT>& inputs, BackwardFn backward);

  // Exact gradients of a 1x1 root. Parameter gradients are added into
  // Parameter::grad; leaf gradients are readable through grad().
  void backward(const VarT& root);

  const Matrix& value(std::size_t id) const;
  bool requires_grad(const VarT& v) const { return nodes_[v.id()].requires_grad; }
  // Gradient of a node after backward(); zeros if it received none.
  Matrix grad(const VarT& v) const;

  // Used by backward rules.
  void accumulate(const VarT& v, const Matrix& g);
  template <typename Derived>
  void accumulate(const VarT& v, const Eigen::MatrixBase<Derived>& g) {
    accumulate(v, Matrix(g));
  }
  // Adds g into the block of v's gradient starting at (row, col).
  void accumulate_block(const VarT& v, Index row, Index col, const Matrix& g);
  template <typename Derived>
  void accumulate_block(const VarT& v, Index row, Index col, const Eigen::MatrixBase<Derived>& g) {
    accumulate_block(v, row, col, Matrix(g));
  }
  // Parameter bound to a node, or nullptr.
  Parameter<Scalar>* parameter_of(const VarT& v) const { return nodes_[v.id()].param; }

  Rng& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    BackwardFn backward;
    Parameter<Scalar>* param = nullptr;
    bool requires_grad = false;
  };

  VarT push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, std::size_t> param_nodes_;
  Rng rng_;
  bool backward_done_ = false;
};

template <typename Scalar>
const Tensor<Scalar>& Var<Scalar>::value() const {
  return tape_->value(id_);
}

template <typename Scalar>
Scalar Var<Scalar>::item() const {
  return value()(0, 0);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace itr

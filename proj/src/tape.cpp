#include "itr/tape.hpp"

#include "itr/errors.hpp"

namespace itr {

template <typename Scalar>
typename Tape<Scalar>::VarT Tape<Scalar>::push(Node node) {
  nodes_.push_back(std::move(node));
  return VarT(this, nodes_.size() - 1);
}

template <typename Scalar>
typename Tape<Scalar>::VarT Tape<Scalar>::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename Scalar>
typename Tape<Scalar>::VarT Tape<Scalar>::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename Scalar>
typename Tape<Scalar>::VarT Tape<Scalar>::parameter(Parameter<Scalar>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return VarT(this, it->second);
  }
  Node n;
  n.external = &p.value;
  if (p.trainable) {
    n.param = &p;
    n.requires_grad = true;
  }
  VarT v = push(std::move(n));
  param_nodes_.emplace(&p, v.id());
  return v;
}

template <typename Scalar>
typename Tape<Scalar>::VarT Tape<Scalar>::record(Matrix value, std::initializer_list<VarT> inputs,
                                                 BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const VarT& in : inputs) {
    if (nodes_[in.id()].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename Scalar>
typename Tape<Scalar>::VarT Tape<Scalar>::record(Matrix value, const std::vector<VarT>& inputs,
                                                 BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const VarT& in : inputs) {
    if (nodes_[in.id()].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename Scalar>
const Tensor<Scalar>& Tape<Scalar>::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

template <typename Scalar>
Tensor<Scalar> Tape<Scalar>::grad(const VarT& v) const {
  const Node& n = nodes_[v.id()];
  const Matrix& val = value(v.id());
  if (n.grad.size() == 0) return Matrix::Zero(val.rows(), val.cols());
  return n.grad;
}

template <typename Scalar>
void Tape<Scalar>::accumulate(const VarT& v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

template <typename Scalar>
void Tape<Scalar>::accumulate_block(const VarT& v, Index row, Index col, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    const Matrix& val = value(v.id());
    n.grad = Matrix::Zero(val.rows(), val.cols());
  }
  n.grad.block(row, col, g.rows(), g.cols()) += g;
}

template <typename Scalar>
void Tape<Scalar>::backward(const VarT& root) {
  if (backward_done_) {
    throw ContractError("backward: tape already consumed; record a new tape");
  }
  const Matrix& rv = value(root.id());
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ContractError("backward: root must be scalar, got " + shape_of(rv));
  }
  backward_done_ = true;
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, n.grad, n.value);
    }
  }
  for (Node& n : nodes_) {
    if (n.param && n.grad.size() != 0) {
      n.param->grad += n.grad;
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace itr

#include "itr/optim.hpp"

#include "itr/errors.hpp"

#include <cmath>
#include <iostream>

namespace itr {

void AdaDeltaConfig::validate() const {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("adadelta rho must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adadelta eps must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
}

template <typename Scalar>
bool adadelta_step(Parameter<Scalar>& param, AdaDeltaSlot<Scalar>& slot, const AdaDeltaConfig& cfg) {
  if (param.grad.rows() != param.value.rows() || param.grad.cols() != param.value.cols()) {
    throw DimensionError("adadelta_step: gradient " + shape_of(param.grad) + " for parameter " + param.name + " " +
                         shape_of(param.value));
  }
  if (!param.grad.allFinite()) return false;
  if (slot.eg2.size() == 0) {
    slot.eg2 = Tensor<Scalar>::Zero(param.value.rows(), param.value.cols());
    slot.edx2 = Tensor<Scalar>::Zero(param.value.rows(), param.value.cols());
  }
  const auto rho = static_cast<Scalar>(cfg.rho);
  const auto eps = static_cast<Scalar>(cfg.eps);
  const auto lr = static_cast<Scalar>(cfg.lr);
  auto g = param.grad.array();
  auto eg2 = slot.eg2.array();
  auto edx2 = slot.edx2.array();
  eg2 = rho * eg2 + (Scalar(1) - rho) * g.square();
  const auto dx = (-lr * (edx2 + eps).sqrt() / (eg2 + eps).sqrt() * g).eval();
  edx2 = rho * edx2 + (Scalar(1) - rho) * dx.square();
  param.value.array() += dx;
  return true;
}

template <typename Scalar>
std::size_t AdaDelta<Scalar>::step(const std::vector<Parameter<Scalar>*>& params) {
  std::size_t skipped = 0;
  for (Parameter<Scalar>* p : params) {
    if (!p->trainable) continue;
    if (!adadelta_step(*p, slots_[p], cfg_)) {
      ++skipped;
      std::cerr << "warning: non-finite gradient for " << p->name << ", update skipped\n";
    }
    p->zero_grad();
  }
  return skipped;
}

template <typename Scalar>
double global_grad_norm(const std::vector<Parameter<Scalar>*>& params) {
  double total = 0.0;
  for (const Parameter<Scalar>* p : params) {
    if (p->trainable) total += p->grad.template cast<double>().squaredNorm();
  }
  return std::sqrt(total);
}

template <typename Scalar>
void scale_gradients(const std::vector<Parameter<Scalar>*>& params, double factor) {
  for (Parameter<Scalar>* p : params) {
    if (p->trainable) p->grad *= static_cast<Scalar>(factor);
  }
}

template <typename Scalar>
double clip_gradients(const std::vector<Parameter<Scalar>*>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) scale_gradients(params, max_norm / norm);
  return norm;
}

#define ITR_INSTANTIATE_OPTIM(S)                                                           \
  template bool adadelta_step(Parameter<S>&, AdaDeltaSlot<S>&, const AdaDeltaConfig&);     \
  template class AdaDelta<S>;                                                              \
  template double global_grad_norm(const std::vector<Parameter<S>*>&);                     \
  template double clip_gradients(const std::vector<Parameter<S>*>&, double);               \
  template void scale_gradients(const std::vector<Parameter<S>*>&, double);

ITR_INSTANTIATE_OPTIM(float)
ITR_INSTANTIATE_OPTIM(double)

#undef ITR_INSTANTIATE_OPTIM

}  // namespace itr

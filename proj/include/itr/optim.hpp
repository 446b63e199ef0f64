#pragma once

#include "itr/tape.hpp"

#include <cstddef>
#include <unordered_map>
#include <vector>

namespace itr {

struct AdaDeltaConfig {
  double rho = 0.95;
  double eps = 1e-6;
  double lr = 0.5;

  void validate() const;
};

// Running averages E[g^2] and E[dx^2] for one parameter.
template <typename Scalar>
struct AdaDeltaSlot {
  Tensor<Scalar> eg2;
  Tensor<Scalar> edx2;
};

// E[g^2] <- rho E[g^2] + (1 - rho) g^2
// dx      = -lr * sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
// E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
// Returns false, leaving everything untouched, when g is not finite.
template <typename Scalar>
bool adadelta_step(Parameter<Scalar>& param, AdaDeltaSlot<Scalar>& slot, const AdaDeltaConfig& cfg);

template <typename Scalar>
class AdaDelta {
 public:
  explicit AdaDelta(AdaDeltaConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  // Updates every trainable parameter from its accumulated gradient, then
  // clears the gradients. Returns the number of skipped parameters.
  std::size_t step(const std::vector<Parameter<Scalar>*>& params);

  const AdaDeltaConfig& config() const { return cfg_; }
  const AdaDeltaSlot<Scalar>* slot(const Parameter<Scalar>* p) const {
    auto it = slots_.find(p);
    return it == slots_.end() ? nullptr : &it->second;
  }

 private:
  AdaDeltaConfig cfg_;
  std::unordered_map<const Parameter<Scalar>*, AdaDeltaSlot<Scalar>> slots_;
};

// L2 norm over the gradients of all trainable parameters.
template <typename Scalar>
double global_grad_norm(const std::vector<Parameter<Scalar>*>& params);

// Rescales all gradients so their global norm is at most max_norm. Returns
// the norm before clipping.
template <typename Scalar>
double clip_gradients(const std::vector<Parameter<Scalar>*>& params, double max_norm);

template <typename Scalar>
void scale_gradients(const std::vector<Parameter<Scalar>*>& params, double factor);

extern template class AdaDelta<float>;
extern template class AdaDelta<double>;

}  // namespace itr

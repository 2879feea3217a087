#include "flexner/optimizer.hpp"

#include <cmath>
#include <string>

namespace flexner {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kSgdMomentum ? "sgd_momentum" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd_momentum" || name == "sgd") return OptimizerKind::kSgdMomentum;
  if (name == "adam" || name == "adaptive") return OptimizerKind::kAdam;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(const OptimizerConfig& config, const ParameterStore& store, GroupMask trainable)
    : config_(config), trainable_(trainable) {
  if (!(config_.learning_rate > 0.0)) throw Error("learning_rate must be positive");
  first_.resize(store.size());
  second_.resize(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!trainable_.contains(store[i].group)) continue;
    first_[i] = Mat::Zero(store[i].value.rows(), store[i].value.cols());
    if (config_.kind == OptimizerKind::kAdam) second_[i] = first_[i];
  }
}

double Optimizer::learning_rate(std::size_t epoch) const {
  return config_.learning_rate / (1.0 + config_.lr_decay * static_cast<double>(epoch));
}

double Optimizer::step(ParameterStore& store, const Gradients& grads, std::size_t epoch) {
  const double norm = std::sqrt(grads.squared_norm(trainable_, store));
  double scale = 1.0;
  if (config_.gradient_clip && norm > *config_.gradient_clip) scale = *config_.gradient_clip / norm;
  const double lr = learning_rate(epoch);
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));

  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store[i];
    if (!trainable_.contains(p.group)) continue;
    const bool has_grad = grads.touched(i);
    if (config_.kind == OptimizerKind::kAdam && !has_grad) continue;
    Mat g = has_grad ? grads.to_dense(i) : Mat::Zero(p.value.rows(), p.value.cols());
    g *= scale;
    Mat& m = first_[i];
    double* value = p.value.data();
    const double* gd = g.data();
    double* md = m.data();
    const Eigen::Index size = p.value.size();
    if (config_.kind == OptimizerKind::kSgdMomentum) {
      for (Eigen::Index k = 0; k < size; ++k) {
        if (!std::isfinite(value[k])) continue;
        md[k] = config_.momentum * md[k] + gd[k];
        value[k] -= lr * md[k];
      }
    } else {
      double* vd = second_[i].data();
      for (Eigen::Index k = 0; k < size; ++k) {
        if (!std::isfinite(value[k])) continue;
        md[k] = config_.beta1 * md[k] + (1.0 - config_.beta1) * gd[k];
        vd[k] = config_.beta2 * vd[k] + (1.0 - config_.beta2) * gd[k] * gd[k];
        value[k] -= lr * (md[k] / bc1) / (std::sqrt(vd[k] / bc2) + config_.epsilon);
      }
    }
  }
  return norm;
}

}  // namespace flexner

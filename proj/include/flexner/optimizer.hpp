#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "flexner/params.hpp"

namespace flexner {

enum class OptimizerKind { kSgdMomentum, kAdam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  double learning_rate = 0.01;
  double momentum = 0.9;
  // Learning rate at epoch e is learning_rate / (1 + lr_decay * e).
  double lr_decay = 0.05;
  std::optional<double> gradient_clip = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Updates only parameters whose group is trainable; non-finite entries
// (structural -inf transitions) are never touched.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, const ParameterStore& store, GroupMask trainable);

  // Returns the gradient norm before clipping.
  double step(ParameterStore& store, const Gradients& grads, std::size_t epoch);

  double learning_rate(std::size_t epoch) const;

 private:
  OptimizerConfig config_;
  GroupMask trainable_;
  std::vector<Mat> first_;
  std::vector<Mat> second_;
  std::size_t steps_ = 0;
};

}  // namespace flexner

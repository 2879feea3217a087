#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flexner/bilateral.hpp"

// Batch kernels over sentences. The parallel variants distribute sentences
// over OpenMP threads and reduce per-sentence results in sentence order, so
// they agree bit for bit with the serial reference for any thread count.
namespace flexner::kernels {

struct BatchOptions {
  Side active = Side::kBoth;
  GroupMask trainable = GroupMask::all();
  // Dropout is active when set; sentence i draws from a stream seeded by (seed, i).
  std::optional<std::uint64_t> dropout_seed;
};

struct BatchResult {
  double loss = 0.0;
  Gradients grads;
};

BatchResult loss_and_gradient_serial(const BilateralModel& model, std::span<const Sentence> batch,
                                     const BatchOptions& options);
BatchResult loss_and_gradient_parallel(const BilateralModel& model, std::span<const Sentence> batch,
                                       const BatchOptions& options);

double loss_serial(const BilateralModel& model, std::span<const Sentence> batch, Side active);
double loss_parallel(const BilateralModel& model, std::span<const Sentence> batch, Side active);

std::vector<std::vector<int>> decode_serial(const BilateralModel& model,
                                            std::span<const Sentence> batch, Side active);
std::vector<std::vector<int>> decode_parallel(const BilateralModel& model,
                                              std::span<const Sentence> batch, Side active);

int max_threads();

}  // namespace flexner::kernels

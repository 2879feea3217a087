#include "flexner/kernels.hpp"

#include <exception>

#include <omp.h>

namespace flexner::kernels {

namespace {

std::mt19937_64 sentence_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

double sentence_loss(const BilateralModel& model, const Sentence& s, std::size_t index,
                     const BatchOptions& options, const CrfParameters& crf, Gradients* grads) {
  if (options.dropout_seed) {
    auto rng = sentence_rng(*options.dropout_seed, index);
    return model.loss(s, options.active, crf, &rng, options.trainable, grads);
  }
  return model.loss(s, options.active, crf, nullptr, options.trainable, grads);
}

class ErrorSlot {
 public:
  void capture() {
#pragma omp critical(flexner_kernel_error)
    if (!error_) error_ = std::current_exception();
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace

int max_threads() { return omp_get_max_threads(); }

BatchResult loss_and_gradient_serial(const BilateralModel& model, std::span<const Sentence> batch,
                                     const BatchOptions& options) {
  const CrfParameters crf = model.crf_parameters();
  BatchResult out{0.0, Gradients(model.params())};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Gradients g(model.params());
    out.loss += sentence_loss(model, batch[i], i, options, crf, &g);
    out.grads.accumulate(g);
  }
  return out;
}

BatchResult loss_and_gradient_parallel(const BilateralModel& model, std::span<const Sentence> batch,
                                       const BatchOptions& options) {
  const CrfParameters crf = model.crf_parameters();
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<Gradients> slots(batch.size(), Gradients(model.params()));
  std::vector<double> losses(batch.size(), 0.0);
  ErrorSlot error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      losses[i] = sentence_loss(model, batch[i], static_cast<std::size_t>(i), options, crf, &slots[i]);
    } catch (...) {
      error.capture();
    }
  }
  error.rethrow();
  BatchResult out{0.0, Gradients(model.params())};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    out.grads.accumulate(slots[i]);
  }
  return out;
}

double loss_serial(const BilateralModel& model, std::span<const Sentence> batch, Side active) {
  const CrfParameters crf = model.crf_parameters();
  double total = 0.0;
  for (const auto& s : batch) total += model.loss(s, active, crf, nullptr, GroupMask{}, nullptr);
  return total;
}

double loss_parallel(const BilateralModel& model, std::span<const Sentence> batch, Side active) {
  const CrfParameters crf = model.crf_parameters();
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  ErrorSlot error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      losses[i] = model.loss(batch[i], active, crf, nullptr, GroupMask{}, nullptr);
    } catch (...) {
      error.capture();
    }
  }
  error.rethrow();
  double total = 0.0;
  for (double l : losses) total += l;
  return total;
}

std::vector<std::vector<int>> decode_serial(const BilateralModel& model,
                                            std::span<const Sentence> batch, Side active) {
  const CrfParameters crf = model.crf_parameters();
  std::vector<std::vector<int>> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(model.decode(s, active, crf).labels);
  return out;
}

std::vector<std::vector<int>> decode_parallel(const BilateralModel& model,
                                              std::span<const Sentence> batch, Side active) {
  const CrfParameters crf = model.crf_parameters();
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<std::vector<int>> out(batch.size());
  ErrorSlot error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = model.decode(batch[i], active, crf).labels;
    } catch (...) {
      error.capture();
    }
  }
  error.rethrow();
  return out;
}

}  // namespace flexner::kernels

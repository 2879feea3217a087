#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flexner/augment.hpp"
#include "flexner/bilateral.hpp"
#include "flexner/eval.hpp"
#include "flexner/optimizer.hpp"

namespace flexner {

enum class Phase { kLeftPretrain, kRightPretrain, kCrfFinetune, kJoint };

std::string_view phase_name(Phase phase);       // LEFT_PRETRAIN, ...
std::string phase_file_stem(Phase phase);       // left_pretrain, ...

// Trainable parameter groups of each phase.
GroupMask phase_trainable(Phase phase);
// Sub-networks feeding the CRF during a phase.
Side phase_side(Phase phase);

struct TrainConfig {
  std::size_t epochs_left = 10;
  std::size_t epochs_right = 10;
  std::size_t epochs_finetune = 5;
  std::size_t epochs_joint = 10;
  std::size_t batch_size = 10;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  AugmentConfig augment;
  // 0 disables early stopping.
  std::size_t early_stopping_patience = 3;
  bool parallel = true;

  void validate() const;
};

struct PhaseState {
  Phase phase = Phase::kLeftPretrain;
  GroupMask trainable;
  double best_dev_f1 = -1.0;
  std::size_t epoch = 0;
};

struct EpochRecord {
  Phase phase = Phase::kLeftPretrain;
  std::size_t epoch = 0;  // 1-based
  double train_nll = 0.0;  // mean per training sentence
  std::optional<ClassScore> dev;
  std::size_t augmented = 0;
};

std::string format_epoch_record(const EpochRecord& record);

class Trainer {
 public:
  // `run_directory` receives <phase>-best / <phase>-last checkpoints when set;
  // `log` receives one key=value line per epoch.
  Trainer(TrainConfig config, Corpus train, std::optional<Corpus> dev = std::nullopt,
          std::optional<std::string> run_directory = std::nullopt, std::ostream* log = nullptr);

  void train_left(BilateralModel& model);
  void train_right(BilateralModel& model);
  void finetune_crf(BilateralModel& model);
  void train_separate(BilateralModel& model);
  void train_joint(BilateralModel& model);

  const std::vector<EpochRecord>& records() const { return records_; }
  const std::vector<Phase>& phases() const { return phases_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const PhaseState& last_state() const { return state_; }
  const TrainConfig& config() const { return config_; }

 private:
  void run_phase(BilateralModel& model, Phase phase, std::size_t epochs, bool augmented);
  void save(const BilateralModel& model, Phase phase, const char* which) const;

  TrainConfig config_;
  Corpus train_;
  std::optional<Corpus> dev_;
  std::optional<std::string> run_directory_;
  std::ostream* log_;
  AugmentationSource augmentation_;
  std::vector<EpochRecord> records_;
  std::vector<Phase> phases_;
  std::vector<std::string> warnings_;
  PhaseState state_;
};

// Entity-level evaluation of `model` on `corpus` using the given side.
ScoreReport evaluate_model(const BilateralModel& model, const Corpus& corpus, Side side,
                           bool parallel = true);
std::vector<std::vector<std::string>> predict_corpus(const BilateralModel& model,
                                                     const Corpus& corpus, Side side,
                                                     bool parallel = true);

}  // namespace flexner

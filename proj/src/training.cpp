#include "flexner/training.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "flexner/checkpoint.hpp"
#include "flexner/kernels.hpp"

namespace flexner {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::kLeftPretrain:
      return "LEFT_PRETRAIN";
    case Phase::kRightPretrain:
      return "RIGHT_PRETRAIN";
    case Phase::kCrfFinetune:
      return "CRF_FINETUNE";
    case Phase::kJoint:
      return "JOINT";
  }
  return "?";
}

std::string phase_file_stem(Phase phase) {
  std::string s(phase_name(phase));
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

GroupMask phase_trainable(Phase phase) {
  switch (phase) {
    case Phase::kLeftPretrain:
      return {ParamGroup::kLeft, ParamGroup::kSharedEmbeddings, ParamGroup::kProjection,
              ParamGroup::kCrf};
    case Phase::kRightPretrain:
      return {ParamGroup::kRight, ParamGroup::kProjection, ParamGroup::kCrf};
    case Phase::kCrfFinetune:
      return {ParamGroup::kProjection, ParamGroup::kCrf};
    case Phase::kJoint:
      return GroupMask::all();
  }
  return {};
}

Side phase_side(Phase phase) {
  switch (phase) {
    case Phase::kLeftPretrain:
      return Side::kLeft;
    case Phase::kRightPretrain:
      return Side::kRight;
    case Phase::kCrfFinetune:
    case Phase::kJoint:
      return Side::kBoth;
  }
  return Side::kBoth;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (!(optimizer.learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (optimizer.gradient_clip && !(*optimizer.gradient_clip > 0.0)) {
    throw Error("gradient_clip must be positive");
  }
  augment.validate();
}

std::string format_epoch_record(const EpochRecord& r) {
  std::ostringstream out;
  out << std::fixed << "phase=" << phase_name(r.phase) << " epoch=" << r.epoch
      << " train_nll=" << std::setprecision(6) << r.train_nll;
  if (r.dev) {
    out << std::setprecision(4) << " dev_precision=" << r.dev->precision
        << " dev_recall=" << r.dev->recall << " dev_f1=" << r.dev->f1;
  }
  out << " augmented=" << r.augmented;
  return out.str();
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x51ed270b27e3f0c1ull;
  for (auto p : parts) h = splitmix(h ^ splitmix(p));
  return h;
}

}  // namespace

Trainer::Trainer(TrainConfig config, Corpus train, std::optional<Corpus> dev,
                 std::optional<std::string> run_directory, std::ostream* log)
    : config_(std::move(config)),
      train_(std::move(train)),
      dev_(std::move(dev)),
      run_directory_(std::move(run_directory)),
      log_(log),
      augmentation_(train_) {
  config_.validate();
  if (run_directory_) std::filesystem::create_directories(*run_directory_);
}

void Trainer::save(const BilateralModel& model, Phase phase, const char* which) const {
  if (!run_directory_) return;
  const auto path = std::filesystem::path(*run_directory_) / (phase_file_stem(phase) + "-" + which);
  save_checkpoint(path.string(), model,
                  {{"phase", std::string(phase_name(phase))}, {"seed", std::to_string(config_.seed)}});
}

void Trainer::run_phase(BilateralModel& model, Phase phase, std::size_t epochs, bool augmented) {
  if (train_.empty()) throw Error("training corpus is empty");
  phases_.push_back(phase);
  state_ = PhaseState{phase, phase_trainable(phase), -1.0, 0};
  if (epochs == 0) return;

  const Side side = phase_side(phase);
  std::vector<Sentence> human;
  human.reserve(train_.size());
  for (const auto& s : train_.sentences) human.push_back(model.prepare(s));

  AugmentConfig augment = config_.augment;
  augment.seed = mix_seed({config_.seed, config_.augment.seed});
  Optimizer optimizer(config_.optimizer, model.params(), state_.trainable);
  Rng rng(mix_seed({config_.seed, static_cast<std::uint64_t>(phase), 0x5eedull}));
  std::optional<ParameterStore> best;
  std::size_t since_best = 0;

  for (std::size_t e = 0; e < epochs; ++e) {
    state_.epoch = e + 1;
    std::vector<std::size_t> order(human.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Sentence> extra;
    if (augmented) {
      for (auto& a : augmentation_.stream(augment, e)) {
        extra.push_back(std::move(a.sentence));
        model.encode(extra.back());
      }
    }

    std::vector<std::vector<const Sentence*>> batches;
    const std::size_t bs = config_.batch_size;
    std::size_t hi = 0;
    std::size_t ai = 0;
    while (hi < order.size() || ai < extra.size()) {
      if (hi < order.size()) {
        std::vector<const Sentence*> b;
        for (; hi < order.size() && b.size() < bs; ++hi) b.push_back(&human[order[hi]]);
        batches.push_back(std::move(b));
      }
      if (ai < extra.size()) {
        std::vector<const Sentence*> b;
        for (; ai < extra.size() && b.size() < bs; ++ai) b.push_back(&extra[ai]);
        batches.push_back(std::move(b));
      }
    }

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<Sentence> batch;
      batch.reserve(batches[b].size());
      for (const Sentence* s : batches[b]) batch.push_back(*s);
      kernels::BatchOptions options;
      options.active = side;
      options.trainable = state_.trainable;
      options.dropout_seed = mix_seed({config_.seed, static_cast<std::uint64_t>(phase), e, b});
      auto result = config_.parallel ? kernels::loss_and_gradient_parallel(model, batch, options)
                                     : kernels::loss_and_gradient_serial(model, batch, options);
      result.grads.scale(1.0 / static_cast<double>(batch.size()));
      optimizer.step(model.params(), result.grads, e);
      loss_sum += result.loss;
      seen += batch.size();
    }

    EpochRecord record;
    record.phase = phase;
    record.epoch = e + 1;
    record.train_nll = loss_sum / static_cast<double>(seen);
    record.augmented = extra.size();
    bool improved = true;
    if (dev_ && !dev_->empty()) {
      const ScoreReport report = evaluate_model(model, *dev_, side, config_.parallel);
      record.dev = report.micro;
      improved = report.micro.f1 > state_.best_dev_f1;
      if (improved) {
        state_.best_dev_f1 = report.micro.f1;
        best = model.params();
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    records_.push_back(record);
    if (log_) *log_ << format_epoch_record(record) << '\n';
    if (config_.early_stopping_patience > 0 && since_best >= config_.early_stopping_patience) break;
  }

  model.set_inference_side(side);
  save(model, phase, "last");
  if (best) model.params() = std::move(*best);
  save(model, phase, "best");
}

void Trainer::train_left(BilateralModel& model) {
  run_phase(model, Phase::kLeftPretrain, config_.epochs_left, false);
}

void Trainer::train_right(BilateralModel& model) {
  bool augmented = config_.augment.mode != AugmentMode::kOff;
  if (!augmented) {
    warnings_.push_back("augmentation is off; RIGHT_PRETRAIN uses human-annotated data only");
    if (log_) *log_ << "phase=RIGHT_PRETRAIN warning=augmentation_off\n";
  }
  run_phase(model, Phase::kRightPretrain, config_.epochs_right, augmented);
}

void Trainer::finetune_crf(BilateralModel& model) {
  run_phase(model, Phase::kCrfFinetune, config_.epochs_finetune, false);
}

void Trainer::train_separate(BilateralModel& model) {
  train_left(model);
  train_right(model);
  finetune_crf(model);
}

void Trainer::train_joint(BilateralModel& model) {
  run_phase(model, Phase::kJoint, config_.epochs_joint, false);
}

std::vector<std::vector<std::string>> predict_corpus(const BilateralModel& model,
                                                     const Corpus& corpus, Side side,
                                                     bool parallel) {
  std::vector<Sentence> prepared;
  prepared.reserve(corpus.size());
  for (const auto& s : corpus.sentences) {
    Sentence p = s;
    model.encode(p);
    prepared.push_back(std::move(p));
  }
  const auto paths = parallel ? kernels::decode_parallel(model, prepared, side)
                              : kernels::decode_serial(model, prepared, side);
  std::vector<std::vector<std::string>> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(model.label_names(p));
  return out;
}

ScoreReport evaluate_model(const BilateralModel& model, const Corpus& corpus, Side side,
                           bool parallel) {
  return score_entities(corpus, predict_corpus(model, corpus, side, parallel), TagScheme::kIobes,
                        Repair::kLenient);
}

}  // namespace flexner

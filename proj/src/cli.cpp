#include "flexner/cli.hpp"

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "flexner/checkpoint.hpp"
#include "flexner/config.hpp"
#include "flexner/embeddings.hpp"
#include "flexner/synthetic.hpp"

namespace flexner {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

RunConfig resolve_config(const Globals& g) {
  RunConfig config = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  apply_env_overrides(config, [](const char* name) { return std::getenv(name); });
  if (g.seed) config.train.seed = *g.seed;
  if (!g.output.empty()) config.output_dir = g.output;
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
}

// --- train --------------------------------------------------------------

int cmd_train(const Globals& g, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = resolve_config(g);
    config.validate();
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return kExitUsage;
  }
  if (config.threads > 0) omp_set_num_threads(config.threads);

  const Corpus train = read_column_corpus(config.train_path, config.column_format());
  std::optional<Corpus> dev;
  if (config.dev_path) dev = read_column_corpus(*config.dev_path, config.column_format());
  std::optional<Corpus> test;
  if (config.test_path) test = read_column_corpus(*config.test_path, config.column_format());

  config.model.labelset = resolve_labelset(config, train);
  Vocabularies vocab = build_vocab(train, config.min_word_frequency);
  std::optional<PretrainedEmbeddings> pretrained;
  if (config.embeddings_path) {
    pretrained = read_embeddings(*config.embeddings_path);
    extend_vocabulary(vocab.words, *pretrained);
  }
  BilateralModel model(config.model, vocab);
  model.initialize(config.train.seed);
  if (pretrained) {
    const auto left_table = model.left().tables().words;
    const auto right_table = model.right().tables().words;
    std::size_t copied = load_pretrained(model.params(), left_table, model.vocab().words, *pretrained);
    if (right_table != left_table) {
      copied += load_pretrained(model.params(), right_table, model.vocab().words, *pretrained);
    }
    out << "pretrained_rows=" << copied << '\n';
  }

  const std::string run_dir = config.run_directory();
  fs::create_directories(run_dir);
  {
    std::ostringstream resolved;
    write_run_config(resolved, config);
    write_text((fs::path(run_dir) / "config.txt").string(), resolved.str());
  }
  std::ofstream log((fs::path(run_dir) / "train.log").string());
  Trainer trainer(config.train, train, dev, run_dir, &log);
  switch (config.mode) {
    case TrainingMode::kSeparate:
      trainer.train_separate(model);
      break;
    case TrainingMode::kJoint:
      trainer.train_joint(model);
      break;
    case TrainingMode::kBaseline:
      trainer.train_left(model);
      break;
  }
  for (const auto& w : trainer.warnings()) err << "warning: " << w << '\n';
  save_checkpoint((fs::path(run_dir) / "final").string(), model,
                  {{"run_name", config.run_name}, {"seed", std::to_string(config.train.seed)}});

  std::ostringstream metrics;
  metrics << "run=" << config.run_name << '\n';
  metrics << "seed=" << config.train.seed << '\n';
  metrics << "inference_side=" << side_name(model.inference_side()) << '\n';
  if (test) {
    const ScoreReport report =
        evaluate_model(model, *test, model.inference_side(), config.train.parallel);
    print_report_metrics(metrics, report, "test_");
  }
  metrics << "checksum=" << hex64(model.params().checksum()) << '\n';
  write_text((fs::path(run_dir) / "metrics.txt").string(), metrics.str());
  out << metrics.str();
  return kExitOk;
}

// --- augment ------------------------------------------------------------

struct AugmentArgs {
  std::string input;
  std::string mode;
  std::optional<double> p;
  std::optional<std::size_t> count;
  std::string scheme;
  bool weighted = false;
};

int cmd_augment(const Globals& g, const AugmentArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config;
  AugmentConfig cfg;
  std::string input;
  try {
    config = resolve_config(g);
    cfg = config.train.augment;
    cfg.seed = config.train.seed;
    if (!a.mode.empty()) cfg.mode = parse_augment_mode(a.mode);
    if (a.p) cfg.bernoulli_p = *a.p;
    if (a.weighted) cfg.frequency_weighted = true;
    if (!a.scheme.empty()) config.scheme = parse_scheme(a.scheme);
    cfg.validate();
    input = a.input.empty() ? config.train_path : a.input;
    if (input.empty()) throw ConfigError("input", "no input corpus given");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const Corpus corpus = read_column_corpus(input, config.column_format());
  Corpus result;
  result.scheme = corpus.scheme;
  const auto emit = [&](const AugmentedSentence& s) {
    result.sentences.push_back(convert_sentence(s.sentence, corpus.scheme));
  };
  if (cfg.mode == AugmentMode::kOff) {
    result = corpus;
  } else if (a.count) {
    cfg.max_per_epoch = *a.count;
    for (const auto& s : augmentation_stream(corpus, cfg, 0)) emit(s);
  } else if (cfg.mode == AugmentMode::kSca) {
    const EntityGlossary glossary = build_entity_glossary(corpus);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32)};
    Rng rng(seq);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      emit(sca_augment(corpus.sentences[i], glossary, cfg, rng, i));
    }
  } else {
    for (const auto& s : augmentation_stream(corpus, cfg, 0)) emit(s);
  }

  if (g.output.empty()) {
    write_column_corpus(out, result);
  } else {
    write_column_corpus(g.output, result);
  }
  err << "augmented " << result.size() << " sentences\n";
  return kExitOk;
}

// --- predict ------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::string mentions;
  std::string scheme = "iob2";
  std::size_t token_column = 0;
};

int cmd_predict(const Globals& g, const PredictArgs& a, std::ostream& out, std::ostream& err) {
  TagScheme scheme;
  try {
    scheme = parse_scheme(a.scheme);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const BilateralModel& model = ckpt.model;

  if (!g.config.empty()) {
    RunConfig config;
    try {
      config = resolve_config(g);
      config.validate();
    } catch (const ConfigError& e) {
      err << "error: invalid config: " << e.what() << '\n';
      return kExitUsage;
    }
    const Corpus train = read_column_corpus(config.train_path, config.column_format());
    if (resolve_labelset(config, train) != model.labels()) {
      err << "error: label set of the checkpoint does not match the config\n";
      return kExitFailure;
    }
    Vocabularies vocab = build_vocab(train, config.min_word_frequency);
    if (config.embeddings_path) extend_vocabulary(vocab.words, read_embeddings(*config.embeddings_path));
    if (!(vocab.words == model.vocab().words) || !(vocab.chars == model.vocab().chars)) {
      err << "error: vocabulary of the checkpoint does not match the config\n";
      return kExitFailure;
    }
  }

  ColumnFormat format;
  format.token_column = a.token_column;
  format.label_column = std::nullopt;
  format.allow_empty = true;
  const Corpus input = read_column_corpus(a.input, format);
  const auto predicted = predict_corpus(model, input, model.inference_side());

  Corpus result;
  result.scheme = scheme;
  std::ostringstream mention_lines;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const Sentence& s = input.sentences[i];
    auto spans = extract_spans(predicted[i], TagScheme::kIobes, Repair::kLenient).mentions;
    Sentence labeled = s;
    labeled.scheme = scheme;
    labeled.labels = write_labels(spans, s.size(), scheme);
    for (const auto& m : spans) {
      mention_lines << i << '\t' << m.entity_class << '\t' << m.start << '\t' << m.end << '\t';
      for (std::size_t t = m.start; t < m.end; ++t) {
        mention_lines << (t > m.start ? " " : "") << s.tokens[t].surface;
      }
      mention_lines << '\n';
    }
    result.sentences.push_back(std::move(labeled));
  }

  if (g.output.empty()) {
    write_column_corpus(out, result);
  } else {
    write_column_corpus(g.output, result);
  }
  if (!a.mentions.empty()) write_text(a.mentions, mention_lines.str());
  return kExitOk;
}

// --- evaluate -----------------------------------------------------------

struct EvaluateArgs {
  std::string gold;
  std::string predicted;
  std::string scheme = "iob2";
  std::string predicted_scheme;
  std::size_t token_column = 0;
  std::size_t label_column = 1;
  std::size_t predicted_label_column = 1;
  bool strict = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  ColumnFormat gold_format;
  ColumnFormat pred_format;
  try {
    gold_format.scheme = parse_scheme(a.scheme);
    pred_format.scheme =
        a.predicted_scheme.empty() ? gold_format.scheme : parse_scheme(a.predicted_scheme);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  gold_format.token_column = pred_format.token_column = a.token_column;
  gold_format.label_column = a.label_column;
  pred_format.label_column = a.predicted_label_column;
  gold_format.allow_empty = pred_format.allow_empty = true;
  pred_format.validate = a.strict;

  const Corpus gold = read_column_corpus(a.gold, gold_format);
  const Corpus predicted = read_column_corpus(a.predicted, pred_format);
  std::vector<std::vector<std::string>> labels;
  labels.reserve(predicted.size());
  for (const auto& s : predicted.sentences) labels.push_back(s.labels);
  const ScoreReport report = score_entities(gold, labels, pred_format.scheme,
                                            a.strict ? Repair::kStrict : Repair::kLenient);
  print_report_table(out, report);
  print_report_metrics(out, report);
  return kExitOk;
}

// --- make-synthetic -----------------------------------------------------

int cmd_make_synthetic(const Globals& g, SyntheticOptions options, std::ostream& out) {
  if (g.seed) options.seed = *g.seed;
  const std::string dir = g.output.empty() ? "data/synthetic" : g.output;
  const SyntheticCorpus corpus = make_synthetic(options);
  write_synthetic(dir, corpus);
  out << "train=" << corpus.train.size() << " dev=" << corpus.dev.size()
      << " test=" << corpus.test.size() << " dir=" << dir << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bilateral sequence labeling with entity replacement augmentation", "flexner"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Run config file (key = value lines)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--output", g.output, "Output directory or file");

  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->fallthrough();

  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Write an augmented copy of a column corpus");
  augment->fallthrough();
  augment->add_option("--input", aug.input, "Column corpus");
  augment->add_option("--mode", aug.mode, "sca or eca");
  augment->add_option("--p", aug.p, "Per-slot replacement probability");
  augment->add_option("--count", aug.count, "Number of sentences to generate");
  augment->add_option("--scheme", aug.scheme, "Tag scheme of the input (iob2, iobes)");
  augment->add_flag("--weighted", aug.weighted, "Frequency-weighted SCA replacements");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Label a column corpus with a checkpoint");
  predict->fallthrough();
  predict->add_option("--checkpoint", pred.checkpoint, "Checkpoint file")->required();
  predict->add_option("--input", pred.input, "Column corpus, labels optional")->required();
  predict->add_option("--mentions", pred.mentions, "Write one mention per line here");
  predict->add_option("--scheme", pred.scheme, "Output tag scheme (iob2, iobes)");
  predict->add_option("--token-column", pred.token_column, "Token column index");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Entity-level scores of a prediction file");
  evaluate->fallthrough();
  evaluate->add_option("--gold", ev.gold, "Gold column corpus")->required();
  evaluate->add_option("--predicted", ev.predicted, "Predicted column corpus")->required();
  evaluate->add_option("--scheme", ev.scheme, "Tag scheme of the gold file");
  evaluate->add_option("--predicted-scheme", ev.predicted_scheme, "Tag scheme of the predictions");
  evaluate->add_option("--token-column", ev.token_column, "Token column index");
  evaluate->add_option("--label-column", ev.label_column, "Gold label column index");
  evaluate->add_option("--predicted-label-column", ev.predicted_label_column,
                       "Predicted label column index");
  evaluate->add_flag("--strict", ev.strict, "Reject malformed predicted sequences");

  SyntheticOptions syn;
  auto* synthetic = app.add_subcommand("make-synthetic", "Write the templated synthetic corpus");
  synthetic->fallthrough();
  synthetic->add_option("--train", syn.train, "Training sentences");
  synthetic->add_option("--dev", syn.dev, "Development sentences");
  synthetic->add_option("--test", syn.test, "Test sentences");
  synthetic->add_option("--overlap", syn.overlap, "Probability of a seen surface in dev/test");

  std::vector<const char*> argv{"flexner"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*train) {
      if (g.config.empty()) {
        err << "error: train requires --config\n";
        return kExitUsage;
      }
      return cmd_train(g, out, err);
    }
    if (*augment) return cmd_augment(g, aug, out, err);
    if (*predict) return cmd_predict(g, pred, out, err);
    if (*evaluate) return cmd_evaluate(ev, out, err);
    if (*synthetic) return cmd_make_synthetic(g, syn, out);
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace flexner

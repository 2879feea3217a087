#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "flexner/corpus.hpp"
#include "flexner/layers.hpp"

namespace flexner {

enum class CharEncoder { kRecurrent, kConvolutional };
enum class WordEncoder { kRecurrent, kConvolutional, kRecurrentThenConv, kConvThenRecurrent };

inline constexpr std::array<CharEncoder, 2> kCharEncoders = {CharEncoder::kRecurrent,
                                                             CharEncoder::kConvolutional};
inline constexpr std::array<WordEncoder, 4> kWordEncoders = {
    WordEncoder::kRecurrent, WordEncoder::kConvolutional, WordEncoder::kRecurrentThenConv,
    WordEncoder::kConvThenRecurrent};

std::string_view char_encoder_name(CharEncoder e);
std::string_view word_encoder_name(WordEncoder e);
CharEncoder parse_char_encoder(std::string_view name);
WordEncoder parse_word_encoder(std::string_view name);

struct SubNetworkSpec {
  CharEncoder char_encoder = CharEncoder::kConvolutional;
  WordEncoder word_encoder = WordEncoder::kRecurrent;
  int char_dim = 16;
  int char_hidden_dim = 16;   // per direction, recurrent character encoder
  int char_filters = 16;      // convolutional character encoder
  int char_kernel_width = 3;
  int word_dim = 32;
  int hidden_dim = 32;        // per direction, recurrent word encoder
  int conv_filters = 32;
  int conv_kernel_width = 3;
  int conv_layers = 1;
  Activation conv_activation = Activation::kTanh;
  double dropout = 0.25;

  void validate() const;
  int char_feature_width() const;
  int input_width() const { return word_dim + char_feature_width(); }
  int output_width() const;
  std::string describe() const;
  bool operator==(const SubNetworkSpec&) const = default;
};

// Every (character encoder, word encoder) pair: 2 x 4 = 8.
std::vector<std::pair<CharEncoder, WordEncoder>> enumerate_encoder_combinations();
// Ordered (left, right) pairs over `sides` sub-networks: 8^sides.
std::size_t count_multilateral_configurations(int sides);

struct EmbeddingTables {
  std::size_t words = 0;
  std::size_t chars = 0;
};

EmbeddingTables create_embedding_tables(ParameterStore& store, const std::string& prefix,
                                        ParamGroup group, const SubNetworkSpec& spec,
                                        std::size_t word_vocab, std::size_t char_vocab);

// Character channel, word channel, and one contextual encoder.
class SubNetwork {
 public:
  SubNetwork() = default;
  SubNetwork(const SubNetworkSpec& spec, const std::string& prefix, ParamGroup group,
             ParameterStore& store, EmbeddingTables tables);

  struct CharCache {
    std::vector<int> ids;
    Mat embedded;
    BiLstmCache rnn;
    ConvCache conv;
    MaxPoolCache pool;
  };

  struct EncoderCache {
    BiLstmCache rnn;
    ConvStackCache conv;
  };

  struct Cache {
    std::vector<CharCache> chars;
    std::vector<int> word_ids;
    Mat input_mask;
    Mat inputs;  // post-dropout word representations
    EncoderCache encoder;
    Mat output_mask;
  };

  Vec char_representation(const ParameterStore& store, const Token& token, CharCache* cache) const;
  void char_representation_backward(const ParameterStore& store, const CharCache& cache,
                                   const Vec& d_out, Gradients* grads) const;

  // n x input_width, [word embedding | character features], no dropout.
  Mat word_representations(const ParameterStore& store, const Sentence& sentence,
                           Cache* cache) const;

  Mat contextual_encode(const ParameterStore& store, const Mat& inputs, EncoderCache* cache) const;
  Mat contextual_encode_backward(const ParameterStore& store, const EncoderCache& cache,
                                 const Mat& d_outputs, Gradients* grads) const;

  // Dropout applies when `dropout_rng` is non-null.
  Mat forward(const ParameterStore& store, const Sentence& sentence, std::mt19937_64* dropout_rng,
              Cache* cache) const;
  void backward(const ParameterStore& store, const Sentence& sentence, const Cache& cache,
                const Mat& d_outputs, Gradients* grads) const;

  const SubNetworkSpec& spec() const { return spec_; }
  const EmbeddingTables& tables() const { return tables_; }
  const std::optional<BiLstmLayer>& char_rnn() const { return char_rnn_; }
  const std::optional<ConvLayer>& char_conv() const { return char_conv_; }
  const std::optional<BiLstmLayer>& word_rnn() const { return word_rnn_; }
  const std::optional<ConvStack>& word_conv() const { return word_conv_; }

 private:
  SubNetworkSpec spec_;
  EmbeddingTables tables_;
  std::optional<BiLstmLayer> char_rnn_;
  std::optional<ConvLayer> char_conv_;
  std::optional<BiLstmLayer> word_rnn_;
  std::optional<ConvStack> word_conv_;
};

}  // namespace flexner

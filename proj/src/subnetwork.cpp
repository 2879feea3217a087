#include "flexner/subnetwork.hpp"

#include <sstream>

namespace flexner {

std::string_view char_encoder_name(CharEncoder e) {
  return e == CharEncoder::kRecurrent ? "lstm" : "cnn";
}

std::string_view word_encoder_name(WordEncoder e) {
  switch (e) {
    case WordEncoder::kRecurrent:
      return "lstm";
    case WordEncoder::kConvolutional:
      return "cnn";
    case WordEncoder::kRecurrentThenConv:
      return "lstm_cnn";
    case WordEncoder::kConvThenRecurrent:
      return "cnn_lstm";
  }
  return "lstm";
}

CharEncoder parse_char_encoder(std::string_view name) {
  if (name == "lstm" || name == "recurrent") return CharEncoder::kRecurrent;
  if (name == "cnn" || name == "convolutional") return CharEncoder::kConvolutional;
  throw Error("unknown character encoder '" + std::string(name) + "'");
}

WordEncoder parse_word_encoder(std::string_view name) {
  if (name == "lstm" || name == "recurrent") return WordEncoder::kRecurrent;
  if (name == "cnn" || name == "convolutional") return WordEncoder::kConvolutional;
  if (name == "lstm_cnn" || name == "recurrent_then_conv") return WordEncoder::kRecurrentThenConv;
  if (name == "cnn_lstm" || name == "conv_then_recurrent") return WordEncoder::kConvThenRecurrent;
  throw Error("unknown word encoder '" + std::string(name) + "'");
}

void SubNetworkSpec::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw Error(std::string(what) + " must be at least 1");
  };
  positive(char_dim, "char_dim");
  positive(char_hidden_dim, "char_hidden_dim");
  positive(char_filters, "char_filters");
  positive(char_kernel_width, "char_kernel_width");
  positive(word_dim, "word_dim");
  positive(hidden_dim, "hidden_dim");
  positive(conv_filters, "conv_filters");
  positive(conv_kernel_width, "conv_kernel_width");
  positive(conv_layers, "conv_layers");
  if (conv_kernel_width % 2 == 0) throw Error("conv_kernel_width must be odd");
  if (char_kernel_width % 2 == 0) throw Error("char_kernel_width must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
}

int SubNetworkSpec::char_feature_width() const {
  return char_encoder == CharEncoder::kRecurrent ? 2 * char_hidden_dim : char_filters;
}

int SubNetworkSpec::output_width() const {
  switch (word_encoder) {
    case WordEncoder::kRecurrent:
    case WordEncoder::kConvThenRecurrent:
      return 2 * hidden_dim;
    case WordEncoder::kConvolutional:
    case WordEncoder::kRecurrentThenConv:
      return conv_filters;
  }
  return 0;
}

std::string SubNetworkSpec::describe() const {
  std::ostringstream out;
  out << "(C)" << char_encoder_name(char_encoder) << "-(W)" << word_encoder_name(word_encoder);
  return out.str();
}

std::vector<std::pair<CharEncoder, WordEncoder>> enumerate_encoder_combinations() {
  std::vector<std::pair<CharEncoder, WordEncoder>> out;
  for (auto c : kCharEncoders) {
    for (auto w : kWordEncoders) out.emplace_back(c, w);
  }
  return out;
}

std::size_t count_multilateral_configurations(int sides) {
  const std::size_t per_side = enumerate_encoder_combinations().size();
  std::size_t total = 1;
  for (int i = 0; i < sides; ++i) total *= per_side;
  return total;
}

EmbeddingTables create_embedding_tables(ParameterStore& store, const std::string& prefix,
                                        ParamGroup group, const SubNetworkSpec& spec,
                                        std::size_t word_vocab, std::size_t char_vocab) {
  EmbeddingTables t;
  t.words = store.add(prefix + ".word_embedding", group, static_cast<Eigen::Index>(word_vocab),
                      spec.word_dim, Init::kEmbedding, true);
  t.chars = store.add(prefix + ".char_embedding", group, static_cast<Eigen::Index>(char_vocab),
                      spec.char_dim, Init::kEmbedding, true);
  return t;
}

SubNetwork::SubNetwork(const SubNetworkSpec& spec, const std::string& prefix, ParamGroup group,
                       ParameterStore& store, EmbeddingTables tables)
    : spec_(spec), tables_(tables) {
  spec_.validate();
  if (spec_.char_encoder == CharEncoder::kRecurrent) {
    char_rnn_ = BiLstmLayer::create(store, prefix + ".char_lstm", group, spec_.char_dim,
                                    spec_.char_hidden_dim);
  } else {
    char_conv_ = ConvLayer::create(store, prefix + ".char_cnn", group, spec_.char_dim,
                                   spec_.char_filters, spec_.char_kernel_width, Activation::kLinear);
  }
  const int in = spec_.input_width();
  switch (spec_.word_encoder) {
    case WordEncoder::kRecurrent:
      word_rnn_ = BiLstmLayer::create(store, prefix + ".word_lstm", group, in, spec_.hidden_dim);
      break;
    case WordEncoder::kConvolutional:
      word_conv_ = ConvStack::create(store, prefix + ".word_cnn", group, in, spec_.conv_filters,
                                     spec_.conv_kernel_width, spec_.conv_layers,
                                     spec_.conv_activation);
      break;
    case WordEncoder::kRecurrentThenConv:
      word_rnn_ = BiLstmLayer::create(store, prefix + ".word_lstm", group, in, spec_.hidden_dim);
      word_conv_ = ConvStack::create(store, prefix + ".word_cnn", group, 2 * spec_.hidden_dim,
                                     spec_.conv_filters, spec_.conv_kernel_width,
                                     spec_.conv_layers, spec_.conv_activation);
      break;
    case WordEncoder::kConvThenRecurrent:
      word_conv_ = ConvStack::create(store, prefix + ".word_cnn", group, in, spec_.conv_filters,
                                     spec_.conv_kernel_width, spec_.conv_layers,
                                     spec_.conv_activation);
      word_rnn_ = BiLstmLayer::create(store, prefix + ".word_lstm", group, spec_.conv_filters,
                                      spec_.hidden_dim);
      break;
  }
}

Vec SubNetwork::char_representation(const ParameterStore& store, const Token& token,
                                    CharCache* cache) const {
  if (token.char_ids.empty()) throw Error("token '" + token.surface + "' has no encoded characters");
  CharCache local;
  CharCache& c = cache ? *cache : local;
  c.ids = token.char_ids;
  c.embedded = embedding_lookup(store, tables_.chars, c.ids);
  if (char_rnn_) {
    const Mat states = bilstm_forward(store, *char_rnn_, c.embedded, &c.rnn);
    const int H = spec_.char_hidden_dim;
    Vec out(2 * H);
    out.head(H) = states.row(states.rows() - 1).head(H).transpose();
    out.tail(H) = states.row(0).tail(H).transpose();
    return out;
  }
  const Mat conv = conv_forward(store, *char_conv_, c.embedded, &c.conv);
  return max_over_time(conv, &c.pool);
}

void SubNetwork::char_representation_backward(const ParameterStore& store, const CharCache& cache,
                                              const Vec& d_out, Gradients* grads) const {
  Mat d_embedded;
  if (char_rnn_) {
    const int H = spec_.char_hidden_dim;
    const Eigen::Index L = cache.embedded.rows();
    Mat d_states = Mat::Zero(L, 2 * H);
    d_states.row(L - 1).head(H) = d_out.head(H).transpose();
    d_states.row(0).tail(H) += d_out.tail(H).transpose();
    d_embedded = bilstm_backward(store, *char_rnn_, cache.rnn, d_states, grads);
  } else {
    const Mat d_conv = max_over_time_backward(cache.pool, d_out);
    d_embedded = conv_backward(store, *char_conv_, cache.conv, d_conv, grads);
  }
  embedding_backward(tables_.chars, cache.ids, d_embedded, grads);
}

Mat SubNetwork::word_representations(const ParameterStore& store, const Sentence& sentence,
                                     Cache* cache) const {
  const auto n = static_cast<Eigen::Index>(sentence.size());
  Mat out(n, spec_.input_width());
  std::vector<int> ids;
  ids.reserve(sentence.size());
  for (const auto& t : sentence.tokens) {
    if (t.word_id < 0) throw Error("token '" + t.surface + "' is not encoded");
    ids.push_back(t.word_id);
  }
  out.leftCols(spec_.word_dim) = embedding_lookup(store, tables_.words, ids);
  if (cache) cache->chars.resize(sentence.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i).tail(spec_.char_feature_width()) =
        char_representation(store, sentence.tokens[i], cache ? &cache->chars[i] : nullptr)
            .transpose();
  }
  if (cache) cache->word_ids = std::move(ids);
  return out;
}

Mat SubNetwork::contextual_encode(const ParameterStore& store, const Mat& inputs,
                                  EncoderCache* cache) const {
  if (inputs.rows() < 1) throw Error("contextual encoder needs a non-empty sequence");
  switch (spec_.word_encoder) {
    case WordEncoder::kRecurrent:
      return bilstm_forward(store, *word_rnn_, inputs, cache ? &cache->rnn : nullptr);
    case WordEncoder::kConvolutional:
      return conv_stack_forward(store, *word_conv_, inputs, cache ? &cache->conv : nullptr);
    case WordEncoder::kRecurrentThenConv: {
      const Mat states = bilstm_forward(store, *word_rnn_, inputs, cache ? &cache->rnn : nullptr);
      return conv_stack_forward(store, *word_conv_, states, cache ? &cache->conv : nullptr);
    }
    case WordEncoder::kConvThenRecurrent: {
      const Mat local = conv_stack_forward(store, *word_conv_, inputs, cache ? &cache->conv : nullptr);
      return bilstm_forward(store, *word_rnn_, local, cache ? &cache->rnn : nullptr);
    }
  }
  return inputs;
}

Mat SubNetwork::contextual_encode_backward(const ParameterStore& store, const EncoderCache& cache,
                                           const Mat& d_outputs, Gradients* grads) const {
  switch (spec_.word_encoder) {
    case WordEncoder::kRecurrent:
      return bilstm_backward(store, *word_rnn_, cache.rnn, d_outputs, grads);
    case WordEncoder::kConvolutional:
      return conv_stack_backward(store, *word_conv_, cache.conv, d_outputs, grads);
    case WordEncoder::kRecurrentThenConv: {
      const Mat d_states = conv_stack_backward(store, *word_conv_, cache.conv, d_outputs, grads);
      return bilstm_backward(store, *word_rnn_, cache.rnn, d_states, grads);
    }
    case WordEncoder::kConvThenRecurrent: {
      const Mat d_local = bilstm_backward(store, *word_rnn_, cache.rnn, d_outputs, grads);
      return conv_stack_backward(store, *word_conv_, cache.conv, d_local, grads);
    }
  }
  return d_outputs;
}

Mat SubNetwork::forward(const ParameterStore& store, const Sentence& sentence,
                        std::mt19937_64* dropout_rng, Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  Mat inputs = word_representations(store, sentence, &c);
  c.input_mask = dropout_mask(inputs.rows(), inputs.cols(), spec_.dropout, dropout_rng);
  inputs.array() *= c.input_mask.array();
  Mat encoded = contextual_encode(store, inputs, &c.encoder);
  c.output_mask = dropout_mask(encoded.rows(), encoded.cols(), spec_.dropout, dropout_rng);
  encoded.array() *= c.output_mask.array();
  c.inputs = std::move(inputs);
  return encoded;
}

void SubNetwork::backward(const ParameterStore& store, const Sentence& sentence, const Cache& cache,
                          const Mat& d_outputs, Gradients* grads) const {
  const Mat d_encoded = d_outputs.array() * cache.output_mask.array();
  Mat d_inputs = contextual_encode_backward(store, cache.encoder, d_encoded, grads);
  d_inputs.array() *= cache.input_mask.array();
  embedding_backward(tables_.words, cache.word_ids, d_inputs.leftCols(spec_.word_dim), grads);
  const int cw = spec_.char_feature_width();
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const Vec d_char = d_inputs.row(static_cast<Eigen::Index>(i)).tail(cw).transpose();
    char_representation_backward(store, cache.chars[i], d_char, grads);
  }
}

}  // namespace flexner

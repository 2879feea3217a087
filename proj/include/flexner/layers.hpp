#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flexner/params.hpp"

namespace flexner {

enum class Activation { kLinear, kTanh, kRelu };

std::string_view activation_name(Activation act);
Activation parse_activation(std::string_view name);

// Rows of every sequence matrix are time steps.

// --- LSTM ---------------------------------------------------------------
// Gate rows of the weight are ordered input, forget, candidate, output; the
// weight acts on [x_t ; h_{t-1}].

struct LstmLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int input_dim = 0;
  int hidden_dim = 0;

  static LstmLayer create(ParameterStore& store, const std::string& name, ParamGroup group,
                          int input_dim, int hidden_dim);
};

struct LstmCache {
  Mat inputs;
  Mat gates;      // post-activation, n x 4H
  Mat cells;      // n x H
  Mat cell_tanh;  // n x H
  Mat hidden;     // n x H
  bool reverse = false;
};

// Output row t is the hidden state at input position t, whichever direction ran.
Mat lstm_forward(const ParameterStore& store, const LstmLayer& layer, const Mat& inputs,
                 bool reverse, LstmCache* cache);
Mat lstm_backward(const ParameterStore& store, const LstmLayer& layer, const LstmCache& cache,
                  const Mat& d_hidden, Gradients* grads);

struct BiLstmLayer {
  LstmLayer forward;
  LstmLayer backward;

  static BiLstmLayer create(ParameterStore& store, const std::string& name, ParamGroup group,
                            int input_dim, int hidden_dim);
  int output_dim() const { return 2 * forward.hidden_dim; }
};

struct BiLstmCache {
  LstmCache forward;
  LstmCache backward;
};

// n x 2H, forward states then backward states.
Mat bilstm_forward(const ParameterStore& store, const BiLstmLayer& layer, const Mat& inputs,
                   BiLstmCache* cache);
Mat bilstm_backward(const ParameterStore& store, const BiLstmLayer& layer, const BiLstmCache& cache,
                    const Mat& d_outputs, Gradients* grads);

// --- convolution ----------------------------------------------------------
// Same-padded 1-D convolution with an odd window. Column block j of the
// weight (width input_dim) multiplies the input at offset j - width / 2.

struct ConvLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int input_dim = 0;
  int filters = 0;
  int width = 1;
  Activation activation = Activation::kLinear;

  static ConvLayer create(ParameterStore& store, const std::string& name, ParamGroup group,
                          int input_dim, int filters, int width, Activation activation);
};

struct ConvCache {
  Mat inputs;
  Mat pre;
  Mat outputs;
};

Mat conv_forward(const ParameterStore& store, const ConvLayer& layer, const Mat& inputs,
                 ConvCache* cache);
Mat conv_backward(const ParameterStore& store, const ConvLayer& layer, const ConvCache& cache,
                  const Mat& d_outputs, Gradients* grads);

struct ConvStack {
  std::vector<ConvLayer> layers;

  static ConvStack create(ParameterStore& store, const std::string& name, ParamGroup group,
                          int input_dim, int filters, int width, int depth, Activation activation);
  int output_dim() const { return layers.back().filters; }
};

struct ConvStackCache {
  std::vector<ConvCache> layers;
};

Mat conv_stack_forward(const ParameterStore& store, const ConvStack& stack, const Mat& inputs,
                       ConvStackCache* cache);
Mat conv_stack_backward(const ParameterStore& store, const ConvStack& stack,
                        const ConvStackCache& cache, const Mat& d_outputs, Gradients* grads);

// Column-wise max over time; ties resolve to the earliest row.
struct MaxPoolCache {
  Eigen::Index rows = 0;
  std::vector<Eigen::Index> argmax;
};

Vec max_over_time(const Mat& inputs, MaxPoolCache* cache);
Mat max_over_time_backward(const MaxPoolCache& cache, const Vec& d_outputs);

// --- embeddings and dropout ---------------------------------------------

Mat embedding_lookup(const ParameterStore& store, std::size_t table, const std::vector<int>& ids);
void embedding_backward(std::size_t table, const std::vector<int>& ids, const Mat& d_rows,
                        Gradients* grads);

// Inverted dropout mask (entries 0 or 1 / (1 - rate)); all ones when rng is null.
Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64* rng);

}  // namespace flexner

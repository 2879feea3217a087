#include "flexner/layers.hpp"

#include <algorithm>
#include <cmath>

namespace flexner {

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::kLinear:
      return "linear";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw Error("unknown activation '" + std::string(name) + "'");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// --- LSTM ---------------------------------------------------------------

LstmLayer LstmLayer::create(ParameterStore& store, const std::string& name, ParamGroup group,
                            int input_dim, int hidden_dim) {
  LstmLayer l;
  l.input_dim = input_dim;
  l.hidden_dim = hidden_dim;
  l.weight = store.add(name + ".weight", group, 4 * hidden_dim, input_dim + hidden_dim,
                       Init::kUniformFanIn);
  l.bias = store.add(name + ".bias", group, 4 * hidden_dim, 1, Init::kLstmBias);
  return l;
}

Mat lstm_forward(const ParameterStore& store, const LstmLayer& layer, const Mat& inputs,
                 bool reverse, LstmCache* cache) {
  const Mat& W = store.value(layer.weight);
  const auto b = store.value(layer.bias).col(0);
  const Eigen::Index n = inputs.rows();
  const int H = layer.hidden_dim;
  const int D = layer.input_dim;
  if (inputs.cols() != D) throw Error("LSTM input width mismatch");

  Mat gates(n, 4 * H);
  Mat cells(n, H);
  Mat cell_tanh(n, H);
  Mat hidden(n, H);
  Vec h_prev = Vec::Zero(H);
  Vec c_prev = Vec::Zero(H);
  Vec a(4 * H);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    a.noalias() = W.leftCols(D) * inputs.row(t).transpose();
    a.noalias() += W.rightCols(H) * h_prev;
    a += b;
    for (int k = 0; k < H; ++k) {
      const double i = sigmoid(a(k));
      const double f = sigmoid(a(H + k));
      const double g = std::tanh(a(2 * H + k));
      const double o = sigmoid(a(3 * H + k));
      const double c = f * c_prev(k) + i * g;
      const double ct = std::tanh(c);
      gates(t, k) = i;
      gates(t, H + k) = f;
      gates(t, 2 * H + k) = g;
      gates(t, 3 * H + k) = o;
      cells(t, k) = c;
      cell_tanh(t, k) = ct;
      hidden(t, k) = o * ct;
    }
    h_prev = hidden.row(t).transpose();
    c_prev = cells.row(t).transpose();
  }
  if (cache) {
    cache->inputs = inputs;
    cache->gates = gates;
    cache->cells = cells;
    cache->cell_tanh = cell_tanh;
    cache->hidden = hidden;
    cache->reverse = reverse;
  }
  return hidden;
}

Mat lstm_backward(const ParameterStore& store, const LstmLayer& layer, const LstmCache& cache,
                  const Mat& d_hidden, Gradients* grads) {
  const Mat& W = store.value(layer.weight);
  const Eigen::Index n = cache.inputs.rows();
  const int H = layer.hidden_dim;
  const int D = layer.input_dim;
  Mat d_inputs = Mat::Zero(n, D);
  Mat* dW = grads ? &grads->dense(layer.weight) : nullptr;
  Mat* db = grads ? &grads->dense(layer.bias) : nullptr;

  Vec dh_next = Vec::Zero(H);
  Vec dc_next = Vec::Zero(H);
  Vec da(4 * H);
  Vec h_prev(H);
  Vec c_prev(H);
  for (Eigen::Index s = n - 1; s >= 0; --s) {
    const Eigen::Index t = cache.reverse ? n - 1 - s : s;
    const bool first = s == 0;
    const Eigen::Index p = cache.reverse ? t + 1 : t - 1;
    if (first) {
      h_prev.setZero();
      c_prev.setZero();
    } else {
      h_prev = cache.hidden.row(p).transpose();
      c_prev = cache.cells.row(p).transpose();
    }
    for (int k = 0; k < H; ++k) {
      const double i = cache.gates(t, k);
      const double f = cache.gates(t, H + k);
      const double g = cache.gates(t, 2 * H + k);
      const double o = cache.gates(t, 3 * H + k);
      const double ct = cache.cell_tanh(t, k);
      const double dh = d_hidden(t, k) + dh_next(k);
      const double dc = dh * o * (1.0 - ct * ct) + dc_next(k);
      da(k) = dc * g * i * (1.0 - i);
      da(H + k) = dc * c_prev(k) * f * (1.0 - f);
      da(2 * H + k) = dc * i * (1.0 - g * g);
      da(3 * H + k) = dh * ct * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    if (dW) {
      dW->leftCols(D).noalias() += da * cache.inputs.row(t);
      dW->rightCols(H).noalias() += da * h_prev.transpose();
      db->col(0) += da;
    }
    d_inputs.row(t).noalias() = da.transpose() * W.leftCols(D);
    dh_next.noalias() = W.rightCols(H).transpose() * da;
  }
  return d_inputs;
}

BiLstmLayer BiLstmLayer::create(ParameterStore& store, const std::string& name, ParamGroup group,
                                int input_dim, int hidden_dim) {
  return BiLstmLayer{LstmLayer::create(store, name + ".fwd", group, input_dim, hidden_dim),
                     LstmLayer::create(store, name + ".bwd", group, input_dim, hidden_dim)};
}

Mat bilstm_forward(const ParameterStore& store, const BiLstmLayer& layer, const Mat& inputs,
                   BiLstmCache* cache) {
  const int H = layer.forward.hidden_dim;
  Mat out(inputs.rows(), 2 * H);
  out.leftCols(H) = lstm_forward(store, layer.forward, inputs, false, cache ? &cache->forward : nullptr);
  out.rightCols(H) =
      lstm_forward(store, layer.backward, inputs, true, cache ? &cache->backward : nullptr);
  return out;
}

Mat bilstm_backward(const ParameterStore& store, const BiLstmLayer& layer, const BiLstmCache& cache,
                    const Mat& d_outputs, Gradients* grads) {
  const int H = layer.forward.hidden_dim;
  Mat d = lstm_backward(store, layer.forward, cache.forward, d_outputs.leftCols(H), grads);
  d += lstm_backward(store, layer.backward, cache.backward, d_outputs.rightCols(H), grads);
  return d;
}

// --- convolution ----------------------------------------------------------

ConvLayer ConvLayer::create(ParameterStore& store, const std::string& name, ParamGroup group,
                            int input_dim, int filters, int width, Activation activation) {
  if (width < 1 || width % 2 == 0) throw Error("convolution width must be odd");
  ConvLayer l;
  l.input_dim = input_dim;
  l.filters = filters;
  l.width = width;
  l.activation = activation;
  l.weight = store.add(name + ".weight", group, filters, width * input_dim, Init::kUniformFanIn);
  l.bias = store.add(name + ".bias", group, filters, 1, Init::kZero);
  return l;
}

namespace {

Mat unfold_windows(const Mat& inputs, int width) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index D = inputs.cols();
  const int half = width / 2;
  Mat windows = Mat::Zero(n, width * D);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int j = 0; j < width; ++j) {
      const Eigen::Index src = t + j - half;
      if (src >= 0 && src < n) windows.block(t, j * D, 1, D) = inputs.row(src);
    }
  }
  return windows;
}

}  // namespace

Mat conv_forward(const ParameterStore& store, const ConvLayer& layer, const Mat& inputs,
                 ConvCache* cache) {
  if (inputs.cols() != layer.input_dim) throw Error("convolution input width mismatch");
  const Mat windows = unfold_windows(inputs, layer.width);
  Mat pre = windows * store.value(layer.weight).transpose();
  pre.rowwise() += store.value(layer.bias).col(0).transpose();
  Mat out;
  switch (layer.activation) {
    case Activation::kLinear:
      out = pre;
      break;
    case Activation::kTanh:
      out = pre.array().tanh().matrix();
      break;
    case Activation::kRelu:
      out = pre.cwiseMax(0.0);
      break;
  }
  if (cache) {
    cache->inputs = windows;
    cache->pre = pre;
    cache->outputs = out;
  }
  return out;
}

Mat conv_backward(const ParameterStore& store, const ConvLayer& layer, const ConvCache& cache,
                  const Mat& d_outputs, Gradients* grads) {
  Mat d_pre;
  switch (layer.activation) {
    case Activation::kLinear:
      d_pre = d_outputs;
      break;
    case Activation::kTanh:
      d_pre = d_outputs.array() * (1.0 - cache.outputs.array().square());
      break;
    case Activation::kRelu:
      d_pre = d_outputs.array() * (cache.pre.array() > 0.0).cast<double>();
      break;
  }
  if (grads) {
    grads->dense(layer.weight).noalias() += d_pre.transpose() * cache.inputs;
    grads->dense(layer.bias).col(0) += d_pre.colwise().sum().transpose();
  }
  const Mat d_windows = d_pre * store.value(layer.weight);
  const Eigen::Index n = d_windows.rows();
  const Eigen::Index D = layer.input_dim;
  const int half = layer.width / 2;
  Mat d_inputs = Mat::Zero(n, D);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int j = 0; j < layer.width; ++j) {
      const Eigen::Index src = t + j - half;
      if (src >= 0 && src < n) d_inputs.row(src) += d_windows.block(t, j * D, 1, D);
    }
  }
  return d_inputs;
}

ConvStack ConvStack::create(ParameterStore& store, const std::string& name, ParamGroup group,
                            int input_dim, int filters, int width, int depth, Activation activation) {
  if (depth < 1) throw Error("convolution stack needs at least one layer");
  ConvStack s;
  int in = input_dim;
  for (int d = 0; d < depth; ++d) {
    s.layers.push_back(ConvLayer::create(store, name + "." + std::to_string(d), group, in, filters,
                                         width, activation));
    in = filters;
  }
  return s;
}

Mat conv_stack_forward(const ParameterStore& store, const ConvStack& stack, const Mat& inputs,
                       ConvStackCache* cache) {
  if (cache) cache->layers.resize(stack.layers.size());
  Mat x = inputs;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    x = conv_forward(store, stack.layers[i], x, cache ? &cache->layers[i] : nullptr);
  }
  return x;
}

Mat conv_stack_backward(const ParameterStore& store, const ConvStack& stack,
                        const ConvStackCache& cache, const Mat& d_outputs, Gradients* grads) {
  Mat d = d_outputs;
  for (std::size_t i = stack.layers.size(); i-- > 0;) {
    d = conv_backward(store, stack.layers[i], cache.layers[i], d, grads);
  }
  return d;
}

Vec max_over_time(const Mat& inputs, MaxPoolCache* cache) {
  const Eigen::Index cols = inputs.cols();
  Vec out(cols);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < inputs.rows(); ++r) {
      if (inputs(r, c) > inputs(best, c)) best = r;
    }
    argmax[c] = best;
    out(c) = inputs(best, c);
  }
  if (cache) {
    cache->rows = inputs.rows();
    cache->argmax = std::move(argmax);
  }
  return out;
}

Mat max_over_time_backward(const MaxPoolCache& cache, const Vec& d_outputs) {
  Mat d = Mat::Zero(cache.rows, d_outputs.size());
  for (Eigen::Index c = 0; c < d_outputs.size(); ++c) d(cache.argmax[c], c) = d_outputs(c);
  return d;
}

// --- embeddings and dropout ---------------------------------------------

Mat embedding_lookup(const ParameterStore& store, std::size_t table, const std::vector<int>& ids) {
  const Mat& E = store.value(table);
  Mat out(static_cast<Eigen::Index>(ids.size()), E.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= E.rows()) throw Error("embedding index out of range");
    out.row(static_cast<Eigen::Index>(i)) = E.row(id);
  }
  return out;
}

void embedding_backward(std::size_t table, const std::vector<int>& ids, const Mat& d_rows,
                        Gradients* grads) {
  if (!grads) return;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    grads->row(table, ids[i]) += d_rows.row(static_cast<Eigen::Index>(i)).transpose();
  }
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64* rng) {
  Mat mask = Mat::Ones(rows, cols);
  if (!rng || rate <= 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = keep(*rng) ? scale : 0.0;
  }
  return mask;
}

}  // namespace flexner

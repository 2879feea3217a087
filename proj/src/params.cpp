#include "flexner/params.hpp"

#include <cmath>
#include <cstring>

namespace flexner {

std::string_view group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kLeft:
      return "left";
    case ParamGroup::kRight:
      return "right";
    case ParamGroup::kSharedEmbeddings:
      return "shared_embeddings";
    case ParamGroup::kProjection:
      return "projection";
    case ParamGroup::kCrf:
      return "crf";
  }
  return "?";
}

std::size_t ParameterStore::add(std::string name, ParamGroup group, Eigen::Index rows,
                                Eigen::Index cols, Init init, bool row_sparse) {
  if (find(name) != params_.size()) throw Error("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = std::move(name);
  p.group = group;
  p.value = Mat::Zero(rows, cols);
  p.init = init;
  p.row_sparse = row_sparse;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

std::size_t ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return params_.size();
}

void ParameterStore::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    Mat& v = p.value;
    switch (p.init) {
      case Init::kZero:
        v.setZero();
        break;
      case Init::kUniformFanIn:
      case Init::kEmbedding: {
        const double r = std::sqrt(3.0 / static_cast<double>(std::max<Eigen::Index>(v.cols(), 1)));
        std::uniform_real_distribution<double> u(-r, r);
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
          for (Eigen::Index row = 0; row < v.rows(); ++row) v(row, c) = u(rng);
        }
        break;
      }
      case Init::kLstmBias: {
        v.setZero();
        const Eigen::Index h = v.rows() / 4;
        v.block(h, 0, h, v.cols()).setOnes();
        break;
      }
    }
  }
}

std::uint64_t ParameterStore::checksum(const GroupMask& groups) const {
  std::uint64_t hash = 1469598103934665603ull;
  for (const auto& p : params_) {
    if (!groups.contains(p.group)) continue;
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
    const std::size_t n = static_cast<std::size_t>(p.value.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Gradients::Gradients(const ParameterStore& store) {
  slots_.resize(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    slots_[i].n_rows = store[i].value.rows();
    slots_[i].n_cols = store[i].value.cols();
    slots_[i].row_sparse = store[i].row_sparse;
  }
}

Mat& Gradients::dense(std::size_t i) {
  Slot& s = slots_[i];
  if (s.row_sparse) throw Error("dense gradient requested for a row-sparse parameter");
  if (s.dense.size() == 0) s.dense = Mat::Zero(s.n_rows, s.n_cols);
  return s.dense;
}

Vec& Gradients::row(std::size_t i, Eigen::Index r) {
  Slot& s = slots_[i];
  if (!s.row_sparse) throw Error("row gradient requested for a dense parameter");
  auto it = s.rows.find(r);
  if (it == s.rows.end()) it = s.rows.emplace(r, Vec::Zero(s.n_cols)).first;
  return it->second;
}

bool Gradients::touched(std::size_t i) const {
  return slots_[i].dense.size() > 0 || !slots_[i].rows.empty();
}

Mat Gradients::to_dense(std::size_t i) const {
  const Slot& s = slots_[i];
  Mat out = s.dense.size() > 0 ? s.dense : Mat::Zero(s.n_rows, s.n_cols);
  for (const auto& [r, v] : s.rows) out.row(r) += v.transpose();
  return out;
}

void Gradients::accumulate(const Gradients& other) {
  if (slots_.empty()) {
    *this = other;
    return;
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& o = other.slots_[i];
    Slot& s = slots_[i];
    if (o.dense.size() > 0) {
      if (s.dense.size() == 0) {
        s.dense = o.dense;
      } else {
        s.dense += o.dense;
      }
    }
    for (const auto& [r, v] : o.rows) {
      auto it = s.rows.find(r);
      if (it == s.rows.end()) {
        s.rows.emplace(r, v);
      } else {
        it->second += v;
      }
    }
  }
}

void Gradients::scale(double factor) {
  for (auto& s : slots_) {
    if (s.dense.size() > 0) s.dense *= factor;
    for (auto& [r, v] : s.rows) v *= factor;
  }
}

double Gradients::squared_norm(const GroupMask& groups, const ParameterStore& store) const {
  double total = 0.0;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!groups.contains(store[i].group)) continue;
    const Slot& s = slots_[i];
    if (s.dense.size() > 0) {
      for (Eigen::Index k = 0; k < s.dense.size(); ++k) {
        const double g = s.dense.data()[k];
        if (std::isfinite(g)) total += g * g;
      }
    }
    for (const auto& [r, v] : s.rows) total += v.squaredNorm();
  }
  return total;
}

void Gradients::clear() {
  for (auto& s : slots_) {
    s.dense.resize(0, 0);
    s.rows.clear();
  }
}

}  // namespace flexner

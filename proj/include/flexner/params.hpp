#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "flexner/error.hpp"

namespace flexner {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class ParamGroup : std::uint8_t {
  kLeft = 0,
  kRight = 1,
  kSharedEmbeddings = 2,
  kProjection = 3,
  kCrf = 4,
};
inline constexpr std::size_t kParamGroupCount = 5;

std::string_view group_name(ParamGroup group);

class GroupMask {
 public:
  GroupMask() = default;
  GroupMask(std::initializer_list<ParamGroup> groups) {
    for (auto g : groups) set(g);
  }
  static GroupMask all() {
    GroupMask m;
    m.bits_.set();
    return m;
  }
  void set(ParamGroup g, bool on = true) { bits_.set(static_cast<std::size_t>(g), on); }
  bool contains(ParamGroup g) const { return bits_.test(static_cast<std::size_t>(g)); }
  GroupMask complement() const {
    GroupMask m;
    m.bits_ = ~bits_;
    return m;
  }
  bool operator==(const GroupMask&) const = default;

 private:
  std::bitset<kParamGroupCount> bits_;
};

enum class Init : std::uint8_t {
  kZero,
  kUniformFanIn,  // U(-r, r), r = sqrt(3 / cols)
  kEmbedding,     // U(-r, r), r = sqrt(3 / cols)
  kLstmBias,      // zero except the forget-gate block, which starts at 1
};

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::kLeft;
  Mat value;
  Init init = Init::kZero;
  // Lookup tables receive gradients on a handful of rows per sentence.
  bool row_sparse = false;
};

class ParameterStore {
 public:
  std::size_t add(std::string name, ParamGroup group, Eigen::Index rows, Eigen::Index cols,
                  Init init, bool row_sparse = false);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  const Mat& value(std::size_t i) const { return params_[i].value; }
  Mat& value(std::size_t i) { return params_[i].value; }

  // Index of the named parameter or size() when absent.
  std::size_t find(std::string_view name) const;

  void initialize(std::uint64_t seed);

  // FNV-1a over the raw bytes of every parameter in `groups`, in store order.
  std::uint64_t checksum(const GroupMask& groups) const;
  std::uint64_t checksum() const { return checksum(GroupMask::all()); }
  std::size_t scalar_count() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

// Gradient buffer shaped like a ParameterStore. Dense blocks are allocated on
// first touch; row-sparse parameters accumulate per-row vectors.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterStore& store);

  Mat& dense(std::size_t i);
  // Gradient row `row` of a row-sparse parameter, as a column vector.
  Vec& row(std::size_t i, Eigen::Index row);

  bool touched(std::size_t i) const;
  std::size_t size() const { return slots_.size(); }

  // Materialized gradient of parameter i (zeros when untouched).
  Mat to_dense(std::size_t i) const;

  // Adds `other` slot by slot; dense sums run in store order, sparse rows in
  // ascending row order, so reductions are reproducible.
  void accumulate(const Gradients& other);
  void scale(double factor);
  double squared_norm(const GroupMask& groups, const ParameterStore& store) const;
  void clear();

  template <typename Fn>
  void for_each_row(std::size_t i, Fn&& fn) const {
    for (const auto& [r, v] : slots_[i].rows) fn(r, v);
  }
  const Mat& dense_view(std::size_t i) const { return slots_[i].dense; }
  bool is_row_sparse(std::size_t i) const { return slots_[i].row_sparse; }

 private:
  struct Slot {
    Eigen::Index n_rows = 0;
    Eigen::Index n_cols = 0;
    bool row_sparse = false;
    Mat dense;
    std::map<Eigen::Index, Vec> rows;
  };
  std::vector<Slot> slots_;
};

}  // namespace flexner

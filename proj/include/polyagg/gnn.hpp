// Copyright 2026 The polyagg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Graph neural network bisection model: INorm -> SAGEConv(tanh) stack ->
// dense head -> softmax, trained without labels on the expected normalized
// cut. Gradients are accumulated by hand, layer by layer, in reverse order.

#include "polyagg/graph.hpp"
#include "polyagg/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace polyagg {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace nn {

// ---------------------------------------------------------------- layers

/// Column-wise input normalization. Areas are divided by their maximum;
/// barycenter columns are centred and divided by their max magnitude. A
/// barycenter cloud taller than wide is first rotated by 90 degrees,
/// (x, y) -> (y, -x). A column whose scale is zero is set to zero.
Eigen::MatrixXd inorm(const FeatureMatrix& x);

/// Row-normalized adjacency: (M h)_i is the mean of h over N(i), zero for
/// isolated nodes.
SparseRowMatrix mean_operator(const Graph& g);
SparseRowMatrix adjacency_matrix(const Graph& g);

/// tanh(h W_self + mean_{N(i)}(h) W_neigh).
template <class DerivedH, class DerivedS, class DerivedN>
Eigen::MatrixXd sage_conv(const Eigen::MatrixBase<DerivedH>& h, const SparseRowMatrix& mean,
                          const Eigen::MatrixBase<DerivedS>& w_self, const Eigen::MatrixBase<DerivedN>& w_neigh) {
  Eigen::MatrixXd agg = mean * h;
  return (h * w_self + agg * w_neigh).array().tanh().matrix();
}

Eigen::MatrixXd sage_conv(const Eigen::MatrixXd& h, const Graph& g, const Eigen::MatrixXd& w_self,
                          const Eigen::MatrixXd& w_neigh);

template <class DerivedH, class DerivedW, class DerivedB>
Eigen::MatrixXd dense(const Eigen::MatrixBase<DerivedH>& h, const Eigen::MatrixBase<DerivedW>& w,
                      const Eigen::MatrixBase<DerivedB>& b) {
  return (h * w).rowwise() + b;
}

/// Row-wise softmax with max subtraction. NumericalError on non-finite input.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& z);

}  // namespace nn

// ---------------------------------------------------------------- model

enum class Activation { None, Tanh };

struct Architecture {
  int feature_width = 3;
  std::vector<int> conv_widths{64, 64, 64, 64};
  std::vector<int> dense_widths{32, 8, 2};
  /// One per dense layer; the last feeds the softmax.
  std::vector<Activation> dense_activations{Activation::Tanh, Activation::Tanh, Activation::None};

  Eigen::Index num_conv_params() const;
  Eigen::Index num_dense_params() const;
  Eigen::Index num_params() const { return num_conv_params() + num_dense_params(); }
  int num_classes() const { return dense_widths.empty() ? conv_widths.back() : dense_widths.back(); }

  /// Throws UsageError when widths are non-positive or the head does not end in 2 classes.
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

struct TensorSlot {
  std::string name;
  Eigen::Index rows = 0, cols = 0, offset = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// All trainable weights in one flat vector; each tensor is a row-major
/// block of it. Order: conv{l}.self, conv{l}.neigh for each conv layer,
/// then dense{l}.weight, dense{l}.bias.
class ParameterSet {
public:
  ParameterSet() = default;
  explicit ParameterSet(const Architecture& arch);

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  const std::vector<TensorSlot>& slots() const { return slots_; }

  Eigen::Map<RowMatrixXd> tensor(std::size_t k);
  Eigen::Map<const RowMatrixXd> tensor(std::size_t k) const;

  Eigen::Map<const RowMatrixXd> conv_self(std::size_t l) const { return tensor(2 * l); }
  Eigen::Map<const RowMatrixXd> conv_neigh(std::size_t l) const { return tensor(2 * l + 1); }
  Eigen::Map<const RowMatrixXd> dense_weight(std::size_t l) const { return tensor(2 * num_conv_ + 2 * l); }
  Eigen::Map<const RowMatrixXd> dense_bias(std::size_t l) const { return tensor(2 * num_conv_ + 2 * l + 1); }

  /// Slot index of a layer tensor, for writing through tensor(k).
  std::size_t conv_self_slot(std::size_t l) const { return 2 * l; }
  std::size_t conv_neigh_slot(std::size_t l) const { return 2 * l + 1; }
  std::size_t dense_weight_slot(std::size_t l) const { return 2 * num_conv_ + 2 * l; }
  std::size_t dense_bias_slot(std::size_t l) const { return 2 * num_conv_ + 2 * l + 1; }

  double squared_norm() const { return values_.squaredNorm(); }
  bool all_finite() const { return values_.allFinite(); }

private:
  std::size_t num_conv_ = 0;
  std::vector<TensorSlot> slots_;
  Eigen::VectorXd values_;
};

struct GnnModel {
  Architecture arch;
  ParameterSet params;

  /// Glorot-uniform weights, zero biases.
  static GnnModel initialized(const Architecture& arch, std::uint64_t seed);
  static GnnModel zeros(const Architecture& arch);
};

/// Graph-dependent operators and normalized features, built once per graph.
struct PreparedGraph {
  Graph graph;
  SparseRowMatrix adjacency;
  SparseRowMatrix mean;
  Eigen::VectorXd degrees;
  Eigen::MatrixXd features;  ///< after inorm

  static PreparedGraph from(const Graph& g, const FeatureMatrix& x);
  static PreparedGraph from_mesh(const PolyMesh& mesh);
};

/// Y = softmax(head(convs(inorm(x)))). UsageError on feature-width mismatch.
ProbPartition forward(const GnnModel& model, const Graph& g, const FeatureMatrix& x);
Eigen::MatrixXd forward(const GnnModel& model, const PreparedGraph& pg);

/// Hidden activations after every conv layer, for inspection.
std::vector<Eigen::MatrixXd> conv_activations(const GnnModel& model, const PreparedGraph& pg);

// ---------------------------------------------------------------- loss

inline constexpr double kGammaGuard = 1e-12;

/// Expected normalized cut with Gamma_k + eps in the denominators.
/// When `d_y` is given it receives dLoss/dY.
double guarded_expected_ncut(const PreparedGraph& pg, const Eigen::MatrixXd& y, double eps = kGammaGuard,
                             Eigen::MatrixXd* d_y = nullptr);

/// Training objective for one graph: guarded expected normalized cut of Y
/// plus l2 * ||params||^2.
double loss(const Graph& g, const ProbPartition& y, const ParameterSet& params, double l2_coeff);

struct LossAndGradient {
  double loss = 0;
  Eigen::VectorXd grad;  ///< aligned with ParameterSet::values()
};

/// Exact gradient of sum_graphs ncut(forward(graph)) + l2 * ||params||^2.
/// NumericalError names the layer where a non-finite value appeared.
LossAndGradient loss_and_gradient(const GnnModel& model, const std::vector<const PreparedGraph*>& batch,
                                  double l2_coeff);
LossAndGradient loss_and_gradient(const GnnModel& model, const PreparedGraph& pg, double l2_coeff);

// ---------------------------------------------------------------- training

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Eigen::VectorXd m, v;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr);

struct TrainConfig {
  double learning_rate = 1e-5;
  double l2_coeff = 1e-5;
  int batch_size = 4;
  int epochs = 300;
  std::uint64_t seed = 7;

  void validate() const;
};

struct DatasetSpec {
  /// Meshes per kind, in MeshKind order: squares, triangles, random-triangles, voronoi.
  std::array<int, 4> train_per_kind{200, 200, 200, 200};
  std::array<int, 4> val_per_kind{50, 50, 50, 50};
  int grid_min = 8, grid_max = 16;        ///< squares / triangle grids: n x n
  int seeds_min = 50, seeds_max = 200;    ///< voronoi seed count
  std::uint64_t seed = 7;
};

struct DatasetEntry {
  MeshKind kind;
  int n;
  std::uint64_t seed;
};

/// Deterministic list of (kind, n, seed) triples for the train and validation sets.
std::pair<std::vector<DatasetEntry>, std::vector<DatasetEntry>> plan_dataset(const DatasetSpec& spec);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  ///< mean guarded ncut over training graphs, seen during the epoch
  double val_loss = 0;    ///< mean ncut over validation graphs after the epoch
};

struct TrainResult {
  GnnModel final_model;
  GnnModel best_model;  ///< lowest validation loss seen (initial model included)
  double initial_val_loss = 0;
  std::vector<EpochRecord> history;
};

/// Mean guarded ncut of the model over the graphs.
double mean_loss(const GnnModel& model, const std::vector<PreparedGraph>& graphs);

/// Mini-batch Adam on the summed batch loss; data reshuffled every epoch.
/// NumericalError on a non-finite loss. `on_epoch` may be null.
TrainResult train(const GnnModel& initial, const std::vector<PreparedGraph>& train_set,
                  const std::vector<PreparedGraph>& val_set, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// ---------------------------------------------------------------- io

void write_model(std::ostream& out, const GnnModel& model);
GnnModel read_model(std::istream& in);
void save_model(const GnnModel& model, const std::filesystem::path& path);
GnnModel load_model(const std::filesystem::path& path);

}  // namespace polyagg

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

#include "polyagg/gnn.hpp"

#include "polyagg/error.hpp"
#include "polyagg/io.hpp"
#include "polyagg/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace polyagg {

namespace nn {

Eigen::MatrixXd inorm(const FeatureMatrix& x) {
  Eigen::MatrixXd out(x.rows(), 3);
  if (x.rows() == 0) return out;

  const double amax = x.col(0).maxCoeff();
  if (amax > 0) out.col(0) = x.col(0) / amax;
  else out.col(0).setZero();

  Eigen::VectorXd bx = x.col(1), by = x.col(2);
  const double wx = bx.maxCoeff() - bx.minCoeff();
  const double wy = by.maxCoeff() - by.minCoeff();
  if (wy > wx) {
    Eigen::VectorXd rotated_x = by;
    by = -bx;
    bx = std::move(rotated_x);
  }
  auto center_scale = [](const Eigen::VectorXd& c) -> Eigen::VectorXd {
    Eigen::VectorXd centered = c.array() - c.mean();
    const double s = centered.cwiseAbs().maxCoeff();
    if (!(s > 0)) return Eigen::VectorXd::Zero(c.size());
    return centered / s;
  };
  out.col(1) = center_scale(bx);
  out.col(2) = center_scale(by);
  return out;
}

SparseRowMatrix adjacency_matrix(const Graph& g) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.targets().size());
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.neighbors(i)) entries.emplace_back(i, j, 1.0);
  SparseRowMatrix a(g.num_nodes(), g.num_nodes());
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

SparseRowMatrix mean_operator(const Graph& g) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.targets().size());
  for (int i = 0; i < g.num_nodes(); ++i) {
    const double w = g.degree(i) > 0 ? 1.0 / g.degree(i) : 0.0;
    for (int j : g.neighbors(i)) entries.emplace_back(i, j, w);
  }
  SparseRowMatrix m(g.num_nodes(), g.num_nodes());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

Eigen::MatrixXd sage_conv(const Eigen::MatrixXd& h, const Graph& g, const Eigen::MatrixXd& w_self,
                          const Eigen::MatrixXd& w_neigh) {
  if (h.rows() != g.num_nodes() || w_self.rows() != h.cols() || w_neigh.rows() != h.cols() ||
      w_self.cols() != w_neigh.cols())
    throw UsageError("sage_conv: shape mismatch");
  return sage_conv(h, mean_operator(g), w_self, w_neigh);
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& z) {
  if (!z.allFinite()) throw NumericalError("softmax: non-finite input");
  Eigen::MatrixXd e = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  return e.array().colwise() / e.rowwise().sum().array();
}

}  // namespace nn

// ---------------------------------------------------------------- architecture

Eigen::Index Architecture::num_conv_params() const {
  Eigen::Index total = 0, in = feature_width;
  for (int w : conv_widths) {
    total += 2 * static_cast<Eigen::Index>(in) * w;
    in = w;
  }
  return total;
}

Eigen::Index Architecture::num_dense_params() const {
  Eigen::Index total = 0, in = conv_widths.empty() ? feature_width : conv_widths.back();
  for (int w : dense_widths) {
    total += static_cast<Eigen::Index>(in) * w + w;
    in = w;
  }
  return total;
}

void Architecture::validate() const {
  if (feature_width != 3) throw UsageError("architecture: feature width must be 3 (area, barycenter x, y)");
  if (conv_widths.empty()) throw UsageError("architecture: at least one conv layer");
  for (int w : conv_widths)
    if (w <= 0) throw UsageError("architecture: conv widths must be positive");
  for (int w : dense_widths)
    if (w <= 0) throw UsageError("architecture: dense widths must be positive");
  if (dense_activations.size() != dense_widths.size())
    throw UsageError("architecture: one activation per dense layer");
  if (num_classes() != 2) throw UsageError("architecture: output width must be 2");
}

ParameterSet::ParameterSet(const Architecture& arch) : num_conv_(arch.conv_widths.size()) {
  Eigen::Index offset = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    slots_.push_back({std::move(name), rows, cols, offset});
    offset += rows * cols;
  };
  Eigen::Index in = arch.feature_width;
  for (std::size_t l = 0; l < arch.conv_widths.size(); ++l) {
    add("conv" + std::to_string(l) + ".self", in, arch.conv_widths[l]);
    add("conv" + std::to_string(l) + ".neigh", in, arch.conv_widths[l]);
    in = arch.conv_widths[l];
  }
  for (std::size_t l = 0; l < arch.dense_widths.size(); ++l) {
    add("dense" + std::to_string(l) + ".weight", in, arch.dense_widths[l]);
    add("dense" + std::to_string(l) + ".bias", 1, arch.dense_widths[l]);
    in = arch.dense_widths[l];
  }
  values_ = Eigen::VectorXd::Zero(offset);
}

Eigen::Map<RowMatrixXd> ParameterSet::tensor(std::size_t k) {
  const auto& s = slots_.at(k);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const RowMatrixXd> ParameterSet::tensor(std::size_t k) const {
  const auto& s = slots_.at(k);
  return {values_.data() + s.offset, s.rows, s.cols};
}

GnnModel GnnModel::zeros(const Architecture& arch) {
  arch.validate();
  return {arch, ParameterSet(arch)};
}

GnnModel GnnModel::initialized(const Architecture& arch, std::uint64_t seed) {
  GnnModel model = zeros(arch);
  Rng rng = make_rng(seed, "init");
  for (std::size_t k = 0; k < model.params.slots().size(); ++k) {
    const auto& slot = model.params.slots()[k];
    if (slot.name.ends_with(".bias")) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(slot.rows + slot.cols));
    auto t = model.params.tensor(k);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform(rng, -limit, limit);
  }
  return model;
}

PreparedGraph PreparedGraph::from(const Graph& g, const FeatureMatrix& x) {
  if (x.rows() != g.num_nodes()) throw UsageError("feature rows do not match graph nodes");
  return {g, nn::adjacency_matrix(g), nn::mean_operator(g), g.degrees(), nn::inorm(x)};
}

PreparedGraph PreparedGraph::from_mesh(const PolyMesh& mesh) {
  return from(connectivity_graph(mesh), extract_features(mesh));
}

// ---------------------------------------------------------------- forward

namespace {

struct Tape {
  std::vector<Eigen::MatrixXd> conv_in;   // conv_in[l] feeds conv layer l; back() is the last conv output
  std::vector<Eigen::MatrixXd> conv_agg;  // mean * conv_in[l]
  std::vector<Eigen::MatrixXd> dense_in;  // dense_in[l] feeds dense layer l
  Eigen::MatrixXd logits;
  Eigen::MatrixXd y;
};

void check_finite(const Eigen::MatrixXd& m, const std::string& where) {
  if (!m.allFinite()) throw NumericalError("non-finite values in " + where);
}

Tape run_forward(const GnnModel& model, const PreparedGraph& pg) {
  const auto& arch = model.arch;
  const auto& p = model.params;
  if (pg.features.cols() != arch.feature_width)
    throw UsageError("forward: feature width " + std::to_string(pg.features.cols()) + " does not match model " +
                     std::to_string(arch.feature_width));
  Tape tape;
  tape.conv_in.push_back(pg.features);
  for (std::size_t l = 0; l < arch.conv_widths.size(); ++l) {
    const auto& h = tape.conv_in.back();
    tape.conv_agg.push_back(pg.mean * h);
    Eigen::MatrixXd out = h * p.conv_self(l) + tape.conv_agg.back() * p.conv_neigh(l);
    out = out.array().tanh().matrix();
    check_finite(out, "conv layer " + std::to_string(l));
    tape.conv_in.push_back(std::move(out));
  }
  Eigen::MatrixXd h = tape.conv_in.back();
  for (std::size_t l = 0; l < arch.dense_widths.size(); ++l) {
    tape.dense_in.push_back(h);
    h = nn::dense(h, p.dense_weight(l), p.dense_bias(l).row(0));
    if (arch.dense_activations[l] == Activation::Tanh) h = h.array().tanh().matrix();
    check_finite(h, "dense layer " + std::to_string(l));
  }
  tape.logits = std::move(h);
  tape.y = nn::softmax(tape.logits);
  return tape;
}

}  // namespace

Eigen::MatrixXd forward(const GnnModel& model, const PreparedGraph& pg) { return run_forward(model, pg).y; }

ProbPartition forward(const GnnModel& model, const Graph& g, const FeatureMatrix& x) {
  return ProbPartition(forward(model, PreparedGraph::from(g, x)));
}

std::vector<Eigen::MatrixXd> conv_activations(const GnnModel& model, const PreparedGraph& pg) {
  auto tape = run_forward(model, pg);
  return {tape.conv_in.begin() + 1, tape.conv_in.end()};
}

// ---------------------------------------------------------------- loss

double guarded_expected_ncut(const PreparedGraph& pg, const Eigen::MatrixXd& y, double eps, Eigen::MatrixXd* d_y) {
  if (y.rows() != pg.graph.num_nodes()) throw UsageError("loss: Y rows do not match graph");
  // cut_k = sum_i D_i Y_ik - Y_k^T A Y_k ; gamma_k = D^T Y_k + eps
  const Eigen::MatrixXd ay = pg.adjacency * y;
  const Eigen::RowVectorXd dy = pg.degrees.transpose() * y;
  double value = 0;
  if (d_y) d_y->resize(y.rows(), y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    const double gamma = dy(k) + eps;
    const double cut = dy(k) - y.col(k).dot(ay.col(k));
    value += cut / gamma;
    if (d_y) d_y->col(k) = (pg.degrees - 2.0 * ay.col(k)) / gamma - (cut / (gamma * gamma)) * pg.degrees;
  }
  return value;
}

double loss(const Graph& g, const ProbPartition& y, const ParameterSet& params, double l2_coeff) {
  PreparedGraph pg{g, nn::adjacency_matrix(g), {}, g.degrees(), {}};
  return guarded_expected_ncut(pg, y.matrix()) + l2_coeff * params.squared_norm();
}

LossAndGradient loss_and_gradient(const GnnModel& model, const std::vector<const PreparedGraph*>& batch,
                                  double l2_coeff) {
  const auto& arch = model.arch;
  const auto& p = model.params;
  LossAndGradient out;
  out.grad = 2.0 * l2_coeff * p.values();
  out.loss = l2_coeff * p.squared_norm();

  auto grad_tensor = [&](std::size_t slot) {
    const auto& s = p.slots()[slot];
    return Eigen::Map<RowMatrixXd>(out.grad.data() + s.offset, s.rows, s.cols);
  };

  for (const PreparedGraph* pg : batch) {
    const Tape tape = run_forward(model, *pg);
    Eigen::MatrixXd d_y;
    const double value = guarded_expected_ncut(*pg, tape.y, kGammaGuard, &d_y);
    if (!std::isfinite(value)) throw NumericalError("non-finite loss");
    out.loss += value;

    // softmax
    Eigen::MatrixXd delta =
        tape.y.array() * (d_y.colwise() - (d_y.array() * tape.y.array()).rowwise().sum().matrix()).array();

    for (std::size_t l = arch.dense_widths.size(); l-- > 0;) {
      if (arch.dense_activations[l] == Activation::Tanh) {
        const Eigen::MatrixXd& post = l + 1 < arch.dense_widths.size() ? tape.dense_in[l + 1] : tape.logits;
        delta = (delta.array() * (1.0 - post.array().square())).matrix();
      }
      grad_tensor(p.dense_weight_slot(l)).noalias() += tape.dense_in[l].transpose() * delta;
      grad_tensor(p.dense_bias_slot(l)).row(0) += delta.colwise().sum();
      delta = (delta * p.dense_weight(l).transpose()).eval();
      check_finite(delta, "gradient of dense layer " + std::to_string(l));
    }

    for (std::size_t l = arch.conv_widths.size(); l-- > 0;) {
      const Eigen::MatrixXd& post = tape.conv_in[l + 1];
      const Eigen::MatrixXd d_pre = (delta.array() * (1.0 - post.array().square())).matrix();
      grad_tensor(p.conv_self_slot(l)).noalias() += tape.conv_in[l].transpose() * d_pre;
      grad_tensor(p.conv_neigh_slot(l)).noalias() += tape.conv_agg[l].transpose() * d_pre;
      if (l > 0) {
        // Adjoint of the mean aggregation distributes 1/|N(i)| back to neighbours.
        const Eigen::MatrixXd d_agg = d_pre * p.conv_neigh(l).transpose();
        delta = d_pre * p.conv_self(l).transpose() + pg->mean.transpose() * d_agg;
        check_finite(delta, "gradient of conv layer " + std::to_string(l));
      }
    }
  }
  if (!out.grad.allFinite()) throw NumericalError("non-finite parameter gradient");
  return out;
}

LossAndGradient loss_and_gradient(const GnnModel& model, const PreparedGraph& pg, double l2_coeff) {
  return loss_and_gradient(model, std::vector<const PreparedGraph*>{&pg}, l2_coeff);
}

// ---------------------------------------------------------------- training

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr) {
  if (grad.size() != params.size()) throw UsageError("adam_step: gradient size does not match parameters");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0) || !(l2_coeff >= 0) || batch_size < 1 || epochs < 0)
    throw UsageError("train config: learning rate and l2 must be >= 0, batch >= 1, epochs >= 0");
}

std::pair<std::vector<DatasetEntry>, std::vector<DatasetEntry>> plan_dataset(const DatasetSpec& spec) {
  if (spec.grid_min < 2 || spec.grid_max < spec.grid_min || spec.seeds_min < 4 || spec.seeds_max < spec.seeds_min)
    throw UsageError("dataset: invalid resolution range");
  constexpr std::array kinds{MeshKind::Squares, MeshKind::Triangles, MeshKind::RandomTriangles, MeshKind::Voronoi};
  auto plan = [&](const std::array<int, 4>& counts, const char* split) {
    std::vector<DatasetEntry> out;
    Rng rng = make_rng(spec.seed, std::string("dataset/") + split);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      if (counts[k] < 0) throw UsageError("dataset: negative count");
      for (int i = 0; i < counts[k]; ++i) {
        const bool vor = kinds[k] == MeshKind::Voronoi;
        const int n = static_cast<int>(vor ? uniform_int(rng, spec.seeds_min, spec.seeds_max)
                                           : uniform_int(rng, spec.grid_min, spec.grid_max));
        out.push_back({kinds[k], n, rng()});
      }
    }
    return out;
  };
  return {plan(spec.train_per_kind, "train"), plan(spec.val_per_kind, "val")};
}

double mean_loss(const GnnModel& model, const std::vector<PreparedGraph>& graphs) {
  if (graphs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0;
  for (const auto& pg : graphs) total += guarded_expected_ncut(pg, forward(model, pg));
  return total / static_cast<double>(graphs.size());
}

TrainResult train(const GnnModel& initial, const std::vector<PreparedGraph>& train_set,
                  const std::vector<PreparedGraph>& val_set, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("train: empty training set");

  TrainResult result{initial, initial, mean_loss(initial, val_set), {}};
  double best_val = result.initial_val_loss;
  GnnModel model = initial;
  AdamState adam;
  Rng rng = make_rng(cfg.seed, "shuffle");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const PreparedGraph*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(&train_set[order[k]]);
      LossAndGradient lg;
      try {
        lg = loss_and_gradient(model, batch, cfg.l2_coeff);
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      seen += lg.loss - cfg.l2_coeff * model.params.squared_norm();
      adam_step(model.params.values(), lg.grad, adam, cfg.learning_rate);
      if (!model.params.all_finite())
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": non-finite parameters");
    }
    EpochRecord rec{epoch, seen / static_cast<double>(train_set.size()), mean_loss(model, val_set)};
    if (!std::isfinite(rec.train_loss))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.best_model = model;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.final_model = std::move(model);
  if (val_set.empty()) result.best_model = result.final_model;
  return result;
}

// ---------------------------------------------------------------- io

namespace {

constexpr const char* kModelMagic = "polyagg-gnn v1";

const char* activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "none"; }

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "none") return Activation::None;
  throw DataError("model: unknown activation '" + s + "'");
}

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

}  // namespace

void write_model(std::ostream& out, const GnnModel& model) {
  nlohmann::json desc;
  desc["feature_width"] = model.arch.feature_width;
  desc["conv_widths"] = model.arch.conv_widths;
  desc["conv_activation"] = "tanh";
  desc["dense_widths"] = model.arch.dense_widths;
  std::vector<std::string> acts;
  for (auto a : model.arch.dense_activations) acts.emplace_back(activation_name(a));
  desc["dense_activations"] = acts;
  desc["output"] = "softmax";
  desc["layout"] = "row-major float64 little-endian";
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& s : model.params.slots()) tensors.push_back({{"name", s.name}, {"shape", {s.rows, s.cols}}});
  desc["tensors"] = tensors;

  out << kModelMagic << '\n' << desc.dump() << '\n';
  out.write(reinterpret_cast<const char*>(model.params.values().data()),
            static_cast<std::streamsize>(model.params.size() * sizeof(double)));
}

GnnModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("model: empty file");
  if (line.rfind("polyagg-gnn ", 0) != 0) throw DataError("model: bad magic, not a polyagg-gnn file");
  if (line != kModelMagic) throw DataError("model: unsupported format version '" + line.substr(12) + "'");
  if (!std::getline(in, line)) throw DataError("model: missing architecture descriptor");

  Architecture arch;
  std::vector<std::pair<std::string, std::array<Eigen::Index, 2>>> declared;
  try {
    const auto desc = nlohmann::json::parse(line);
    arch.feature_width = desc.at("feature_width").get<int>();
    arch.conv_widths = desc.at("conv_widths").get<std::vector<int>>();
    arch.dense_widths = desc.at("dense_widths").get<std::vector<int>>();
    arch.dense_activations.clear();
    for (const auto& a : desc.at("dense_activations")) arch.dense_activations.push_back(parse_activation(a));
    for (const auto& t : desc.at("tensors"))
      declared.push_back({t.at("name").get<std::string>(), t.at("shape").get<std::array<Eigen::Index, 2>>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: malformed architecture descriptor: ") + e.what());
  }
  try {
    arch.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("model: ") + e.what());
  }

  GnnModel model = GnnModel::zeros(arch);
  const auto& slots = model.params.slots();
  if (declared.size() != slots.size())
    throw DataError("model: expected " + std::to_string(slots.size()) + " tensors, file declares " +
                    std::to_string(declared.size()));
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& [name, shape] = declared[k];
    if (name != slots[k].name || shape[0] != slots[k].rows || shape[1] != slots[k].cols)
      throw DataError("model: tensor " + std::to_string(k) + " '" + name + "' has shape [" +
                      std::to_string(shape[0]) + "," + std::to_string(shape[1]) + "], architecture requires '" +
                      slots[k].name + "' [" + std::to_string(slots[k].rows) + "," + std::to_string(slots[k].cols) +
                      "]");
  }
  const auto bytes = static_cast<std::streamsize>(model.params.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(model.params.values().data()), bytes);
  if (in.gcount() != bytes)
    throw DataError("model: truncated parameter data (" + std::to_string(in.gcount()) + " of " +
                    std::to_string(bytes) + " bytes)");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("model: trailing bytes after parameters");
  if (!model.params.all_finite()) throw DataError("model: non-finite parameters");
  return model;
}

void save_model(const GnnModel& model, const std::filesystem::path& path) {
  std::ostringstream out(std::ios::binary);
  write_model(out, model);
  write_file_atomic(path, out.str());
}

GnnModel load_model(const std::filesystem::path& path) {
  std::istringstream in(read_file(path), std::ios::binary);
  try {
    return read_model(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace polyagg

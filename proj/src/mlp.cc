// Copyright 2026 The attrinf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attrinf/mlp.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace attrinf {
namespace {

constexpr char kMagic[] = "attrinf-mlp";
constexpr int kFormatVersion = 1;

Matrix Relu(const Matrix& m) { return m.cwiseMax(0.0); }

void WriteDouble(std::ostream& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, end - buf);
}

double ReadDouble(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw DataError("model file truncated");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError("model file: bad number '" + tok + "'");
  }
  return v;
}

void Expect(std::istream& in, const std::string& word) {
  std::string tok;
  if (!(in >> tok) || tok != word) {
    throw DataError("model file: expected '" + word + "', got '" + tok + "'");
  }
}

template <typename T>
T ReadValue(std::istream& in) {
  T v{};
  if (!(in >> v)) throw DataError("model file truncated");
  return v;
}

}  // namespace

void MlpSpec::Validate() const {
  if (input_dim <= 0) throw ConfigError("mlp: input_dim must be positive");
  if (num_classes <= 0) throw ConfigError("mlp: num_classes must be positive");
  if (hidden_dims.empty()) throw ConfigError("mlp: hidden_dims is empty");
  for (int h : hidden_dims) {
    if (h <= 0) throw ConfigError("mlp: hidden dims must be positive");
  }
}

int MlpSpec::total_hidden() const {
  return std::accumulate(hidden_dims.begin(), hidden_dims.end(), 0);
}

Mlp::Mlp(MlpSpec spec, std::vector<Layer> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.Validate();
  if (layers_.size() != spec_.hidden_dims.size() + 1) {
    throw ConfigError("mlp: layer count does not match spec");
  }
  int fan_in = spec_.input_dim;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const int fan_out = l < spec_.hidden_dims.size() ? spec_.hidden_dims[l]
                                                     : spec_.num_classes;
    if (layers_[l].weight.rows() != fan_in ||
        layers_[l].weight.cols() != fan_out ||
        layers_[l].bias.size() != fan_out) {
      throw ConfigError("mlp: layer " + std::to_string(l) +
                        " shape does not match spec");
    }
    fan_in = fan_out;
  }
}

Mlp Mlp::Zeros(const MlpSpec& spec) {
  spec.Validate();
  std::vector<Layer> layers;
  int fan_in = spec.input_dim;
  for (std::size_t l = 0; l <= spec.hidden_dims.size(); ++l) {
    const int fan_out =
        l < spec.hidden_dims.size() ? spec.hidden_dims[l] : spec.num_classes;
    layers.push_back({Matrix::Zero(fan_in, fan_out), Vector::Zero(fan_out)});
    fan_in = fan_out;
  }
  return Mlp(spec, std::move(layers));
}

Mlp Mlp::Initialize(const MlpSpec& spec, std::uint64_t seed) {
  Mlp model = Zeros(spec);
  Rng rng(seed);
  for (Layer& layer : model.layers_) {
    const double bound = 1.0 / std::sqrt(double(layer.weight.rows()));
    std::uniform_real_distribution<double> u(-bound, bound);
    // Row-major fill so the draw order matches the serialized layout.
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        layer.weight(i, j) = u(rng);
      }
    }
  }
  model.info_.seed = seed;
  return model;
}

ActivationTrace Mlp::Forward(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != spec_.input_dim) {
    throw DataError("forward: input has " + std::to_string(x.size()) +
                    " features, model expects " +
                    std::to_string(spec_.input_dim));
  }
  ActivationTrace trace;
  Vector a = x;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    a = (layers_[l].weight.transpose() * a + layers_[l].bias).cwiseMax(0.0);
    trace.hidden.push_back(a);
  }
  const Vector logits = layers_.back().weight.transpose() * a +
                        layers_.back().bias;
  trace.confidence = Softmax(logits.transpose()).transpose();
  return trace;
}

BatchTrace Mlp::ForwardBatch(const Matrix& x) const {
  if (x.cols() != spec_.input_dim) {
    throw DataError("forward: input has " + std::to_string(x.cols()) +
                    " features, model expects " +
                    std::to_string(spec_.input_dim));
  }
  BatchTrace t;
  t.post.push_back(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = t.post.back() * layers_[l].weight;
    z.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) {
      t.post.push_back(Relu(z));
    } else {
      t.probs = Softmax(z);
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

Matrix Mlp::PredictProba(const Matrix& x) const {
  return ForwardBatch(x).probs;
}

Matrix Mlp::HiddenActivations(const Matrix& x) const {
  BatchTrace t = ForwardBatch(x);
  Matrix out(x.rows(), spec_.total_hidden());
  Eigen::Index col = 0;
  for (std::size_t l = 1; l < t.post.size(); ++l) {
    out.middleCols(col, t.post[l].cols()) = t.post[l];
    col += t.post[l].cols();
  }
  return out;
}

bool Mlp::AllFinite() const {
  for (const Layer& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

bool Mlp::operator==(const Mlp& other) const {
  if (!(spec_ == other.spec_) || layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight ||
        layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

Matrix Softmax(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Gradients Gradients::ZerosLike(const Mlp& model) {
  Gradients g;
  for (const Layer& l : model.layers()) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())});
  }
  return g;
}

double Gradients::SquaredNorm() const {
  double s = 0.0;
  for (const Layer& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

void Gradients::SetZero() {
  for (Layer& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

void Gradients::Scale(double s) {
  for (Layer& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
}

void Gradients::AddScaled(const Gradients& other, double s) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += s * other.layers[i].weight;
    layers[i].bias += s * other.layers[i].bias;
  }
}

std::vector<Matrix> BatchDeltas(const Mlp& model, const BatchTrace& trace,
                                std::span<const int> labels) {
  const auto& layers = model.layers();
  Matrix delta = trace.probs;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= model.spec().num_classes) {
      throw DataError("gradient: label " + std::to_string(y) + " out of range");
    }
    delta(i, y) -= 1.0;
  }
  std::vector<Matrix> deltas(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l > 0) {
      Matrix back = delta * layers[l].weight.transpose();
      back = back.cwiseProduct(
          (trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
      deltas[l] = std::move(delta);
      delta = std::move(back);
    } else {
      deltas[l] = std::move(delta);
    }
  }
  return deltas;
}

Gradients Gradient(const Mlp& model, const Matrix& x,
                   std::span<const int> labels, double* loss) {
  if (x.rows() == 0) throw DataError("gradient: empty batch");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DataError("gradient: label count does not match batch");
  }
  const BatchTrace t = model.ForwardBatch(x);
  const double n = static_cast<double>(x.rows());
  const std::vector<Matrix> deltas = BatchDeltas(model, t, labels);
  if (loss) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < t.probs.rows(); ++i) {
      total -= std::log(
          std::max(t.probs(i, labels[static_cast<std::size_t>(i)]), 1e-300));
    }
    *loss = total / n;
  }
  Gradients g;
  g.layers.resize(deltas.size());
  for (std::size_t l = 0; l < deltas.size(); ++l) {
    g.layers[l].weight = (t.post[l].transpose() * deltas[l]) / n;
    g.layers[l].bias = deltas[l].colwise().sum().transpose() / n;
  }
  return g;
}

void ExampleGradient(const Mlp& model, const BatchTrace& trace, int row,
                     int label, Gradients& out) {
  const auto& layers = model.layers();
  Vector delta = trace.probs.row(row).transpose();
  delta[label] -= 1.0;
  for (std::size_t l = layers.size(); l-- > 0;) {
    out.layers[l].weight.noalias() =
        trace.post[l].row(row).transpose() * delta.transpose();
    out.layers[l].bias = delta;
    if (l > 0) {
      Vector back = layers[l].weight * delta;
      for (Eigen::Index j = 0; j < back.size(); ++j) {
        if (trace.pre[l - 1](row, j) <= 0.0) back[j] = 0.0;
      }
      delta = std::move(back);
    }
  }
}

double MeanCrossEntropy(const Mlp& model, const Matrix& x,
                        std::span<const int> labels) {
  const Matrix p = model.PredictProba(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    total -= std::log(std::max(p(i, labels[static_cast<std::size_t>(i)]),
                               1e-300));
  }
  return total / static_cast<double>(p.rows());
}

double Accuracy(const Mlp& model, const Matrix& x,
                std::span<const int> labels) {
  if (x.rows() == 0) return 0.0;
  const Matrix p = model.PredictProba(x);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index arg = 0;
    p.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.rows());
}

int TrainConfig::ResolvedEpochs(std::size_t n) const {
  if (min_steps <= 0 || n == 0) return epochs;
  const std::size_t b = static_cast<std::size_t>(std::max(batch_size, 1));
  const int per_epoch = static_cast<int>((n + b - 1) / b);
  const int needed = (min_steps + per_epoch - 1) / per_epoch;
  return std::max(epochs, needed);
}

std::vector<std::size_t> EpochOrder(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

Mlp Train(Mlp model, const Matrix& x, std::span<const int> labels,
          const TrainConfig& cfg) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DataError("train: label count does not match data");
  }
  if (cfg.batch_size <= 0 || !(cfg.learning_rate > 0)) {
    throw ConfigError("train: batch_size and learning_rate must be positive");
  }
  const std::size_t n = labels.size();
  const int epochs = cfg.ResolvedEpochs(n);
  Rng rng(DeriveSeed(cfg.seed, 0, "batches"));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  double loss = 0.0;
  std::vector<int> y;
  for (int epoch = 0; epoch < epochs && n > 0; ++epoch) {
    const std::vector<std::size_t> order = EpochOrder(n, rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<Eigen::Index> rows(order.begin() + start,
                                     order.begin() + end);
      y.clear();
      for (auto r : rows) y.push_back(labels[static_cast<std::size_t>(r)]);
      const Matrix xb = x(rows, Eigen::all);
      const Gradients g = Gradient(model, xb, y, &loss);
      if (!std::isfinite(loss)) {
        throw TrainingError("train: non-finite loss at epoch " +
                            std::to_string(epoch));
      }
      for (std::size_t l = 0; l < g.layers.size(); ++l) {
        model.mutable_layers()[l].weight -= cfg.learning_rate * g.layers[l].weight;
        model.mutable_layers()[l].bias -= cfg.learning_rate * g.layers[l].bias;
      }
    }
    if (!model.AllFinite()) {
      throw TrainingError("train: non-finite parameters after epoch " +
                          std::to_string(epoch));
    }
  }
  TrainingInfo& info = model.mutable_info();
  info.epochs = epochs;
  info.seed = cfg.seed;
  info.dp = false;
  info.final_loss = loss;
  return model;
}

// --- Serialization ----------------------------------------------------------

void WriteMlp(std::ostream& out, const Mlp& model) {
  const MlpSpec& s = model.spec();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "input_dim " << s.input_dim << '\n';
  out << "hidden " << s.hidden_dims.size();
  for (int h : s.hidden_dims) out << ' ' << h;
  out << "\nclasses " << s.num_classes << '\n';
  const TrainingInfo& info = model.info();
  out << "info " << info.epochs << ' ' << info.seed << ' ' << (info.dp ? 1 : 0);
  for (double v : {info.noise_multiplier, info.clip_norm, info.epsilon,
                   info.delta, info.final_loss}) {
    out << ' ';
    WriteDouble(out, v);
  }
  out << '\n';
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const Layer& layer = model.layers()[l];
    out << "layer " << l << ' ' << layer.weight.rows() << ' '
        << layer.weight.cols() << '\n';
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        if (j) out << ' ';
        WriteDouble(out, layer.weight(i, j));
      }
      out << '\n';
    }
    out << "bias";
    for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
      out << ' ';
      WriteDouble(out, layer.bias[j]);
    }
    out << '\n';
  }
}

Mlp ReadMlp(std::istream& in) {
  Expect(in, kMagic);
  const int version = ReadValue<int>(in);
  if (version != kFormatVersion) {
    throw DataError("model file: unsupported version " +
                    std::to_string(version));
  }
  MlpSpec spec;
  Expect(in, "input_dim");
  spec.input_dim = ReadValue<int>(in);
  Expect(in, "hidden");
  const auto n_hidden = ReadValue<std::size_t>(in);
  if (n_hidden > 1024) throw DataError("model file: implausible depth");
  spec.hidden_dims.resize(n_hidden);
  for (int& h : spec.hidden_dims) h = ReadValue<int>(in);
  Expect(in, "classes");
  spec.num_classes = ReadValue<int>(in);
  spec.Validate();
  TrainingInfo info;
  Expect(in, "info");
  info.epochs = ReadValue<int>(in);
  info.seed = ReadValue<std::uint64_t>(in);
  info.dp = ReadValue<int>(in) != 0;
  info.noise_multiplier = ReadDouble(in);
  info.clip_norm = ReadDouble(in);
  info.epsilon = ReadDouble(in);
  info.delta = ReadDouble(in);
  info.final_loss = ReadDouble(in);
  Mlp model = Mlp::Zeros(spec);
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    Layer& layer = model.mutable_layers()[l];
    Expect(in, "layer");
    if (ReadValue<std::size_t>(in) != l ||
        ReadValue<Eigen::Index>(in) != layer.weight.rows() ||
        ReadValue<Eigen::Index>(in) != layer.weight.cols()) {
      throw DataError("model file: layer " + std::to_string(l) +
                      " header does not match spec");
    }
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        layer.weight(i, j) = ReadDouble(in);
      }
    }
    Expect(in, "bias");
    for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
      layer.bias[j] = ReadDouble(in);
    }
  }
  model.mutable_info() = info;
  return model;
}

void SaveMlp(const std::string& path, const Mlp& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path);
  WriteMlp(out, model);
}

Mlp LoadMlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  return ReadMlp(in);
}

}  // namespace attrinf

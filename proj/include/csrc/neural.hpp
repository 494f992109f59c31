// Copyright 2026 The csrc Authors.
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

// Stacked-LSTM classifier over the six-slot cloze encoding, with
// backpropagation through time, Adam, and a binary model container.
//
// The classifier is a template over its scalar type so that reference
// computations (finite differences) can run in extended precision.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csrc/baselines.hpp"
#include "csrc/dataset.hpp"
#include "csrc/error.hpp"

namespace csrc {

enum class Architecture : std::uint32_t {
  StackedRecurrent = 0,    // every hidden size is an LSTM layer
  RecurrentThenDense = 1,  // first hidden size is an LSTM, the rest tanh dense layers
};

enum class Mode { Train, Infer };

struct ModelConfig {
  std::size_t input_dim = 303;
  std::size_t embedding_dim = 300;  // leading token-vector columns of each input row
  std::vector<std::size_t> hidden{450, 200, 100};
  std::size_t classes = 0;
  Architecture architecture = Architecture::StackedRecurrent;
  double dropout = 0.5;
  bool train_entities = false;
  std::size_t entity_count = 0;

  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar = double>
class LstmClassifier {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  ModelConfig config;
  // Trainable tensors in declared order:
  //   recurrent layer l: W (4H x in), U (4H x H), b (4H x 1), gate blocks i, f, g, o
  //   dense layer k:     D (H x in), d (H x 1)
  //   output:            V (C x H), c (C x 1)
  //   relation embedding (C x E), then entity embedding (N x E) if trained
  std::vector<Matrix> tensors;

  std::size_t recurrent_count() const {
    return config.architecture == Architecture::StackedRecurrent ? config.hidden.size() : 1;
  }
  std::size_t dense_count() const { return config.hidden.size() - recurrent_count(); }
  std::size_t recurrent_W(std::size_t l) const { return 3 * l; }
  std::size_t dense_W(std::size_t k) const { return 3 * recurrent_count() + 2 * k; }
  std::size_t output_W() const { return 3 * recurrent_count() + 2 * dense_count(); }
  std::size_t relation_embedding() const { return output_W() + 2; }
  std::size_t entity_embedding() const { return output_W() + 3; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }
  /// Parameters of the recurrent, dense and output layers (no embeddings).
  std::size_t classifier_parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < relation_embedding(); ++i) n += static_cast<std::size_t>(tensors[i].size());
    return n;
  }

  template <typename To>
  LstmClassifier<To> cast() const {
    LstmClassifier<To> out;
    out.config = config;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<To>());
    return out;
  }

  struct RecurrentTrace {
    std::vector<Matrix> x, i, f, g, o, c, tc, h, mask, y;
  };
  struct DenseTrace {
    Matrix x, a, mask, y;
  };
  struct Trace {
    std::vector<RecurrentTrace> recurrent;
    std::vector<DenseTrace> dense;
    Matrix features;   // input to the output layer
    Matrix log_probs;  // C x B
  };

  /// Log-probabilities (C x B). Train mode draws inverted-dropout masks from
  /// `seed`; infer mode ignores it.
  Matrix forward(std::span<const EncodedExample* const> batch, Mode mode, std::uint64_t seed,
                 Trace* trace = nullptr) const {
    check_batch(batch);
    const auto B = static_cast<Eigen::Index>(batch.size());
    std::vector<Matrix> x = inputs(batch);
    const bool drop = mode == Mode::Train && config.dropout > 0.0;
    const Scalar keep_scale = Scalar(1) / Scalar(1.0 - config.dropout);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(1.0 - config.dropout);
    auto mask_like = [&](Eigen::Index rows) {
      Matrix m(rows, B);
      for (Eigen::Index c = 0; c < B; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = keep(rng) ? keep_scale : Scalar(0);
      }
      return m;
    };
    if (trace) {
      trace->recurrent.assign(recurrent_count(), {});
      trace->dense.assign(dense_count(), {});
    }

    for (std::size_t l = 0; l < recurrent_count(); ++l) {
      const Matrix& W = tensors[recurrent_W(l)];
      const Matrix& U = tensors[recurrent_W(l) + 1];
      const Matrix& b = tensors[recurrent_W(l) + 2];
      const Eigen::Index H = U.cols();
      Matrix h = Matrix::Zero(H, B);
      Matrix c = Matrix::Zero(H, B);
      for (std::size_t t = 0; t < kSlotCount; ++t) {
        Matrix z = W * x[t] + U * h;
        z.colwise() += b.col(0);
        Matrix gi = sigmoid(z.topRows(H));
        Matrix gf = sigmoid(z.middleRows(H, H));
        Matrix gg = z.middleRows(2 * H, H).array().tanh().matrix();
        Matrix go = sigmoid(z.bottomRows(H));
        c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
        Matrix tc = c.array().tanh().matrix();
        h = go.cwiseProduct(tc);
        Matrix mask;
        Matrix y = h;
        if (drop) {
          mask = mask_like(H);
          y = h.cwiseProduct(mask);
        }
        if (trace) {
          auto& tr = trace->recurrent[l];
          tr.x.push_back(x[t]);
          tr.i.push_back(gi);
          tr.f.push_back(gf);
          tr.g.push_back(gg);
          tr.o.push_back(go);
          tr.c.push_back(c);
          tr.tc.push_back(tc);
          tr.h.push_back(h);
          tr.mask.push_back(mask);
          tr.y.push_back(y);
        }
        x[t] = std::move(y);
      }
    }

    Matrix features = std::move(x[kSlotCount - 1]);
    for (std::size_t k = 0; k < dense_count(); ++k) {
      const Matrix& D = tensors[dense_W(k)];
      Matrix a = D * features;
      a.colwise() += tensors[dense_W(k) + 1].col(0);
      a = a.array().tanh().matrix();
      Matrix mask;
      Matrix y = a;
      if (drop) {
        mask = mask_like(a.rows());
        y = a.cwiseProduct(mask);
      }
      if (trace) trace->dense[k] = {features, a, mask, y};
      features = std::move(y);
    }

    Matrix logits = tensors[output_W()] * features;
    logits.colwise() += tensors[output_W() + 1].col(0);
    Matrix log_probs(logits.rows(), B);
    for (Eigen::Index col = 0; col < B; ++col) {
      const Scalar mx = logits.col(col).maxCoeff();
      const Scalar lse = mx + std::log((logits.col(col).array() - mx).exp().sum());
      log_probs.col(col) = logits.col(col).array() - lse;
    }
    if (trace) {
      trace->features = std::move(features);
      trace->log_probs = log_probs;
    }
    return log_probs;
  }

  /// Probabilities (C x B).
  Matrix probabilities(std::span<const EncodedExample* const> batch, Mode mode = Mode::Infer,
                       std::uint64_t seed = 0) const {
    return forward(batch, mode, seed).array().exp().matrix();
  }

  /// Mean cross-entropy of the batch and its gradient for every tensor.
  Scalar loss_and_gradients(std::span<const EncodedExample* const> batch, std::vector<Matrix>& grads,
                            Mode mode = Mode::Infer, std::uint64_t seed = 0) const {
    check_labels(batch);
    Trace tr;
    Matrix log_probs = forward(batch, mode, seed, &tr);
    const auto B = static_cast<Eigen::Index>(batch.size());
    grads.clear();
    for (const auto& t : tensors) grads.push_back(Matrix::Zero(t.rows(), t.cols()));

    Scalar loss = 0;
    Matrix dlogits = log_probs.array().exp().matrix();
    for (Eigen::Index col = 0; col < B; ++col) {
      const auto label = static_cast<Eigen::Index>(batch[static_cast<std::size_t>(col)]->label);
      loss -= log_probs(label, col);
      dlogits(label, col) -= Scalar(1);
    }
    loss /= Scalar(B);
    dlogits /= Scalar(B);

    grads[output_W()] = dlogits * tr.features.transpose();
    grads[output_W() + 1] = dlogits.rowwise().sum();
    Matrix d_features = tensors[output_W()].transpose() * dlogits;

    for (std::size_t k = dense_count(); k-- > 0;) {
      const auto& dt = tr.dense[k];
      Matrix dy = dt.mask.size() ? Matrix(d_features.cwiseProduct(dt.mask)) : d_features;
      Matrix dz = dy.cwiseProduct((Scalar(1) - dt.a.array().square()).matrix());
      grads[dense_W(k)] += dz * dt.x.transpose();
      grads[dense_W(k) + 1] += dz.rowwise().sum();
      d_features = tensors[dense_W(k)].transpose() * dz;
    }

    std::vector<Matrix> dy(kSlotCount);
    for (std::size_t t = 0; t < kSlotCount; ++t) {
      const Eigen::Index H = tensors[recurrent_W(recurrent_count() - 1) + 1].cols();
      dy[t] = t + 1 == kSlotCount ? d_features : Matrix::Zero(H, B);
    }
    for (std::size_t l = recurrent_count(); l-- > 0;) {
      const auto& rt = tr.recurrent[l];
      const Matrix& W = tensors[recurrent_W(l)];
      const Matrix& U = tensors[recurrent_W(l) + 1];
      const Eigen::Index H = U.cols();
      Matrix& dW = grads[recurrent_W(l)];
      Matrix& dU = grads[recurrent_W(l) + 1];
      Matrix& db = grads[recurrent_W(l) + 2];
      Matrix dh_next = Matrix::Zero(H, B);
      Matrix dc_next = Matrix::Zero(H, B);
      Matrix dz(4 * H, B);
      std::vector<Matrix> dx(kSlotCount);
      for (std::size_t t = kSlotCount; t-- > 0;) {
        Matrix dh = (rt.mask[t].size() ? Matrix(dy[t].cwiseProduct(rt.mask[t])) : dy[t]) + dh_next;
        const Matrix c_prev = t ? rt.c[t - 1] : Matrix::Zero(H, B);
        const Matrix h_prev = t ? rt.h[t - 1] : Matrix::Zero(H, B);
        Matrix d_o = dh.cwiseProduct(rt.tc[t]);
        Matrix dc = dh.cwiseProduct(rt.o[t]).cwiseProduct((Scalar(1) - rt.tc[t].array().square()).matrix()) + dc_next;
        Matrix di = dc.cwiseProduct(rt.g[t]);
        Matrix dg = dc.cwiseProduct(rt.i[t]);
        Matrix df = dc.cwiseProduct(c_prev);
        dc_next = dc.cwiseProduct(rt.f[t]);
        dz.topRows(H) = di.cwiseProduct(sigmoid_slope(rt.i[t]));
        dz.middleRows(H, H) = df.cwiseProduct(sigmoid_slope(rt.f[t]));
        dz.middleRows(2 * H, H) = dg.cwiseProduct((Scalar(1) - rt.g[t].array().square()).matrix());
        dz.bottomRows(H) = d_o.cwiseProduct(sigmoid_slope(rt.o[t]));
        dW += dz * rt.x[t].transpose();
        dU += dz * h_prev.transpose();
        db += dz.rowwise().sum();
        dx[t] = W.transpose() * dz;
        dh_next = U.transpose() * dz;
      }
      dy = std::move(dx);
    }

    const auto E = static_cast<Eigen::Index>(config.embedding_dim);
    for (std::size_t t = 0; t < kSlotCount; ++t) {
      for (Eigen::Index col = 0; col < B; ++col) {
        const EncodedExample& ex = *batch[static_cast<std::size_t>(col)];
        if (ex.relation_index[t] >= 0) {
          grads[relation_embedding()].row(ex.relation_index[t]) += dy[t].col(col).head(E).transpose();
        } else if (config.train_entities && ex.entity_index[t] >= 0) {
          grads[entity_embedding()].row(ex.entity_index[t]) += dy[t].col(col).head(E).transpose();
        }
      }
    }
    return loss;
  }

  Scalar loss(std::span<const EncodedExample* const> batch, Mode mode = Mode::Infer, std::uint64_t seed = 0) const {
    check_labels(batch);
    Matrix log_probs = forward(batch, mode, seed);
    Scalar total = 0;
    for (std::size_t col = 0; col < batch.size(); ++col) {
      total -= log_probs(batch[col]->label, static_cast<Eigen::Index>(col));
    }
    return total / Scalar(batch.size());
  }

 private:
  static Matrix sigmoid(const Matrix& z) {
    return z.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
  }
  static Matrix sigmoid_slope(const Matrix& s) { return s.cwiseProduct((Scalar(1) - s.array()).matrix()); }

  void check_labels(std::span<const EncodedExample* const> batch) const {
    for (const auto* ex : batch) {
      if (ex->label < 0 || ex->label >= static_cast<int>(config.classes)) throw DataError("label out of range");
    }
  }

  void check_batch(std::span<const EncodedExample* const> batch) const {
    if (batch.empty()) throw UsageError("forward: empty batch");
    for (const auto* ex : batch) {
      if (ex->features.rows() != static_cast<Eigen::Index>(kSlotCount) ||
          ex->features.cols() != static_cast<Eigen::Index>(config.input_dim)) {
        throw DataError("forward: example shaped " + std::to_string(ex->features.rows()) + "x" +
                        std::to_string(ex->features.cols()) + ", model expects 6x" + std::to_string(config.input_dim));
      }
      if (ex->label >= static_cast<int>(config.classes)) throw DataError("label out of range");
      for (std::size_t t = 0; t < kSlotCount; ++t) {
        if (ex->relation_index[t] >= static_cast<int>(config.classes)) throw DataError("relation index out of range");
        if (config.train_entities && ex->entity_index[t] >= static_cast<int>(config.entity_count)) {
          throw DataError("entity index out of range");
        }
      }
    }
  }

  // Per time step, input_dim x B. Relation rows (and entity rows when
  // entity embeddings train) take their token vector from the model.
  std::vector<Matrix> inputs(std::span<const EncodedExample* const> batch) const {
    const auto B = static_cast<Eigen::Index>(batch.size());
    const auto E = static_cast<Eigen::Index>(config.embedding_dim);
    std::vector<Matrix> x(kSlotCount, Matrix(static_cast<Eigen::Index>(config.input_dim), B));
    for (std::size_t t = 0; t < kSlotCount; ++t) {
      for (Eigen::Index col = 0; col < B; ++col) {
        const EncodedExample& ex = *batch[static_cast<std::size_t>(col)];
        x[t].col(col) = ex.features.row(static_cast<Eigen::Index>(t)).transpose().template cast<Scalar>();
        if (ex.relation_index[t] >= 0) {
          x[t].col(col).head(E) = tensors[relation_embedding()].row(ex.relation_index[t]).transpose();
        } else if (config.train_entities && ex.entity_index[t] >= 0) {
          x[t].col(col).head(E) = tensors[entity_embedding()].row(ex.entity_index[t]).transpose();
        }
      }
    }
    return x;
  }
};

/// Closed-form parameter count of the recurrent, dense and output layers.
inline std::size_t expected_classifier_parameters(const ModelConfig& c) {
  std::size_t n = 0;
  std::size_t in = c.input_dim;
  const std::size_t recurrent = c.architecture == Architecture::StackedRecurrent ? c.hidden.size() : 1;
  for (std::size_t l = 0; l < c.hidden.size(); ++l) {
    const std::size_t h = c.hidden[l];
    n += l < recurrent ? 4 * h * (in + h + 1) : h * (in + 1);
    in = h;
  }
  return n + c.classes * (in + 1);
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, forget-gate biases 1.
/// The relation embedding starts from `relations` when given; trainable
/// entity embeddings start from `entity_init`.
inline LstmClassifier<double> init_model(const ModelConfig& config, std::uint64_t seed,
                                         const RelationEmbedder* relations = nullptr,
                                         const Eigen::MatrixXd* entity_init = nullptr) {
  if (config.classes < 2) throw UsageError("init_model: need at least two classes");
  if (config.input_dim == 0 || config.embedding_dim == 0 || config.embedding_dim > config.input_dim) {
    throw UsageError("init_model: dimensions must be positive with embedding_dim <= input_dim");
  }
  if (config.hidden.empty() || std::find(config.hidden.begin(), config.hidden.end(), 0u) != config.hidden.end()) {
    throw UsageError("init_model: hidden sizes must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw UsageError("init_model: dropout must be in [0, 1)");
  using Matrix = Eigen::MatrixXd;
  LstmClassifier<double> m;
  m.config = config;
  std::mt19937_64 rng(seed);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix t(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = u(rng);
    }
    return t;
  };
  auto in = static_cast<Eigen::Index>(config.input_dim);
  for (std::size_t l = 0; l < m.recurrent_count(); ++l) {
    const auto h = static_cast<Eigen::Index>(config.hidden[l]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in + h));
    m.tensors.push_back(uniform(4 * h, in, bound));
    m.tensors.push_back(uniform(4 * h, h, bound));
    Matrix b = uniform(4 * h, 1, bound);
    b.middleRows(h, h).setOnes();
    m.tensors.push_back(b);
    in = h;
  }
  for (std::size_t k = 0; k < m.dense_count(); ++k) {
    const auto h = static_cast<Eigen::Index>(config.hidden[m.recurrent_count() + k]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    m.tensors.push_back(uniform(h, in, bound));
    m.tensors.push_back(uniform(h, 1, bound));
    in = h;
  }
  const auto classes = static_cast<Eigen::Index>(config.classes);
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(in));
  m.tensors.push_back(uniform(classes, in, out_bound));
  m.tensors.push_back(uniform(classes, 1, out_bound));
  const auto E = static_cast<Eigen::Index>(config.embedding_dim);
  if (relations) {
    if (relations->vectors.rows() != classes || relations->vectors.cols() != E) {
      throw UsageError("init_model: relation embedder shape does not match the model");
    }
    m.tensors.push_back(relations->vectors);
  } else {
    m.tensors.push_back(uniform(classes, E, 1.0 / std::sqrt(static_cast<double>(E))));
  }
  if (config.train_entities) {
    if (!entity_init || entity_init->rows() != static_cast<Eigen::Index>(config.entity_count) ||
        entity_init->cols() != E) {
      throw UsageError("init_model: trainable entities need an entity_count x embedding_dim initial matrix");
    }
    m.tensors.push_back(*entity_init);
  }
  return m;
}

template <typename Matrix>
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> first;
  std::vector<Matrix> second;
};

/// One bias-corrected Adam update of every tensor.
template <typename Matrix>
void adam_step(AdamState<Matrix>& s, std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) throw UsageError("adam_step: parameter/gradient count mismatch");
  if (s.first.empty()) {
    for (const auto& p : params) {
      s.first.push_back(Matrix::Zero(p.rows(), p.cols()));
      s.second.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (s.first.size() != params.size()) throw UsageError("adam_step: state does not match parameters");
  ++s.step;
  using Scalar = typename Matrix::Scalar;
  const Scalar b1 = Scalar(s.beta1), b2 = Scalar(s.beta2);
  const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(s.step));
  const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(s.step));
  const Scalar lr = Scalar(s.learning_rate), eps = Scalar(s.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].rows() != grads[k].rows() || params[k].cols() != grads[k].cols() ||
        s.first[k].rows() != params[k].rows() || s.first[k].cols() != params[k].cols()) {
      throw UsageError("adam_step: shape mismatch in tensor " + std::to_string(k));
    }
    s.first[k] = b1 * s.first[k] + (Scalar(1) - b1) * grads[k];
    s.second[k] = b2 * s.second[k] + (Scalar(1) - b2) * grads[k].cwiseAbs2();
    params[k].array() -= lr * (s.first[k].array() / c1) / ((s.second[k].array() / c2).sqrt() + eps);
  }
}

struct TrainConfig {
  std::size_t batch_size = 25;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> dev_accuracy;
  std::size_t best_epoch = 0;  // 1-based
  double best_dev_accuracy = -1.0;
};

namespace detail {

inline std::vector<const EncodedExample*> pointers(std::span<const EncodedExample> xs) {
  std::vector<const EncodedExample*> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace detail

struct Prediction {
  int label = -1;
  std::vector<double> probabilities;
};

/// Infer-mode argmax (first index wins ties), evaluated in chunks.
inline std::vector<Prediction> predict(const LstmClassifier<double>& model, std::span<const EncodedExample> xs) {
  std::vector<Prediction> out;
  constexpr std::size_t kChunk = 256;
  auto ptrs = detail::pointers(xs);
  for (std::size_t begin = 0; begin < ptrs.size(); begin += kChunk) {
    const std::size_t n = std::min(kChunk, ptrs.size() - begin);
    Eigen::MatrixXd p = model.probabilities(std::span(ptrs).subspan(begin, n));
    for (Eigen::Index col = 0; col < p.cols(); ++col) {
      Prediction pred;
      pred.probabilities.assign(p.col(col).data(), p.col(col).data() + p.rows());
      pred.label = static_cast<int>(argmax_first(pred.probabilities));
      out.push_back(std::move(pred));
    }
  }
  return out;
}

inline Prediction predict(const LstmClassifier<double>& model, const EncodedExample& x) {
  return predict(model, std::span<const EncodedExample>(&x, 1)).front();
}

inline double accuracy(const LstmClassifier<double>& model, std::span<const EncodedExample> xs) {
  if (xs.empty()) return 0.0;
  std::size_t correct = 0;
  auto preds = predict(model, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) correct += preds[i].label == xs[i].label;
  return static_cast<double>(correct) / static_cast<double>(xs.size());
}

/// Minibatch Adam on mean cross-entropy. The epoch order and dropout masks
/// derive from config.seed; the tensors of the best dev epoch (earliest on
/// ties) are restored at the end.
inline TrainHistory train(LstmClassifier<double>& model, std::span<const EncodedExample> train_set,
                          std::span<const EncodedExample> dev_set, const TrainConfig& config) {
  if (train_set.empty() || dev_set.empty()) throw UsageError("train: train and dev partitions must be nonempty");
  if (config.epochs == 0) throw UsageError("train: epochs must be >= 1");
  if (config.batch_size == 0) throw UsageError("train: batch_size must be >= 1");
  AdamState<Eigen::MatrixXd> adam;
  adam.learning_rate = config.learning_rate;
  TrainHistory history;
  std::vector<Eigen::MatrixXd> best = model.tensors;
  std::vector<std::size_t> order(train_set.size());
  std::vector<Eigen::MatrixXd> grads;
  std::vector<const EncodedExample*> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(detail::derive_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0, b = 0; begin < order.size(); begin += config.batch_size, ++b) {
      batch.clear();
      for (std::size_t i = begin; i < std::min(order.size(), begin + config.batch_size); ++i) {
        batch.push_back(&train_set[order[i]]);
      }
      const double loss =
          model.loss_and_gradients(batch, grads, Mode::Train, detail::derive_seed(config.seed, epoch, b + 1));
      loss_sum += loss * static_cast<double>(batch.size());
      adam_step(adam, model.tensors, grads);
    }
    history.train_loss.push_back(loss_sum / static_cast<double>(train_set.size()));
    const double dev_acc = accuracy(model, dev_set);
    history.dev_accuracy.push_back(dev_acc);
    if (dev_acc > history.best_dev_accuracy) {
      history.best_dev_accuracy = dev_acc;
      history.best_epoch = epoch;
      best = model.tensors;
    }
  }
  model.tensors = std::move(best);
  return history;
}

// Binary container, little-endian:
//   "CSRCLSTM" | u32 version | u32 architecture | u64 input_dim |
//   u64 embedding_dim | u64 classes | u64 entity_count | u32 train_entities |
//   f64 dropout | u64 n, u64 hidden[n] | relation names | entity names |
//   metadata string | u64 n, tensors (u64 rows, u64 cols, f64 row-major)
// Strings are u64 length + bytes; name lists are u64 count + strings.

inline constexpr char kModelMagic[8] = {'C', 'S', 'R', 'C', 'L', 'S', 'T', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

struct SavedModel {
  LstmClassifier<double> model;
  Vocabulary relations;
  Vocabulary entities;
  std::string metadata;
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { bytes(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void names(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }

 private:
  void bytes(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, n);
  }
  std::ostream& out_;
};

class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(bytes(8)); }
  std::string str(std::uint64_t limit = 1u << 24) {
    const auto n = u64();
    if (n > limit) throw DataError("model file: implausible string length " + std::to_string(n));
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  std::vector<std::string> names() {
    const auto n = u64();
    if (n > (1u << 26)) throw DataError("model file: implausible name count");
    std::vector<std::string> v;
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(str());
    return v;
  }
  void read(char* dst, std::uint64_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in_.gcount()) != n) throw DataError("model file: truncated");
  }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    read(reinterpret_cast<char*>(buf), static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
  }
  std::istream& in_;
};

}  // namespace detail

inline void save_model(std::ostream& out, const LstmClassifier<double>& m, const Vocabulary& relations,
                       const Vocabulary& entities = {}, const std::string& metadata = {}) {
  if (relations.size() != m.config.classes) throw UsageError("save_model: vocabulary size differs from class count");
  detail::LeWriter w(out);
  out.write(kModelMagic, sizeof kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(m.config.architecture));
  w.u64(m.config.input_dim);
  w.u64(m.config.embedding_dim);
  w.u64(m.config.classes);
  w.u64(m.config.entity_count);
  w.u32(m.config.train_entities ? 1 : 0);
  w.f64(m.config.dropout);
  w.u64(m.config.hidden.size());
  for (auto h : m.config.hidden) w.u64(h);
  w.names(relations.names());
  w.names(entities.names());
  w.str(metadata);
  w.u64(m.tensors.size());
  for (const auto& t : m.tensors) {
    w.u64(static_cast<std::uint64_t>(t.rows()));
    w.u64(static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) w.f64(t(r, c));
    }
  }
}

inline SavedModel load_model(std::istream& in) {
  detail::LeReader r(in);
  char magic[sizeof kModelMagic];
  r.read(magic, sizeof magic);
  if (!std::equal(magic, magic + sizeof magic, kModelMagic)) throw DataError("model file: bad magic (not a csrc LSTM model)");
  const auto version = r.u32();
  if (version != kModelVersion) {
    throw DataError("model file: format version " + std::to_string(version) + " unsupported (this build reads version " +
                    std::to_string(kModelVersion) + ")");
  }
  SavedModel s;
  ModelConfig& c = s.model.config;
  const auto arch = r.u32();
  if (arch > 1) throw DataError("model file: unknown architecture " + std::to_string(arch));
  c.architecture = static_cast<Architecture>(arch);
  c.input_dim = r.u64();
  c.embedding_dim = r.u64();
  c.classes = r.u64();
  c.entity_count = r.u64();
  c.train_entities = r.u32() != 0;
  c.dropout = r.f64();
  const auto layers = r.u64();
  if (layers == 0 || layers > 64) throw DataError("model file: implausible layer count");
  c.hidden.clear();
  for (std::uint64_t i = 0; i < layers; ++i) c.hidden.push_back(r.u64());
  s.relations = Vocabulary(r.names());
  s.entities = Vocabulary(r.names());
  s.metadata = r.str();
  if (s.relations.size() != c.classes) throw DataError("model file: vocabulary size differs from class count");
  // Expected shapes come from a freshly initialized model with this config.
  ModelConfig shape_config = c;
  Eigen::MatrixXd entity_shape;
  if (c.train_entities) entity_shape = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.entity_count),
                                                             static_cast<Eigen::Index>(c.embedding_dim));
  LstmClassifier<double> reference;
  try {
    reference = init_model(shape_config, 0, nullptr, c.train_entities ? &entity_shape : nullptr);
  } catch (const UsageError& e) {
    throw DataError(std::string("model file: inconsistent configuration: ") + e.what());
  }
  const auto count = r.u64();
  if (count != reference.tensors.size()) throw DataError("model file: tensor count mismatch");
  for (std::size_t k = 0; k < count; ++k) {
    const auto rows = r.u64(), cols = r.u64();
    const auto& expect = reference.tensors[k];
    if (rows != static_cast<std::uint64_t>(expect.rows()) || cols != static_cast<std::uint64_t>(expect.cols())) {
      throw DataError("model file: tensor " + std::to_string(k) + " has unexpected shape");
    }
    Eigen::MatrixXd t(expect.rows(), expect.cols());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = r.f64();
    }
    s.model.tensors.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("model file: trailing bytes");
  return s;
}

inline void save_model_file(const std::string& path, const LstmClassifier<double>& m, const Vocabulary& relations,
                            const Vocabulary& entities = {}, const std::string& metadata = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  save_model(out, m, relations, entities, metadata);
}

inline SavedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace csrc

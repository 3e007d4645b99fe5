#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spade/errors.hpp"
#include "spade/graph.hpp"
#include "spade/rng.hpp"

// Two-layer graph convolutional network with hand-written backpropagation:
//   hidden = ReLU(A_hat X W0),  logits = A_hat hidden W1
// trained by Adam on the cross-entropy of the labeled nodes plus an L2 term.
// No autodiff; the finite-difference gradient check in the test suite is the
// safety net for every formula below.

namespace spade {

struct GcnHyperparams {
  int hidden = 16;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5; // applied to the input features and the hidden layer
  int epochs = 200;
};

struct GcnModel {
  Eigen::MatrixXd w0; // d x h
  Eigen::MatrixXd w1; // h x c
  GcnHyperparams hp;
  std::uint64_t seed = 0;

  int input_dim() const { return static_cast<int>(w0.rows()); }
  int hidden_dim() const { return static_cast<int>(w0.cols()); }
  int num_classes() const { return static_cast<int>(w1.cols()); }
};

struct TrainTrace {
  std::vector<double> loss;           // per epoch, finite by contract
  std::vector<double> train_accuracy; // per epoch
};

struct GcnForward {
  Eigen::MatrixXd hidden; // N x h, the embedding handed to the KNN stage
  Eigen::MatrixXd logits; // N x C
};

/// Glorot-uniform initialization, deterministic for a fixed seed.
inline GcnModel init_model(int d, int h, int c, std::uint64_t seed,
                           const GcnHyperparams& hp = {}) {
  if (d < 1 || h < 1 || c < 1)
    throw UsageError("gcn: dimensions must be positive");
  GcnModel m;
  m.hp = hp;
  m.hp.hidden = h;
  m.seed = seed;
  std::mt19937_64 gen(rng::derive_seed(seed, 0x1417));
  auto glorot = [&gen](Eigen::MatrixXd& w, int rows, int cols) {
    const double a = std::sqrt(6.0 / (rows + cols));
    w.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = rng::uniform(gen, -a, a);
  };
  glorot(m.w0, d, h);
  glorot(m.w1, h, c);
  return m;
}

/// Inference-mode forward pass (dropout off). Deterministic.
inline GcnForward forward(const GcnModel& m, const NormalizedAdjacency& a_hat,
                          const Eigen::MatrixXd& x) {
  if (x.cols() != m.w0.rows() || x.rows() != a_hat.size())
    throw UsageError("gcn forward: shape mismatch");
  GcnForward f;
  f.hidden = (a_hat.matrix() * (x * m.w0)).cwiseMax(0.0);
  f.logits = a_hat.matrix() * (f.hidden * m.w1);
  return f;
}

/// argmax with ties resolved to the lowest class index.
inline std::vector<int> predict(const GcnModel& m,
                                const NormalizedAdjacency& a_hat,
                                const Eigen::MatrixXd& x) {
  Eigen::MatrixXd logits = forward(m, a_hat, x).logits;
  std::vector<int> out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    out[i] = best;
  }
  return out;
}

inline double accuracy(const std::vector<int>& predictions,
                       const std::vector<int>& labels,
                       const std::vector<int>& ids) {
  if (ids.empty()) return 0.0;
  int correct = 0;
  for (int i : ids)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

struct GcnGradients {
  double loss = 0.0;
  double train_accuracy = 0.0;
  Eigen::MatrixXd d_w0;
  Eigen::MatrixXd d_w1;
};

namespace detail {

/// Shared forward/backward core. x_used and hidden_mask carry any dropout
/// already applied (hidden_mask empty = no hidden dropout). Loss is the mean
/// cross-entropy over train_ids plus 0.5 * wd * (|W0|^2 + |W1|^2).
inline GcnGradients gcn_backprop(const GcnModel& m,
                                 const NormalizedAdjacency& a_hat,
                                 const Eigen::MatrixXd& x_used,
                                 const Eigen::MatrixXd& hidden_mask,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& train_ids) {
  const auto& ahat = a_hat.matrix();
  const Eigen::Index n = x_used.rows();
  const int c = m.num_classes();
  const double inv_t = 1.0 / static_cast<double>(train_ids.size());
  const double wd = m.hp.weight_decay;

  Eigen::MatrixXd z0 = ahat * (x_used * m.w0);
  Eigen::MatrixXd h = z0.cwiseMax(0.0);
  Eigen::MatrixXd h_used =
      hidden_mask.size() ? h.cwiseProduct(hidden_mask) : h;
  Eigen::MatrixXd z1 = ahat * (h_used * m.w1);

  GcnGradients g;
  Eigen::MatrixXd dz1 = Eigen::MatrixXd::Zero(n, c);
  int correct = 0;
  for (int i : train_ids) {
    Eigen::RowVectorXd row = z1.row(i);
    double mx = row.maxCoeff();
    Eigen::RowVectorXd p = (row.array() - mx).exp();
    double denom = p.sum();
    p /= denom;
    g.loss -= inv_t * (std::log(p[labels[i]] <= 0.0 ? 1e-300 : p[labels[i]]));
    dz1.row(i) = inv_t * p;
    dz1(i, labels[i]) -= inv_t;
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (row[j] > row[best]) best = j;
    if (best == labels[i]) ++correct;
  }
  g.loss += 0.5 * wd * (m.w0.squaredNorm() + m.w1.squaredNorm());
  g.train_accuracy =
      static_cast<double>(correct) / static_cast<double>(train_ids.size());

  // A_hat is symmetric, so (A_hat M)^T N = M^T (A_hat N)
  Eigen::MatrixXd g1 = ahat * dz1;
  g.d_w1 = h_used.transpose() * g1 + wd * m.w1;
  Eigen::MatrixXd dh = g1 * m.w1.transpose();
  if (hidden_mask.size()) dh = dh.cwiseProduct(hidden_mask);
  Eigen::MatrixXd dz0 =
      dh.cwiseProduct((z0.array() > 0.0).cast<double>().matrix());
  Eigen::MatrixXd g0 = ahat * dz0;
  g.d_w0 = x_used.transpose() * g0 + wd * m.w0;
  return g;
}

} // namespace detail

/// Loss and analytic gradients with dropout disabled. The training loop calls
/// the same core with masked inputs; tests diff this against central finite
/// differences.
inline GcnGradients gcn_loss_gradients(const GcnModel& m,
                                       const NormalizedAdjacency& a_hat,
                                       const Eigen::MatrixXd& x,
                                       const std::vector<int>& labels,
                                       const std::vector<int>& train_ids) {
  return detail::gcn_backprop(m, a_hat, x, Eigen::MatrixXd(), labels,
                              train_ids);
}

/// Adam training on the labeled nodes. Deterministic for a fixed seed: the
/// dropout stream is derived from the model seed, and epochs=0 returns the
/// model unchanged.
inline std::pair<GcnModel, TrainTrace> train(GcnModel m,
                                             const NormalizedAdjacency& a_hat,
                                             const Eigen::MatrixXd& x,
                                             const std::vector<int>& labels,
                                             const std::vector<int>& train_ids,
                                             const GcnHyperparams& hp) {
  if (train_ids.empty()) throw UsageError("gcn train: no training nodes");
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw UsageError("gcn train: labels length != node count");
  for (int i : train_ids)
    if (labels[i] < 0 || labels[i] >= m.num_classes())
      throw UsageError("gcn train: invalid label on train node " +
                       std::to_string(i));
  if (hp.hidden != m.hidden_dim())
    throw UsageError("gcn train: hyperparameter hidden dim != model");
  m.hp = hp;

  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Eigen::MatrixXd m0 = Eigen::MatrixXd::Zero(m.w0.rows(), m.w0.cols());
  Eigen::MatrixXd v0 = m0, m1 = Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols());
  Eigen::MatrixXd v1 = m1;
  std::mt19937_64 dropout_gen(rng::derive_seed(m.seed, 0xd20b));
  const double rate = hp.dropout;
  const double keep_scale = rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;

  TrainTrace trace;
  Eigen::MatrixXd x_used = x;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    Eigen::MatrixXd hidden_mask;
    if (rate > 0.0) {
      // masking a zero entry is a no-op, so the input mask only spends draws
      // on nonzeros; the hidden mask is sampled per entry.
      x_used = x;
      double* p = x_used.data();
      for (Eigen::Index t = 0; t < x_used.size(); ++t)
        if (p[t] != 0.0)
          p[t] = rng::uniform01(dropout_gen) < rate ? 0.0 : p[t] * keep_scale;
      hidden_mask.resize(x.rows(), hp.hidden);
      double* q = hidden_mask.data();
      for (Eigen::Index t = 0; t < hidden_mask.size(); ++t)
        q[t] = rng::uniform01(dropout_gen) < rate ? 0.0 : keep_scale;
    }
    GcnGradients g =
        detail::gcn_backprop(m, a_hat, x_used, hidden_mask, labels, train_ids);
    if (!std::isfinite(g.loss))
      throw NumericError("gcn train: non-finite loss at epoch " +
                         std::to_string(epoch));

    const double t = epoch + 1;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    auto adam = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& mm, Eigen::MatrixXd& vv,
                    const Eigen::MatrixXd& grad) {
      mm = b1 * mm + (1.0 - b1) * grad;
      vv = b2 * vv + (1.0 - b2) * grad.cwiseProduct(grad);
      w.array() -= hp.learning_rate * (mm.array() / bc1) /
                   ((vv.array() / bc2).sqrt() + eps);
    };
    adam(m.w0, m0, v0, g.d_w0);
    adam(m.w1, m1, v1, g.d_w1);
    if (!m.w0.allFinite() || !m.w1.allFinite())
      throw NumericError("gcn train: non-finite parameter at epoch " +
                         std::to_string(epoch));
    trace.loss.push_back(g.loss);
    trace.train_accuracy.push_back(g.train_accuracy);
  }
  return {std::move(m), std::move(trace)};
}

/// Versioned JSON checkpoint with row-major weight payloads.
inline void save_model(const GcnModel& m, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["d"] = m.input_dim();
  j["h"] = m.hidden_dim();
  j["c"] = m.num_classes();
  j["seed"] = m.seed;
  j["hyperparams"] = {{"hidden", m.hp.hidden},
                      {"learning_rate", m.hp.learning_rate},
                      {"weight_decay", m.hp.weight_decay},
                      {"dropout", m.hp.dropout},
                      {"epochs", m.hp.epochs}};
  auto dump = [](const Eigen::MatrixXd& w) {
    std::vector<double> flat;
    flat.reserve(w.size());
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j2 = 0; j2 < w.cols(); ++j2) flat.push_back(w(i, j2));
    return flat;
  };
  j["w0"] = dump(m.w0);
  j["w1"] = dump(m.w1);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out << j.dump(1) << "\n";
}

inline GcnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format_version").get<int>() != 1)
      throw DataError(path + ": unsupported checkpoint version");
    GcnModel m;
    const int d = j.at("d").get<int>();
    const int h = j.at("h").get<int>();
    const int c = j.at("c").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& hp = j.at("hyperparams");
    m.hp.hidden = hp.at("hidden").get<int>();
    m.hp.learning_rate = hp.at("learning_rate").get<double>();
    m.hp.weight_decay = hp.at("weight_decay").get<double>();
    m.hp.dropout = hp.at("dropout").get<double>();
    m.hp.epochs = hp.at("epochs").get<int>();
    auto fill = [&](Eigen::MatrixXd& w, const nlohmann::json& arr, int rows,
                    int cols) {
      if (static_cast<int>(arr.size()) != rows * cols)
        throw DataError(path + ": weight payload has wrong length");
      w.resize(rows, cols);
      int t = 0;
      for (int i = 0; i < rows; ++i)
        for (int j2 = 0; j2 < cols; ++j2) w(i, j2) = arr.at(t++).get<double>();
    };
    fill(m.w0, j.at("w0"), d, h);
    fill(m.w1, j.at("w1"), h, c);
    if (!m.w0.allFinite() || !m.w1.allFinite())
      throw DataError(path + ": checkpoint contains non-finite weights");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed checkpoint: " + e.what());
  }
}

} // namespace spade

#include "paire/model.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "paire/rng.hpp"

namespace paire {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (weight_ego < 0.0 || weight_ego > 1.0) throw Error("weight_ego must be in [0,1]");
  if (learning_rate <= 0.0) throw Error("learning_rate must be > 0");
  if (h1 < 1 || h2 < 1) throw Error("hidden sizes must be >= 1");
}

namespace {

Matrix glorot(Index rows, Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

void softmax_rows(Matrix& z) {
  for (Index i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    row /= row.sum();
  }
}

void check_shapes(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg) {
  if (x_ego.rows() != x_agg.rows() || x_ego.cols() != params.feature_width() ||
      x_agg.cols() != params.feature_width()) {
    throw std::logic_error("model input shape mismatch");
  }
}

}  // namespace

ModelParams ModelParams::init(Index feature_width, int h1, int h2, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1417u));
  ModelParams p;
  p.enc_ego1 = glorot(feature_width, h1, rng);
  p.enc_ego2 = glorot(h1, h2, rng);
  p.enc_agg1 = glorot(feature_width, h1, rng);
  p.enc_agg2 = glorot(h1, h2, rng);
  const Index d = 2 * (static_cast<Index>(h1) + h2);
  p.dec_ego = glorot(d, feature_width, rng);
  p.dec_agg = glorot(d, feature_width, rng);
  p.b_ego1 = Vector::Zero(h1);
  p.b_ego2 = Vector::Zero(h2);
  p.b_agg1 = Vector::Zero(h1);
  p.b_agg2 = Vector::Zero(h2);
  p.b_dec_ego = Vector::Zero(feature_width);
  p.b_dec_agg = Vector::Zero(feature_width);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p;
  p.enc_ego1 = Matrix::Zero(other.enc_ego1.rows(), other.enc_ego1.cols());
  p.enc_ego2 = Matrix::Zero(other.enc_ego2.rows(), other.enc_ego2.cols());
  p.enc_agg1 = Matrix::Zero(other.enc_agg1.rows(), other.enc_agg1.cols());
  p.enc_agg2 = Matrix::Zero(other.enc_agg2.rows(), other.enc_agg2.cols());
  p.dec_ego = Matrix::Zero(other.dec_ego.rows(), other.dec_ego.cols());
  p.dec_agg = Matrix::Zero(other.dec_agg.rows(), other.dec_agg.cols());
  p.b_ego1 = Vector::Zero(other.b_ego1.size());
  p.b_ego2 = Vector::Zero(other.b_ego2.size());
  p.b_agg1 = Vector::Zero(other.b_agg1.size());
  p.b_agg2 = Vector::Zero(other.b_agg2.size());
  p.b_dec_ego = Vector::Zero(other.b_dec_ego.size());
  p.b_dec_agg = Vector::Zero(other.b_dec_agg.size());
  return p;
}

std::vector<std::pair<std::string, Eigen::Map<Eigen::VectorXd>>> ModelParams::flat_views() {
  std::vector<std::pair<std::string, Eigen::Map<Eigen::VectorXd>>> views;
  auto add = [&views](const char* name, double* data, Index size) {
    views.emplace_back(name, Eigen::Map<Eigen::VectorXd>(data, size));
  };
  add("enc_ego1", enc_ego1.data(), enc_ego1.size());
  add("enc_ego2", enc_ego2.data(), enc_ego2.size());
  add("enc_agg1", enc_agg1.data(), enc_agg1.size());
  add("enc_agg2", enc_agg2.data(), enc_agg2.size());
  add("dec_ego", dec_ego.data(), dec_ego.size());
  add("dec_agg", dec_agg.data(), dec_agg.size());
  add("b_ego1", b_ego1.data(), b_ego1.size());
  add("b_ego2", b_ego2.data(), b_ego2.size());
  add("b_agg1", b_agg1.data(), b_agg1.size());
  add("b_agg2", b_agg2.data(), b_agg2.size());
  add("b_dec_ego", b_dec_ego.data(), b_dec_ego.size());
  add("b_dec_agg", b_dec_agg.data(), b_dec_agg.size());
  return views;
}

Forward forward(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg) {
  check_shapes(params, x_ego, x_agg);
  Forward f;
  f.h1_ego = (x_ego * params.enc_ego1).rowwise() + params.b_ego1.transpose();
  f.h2_ego = (f.h1_ego * params.enc_ego2).rowwise() + params.b_ego2.transpose();
  f.h1_agg = (x_agg * params.enc_agg1).rowwise() + params.b_agg1.transpose();
  f.h2_agg = (f.h1_agg * params.enc_agg2).rowwise() + params.b_agg2.transpose();

  const Index h1 = params.h1();
  const Index h2 = params.h2();
  f.embedding.resize(x_ego.rows(), 2 * (h1 + h2));
  f.embedding.leftCols(h1) = f.h1_ego;
  f.embedding.middleCols(h1, h2) = f.h2_ego;
  f.embedding.middleCols(h1 + h2, h1) = f.h1_agg;
  f.embedding.rightCols(h2) = f.h2_agg;
  if (!f.embedding.allFinite()) {
    throw Error("forward: non-finite embedding (training diverged)");
  }

  f.q_ego = (f.embedding * params.dec_ego).rowwise() + params.b_dec_ego.transpose();
  softmax_rows(f.q_ego);
  f.q_agg = (f.embedding * params.dec_agg).rowwise() + params.b_dec_agg.transpose();
  softmax_rows(f.q_agg);
  if (!f.q_ego.allFinite() || !f.q_agg.allFinite()) {
    throw Error("forward: non-finite decoder output (training diverged)");
  }
  return f;
}

Matrix encode(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg) {
  check_shapes(params, x_ego, x_agg);
  const Index h1 = params.h1();
  const Index h2 = params.h2();
  Matrix h1e = (x_ego * params.enc_ego1).rowwise() + params.b_ego1.transpose();
  Matrix h1a = (x_agg * params.enc_agg1).rowwise() + params.b_agg1.transpose();
  Matrix emb(x_ego.rows(), 2 * (h1 + h2));
  emb.leftCols(h1) = h1e;
  emb.middleCols(h1, h2) = (h1e * params.enc_ego2).rowwise() + params.b_ego2.transpose();
  emb.middleCols(h1 + h2, h1) = h1a;
  emb.rightCols(h2) = (h1a * params.enc_agg2).rowwise() + params.b_agg2.transpose();
  if (!emb.allFinite()) throw Error("encode: non-finite embedding");
  return emb;
}

double kl_loss(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw std::logic_error("kl_loss: size mismatch");
  double sum = 0.0;
  for (Index j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) sum += p[j] * std::log(p[j] / std::max(q[j], kKlFloor));
  }
  return sum;
}

double kl_loss_sum(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw std::logic_error("kl_loss_sum: shape mismatch");
  }
  double sum = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (pij > 0.0) sum += pij * std::log(pij / std::max(q(i, j), kKlFloor));
    }
  }
  return sum;
}

double training_loss(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg,
                     const Matrix& p_ego, const Matrix& p_agg, double weight_ego) {
  const Forward f = forward(params, x_ego, x_agg);
  const double batch = static_cast<double>(x_ego.rows());
  return weight_ego * kl_loss_sum(p_ego, f.q_ego) / batch +
         (1.0 - weight_ego) * kl_loss_sum(p_agg, f.q_agg) / batch;
}

Gradients backward(const ModelParams& params, const Forward& fwd, const Matrix& x_ego,
                   const Matrix& x_agg, const Matrix& p_ego, const Matrix& p_agg,
                   double weight_ego) {
  check_shapes(params, x_ego, x_agg);
  if (fwd.q_ego.rows() != x_ego.rows() || p_ego.rows() != x_ego.rows() ||
      p_agg.rows() != x_ego.rows() || p_ego.cols() != params.feature_width() ||
      p_agg.cols() != params.feature_width()) {
    throw std::logic_error("backward: shape mismatch");
  }
  const double batch = static_cast<double>(x_ego.rows());
  const double w_ego = weight_ego / batch;
  const double w_agg = (1.0 - weight_ego) / batch;

  Gradients g = ModelParams::zeros_like(params);

  // KL through softmax: gradient at the decoder pre-activation is (Q - P),
  // scaled by the task weight and the batch-mean reduction.
  Matrix dz_ego = (fwd.q_ego - p_ego) * w_ego;
  Matrix dz_agg = (fwd.q_agg - p_agg) * w_agg;

  g.dec_ego = fwd.embedding.transpose() * dz_ego;
  g.b_dec_ego = dz_ego.colwise().sum().transpose();
  g.dec_agg = fwd.embedding.transpose() * dz_agg;
  g.b_dec_agg = dz_agg.colwise().sum().transpose();

  // Both decoders feed gradient into the shared embedding.
  Matrix d_emb = dz_ego * params.dec_ego.transpose() + dz_agg * params.dec_agg.transpose();

  const Index h1 = params.h1();
  const Index h2 = params.h2();
  Matrix dh1_ego = d_emb.leftCols(h1);
  Matrix dh2_ego = d_emb.middleCols(h1, h2);
  Matrix dh1_agg = d_emb.middleCols(h1 + h2, h1);
  Matrix dh2_agg = d_emb.rightCols(h2);

  g.enc_ego2 = fwd.h1_ego.transpose() * dh2_ego;
  g.b_ego2 = dh2_ego.colwise().sum().transpose();
  dh1_ego += dh2_ego * params.enc_ego2.transpose();
  g.enc_ego1 = x_ego.transpose() * dh1_ego;
  g.b_ego1 = dh1_ego.colwise().sum().transpose();

  g.enc_agg2 = fwd.h1_agg.transpose() * dh2_agg;
  g.b_agg2 = dh2_agg.colwise().sum().transpose();
  dh1_agg += dh2_agg * params.enc_agg2.transpose();
  g.enc_agg1 = x_agg.transpose() * dh1_agg;
  g.b_agg1 = dh1_agg.colwise().sum().transpose();

  return g;
}

AdamState AdamState::init(const ModelParams& params) {
  return AdamState{ModelParams::zeros_like(params), ModelParams::zeros_like(params), 0};
}

void adam_step(ModelParams& params, Gradients& grads, AdamState& state,
               const TrainConfig& config) {
  state.step += 1;
  const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
  auto p = params.flat_views();
  auto g = grads.flat_views();
  auto m = state.m.flat_views();
  auto v = state.v.flat_views();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].second.size() != g[i].second.size()) {
      throw std::logic_error("adam_step: shape mismatch for " + p[i].first);
    }
    m[i].second = config.adam_beta1 * m[i].second + (1.0 - config.adam_beta1) * g[i].second;
    v[i].second = config.adam_beta2 * v[i].second +
                  (1.0 - config.adam_beta2) * g[i].second.array().square().matrix();
    p[i].second.array() -= config.learning_rate * (m[i].second.array() / bias1) /
                           ((v[i].second.array() / bias2).sqrt() + config.adam_eps);
  }
}

TrainResult train(const PairFeatureTable& dataset, const TrainConfig& config) {
  config.validate();
  const Index n = dataset.size();
  if (n == 0) throw Error("train: empty dataset");

  TrainResult result;
  result.params = ModelParams::init(dataset.feature_width(), config.h1, config.h2, config.seed);
  AdamState state = AdamState::init(result.params);
  Rng shuffle_rng(mix_seed(config.seed, 0x5eedu));

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  const Index batch_size = std::min<Index>(config.batch_size, n);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double sum_ego = 0.0;
    double sum_agg = 0.0;
    Index batch_index = 0;
    for (Index begin = 0; begin < n; begin += batch_size, ++batch_index) {
      const Index size = std::min(batch_size, n - begin);
      Matrix xe(size, dataset.feature_width());
      Matrix xa(size, dataset.feature_width());
      for (Index i = 0; i < size; ++i) {
        xe.row(i) = dataset.ego.row(order[static_cast<std::size_t>(begin + i)]);
        xa.row(i) = dataset.agg.row(order[static_cast<std::size_t>(begin + i)]);
      }
      Forward fwd;
      try {
        fwd = forward(result.params, xe, xa);
      } catch (const Error& e) {
        throw Error("training diverged at epoch " + std::to_string(epoch + 1) + " batch " +
                    std::to_string(batch_index) + ": " + e.what());
      }
      const double batch_ego = kl_loss_sum(xe, fwd.q_ego);
      const double batch_agg = kl_loss_sum(xa, fwd.q_agg);
      if (!std::isfinite(batch_ego) || !std::isfinite(batch_agg)) {
        throw Error("training diverged at epoch " + std::to_string(epoch + 1) + " batch " +
                    std::to_string(batch_index) + ": non-finite loss");
      }
      sum_ego += batch_ego;
      sum_agg += batch_agg;
      Gradients grads = backward(result.params, fwd, xe, xa, xe, xa, config.weight_ego);
      adam_step(result.params, grads, state, config);
    }
    const auto t1 = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch + 1;
    log.loss_ego = sum_ego / static_cast<double>(n);
    log.loss_agg = sum_agg / static_cast<double>(n);
    log.loss_total = config.weight_ego * log.loss_ego + config.weight_agg() * log.loss_agg;
    log.seconds = std::chrono::duration<double>(t1 - t0).count();
    result.log.push_back(log);
  }
  return result;
}

Matrix embed_pairs(const ModelParams& params, const PairFeatureTable& dataset) {
  const Index n = dataset.size();
  Matrix embeddings(n, params.embedding_dim());
  constexpr Index kChunk = 8192;
  for (Index begin = 0; begin < n; begin += kChunk) {
    const Index size = std::min(kChunk, n - begin);
    embeddings.middleRows(begin, size) = encode(params, dataset.ego.middleRows(begin, size),
                                                dataset.agg.middleRows(begin, size));
  }
  return embeddings;
}

namespace {

constexpr char kMagic[] = "PAIRE1";

void write_value(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_tensor(std::ofstream& out, const std::string& name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      write_value(out, m(i, j));
    }
    out << '\n';
  }
}

Matrix read_tensor(std::istream& in, const std::string& expected_name) {
  std::string kind, name;
  Index rows = 0, cols = 0;
  if (!(in >> kind >> name >> rows >> cols) || kind != "matrix" || name != expected_name) {
    throw Error("checkpoint: expected tensor " + expected_name);
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) throw Error("checkpoint: truncated tensor " + expected_name);
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << kMagic << '\n';
  out << "feature_width " << params.feature_width() << '\n';
  out << "h1 " << params.h1() << '\n';
  out << "h2 " << params.h2() << '\n';
  out << "epochs " << config.epochs << '\n';
  out << "batch_size " << config.batch_size << '\n';
  out << "learning_rate ";
  write_value(out, config.learning_rate);
  out << '\n';
  out << "weight_ego ";
  write_value(out, config.weight_ego);
  out << '\n';
  out << "seed " << config.seed << '\n';
  out << "adam_beta1 ";
  write_value(out, config.adam_beta1);
  out << '\n';
  out << "adam_beta2 ";
  write_value(out, config.adam_beta2);
  out << '\n';
  out << "adam_eps ";
  write_value(out, config.adam_eps);
  out << '\n';
  write_tensor(out, "enc_ego1", params.enc_ego1);
  write_tensor(out, "enc_ego2", params.enc_ego2);
  write_tensor(out, "enc_agg1", params.enc_agg1);
  write_tensor(out, "enc_agg2", params.enc_agg2);
  write_tensor(out, "dec_ego", params.dec_ego);
  write_tensor(out, "dec_agg", params.dec_agg);
  write_tensor(out, "b_ego1", params.b_ego1);
  write_tensor(out, "b_ego2", params.b_ego2);
  write_tensor(out, "b_agg1", params.b_agg1);
  write_tensor(out, "b_agg2", params.b_agg2);
  write_tensor(out, "b_dec_ego", params.b_dec_ego);
  write_tensor(out, "b_dec_agg", params.b_dec_agg);
  out << "end\n";
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string magic;
  in >> magic;
  if (magic != kMagic) throw Error("not a " + std::string(kMagic) + " checkpoint: " + path.string());

  Checkpoint ck;
  Index feature_width = 0;
  std::string key;
  auto expect_key = [&](const char* want) {
    if (!(in >> key) || key != want) {
      throw Error("checkpoint: expected key '" + std::string(want) + "'");
    }
  };
  expect_key("feature_width");
  in >> feature_width;
  expect_key("h1");
  in >> ck.config.h1;
  expect_key("h2");
  in >> ck.config.h2;
  expect_key("epochs");
  in >> ck.config.epochs;
  expect_key("batch_size");
  in >> ck.config.batch_size;
  expect_key("learning_rate");
  in >> ck.config.learning_rate;
  expect_key("weight_ego");
  in >> ck.config.weight_ego;
  expect_key("seed");
  in >> ck.config.seed;
  expect_key("adam_beta1");
  in >> ck.config.adam_beta1;
  expect_key("adam_beta2");
  in >> ck.config.adam_beta2;
  expect_key("adam_eps");
  in >> ck.config.adam_eps;
  if (!in) throw Error("checkpoint: malformed header");

  ck.params.enc_ego1 = read_tensor(in, "enc_ego1");
  ck.params.enc_ego2 = read_tensor(in, "enc_ego2");
  ck.params.enc_agg1 = read_tensor(in, "enc_agg1");
  ck.params.enc_agg2 = read_tensor(in, "enc_agg2");
  ck.params.dec_ego = read_tensor(in, "dec_ego");
  ck.params.dec_agg = read_tensor(in, "dec_agg");
  ck.params.b_ego1 = read_tensor(in, "b_ego1").reshaped();
  ck.params.b_ego2 = read_tensor(in, "b_ego2").reshaped();
  ck.params.b_agg1 = read_tensor(in, "b_agg1").reshaped();
  ck.params.b_agg2 = read_tensor(in, "b_agg2").reshaped();
  ck.params.b_dec_ego = read_tensor(in, "b_dec_ego").reshaped();
  ck.params.b_dec_agg = read_tensor(in, "b_dec_agg").reshaped();
  if (ck.params.feature_width() != feature_width) {
    throw Error("checkpoint: feature_width header does not match tensors");
  }
  return ck;
}

void write_training_log_csv(const std::filesystem::path& path,
                            const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss_total,loss_ego,loss_agg,seconds\n";
  for (const auto& entry : log) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.3f\n", entry.epoch, entry.loss_total,
                  entry.loss_ego, entry.loss_agg, entry.seconds);
    out << buf;
  }
}

}  // namespace paire

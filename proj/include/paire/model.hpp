#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "paire/features.hpp"
#include "paire/types.hpp"

namespace paire {

struct TrainConfig {
  int epochs = 30;
  Index batch_size = 1024;
  double learning_rate = 1e-3;
  double weight_ego = 0.5;  // weight_agg = 1 - weight_ego
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int h1 = 32;  // per-branch hidden sizes; embedding dim = 2*(h1 + h2)
  int h2 = 32;

  double weight_agg() const { return 1.0 - weight_ego; }
  Index embedding_dim() const { return 2 * (static_cast<Index>(h1) + h2); }
  void validate() const;
};

// Two linear encoder branches (ego / agg), two softmax decoders reading the
// shared concatenated embedding. All layers are affine with linear activation.
struct ModelParams {
  Matrix enc_ego1, enc_ego2;  // F x h1, h1 x h2
  Matrix enc_agg1, enc_agg2;
  Vector b_ego1, b_ego2, b_agg1, b_agg2;
  Matrix dec_ego, dec_agg;  // D x F
  Vector b_dec_ego, b_dec_agg;

  Index feature_width() const { return enc_ego1.rows(); }
  Index h1() const { return enc_ego1.cols(); }
  Index h2() const { return enc_ego2.cols(); }
  Index embedding_dim() const { return dec_ego.rows(); }

  // Glorot-uniform matrices, zero biases, deterministic in the seed.
  static ModelParams init(Index feature_width, int h1, int h2, std::uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);

  // Named flat views over every tensor, in a fixed order. Used by the Adam
  // update and by finite-difference tests.
  std::vector<std::pair<std::string, Eigen::Map<Eigen::VectorXd>>> flat_views();
};

using Gradients = ModelParams;

struct Forward {
  Matrix h1_ego, h2_ego, h1_agg, h2_agg;  // batch x h
  Matrix embedding;                       // batch x D, Concat(h1_e, h2_e, h1_a, h2_a)
  Matrix q_ego, q_agg;                    // batch x F, softmax rows
};

// Throws on non-finite intermediates (divergence).
Forward forward(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg);

// Encoder-only pass; enough for embeddings.
Matrix encode(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg);

// Sum_j p(j) ln(p(j)/q(j)) with 0*ln(0/q) = 0 and q floored at 1e-12.
double kl_loss(const Vector& p, const Vector& q);

// Sum of row-wise KL over a batch.
double kl_loss_sum(const Matrix& p, const Matrix& q);

inline constexpr double kKlFloor = 1e-12;

// Batch-mean loss the training loop minimizes.
double training_loss(const ModelParams& params, const Matrix& x_ego, const Matrix& x_agg,
                     const Matrix& p_ego, const Matrix& p_agg, double weight_ego);

// Exact gradients of training_loss. p_* rows must be distributions.
Gradients backward(const ModelParams& params, const Forward& fwd, const Matrix& x_ego,
                   const Matrix& x_agg, const Matrix& p_ego, const Matrix& p_agg,
                   double weight_ego);

struct AdamState {
  ModelParams m, v;
  Index step = 0;

  static AdamState init(const ModelParams& params);
};

void adam_step(ModelParams& params, Gradients& grads, AdamState& state,
               const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  double loss_total = 0;
  double loss_ego = 0;
  double loss_agg = 0;
  double seconds = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Seeded mini-batch Adam training of the weighted dual-KL objective.
TrainResult train(const PairFeatureTable& dataset, const TrainConfig& config);

Matrix embed_pairs(const ModelParams& params, const PairFeatureTable& dataset);

// Versioned text checkpoint (magic header PAIRE1): config echo, seed, all
// weight tensors with shapes. Round-trips exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainConfig& config);

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_training_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace paire

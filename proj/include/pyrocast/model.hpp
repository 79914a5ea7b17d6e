#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrocast/dataset.hpp"
#include "pyrocast/features.hpp"

namespace pyrocast {

// Dense trunk over the static features producing the two head nodes
// (intercept beta0, scaling beta1); the head applies the KBDI input as
// p = logistic(beta0 + beta1 * k). With nonneg_beta1, beta1 = softplus(raw)
// so p is nondecreasing in k.
struct NetworkParams {
  std::vector<Eigen::Index> layer_dims;  // {n_static, hidden..., 2}
  std::vector<Eigen::MatrixXd> weights;  // [l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> biases;
  double leaky_slope = 0.01;
  bool nonneg_beta1 = false;

  void validate() const;
  std::size_t parameter_count() const;

  // He-style normal init, biases zero; deterministic for a given seed.
  static NetworkParams init(const std::vector<Eigen::Index>& dims,
                            double leaky_slope, bool nonneg_beta1,
                            std::uint64_t seed);
};

double logistic(double x);
double softplus(double x);

struct ForwardResult {
  double p = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
};

// v must be normalized (apply_normalizer), so v.kbdi_annual_mean is already
// k = KBDI/800.
ForwardResult forward(const NetworkParams& params, const FeatureVector& v);

// Binary cross-entropy with p clamped into [1e-12, 1-1e-12].
double loss_bce(double p, int label);

// Mean BCE over records (features must be normalized).
double batch_loss(const NetworkParams& params,
                  std::span<const SampleRecord> batch);

struct GradientBuffer {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static GradientBuffer zeros_like(const NetworkParams& params);
};

// Exact analytic gradient of the mean BCE over the batch w.r.t. every
// parameter, including through the softplus when the constraint is active.
GradientBuffer gradients(const NetworkParams& params,
                         std::span<const SampleRecord> batch);

struct TrainConfig {
  std::vector<Eigen::Index> hidden_dims = {64, 32};
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  int patience = 10;  // early stop on validation loss
  bool nonneg_beta1 = false;
  double leaky_slope = 0.01;

  void validate() const;
};

struct EpochLoss {
  int epoch = 0;  // 0 = before any update
  double train = 0.0;
  double validation = 0.0;
};

struct TrainResult {
  NetworkParams params;  // best-validation-loss snapshot
  std::vector<EpochLoss> history;
  int best_epoch = 0;
};

// Adam over shuffled mini-batches; deterministic given config.seed (fixed
// shuffle order, sequential reductions). Throws numeric_error on divergence.
TrainResult train(const std::vector<SampleRecord>& train_set,
                  const std::vector<SampleRecord>& validation_set,
                  const TrainConfig& config);

std::vector<double> predict_batch(const NetworkParams& params,
                                  std::span<const FeatureVector> vectors);

struct ExplainMap {
  RasterGrid beta0;
  RasterGrid beta1;
};

// Per-cell beta rasters from the static features; masked cells NaN. The
// registry must carry fitted normalization stats.
ExplainMap explain(const NetworkParams& params, const LayerMap& layers,
                   const FeatureRegistry& registry);

// Per-cell probability raster for one year's KBDI means, using the same
// masked-cell convention as explain().
RasterGrid predict_raster(const NetworkParams& params, const LayerMap& layers,
                          const FeatureRegistry& registry,
                          const RasterGrid& kbdi_mean);

// Model files: <stem>.json manifest (layer dims, activation, constraint,
// registry hash) + <stem>.bin weight blob (little-endian f64, layer-major,
// weights row-major then bias per layer).
void save_model(const NetworkParams& params, std::uint64_t registry_hash,
                const std::filesystem::path& json_path);
NetworkParams load_model(const std::filesystem::path& json_path,
                         std::uint64_t* registry_hash = nullptr);

void write_history_csv(const std::vector<EpochLoss>& history,
                       const std::filesystem::path& path);

}  // namespace pyrocast

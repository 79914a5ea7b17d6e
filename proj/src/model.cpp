#include "pyrocast/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "pyrocast/binio.hpp"
#include "pyrocast/csvio.hpp"
#include "pyrocast/rng.hpp"

namespace pyrocast {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_probability(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

void NetworkParams::validate() const {
  if (layer_dims.size() < 2 || layer_dims.back() != 2) {
    throw data_error("shape error: network must end in the 2-node beta head");
  }
  const std::size_t n_layers = layer_dims.size() - 1;
  if (weights.size() != n_layers || biases.size() != n_layers) {
    throw data_error("shape error: layer count mismatch");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (weights[l].rows() != layer_dims[l + 1] ||
        weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw data_error("shape error: layer " + std::to_string(l) +
                       " dimensions inconsistent");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw numeric_error("numeric error: non-finite parameter in layer " +
                          std::to_string(l));
    }
  }
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += static_cast<std::size_t>(layer_dims[l + 1]) *
             static_cast<std::size_t>(layer_dims[l]) +
         static_cast<std::size_t>(layer_dims[l + 1]);
  }
  return n;
}

NetworkParams NetworkParams::init(const std::vector<Eigen::Index>& dims,
                                  double leaky_slope, bool nonneg_beta1,
                                  std::uint64_t seed) {
  NetworkParams params;
  params.layer_dims = dims;
  params.leaky_slope = leaky_slope;
  params.nonneg_beta1 = nonneg_beta1;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = scale * rng.normal();
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  params.validate();
  return params;
}

namespace {

struct TrunkActivations {
  std::vector<Eigen::VectorXd> pre;   // z per layer
  std::vector<Eigen::VectorXd> post;  // activation(z); last entry is raw head
};

// Trunk over static features; hidden layers leaky-rectified, head linear.
Eigen::Vector2d trunk_forward(const NetworkParams& params,
                              const Eigen::VectorXd& x,
                              TrunkActivations* acts) {
  if (x.size() != params.layer_dims.front()) {
    throw data_error("shape error: feature width " + std::to_string(x.size()) +
                     " != input dim " +
                     std::to_string(params.layer_dims.front()));
  }
  Eigen::VectorXd h = x;
  const std::size_t n_layers = params.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::VectorXd z = params.weights[l] * h + params.biases[l];
    if (acts) acts->pre.push_back(z);
    if (l + 1 < n_layers) {
      h = z.unaryExpr([slope = params.leaky_slope](double v) {
        return v > 0.0 ? v : slope * v;
      });
    } else {
      h = z;
    }
    if (acts) acts->post.push_back(h);
  }
  return Eigen::Vector2d(h(0), h(1));
}

ForwardResult head_forward(const NetworkParams& params,
                           const Eigen::Vector2d& raw, double k) {
  ForwardResult out;
  out.beta0 = raw(0);
  out.beta1 = params.nonneg_beta1 ? softplus(raw(1)) : raw(1);
  const double z = out.beta0 + out.beta1 * k;
  if (!std::isfinite(z)) {
    throw numeric_error("numeric error: non-finite head activation");
  }
  out.p = logistic(z);
  return out;
}

}  // namespace

ForwardResult forward(const NetworkParams& params, const FeatureVector& v) {
  const Eigen::Vector2d raw = trunk_forward(params, v.static_features, nullptr);
  return head_forward(params, raw, v.kbdi_annual_mean);
}

double loss_bce(double p, int label) {
  const double q = clamp_probability(p);
  return label == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double batch_loss(const NetworkParams& params,
                  std::span<const SampleRecord> batch) {
  if (batch.empty()) {
    throw data_error("domain error: empty batch");
  }
  double sum = 0.0;
  for (const auto& rec : batch) {
    sum += loss_bce(forward(params, rec.features).p, rec.label);
  }
  return sum / static_cast<double>(batch.size());
}

GradientBuffer GradientBuffer::zeros_like(const NetworkParams& params) {
  GradientBuffer g;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    g.weights.push_back(
        Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return g;
}

GradientBuffer gradients(const NetworkParams& params,
                         std::span<const SampleRecord> batch) {
  if (batch.empty()) {
    throw data_error("domain error: empty batch");
  }
  GradientBuffer grad = GradientBuffer::zeros_like(params);
  const std::size_t n_layers = params.weights.size();

  for (const auto& rec : batch) {
    TrunkActivations acts;
    const Eigen::Vector2d raw =
        trunk_forward(params, rec.features.static_features, &acts);
    const double k = rec.features.kbdi_annual_mean;
    const ForwardResult fwd = head_forward(params, raw, k);

    // d(meanBCE)/dz for z = beta0 + beta1*k is (p - y); the clamp only guards
    // the log evaluation, the gradient form is exact.
    const double dz = fwd.p - static_cast<double>(rec.label);
    Eigen::Vector2d draw;
    draw(0) = dz;
    draw(1) = dz * k * (params.nonneg_beta1 ? logistic(raw(1)) : 1.0);

    Eigen::VectorXd delta = draw;
    for (std::size_t l = n_layers; l-- > 0;) {
      const Eigen::VectorXd& input =
          l == 0 ? rec.features.static_features : acts.post[l - 1];
      grad.weights[l].noalias() += delta * input.transpose();
      grad.biases[l] += delta;
      if (l == 0) break;
      Eigen::VectorXd back = params.weights[l].transpose() * delta;
      const Eigen::VectorXd& z_prev = acts.pre[l - 1];
      for (Eigen::Index i = 0; i < back.size(); ++i) {
        if (z_prev(i) <= 0.0) back(i) *= params.leaky_slope;
      }
      delta = std::move(back);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t l = 0; l < n_layers; ++l) {
    grad.weights[l] *= inv_n;
    grad.biases[l] *= inv_n;
  }
  return grad;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || patience < 0) {
    throw config_error("spec error: nonpositive training control");
  }
  if (learning_rate <= 0.0 || adam_beta1 <= 0.0 || adam_beta1 >= 1.0 ||
      adam_beta2 <= 0.0 || adam_beta2 >= 1.0 || adam_epsilon <= 0.0) {
    throw config_error("spec error: invalid optimizer hyper-parameters");
  }
  for (Eigen::Index d : hidden_dims) {
    if (d < 1) throw config_error("spec error: nonpositive hidden width");
  }
}

TrainResult train(const std::vector<SampleRecord>& train_set,
                  const std::vector<SampleRecord>& validation_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty() || validation_set.empty()) {
    throw data_error("domain error: empty training or validation set");
  }
  const Eigen::Index n_features = train_set.front().features.static_features.size();
  for (const auto& rec : train_set) {
    if (rec.features.static_features.size() != n_features) {
      throw data_error("shape error: inconsistent feature widths");
    }
  }

  std::vector<Eigen::Index> dims;
  dims.push_back(n_features);
  for (Eigen::Index d : config.hidden_dims) dims.push_back(d);
  dims.push_back(2);

  NetworkParams params = NetworkParams::init(
      dims, config.leaky_slope, config.nonneg_beta1,
      derive_seed(config.seed, "init"));

  GradientBuffer m = GradientBuffer::zeros_like(params);
  GradientBuffer v = GradientBuffer::zeros_like(params);
  long step = 0;

  TrainResult result;
  result.history.push_back(
      {0, batch_loss(params, train_set), batch_loss(params, validation_set)});
  result.params = params;
  result.best_epoch = 0;
  double best_val = result.history.front().validation;
  int wait = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<SampleRecord> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, "shuffle") +
                    static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double train_loss = 0.0;
    double val_loss = 0.0;
    try {
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t stop = std::min(
            order.size(), start + static_cast<std::size_t>(config.batch_size));
        batch.clear();
        for (std::size_t i = start; i < stop; ++i) {
          batch.push_back(train_set[order[i]]);
        }
        const GradientBuffer grad = gradients(params, batch);
        ++step;
        const double bc1 = 1.0 - std::pow(config.adam_beta1, step);
        const double bc2 = 1.0 - std::pow(config.adam_beta2, step);
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
          m.weights[l] = config.adam_beta1 * m.weights[l] +
                         (1.0 - config.adam_beta1) * grad.weights[l];
          v.weights[l] = config.adam_beta2 * v.weights[l] +
                         (1.0 - config.adam_beta2) *
                             grad.weights[l].array().square().matrix();
          params.weights[l].array() -=
              config.learning_rate * (m.weights[l].array() / bc1) /
              ((v.weights[l].array() / bc2).sqrt() + config.adam_epsilon);
          m.biases[l] = config.adam_beta1 * m.biases[l] +
                        (1.0 - config.adam_beta1) * grad.biases[l];
          v.biases[l] = config.adam_beta2 * v.biases[l] +
                        (1.0 - config.adam_beta2) *
                            grad.biases[l].array().square().matrix();
          params.biases[l].array() -=
              config.learning_rate * (m.biases[l].array() / bc1) /
              ((v.biases[l].array() / bc2).sqrt() + config.adam_epsilon);
        }
      }

      train_loss = batch_loss(params, train_set);
      val_loss = batch_loss(params, validation_set);
      if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
        throw numeric_error("loss is not finite");
      }
    } catch (const numeric_error& e) {
      throw numeric_error("training error: diverged at epoch " +
                          std::to_string(epoch) + " (" + e.what() + ")");
    }
    result.history.push_back({epoch, train_loss, val_loss});

    if (val_loss < best_val) {
      best_val = val_loss;
      result.params = params;
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait > config.patience) {
      break;
    }
  }
  return result;
}

std::vector<double> predict_batch(const NetworkParams& params,
                                  std::span<const FeatureVector> vectors) {
  std::vector<double> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    out.push_back(forward(params, v).p);
  }
  return out;
}

ExplainMap explain(const NetworkParams& params, const LayerMap& layers,
                   const FeatureRegistry& registry) {
  if (!registry.fitted) {
    throw data_error("registry error: normalizer stats not fitted");
  }
  const auto landcover_it = layers.find("landcover");
  if (landcover_it == layers.end()) {
    throw data_error("registry error: missing 'landcover' layer");
  }
  const RasterGrid& tmpl = landcover_it->second;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ExplainMap map{
      make_raster(tmpl.rows(), tmpl.cols(), tmpl.origin_x, tmpl.origin_y,
                  tmpl.cell_size, nan),
      make_raster(tmpl.rows(), tmpl.cols(), tmpl.origin_x, tmpl.origin_y,
                  tmpl.cell_size, nan)};
  for (Eigen::Index r = 0; r < tmpl.rows(); ++r) {
    for (Eigen::Index c = 0; c < tmpl.cols(); ++c) {
      const auto raw = assemble_features({r, c}, layers, registry);
      if (!raw) continue;
      const FeatureVector v = apply_normalizer(*raw, registry);
      const Eigen::Vector2d head =
          trunk_forward(params, v.static_features, nullptr);
      map.beta0.values(r, c) = head(0);
      map.beta1.values(r, c) =
          params.nonneg_beta1 ? softplus(head(1)) : head(1);
    }
  }
  return map;
}

RasterGrid predict_raster(const NetworkParams& params, const LayerMap& layers,
                          const FeatureRegistry& registry,
                          const RasterGrid& kbdi_mean) {
  const auto landcover_it = layers.find("landcover");
  if (landcover_it == layers.end()) {
    throw data_error("registry error: missing 'landcover' layer");
  }
  if (!kbdi_mean.same_geometry(landcover_it->second)) {
    throw data_error("shape error: KBDI raster geometry mismatch");
  }
  const ExplainMap betas = explain(params, layers, registry);
  RasterGrid prob = make_raster(kbdi_mean.rows(), kbdi_mean.cols(),
                                kbdi_mean.origin_x, kbdi_mean.origin_y,
                                kbdi_mean.cell_size,
                                std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index r = 0; r < prob.rows(); ++r) {
    for (Eigen::Index c = 0; c < prob.cols(); ++c) {
      const double b0 = betas.beta0.values(r, c);
      const double k = kbdi_mean.values(r, c);
      if (std::isnan(b0) || std::isnan(k)) continue;
      prob.values(r, c) =
          logistic(b0 + betas.beta1.values(r, c) * (k / kKbdiMax));
    }
  }
  return prob;
}

void save_model(const NetworkParams& params, std::uint64_t registry_hash,
                const std::filesystem::path& json_path) {
  params.validate();
  std::filesystem::path bin_path = json_path;
  bin_path.replace_extension(".bin");

  std::string blob;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        binio::put_f64(blob, w(r, c));
      }
    }
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) {
      binio::put_f64(blob, params.biases[l](i));
    }
  }
  write_text_file(bin_path, blob);

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["layer_dims"] = params.layer_dims;
  manifest["activation"] = "leaky_relu";
  manifest["leaky_slope"] = params.leaky_slope;
  manifest["nonneg_beta1"] = params.nonneg_beta1;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(registry_hash));
  manifest["registry_hash"] = hash_hex;
  manifest["weights_file"] = bin_path.filename().string();
  write_text_file(json_path, manifest.dump(2) + "\n");
}

NetworkParams load_model(const std::filesystem::path& json_path,
                         std::uint64_t* registry_hash) {
  std::ifstream in(json_path);
  if (!in) throw data_error("io error: cannot open " + json_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("format error: invalid model manifest: " +
                     std::string(e.what()));
  }
  NetworkParams params;
  for (const auto& d : manifest.at("layer_dims")) {
    params.layer_dims.push_back(d.get<Eigen::Index>());
  }
  params.leaky_slope = manifest.value("leaky_slope", 0.01);
  params.nonneg_beta1 = manifest.value("nonneg_beta1", false);
  if (manifest.value("activation", "leaky_relu") != std::string("leaky_relu")) {
    throw data_error("format error: unsupported activation");
  }
  if (registry_hash) {
    *registry_hash = std::stoull(
        manifest.value("registry_hash", std::string("0")), nullptr, 16);
  }

  const auto bin_path =
      json_path.parent_path() / manifest.at("weights_file").get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw data_error("io error: cannot open " + bin_path.string());
  std::string blob((std::istreambuf_iterator<char>(bin)),
                   std::istreambuf_iterator<char>());

  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < params.layer_dims.size(); ++l) {
    expected += static_cast<std::size_t>(params.layer_dims[l + 1]) *
                    static_cast<std::size_t>(params.layer_dims[l]) +
                static_cast<std::size_t>(params.layer_dims[l + 1]);
  }
  if (blob.size() != expected * 8) {
    throw data_error("length error: weight blob size mismatch in " +
                     bin_path.string());
  }

  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < params.layer_dims.size(); ++l) {
    Eigen::MatrixXd w(params.layer_dims[l + 1], params.layer_dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = binio::get_f64(p + off);
        off += 8;
      }
    }
    Eigen::VectorXd b(params.layer_dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b(i) = binio::get_f64(p + off);
      off += 8;
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
  }
  params.validate();
  return params;
}

void write_history_csv(const std::vector<EpochLoss>& history,
                       const std::filesystem::path& path) {
  std::string body = "epoch,train_loss,val_loss\n";
  for (const auto& row : history) {
    body += std::to_string(row.epoch) + "," + format_double(row.train) + "," +
            format_double(row.validation) + "\n";
  }
  write_text_file(path, body);
}

}  // namespace pyrocast

#include "eclaire/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eclaire/error.hpp"
#include "eclaire/rng.hpp"
#include "eclaire/simd.hpp"
#include "json.hpp"

namespace eclaire::mlp {
namespace {

constexpr double kEluAlpha = 1.0;

double derivative_from_output(Activation a, double out) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - out * out;
    case Activation::kRelu:
      return out > 0.0 ? 1.0 : 0.0;
    case Activation::kElu:
      return out > 0.0 ? 1.0 : out + kEluAlpha;
    case Activation::kSoftmax:
      break;
  }
  throw ConfigError("softmax has no elementwise derivative");
}

void affine(const DenseLayer& layer, std::span<const double> in, std::span<double> out) {
  simd::active().affine(layer.weights.values().data(), layer.bias.data(), in.data(), out.data(),
                        layer.out_width(), layer.in_width());
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kElu:
      return "elu";
    case Activation::kSoftmax:
      return "softmax";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "elu") return Activation::kElu;
  if (name == "softmax") return Activation::kSoftmax;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void apply_activation(Activation a, std::span<double> v) {
  switch (a) {
    case Activation::kTanh:
      for (double& x : v) x = std::tanh(x);
      return;
    case Activation::kRelu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      return;
    case Activation::kElu:
      for (double& x : v) x = x > 0.0 ? x : kEluAlpha * std::expm1(x);
      return;
    case Activation::kSoftmax: {
      const double mx = *std::max_element(v.begin(), v.end());
      double sum = 0.0;
      for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
      }
      for (double& x : v) x /= sum;
      return;
    }
  }
}

Label argmax(std::span<const double> values) {
  return static_cast<Label>(std::max_element(values.begin(), values.end()) - values.begin());
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DataError("network has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.rows() == 0 || l.weights.cols() == 0)
      throw DataError("layer " + std::to_string(i + 1) + " has an empty weight matrix");
    if (l.bias.size() != l.out_width())
      throw DataError("layer " + std::to_string(i + 1) + " bias size mismatch");
    if (i > 0 && l.in_width() != layers_[i - 1].out_width())
      throw DataError("layer " + std::to_string(i + 1) + " input width does not chain");
    const bool last = i + 1 == layers_.size();
    if (last != (l.activation == Activation::kSoftmax))
      throw DataError("softmax must be exactly the final activation");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.values().begin(), l.weights.values().end(), finite) ||
        !std::all_of(l.bias.begin(), l.bias.end(), finite))
      throw DataError("layer " + std::to_string(i + 1) + " has non-finite parameters");
  }
  if (num_classes() < 2) throw DataError("output layer needs at least two classes");
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  return activations(x, layers_.size());
}

std::vector<double> Mlp::activations(std::span<const double> x, std::size_t layer) const {
  if (x.size() != input_width())
    throw DataError("input width " + std::to_string(x.size()) + " does not match network width " +
                    std::to_string(input_width()));
  if (layer > layers_.size())
    throw ConfigError("layer index " + std::to_string(layer) + " out of range");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t i = 0; i < layer; ++i) {
    next.assign(layers_[i].out_width(), 0.0);
    affine(layers_[i], cur, next);
    apply_activation(layers_[i].activation, next);
    cur.swap(next);
  }
  return cur;
}

std::vector<Matrix> Mlp::all_activations(const Matrix& x) const {
  if (x.cols() != input_width()) throw DataError("input width does not match network width");
  std::vector<Matrix> out;
  out.reserve(layers_.size() + 1);
  out.push_back(x);
  for (const auto& layer : layers_) {
    const Matrix& prev = out.back();
    Matrix next(prev.rows(), layer.out_width());
    for (std::size_t r = 0; r < prev.rows(); ++r) {
      affine(layer, prev.row(r), next.row(r));
      apply_activation(layer.activation, next.row(r));
    }
    out.push_back(std::move(next));
  }
  return out;
}

Matrix Mlp::layer_output(const Matrix& x, std::size_t layer) const {
  if (layer > layers_.size())
    throw ConfigError("layer index " + std::to_string(layer) + " out of range");
  if (x.cols() != input_width()) throw DataError("input width does not match network width");
  Matrix cur = x;
  for (std::size_t i = 0; i < layer; ++i) {
    Matrix next(cur.rows(), layers_[i].out_width());
    for (std::size_t r = 0; r < cur.rows(); ++r) {
      affine(layers_[i], cur.row(r), next.row(r));
      apply_activation(layers_[i].activation, next.row(r));
    }
    cur = std::move(next);
  }
  return cur;
}

Labels Mlp::predict_labels(const Matrix& x) const {
  Matrix probs = layer_output(x, layers_.size());
  Labels out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = argmax(probs.row(r));
  return out;
}

Mlp init_network(std::size_t input_width, std::span<const std::size_t> hidden_sizes,
                 std::size_t num_classes, Activation hidden_activation, std::uint64_t seed) {
  if (hidden_sizes.empty()) throw ConfigError("at least one hidden layer is required");
  if (hidden_activation == Activation::kSoftmax)
    throw ConfigError("hidden layers cannot use softmax");
  Rng rng(derive_seed(seed, 0));
  std::vector<DenseLayer> layers;
  std::size_t in = input_width;
  auto add = [&](std::size_t out, Activation act) {
    if (out == 0) throw ConfigError("layer width must be positive");
    DenseLayer l{Matrix(out, in), std::vector<double>(out, 0.0), act};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : l.weights.values()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(l));
    in = out;
  };
  for (std::size_t h : hidden_sizes) add(h, hidden_activation);
  add(num_classes, Activation::kSoftmax);
  return Mlp(std::move(layers));
}

double loss_and_gradients(const Mlp& net, const Matrix& x, std::span<const Label> y,
                          std::span<const double> class_weight, Gradients& grads) {
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  grads.weights.resize(depth);
  grads.bias.resize(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    grads.weights[l] = Matrix(layers[l].out_width(), layers[l].in_width());
    grads.bias[l].assign(layers[l].out_width(), 0.0);
  }
  if (x.rows() == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(x.rows());

  std::vector<std::vector<double>> acts(depth + 1);
  std::vector<double> delta;
  std::vector<double> prev_delta;
  double total = 0.0;
  for (std::size_t s = 0; s < x.rows(); ++s) {
    acts[0].assign(x.row(s).begin(), x.row(s).end());
    for (std::size_t l = 0; l < depth; ++l) {
      acts[l + 1].assign(layers[l].out_width(), 0.0);
      affine(layers[l], acts[l], acts[l + 1]);
      if (l + 1 < depth) apply_activation(layers[l].activation, acts[l + 1]);
    }
    // Output logits are still in acts[depth]; log-softmax for a stable loss.
    auto& logits = acts[depth];
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const double log_norm = mx + std::log(sum);
    const auto target = static_cast<std::size_t>(y[s]);
    const double w = class_weight.empty() ? 1.0 : class_weight[target];
    total += w * (log_norm - logits[target]);

    delta.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const double p = std::exp(logits[c] - log_norm);
      delta[c] = w * scale * (p - (c == target ? 1.0 : 0.0));
    }
    for (std::size_t l = depth; l-- > 0;) {
      const auto& layer = layers[l];
      auto& gw = grads.weights[l];
      for (std::size_t r = 0; r < layer.out_width(); ++r) {
        simd::axpy(delta[r], acts[l], gw.row(r));
        grads.bias[l][r] += delta[r];
      }
      if (l == 0) break;
      prev_delta.assign(layer.in_width(), 0.0);
      for (std::size_t r = 0; r < layer.out_width(); ++r)
        simd::axpy(delta[r], layer.weights.row(r), prev_delta);
      const Activation act = layers[l - 1].activation;
      for (std::size_t c = 0; c < prev_delta.size(); ++c)
        prev_delta[c] *= derivative_from_output(act, acts[l][c]);
      delta.swap(prev_delta);
    }
  }
  return total * scale;
}

double loss(const Mlp& net, const Matrix& x, std::span<const Label> y,
            std::span<const double> class_weight) {
  Matrix probs = net.layer_output(x, net.layers().size());
  double total = 0.0;
  for (std::size_t s = 0; s < x.rows(); ++s) {
    const auto t = static_cast<std::size_t>(y[s]);
    const double w = class_weight.empty() ? 1.0 : class_weight[t];
    total -= w * std::log(std::max(probs(s, t), 1e-300));
  }
  return x.rows() == 0 ? 0.0 : total / static_cast<double>(x.rows());
}

Mlp train(const data::Dataset& ds, std::span<const std::size_t> hidden_sizes,
          Activation activation, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  data::validate(ds);

  Mlp net = init_network(ds.num_features(), hidden_sizes, ds.num_classes(), activation, cfg.seed);
  const std::vector<double> weights =
      cfg.class_weighted ? data::class_weights(ds) : std::vector<double>{};

  auto& layers = net.mutable_layers();
  std::vector<std::vector<double>> m_w(layers.size()), v_w(layers.size()), m_b(layers.size()),
      v_b(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    m_w[l].assign(layers[l].weights.values().size(), 0.0);
    v_w[l].assign(layers[l].weights.values().size(), 0.0);
    m_b[l].assign(layers[l].bias.size(), 0.0);
    v_b[l].assign(layers[l].bias.size(), 0.0);
  }

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients grads;
  std::size_t step_count = 0;
  const auto& kernels = simd::active();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      Matrix xb = ds.features.select_rows(batch);
      Labels yb = select<Label>(ds.labels, batch);
      const double batch_loss = loss_and_gradients(net, xb, yb, weights, grads);
      if (!std::isfinite(batch_loss))
        throw TrainingError("training diverged (non-finite loss) at epoch " +
                                std::to_string(epoch),
                            epoch);
      epoch_loss += batch_loss * static_cast<double>(batch.size());

      ++step_count;
      const double t = static_cast<double>(step_count);
      const simd::AdamStep step{
          cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.beta2, t)) /
              (1.0 - std::pow(cfg.beta1, t)),
          cfg.beta1, cfg.beta2, cfg.epsilon};
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& w = layers[l].weights.values();
        kernels.adam(w.data(), grads.weights[l].values().data(), m_w[l].data(), v_w[l].data(),
                     w.size(), step);
        auto& b = layers[l].bias;
        kernels.adam(b.data(), grads.bias[l].data(), m_b[l].data(), v_b[l].data(), b.size(),
                     step);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingError("training diverged at epoch " + std::to_string(epoch), epoch);
    if (on_epoch) on_epoch({epoch, epoch_loss});
  }
  return Mlp(std::move(layers));
}

std::string to_json(const Mlp& net) {
  nlohmann::json j;
  j["version"] = kWeightFileVersion;
  j["input_width"] = net.input_width();
  j["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    j["layers"].push_back({{"activation", std::string(to_string(l.activation))},
                           {"rows", l.weights.rows()},
                           {"cols", l.weights.cols()},
                           {"weights", l.weights.values()},
                           {"bias", l.bias}});
  }
  return j.dump(1);
}

Mlp from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed weight file: ") + e.what());
  }
  try {
    if (!j.contains("version")) throw DataError("weight file has no version");
    if (j.at("version").get<int>() != kWeightFileVersion)
      throw DataError("unsupported weight file version " + j.at("version").dump());
    const auto input_width = j.at("input_width").get<std::size_t>();
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      const auto rows = jl.at("rows").get<std::size_t>();
      const auto cols = jl.at("cols").get<std::size_t>();
      auto w = jl.at("weights").get<std::vector<double>>();
      if (w.size() != rows * cols) throw DataError("weight array size does not match rows*cols");
      DenseLayer layer{Matrix(rows, cols, std::move(w)), jl.at("bias").get<std::vector<double>>(),
                       activation_from_string(jl.at("activation").get<std::string>())};
      layers.push_back(std::move(layer));
    }
    Mlp net(std::move(layers));
    if (net.input_width() != input_width)
      throw DataError("input_width does not match the first layer");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed weight file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed weight file: ") + e.what());
  }
}

void save(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(net) << '\n';
}

Mlp load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace eclaire::mlp

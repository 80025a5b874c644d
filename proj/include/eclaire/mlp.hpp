#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eclaire/data.hpp"
#include "eclaire/matrix.hpp"

namespace eclaire::mlp {

enum class Activation { kTanh, kRelu, kElu, kSoftmax };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kTanh;

  std::size_t in_width() const { return weights.cols(); }
  std::size_t out_width() const { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Feed-forward classifier. Layer i (1-based) of the network is layers()[i-1];
// the last layer is the softmax output, the others are the d hidden layers.
class Mlp {
 public:
  Mlp() = default;
  // Validates chaining, finiteness, and the softmax-last/hidden-not-softmax rule.
  explicit Mlp(std::vector<DenseLayer> layers);

  std::size_t input_width() const { return layers_.front().in_width(); }
  std::size_t num_classes() const { return layers_.back().out_width(); }
  std::size_t hidden_count() const { return layers_.size() - 1; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::vector<double> forward(std::span<const double> x) const;

  // h_0 = x, h_{d+1} = forward(x), otherwise hidden layer i's output.
  std::vector<double> activations(std::span<const double> x, std::size_t layer) const;

  // Outputs of every layer for a batch: result[0] = X, result[d+1] = probabilities.
  std::vector<Matrix> all_activations(const Matrix& x) const;

  // Activations of a single layer for a batch.
  Matrix layer_output(const Matrix& x, std::size_t layer) const;

  Labels predict_labels(const Matrix& x) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Index of the largest entry; ties go to the lowest index.
Label argmax(std::span<const double> values);

void apply_activation(Activation a, std::span<double> values);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::uint64_t seed = 0;
  bool class_weighted = true;
};

// Glorot-uniform weights, zero biases. The final layer is softmax.
Mlp init_network(std::size_t input_width, std::span<const std::size_t> hidden_sizes,
                 std::size_t num_classes, Activation hidden_activation, std::uint64_t seed);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
};

// Mean of the per-sample class-weighted cross-entropy over the given rows,
// with gradients of that mean written to grads (resized as needed).
double loss_and_gradients(const Mlp& net, const Matrix& x, std::span<const Label> y,
                          std::span<const double> class_weight, Gradients& grads);

double loss(const Mlp& net, const Matrix& x, std::span<const Label> y,
            std::span<const double> class_weight);

struct EpochLog {
  std::size_t epoch;
  double loss;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Mini-batch Adam. Deterministic for a fixed seed. Throws TrainingError on a
// non-finite loss.
Mlp train(const data::Dataset& ds, std::span<const std::size_t> hidden_sizes,
          Activation activation, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

inline constexpr int kWeightFileVersion = 1;

std::string to_json(const Mlp& net);
Mlp from_json(std::string_view text);
void save(const Mlp& net, const std::filesystem::path& path);
Mlp load(const std::filesystem::path& path);

}  // namespace eclaire::mlp

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pathsample/linalg.hpp"

namespace pathsample {

/// Positive homogeneous, 1-Lipschitz activation with phi(0) = 0.
struct Activation {
  enum class Kind { relu, leaky_relu, identity };

  Kind kind = Kind::relu;
  double alpha = 0.0;  // negative-side slope, leaky_relu only

  static Activation relu() { return {Kind::relu, 0.0}; }
  static Activation leaky_relu(double alpha);
  static Activation identity() { return {Kind::identity, 1.0}; }
  /// Parses "relu", "leaky-relu" (needs alpha), "identity". Anything else is
  /// rejected because it is not positive homogeneous.
  static Activation parse(const std::string& name, std::optional<double> alpha = {});

  double operator()(double z) const noexcept {
    switch (kind) {
      case Kind::relu: return z > 0.0 ? z : 0.0;
      case Kind::leaky_relu: return z > 0.0 ? z : alpha * z;
      case Kind::identity: return z;
    }
    return z;
  }

  std::string name() const;
};

/// Bias-free feed-forward network f(x) = W_L phi(W_{L-1} phi(... phi(W_1 x))).
/// Immutable after construction.
class Network {
 public:
  Network(std::vector<Matrix> layers, Activation activation);

  std::size_t depth() const noexcept { return layers_.size(); }
  /// [d_0, d_1, ..., d_L].
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t output_dim() const noexcept { return dims_.back(); }
  /// Weight matrix W_{index+1}, shape d_{index+1} x d_index.
  const Matrix& layer(std::size_t index) const { return layers_.at(index); }
  const std::vector<Matrix>& layers() const noexcept { return layers_; }
  const Activation& activation() const noexcept { return activation_; }

  /// Number of input-to-output paths, d_0 * d_1 * ... * d_L, as a double.
  double path_count() const noexcept;

  Vector forward(const Vector& x) const;
  /// Row i of the result is forward(X.row(i)).
  Matrix forward_batch(const Matrix& inputs) const;

  Network scaled(double factor) const;

 private:
  std::vector<Matrix> layers_;
  std::vector<std::size_t> dims_;
  Activation activation_;
};

/// Node-doubled nonnegative form. Unit (j, +) has index j, unit (j, -) has
/// index d + j, where d is the undoubled width; the output layer is not doubled.
/// Column (i, s) of a layer carries s * phi(z_i) (layer 0: s * x_i).
struct DoubledNetwork {
  std::vector<Matrix> abs_layers;
  /// Per original edge: +1 or -1 (zero weights tagged +1).
  std::vector<Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> signs;
  std::vector<std::size_t> dims;  // [2 d_0, 2 d_1, ..., 2 d_{L-1}, k]
  Activation activation;

  Vector forward(const Vector& x) const;
};

DoubledNetwork sign_split(const Network& net);

/// Edge sign convention: zero counts as positive.
inline int edge_sign(double w) noexcept { return w < 0.0 ? -1 : 1; }

/// Inputs as rows, optional labels stored zero-based.
struct Dataset {
  Matrix inputs;
  std::optional<std::vector<int>> labels;

  Dataset(Matrix inputs, std::optional<std::vector<int>> labels = std::nullopt);

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  bool has_labels() const noexcept { return labels.has_value(); }
  /// Throws when a label is >= classes.
  void check_labels(std::size_t classes) const;
};

}  // namespace pathsample

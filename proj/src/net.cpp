#include "pathsample/net.hpp"

#include <cmath>

#include "pathsample/error.hpp"

namespace pathsample {

Activation Activation::leaky_relu(double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::precondition,
          "leaky-relu slope must lie in (0, 1]");
  return {Kind::leaky_relu, alpha};
}

Activation Activation::parse(const std::string& name, std::optional<double> alpha) {
  if (name == "relu") return relu();
  if (name == "identity") return identity();
  if (name == "leaky-relu" || name == "leaky_relu") {
    require(alpha.has_value(), ErrorKind::format, "leaky-relu requires alpha");
    return leaky_relu(*alpha);
  }
  fail(ErrorKind::format,
       "unsupported activation '" + name + "' (must be positive homogeneous: relu, leaky-relu, identity)");
}

std::string Activation::name() const {
  switch (kind) {
    case Kind::relu: return "relu";
    case Kind::leaky_relu: return "leaky-relu";
    case Kind::identity: return "identity";
  }
  return "relu";
}

Network::Network(std::vector<Matrix> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  require(layers_.size() >= 2, ErrorKind::precondition, "network needs at least two layers");
  dims_.push_back(static_cast<std::size_t>(layers_.front().cols()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Matrix& w = layers_[i];
    require(w.rows() > 0 && w.cols() > 0, ErrorKind::dimension,
            "layer " + std::to_string(i + 1) + " is empty");
    require(static_cast<std::size_t>(w.cols()) == dims_.back(), ErrorKind::dimension,
            "layer " + std::to_string(i + 1) + " has " + std::to_string(w.cols()) +
                " columns, expected " + std::to_string(dims_.back()));
    require(w.allFinite(), ErrorKind::non_finite,
            "layer " + std::to_string(i + 1) + " has non-finite entries");
    dims_.push_back(static_cast<std::size_t>(w.rows()));
  }
}

double Network::path_count() const noexcept {
  double count = 1.0;
  for (std::size_t d : dims_) count *= static_cast<double>(d);
  return count;
}

Vector Network::forward(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == input_dim(), ErrorKind::dimension,
          "input has length " + std::to_string(x.size()) + ", network expects " +
              std::to_string(input_dim()));
  require(x.allFinite(), ErrorKind::non_finite, "input has non-finite entries");
  Vector h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vector z = layers_[i] * h;
    if (i + 1 < layers_.size()) {
      for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = activation_(z[j]);
    }
    h = std::move(z);
  }
  return h;
}

Matrix Network::forward_batch(const Matrix& inputs) const {
  require(static_cast<std::size_t>(inputs.cols()) == input_dim(), ErrorKind::dimension,
          "batch has " + std::to_string(inputs.cols()) + " features, network expects " +
              std::to_string(input_dim()));
  Matrix out(inputs.rows(), static_cast<Eigen::Index>(output_dim()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    out.row(i) = forward(inputs.row(i).transpose()).transpose();
  }
  return out;
}

Network Network::scaled(double factor) const {
  std::vector<Matrix> layers = layers_;
  for (auto& w : layers) w *= factor;
  return {std::move(layers), activation_};
}

DoubledNetwork sign_split(const Network& net) {
  DoubledNetwork out;
  out.activation = net.activation();
  const std::size_t depth = net.depth();
  for (std::size_t i = 0; i < depth; ++i) {
    out.dims.push_back(2 * net.dims()[i]);
  }
  out.dims.push_back(net.output_dim());

  for (std::size_t m = 0; m < depth; ++m) {
    const Matrix& w = net.layer(m);
    const Eigen::Index rows = w.rows();
    const Eigen::Index cols = w.cols();
    const bool last = m + 1 == depth;
    const Eigen::Index out_rows = last ? rows : 2 * rows;

    Matrix doubled = Matrix::Zero(out_rows, 2 * cols);
    Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tags(rows, cols);
    for (Eigen::Index j = 0; j < rows; ++j) {
      for (Eigen::Index i = 0; i < cols; ++i) {
        const int s = edge_sign(w(j, i));
        tags(j, i) = static_cast<signed char>(s);
        const Eigen::Index col = s > 0 ? i : cols + i;
        doubled(j, col) = std::abs(w(j, i));
        if (!last) doubled(rows + j, col) = std::abs(w(j, i));
      }
    }
    out.abs_layers.push_back(std::move(doubled));
    out.signs.push_back(std::move(tags));
  }
  return out;
}

Vector DoubledNetwork::forward(const Vector& x) const {
  require(static_cast<std::size_t>(2 * x.size()) == dims.front(), ErrorKind::dimension,
          "input has length " + std::to_string(x.size()) + ", network expects " +
              std::to_string(dims.front() / 2));
  require(x.allFinite(), ErrorKind::non_finite, "input has non-finite entries");
  Vector h(2 * x.size());
  h << x, -x;
  for (std::size_t m = 0; m < abs_layers.size(); ++m) {
    Vector z = abs_layers[m] * h;
    if (m + 1 < abs_layers.size()) {
      const Eigen::Index half = z.size() / 2;
      for (Eigen::Index j = 0; j < half; ++j) z[j] = activation(z[j]);
      for (Eigen::Index j = half; j < z.size(); ++j) z[j] = -activation(z[j]);
    }
    h = std::move(z);
  }
  return h;
}

Dataset::Dataset(Matrix in, std::optional<std::vector<int>> lab)
    : inputs(std::move(in)), labels(std::move(lab)) {
  require(inputs.rows() >= 1, ErrorKind::precondition, "dataset must contain at least one point");
  require(inputs.cols() >= 1, ErrorKind::dimension, "dataset must have at least one feature");
  require(inputs.allFinite(), ErrorKind::non_finite, "dataset has non-finite entries");
  if (labels) {
    require(labels->size() == static_cast<std::size_t>(inputs.rows()), ErrorKind::dimension,
            "label count does not match point count");
    for (int y : *labels) {
      require(y >= 0, ErrorKind::format, "labels must be positive (one-based on disk)");
    }
  }
}

void Dataset::check_labels(std::size_t classes) const {
  if (!labels) return;
  for (int y : *labels) {
    require(static_cast<std::size_t>(y) < classes, ErrorKind::format,
            "label " + std::to_string(y + 1) + " out of range for " + std::to_string(classes) +
                " classes");
  }
}

}  // namespace pathsample

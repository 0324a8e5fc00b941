#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "bsgd/common.hpp"

namespace bsgd {

/// Layer widths of a dense ReLU network, e.g. {1, 40, 40, 1}.
///
/// Flat weight layout (public contract): for each layer in order, the
/// weight matrix (n_out x n_in) in row-major order followed by the bias
/// vector (n_out). Hidden layers use ReLU, the output layer is linear.
class MlpShape {
 public:
  MlpShape() = default;
  explicit MlpShape(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }
  int num_params() const { return num_params_; }
  int weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  int bias_offset(int layer) const;

  bool operator==(const MlpShape& other) const { return dims_ == other.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int num_params_ = 0;
};

struct Mlp {
  MlpShape shape;
  Vector weights;

  /// Uniform(-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))) weights, zero biases.
  static Mlp glorot(std::vector<int> dims, Engine& rng);
  static Mlp zeros(std::vector<int> dims);
};

/// Rows are samples.
struct Batch {
  Matrix inputs;   // n x in_dim
  Matrix targets;  // n x out_dim
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// n x out_dim outputs for n x in_dim inputs.
Matrix mlp_forward(const MlpShape& shape, const Vector& weights, const Matrix& inputs);
inline Matrix mlp_forward(const Mlp& net, const Matrix& inputs) {
  return mlp_forward(net.shape, net.weights, inputs);
}

/// loss = (1/n) sum_i ||h(x_i) - y_i||^2 and its exact gradient in the weights.
LossGrad mlp_loss_grad(const MlpShape& shape, const Vector& weights, const Batch& batch);
inline LossGrad mlp_loss_grad(const Mlp& net, const Batch& batch) {
  return mlp_loss_grad(net.shape, net.weights, batch);
}

/// Loss only (no backward pass).
double mlp_loss(const MlpShape& shape, const Vector& weights, const Batch& batch);

/// Hessian of the batch loss times v, by forward-over-reverse differentiation.
/// ReLU'' is taken as zero everywhere.
Vector mlp_hvp(const MlpShape& shape, const Vector& weights, const Batch& batch, const Vector& v);
inline Vector mlp_hvp(const Mlp& net, const Batch& batch, const Vector& v) {
  return mlp_hvp(net.shape, net.weights, batch, v);
}

/// Gradient in the weights of sum_i upstream_i . h(x_i); upstream is n x out_dim.
Vector mlp_output_vjp(const MlpShape& shape, const Vector& weights, const Matrix& inputs,
                      const Matrix& upstream);

/// Sign pattern of every hidden pre-activation (one byte per unit per sample).
/// Two weight vectors with equal signatures lie in the same linear region.
std::vector<std::uint8_t> activation_signature(const MlpShape& shape, const Vector& weights,
                                               const Matrix& inputs);

/// Worst per-coordinate error between central differences of fn and grad_fn,
/// |fd_i - g_i| / max(1, |fd_i|, |g_i|). Dimensions above max_coordinates are
/// checked along 32 fixed pseudo-random unit directions instead.
double fd_gradient_check(const std::function<double(const Vector&)>& fn,
                         const std::function<Vector(const Vector&)>& grad_fn, const Vector& x,
                         double eps, int max_coordinates = 4096);

/// Text format: "mlp <num_dims> <d0> ... <dL>\n" then one weight per line
/// with 17 significant digits.
void save_weights(std::ostream& os, const Mlp& net);
Mlp load_weights(std::istream& is);

}  // namespace bsgd

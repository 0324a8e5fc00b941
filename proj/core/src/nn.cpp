#include "bsgd/nn.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "bsgd/rng.hpp"

namespace bsgd {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeightMap = Eigen::Map<const RowMajor>;
using WeightMap = Eigen::Map<RowMajor>;

ConstWeightMap layer_weights(const MlpShape& s, const Vector& w, int l) {
  const auto& d = s.dims();
  return ConstWeightMap(w.data() + s.weight_offset(l), d[static_cast<std::size_t>(l) + 1],
                        d[static_cast<std::size_t>(l)]);
}

Eigen::Map<const Vector> layer_bias(const MlpShape& s, const Vector& w, int l) {
  return Eigen::Map<const Vector>(w.data() + s.bias_offset(l),
                                  s.dims()[static_cast<std::size_t>(l) + 1]);
}

// Column-per-sample activations. act[0] is the input, act[L] the output;
// pre[l] is the pre-activation of layer l (act[l+1] = relu(pre[l]) for hidden layers).
struct ForwardCache {
  std::vector<Matrix> act;
  std::vector<Matrix> pre;
};

void check_shapes(const MlpShape& shape, const Vector& weights, const Matrix& inputs) {
  if (weights.size() != shape.num_params()) {
    throw InvalidArgument("mlp: weight vector has " + std::to_string(weights.size()) +
                          " entries, expected " + std::to_string(shape.num_params()));
  }
  if (inputs.cols() != shape.in_dim()) {
    throw InvalidArgument("mlp: input width " + std::to_string(inputs.cols()) +
                          " does not match layer_dims[0]=" + std::to_string(shape.in_dim()));
  }
}

ForwardCache forward(const MlpShape& shape, const Vector& weights, const Matrix& inputs) {
  check_shapes(shape, weights, inputs);
  const int L = shape.num_layers();
  ForwardCache c;
  c.act.resize(static_cast<std::size_t>(L) + 1);
  c.pre.resize(static_cast<std::size_t>(L));
  c.act[0] = inputs.transpose();
  for (int l = 0; l < L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    c.pre[li] = layer_weights(shape, weights, l) * c.act[li];
    c.pre[li].colwise() += layer_bias(shape, weights, l);
    c.act[li + 1] = (l + 1 < L) ? Matrix(c.pre[li].cwiseMax(0.0)) : c.pre[li];
  }
  return c;
}

Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

// Reverse pass from an output seed (out_dim x n); returns the flat gradient.
Vector backward(const MlpShape& shape, const Vector& weights, const ForwardCache& c, Matrix delta) {
  const int L = shape.num_layers();
  Vector grad(shape.num_params());
  for (int l = L - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const auto& d = shape.dims();
    WeightMap gW(grad.data() + shape.weight_offset(l), d[li + 1], d[li]);
    gW.noalias() = delta * c.act[li].transpose();
    Eigen::Map<Vector>(grad.data() + shape.bias_offset(l), d[li + 1]) = delta.rowwise().sum();
    if (l > 0) {
      Matrix prev = layer_weights(shape, weights, l).transpose() * delta;
      delta = prev.cwiseProduct(relu_mask(c.pre[li - 1]));
    }
  }
  return grad;
}

}  // namespace

MlpShape::MlpShape(std::vector<int> dims) : dims_(std::move(dims)) {
  require(dims_.size() >= 2, "MlpShape: need at least input and output widths");
  for (int d : dims_) require(d >= 1, "MlpShape: layer widths must be positive");
  int offset = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(offset);
    offset += (dims_[l] + 1) * dims_[l + 1];
  }
  num_params_ = offset;
}

int MlpShape::bias_offset(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return offsets_[l] + dims_[l] * dims_[l + 1];
}

Mlp Mlp::glorot(std::vector<int> dims, Engine& rng) {
  Mlp net = zeros(std::move(dims));
  const auto& d = net.shape.dims();
  for (int l = 0; l < net.shape.num_layers(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(d[li] + d[li + 1]));
    const int count = d[li] * d[li + 1];
    for (int i = 0; i < count; ++i) {
      net.weights[net.shape.weight_offset(l) + i] = draw_uniform(rng, -limit, limit);
    }
  }
  return net;
}

Mlp Mlp::zeros(std::vector<int> dims) {
  Mlp net;
  net.shape = MlpShape(std::move(dims));
  net.weights = Vector::Zero(net.shape.num_params());
  return net;
}

Matrix mlp_forward(const MlpShape& shape, const Vector& weights, const Matrix& inputs) {
  const ForwardCache c = forward(shape, weights, inputs);
  return c.act.back().transpose();
}

namespace {

void check_batch(const MlpShape& shape, const Batch& batch) {
  if (batch.inputs.rows() < 1) throw InvalidArgument("mlp: batch must be nonempty");
  if (batch.targets.rows() != batch.inputs.rows() || batch.targets.cols() != shape.out_dim()) {
    throw InvalidArgument("mlp: target shape does not match inputs/output width");
  }
}

}  // namespace

double mlp_loss(const MlpShape& shape, const Vector& weights, const Batch& batch) {
  check_batch(shape, batch);
  const ForwardCache c = forward(shape, weights, batch.inputs);
  return (c.act.back() - batch.targets.transpose()).squaredNorm() /
         static_cast<double>(batch.inputs.rows());
}

LossGrad mlp_loss_grad(const MlpShape& shape, const Vector& weights, const Batch& batch) {
  check_batch(shape, batch);
  const ForwardCache c = forward(shape, weights, batch.inputs);
  const double n = static_cast<double>(batch.inputs.rows());
  const Matrix residual = c.act.back() - batch.targets.transpose();
  LossGrad out;
  out.loss = residual.squaredNorm() / n;
  out.grad = backward(shape, weights, c, (2.0 / n) * residual);
  return out;
}

Vector mlp_output_vjp(const MlpShape& shape, const Vector& weights, const Matrix& inputs,
                      const Matrix& upstream) {
  if (upstream.rows() != inputs.rows() || upstream.cols() != shape.out_dim()) {
    throw InvalidArgument("mlp_output_vjp: upstream must be n x out_dim");
  }
  const ForwardCache c = forward(shape, weights, inputs);
  return backward(shape, weights, c, upstream.transpose());
}

Vector mlp_hvp(const MlpShape& shape, const Vector& weights, const Batch& batch, const Vector& v) {
  check_batch(shape, batch);
  if (v.size() != shape.num_params()) throw InvalidArgument("mlp_hvp: v has wrong length");
  if (!v.allFinite()) throw InvalidArgument("mlp_hvp: v must be finite");
  const ForwardCache c = forward(shape, weights, batch.inputs);
  const int L = shape.num_layers();
  const double n = static_cast<double>(batch.inputs.rows());
  const auto& d = shape.dims();

  std::vector<Matrix> masks(static_cast<std::size_t>(L));
  for (int l = 0; l + 1 < L; ++l) masks[static_cast<std::size_t>(l)] = relu_mask(c.pre[static_cast<std::size_t>(l)]);

  // Forward directional derivatives R(act[l]).
  std::vector<Matrix> r_act(static_cast<std::size_t>(L) + 1);
  r_act[0] = Matrix::Zero(d[0], batch.inputs.rows());
  for (int l = 0; l < L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    Matrix r_pre = layer_weights(shape, v, l) * c.act[li] + layer_weights(shape, weights, l) * r_act[li];
    r_pre.colwise() += layer_bias(shape, v, l);
    r_act[li + 1] = (l + 1 < L) ? Matrix(r_pre.cwiseProduct(masks[li])) : r_pre;
  }

  // Reverse pass and its directional derivative.
  Matrix delta = (2.0 / n) * (c.act.back() - batch.targets.transpose());
  Matrix r_delta = (2.0 / n) * r_act.back();
  Vector hv(shape.num_params());
  for (int l = L - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    WeightMap hW(hv.data() + shape.weight_offset(l), d[li + 1], d[li]);
    hW.noalias() = r_delta * c.act[li].transpose() + delta * r_act[li].transpose();
    Eigen::Map<Vector>(hv.data() + shape.bias_offset(l), d[li + 1]) = r_delta.rowwise().sum();
    if (l > 0) {
      const auto W = layer_weights(shape, weights, l);
      const auto V = layer_weights(shape, v, l);
      Matrix next_r = (V.transpose() * delta + W.transpose() * r_delta).cwiseProduct(masks[li - 1]);
      Matrix next = (W.transpose() * delta).cwiseProduct(masks[li - 1]);
      r_delta = std::move(next_r);
      delta = std::move(next);
    }
  }
  return hv;
}

std::vector<std::uint8_t> activation_signature(const MlpShape& shape, const Vector& weights,
                                               const Matrix& inputs) {
  const ForwardCache c = forward(shape, weights, inputs);
  std::vector<std::uint8_t> sig;
  for (int l = 0; l + 1 < shape.num_layers(); ++l) {
    const Matrix& pre = c.pre[static_cast<std::size_t>(l)];
    for (Eigen::Index j = 0; j < pre.cols(); ++j) {
      for (Eigen::Index i = 0; i < pre.rows(); ++i) sig.push_back(pre(i, j) > 0.0 ? 1 : 0);
    }
  }
  return sig;
}

double fd_gradient_check(const std::function<double(const Vector&)>& fn,
                         const std::function<Vector(const Vector&)>& grad_fn, const Vector& x,
                         double eps, int max_coordinates) {
  require(eps > 0.0, "fd_gradient_check: eps must be positive");
  const Vector g = grad_fn(x);
  require(g.size() == x.size(), "fd_gradient_check: gradient has wrong length");
  auto rel = [](double fd, double an) {
    return std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
  };
  double worst = 0.0;
  if (x.size() <= max_coordinates) {
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + eps;
      const double fp = fn(xp);
      xp[i] = x[i] - eps;
      const double fm = fn(xp);
      xp[i] = x[i];
      worst = std::max(worst, rel((fp - fm) / (2.0 * eps), g[i]));
    }
    return worst;
  }
  Engine rng(0x5EEDF00DULL);
  for (int k = 0; k < 32; ++k) {
    Vector u(x.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = draw_normal(rng, 0.0, 1.0);
    u.normalize();
    const double fd = (fn(x + eps * u) - fn(x - eps * u)) / (2.0 * eps);
    worst = std::max(worst, rel(fd, g.dot(u)));
  }
  return worst;
}

void save_weights(std::ostream& os, const Mlp& net) {
  const auto& d = net.shape.dims();
  os << "mlp " << d.size();
  for (int w : d) os << ' ' << w;
  os << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < net.weights.size(); ++i) os << net.weights[i] << '\n';
}

Mlp load_weights(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "mlp" || count < 2) {
    throw InvalidArgument("load_weights: malformed header");
  }
  std::vector<int> dims(count);
  for (auto& d : dims) {
    if (!(is >> d)) throw InvalidArgument("load_weights: malformed layer dims");
  }
  Mlp net = Mlp::zeros(dims);
  for (Eigen::Index i = 0; i < net.weights.size(); ++i) {
    if (!(is >> net.weights[i])) throw InvalidArgument("load_weights: truncated weight list");
  }
  return net;
}

}  // namespace bsgd

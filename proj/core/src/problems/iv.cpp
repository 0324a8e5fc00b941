#include <cmath>

#include "bsgd/problems.hpp"

namespace bsgd {

double iv_truth(IvTruth truth, double x) {
  switch (truth) {
    case IvTruth::kAbs: return std::abs(x);
    case IvTruth::kLinear: return x;
    case IvTruth::kSine: return std::sin(x);
    case IvTruth::kStep: return x >= 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string to_string(IvTruth truth) {
  switch (truth) {
    case IvTruth::kAbs: return "abs";
    case IvTruth::kLinear: return "linear";
    case IvTruth::kSine: return "sine";
    case IvTruth::kStep: return "step";
  }
  return "abs";
}

IvTruth iv_truth_from_string(const std::string& name) {
  if (name == "abs") return IvTruth::kAbs;
  if (name == "linear") return IvTruth::kLinear;
  if (name == "sine" || name == "sin") return IvTruth::kSine;
  if (name == "step") return IvTruth::kStep;
  throw InvalidArgument("unknown IV truth '" + name + "' (expected abs, linear, sine or step)");
}

std::vector<double> iv_test_grid() {
  std::vector<double> grid(1000);
  for (int i = 1; i <= 1000; ++i) grid[static_cast<std::size_t>(i - 1)] = -5.0 + 0.01 * i;
  return grid;
}

namespace {

enum Slot { kY = 0, kZ1 = 1, kZ2 = 2, kX = 3 };

}  // namespace

IvProblem::IvProblem(IvSpec spec) : spec_(std::move(spec)) {
  require(spec_.noise_var >= 0.0, "iv: noise_var must be >= 0");
  require(spec_.net_dims.size() >= 2 && spec_.net_dims.front() == 1 && spec_.net_dims.back() == 1,
          "iv: net_dims must map 1 input to 1 output");
  require(spec_.n_outer_pool >= 0, "iv: n_outer_pool must be >= 0");
  require(spec_.reference_outer >= 1 && spec_.reference_inner >= 1,
          "iv: reference sizes must be >= 1");
  shape_ = MlpShape(spec_.net_dims);

  if (spec_.n_outer_pool > 0) {
    Engine prng(spec_.pool_seed);
    pool_.reserve(static_cast<std::size_t>(spec_.n_outer_pool));
    for (long i = 0; i < spec_.n_outer_pool; ++i) pool_.push_back(draw(prng));
  }

  Engine rrng(spec_.reference_seed);
  reference_y_.resize(spec_.reference_outer);
  reference_x_.resize(spec_.reference_inner, spec_.reference_outer);
  for (long i = 0; i < spec_.reference_outer; ++i) {
    const OuterSample xi = draw(rrng);
    reference_y_[i] = xi.payload[kY];
    reference_x_.col(i) = sample_inner(xi, static_cast<int>(spec_.reference_inner), rrng).samples.row(0).transpose();
  }
}

double IvProblem::instrument_value(double z1, double z2) const {
  return spec_.instrument == IvInstrument::kMean ? 0.5 * (z1 + z2) : z1;
}

OuterSample IvProblem::draw(Engine& rng) const {
  const double sd = std::sqrt(spec_.noise_var);
  const double z1 = draw_uniform(rng, -3.0, 3.0);
  const double z2 = draw_uniform(rng, -3.0, 3.0);
  const double e = draw_normal(rng, 0.0, 1.0);
  const double gamma = draw_normal(rng, 0.0, sd);
  const double delta = draw_normal(rng, 0.0, sd);
  const double x = 0.5 * instrument_value(z1, z2) + 0.5 * e + gamma;
  const double y = iv_truth(spec_.truth, x) + e + delta;
  OuterSample xi;
  xi.payload.resize(4);
  xi.payload << y, z1, z2, x;
  return xi;
}

OuterSample IvProblem::sample_outer(Engine& rng) const {
  if (pool_.empty()) return draw(rng);
  std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
  return pool_[pick(rng)];
}

InnerBatch IvProblem::sample_inner(const OuterSample& xi, int m, Engine& rng) const {
  require(m >= 1, "sample_inner: m must be >= 1");
  const double sd = std::sqrt(spec_.noise_var);
  const double z = instrument_value(xi.payload[kZ1], xi.payload[kZ2]);
  InnerBatch batch;
  batch.samples.resize(1, m);
  for (int j = 0; j < m; ++j) {
    const double e = draw_normal(rng, 0.0, 1.0);
    const double gamma = draw_normal(rng, 0.0, sd);
    batch.samples(0, j) = 0.5 * z + 0.5 * e + gamma;
  }
  return batch;
}

Vector IvProblem::g_value(const Vector& w, const OuterSample& /*xi*/,
                          const Eigen::Ref<const Vector>& eta) const {
  return mlp_forward(shape_, w, Matrix::Constant(1, 1, eta[0])).row(0).transpose();
}

Vector IvProblem::g_jacobian_t(const Vector& w, const OuterSample& /*xi*/,
                               const Eigen::Ref<const Vector>& eta, const Vector& v) const {
  return mlp_output_vjp(shape_, w, Matrix::Constant(1, 1, eta[0]), Matrix::Constant(1, 1, v[0]));
}

double IvProblem::f_value(const OuterSample& xi, const Vector& u) const {
  const double r = xi.payload[kY] - u[0];
  return r * r;
}

Vector IvProblem::f_grad(const OuterSample& xi, const Vector& u) const {
  return Vector::Constant(1, -2.0 * (xi.payload[kY] - u[0]));
}

std::optional<double> IvProblem::true_objective(const Vector& w) const {
  const Matrix h = mlp_forward(shape_, w, reference_x_.reshaped(reference_x_.size(), 1));
  const Eigen::Map<const Matrix> per(h.data(), reference_x_.rows(), reference_x_.cols());
  const Vector inner = per.colwise().mean().transpose();
  return (reference_y_ - inner).squaredNorm() / static_cast<double>(reference_y_.size());
}

Vector IvProblem::g_mean(const Vector& w, const OuterSample& /*xi*/, const InnerBatch& batch) const {
  const Matrix h = mlp_forward(shape_, w, batch.samples.transpose());
  return Vector::Constant(1, h.col(0).mean());
}

Vector IvProblem::g_mean_jacobian_t(const Vector& w, const OuterSample& /*xi*/,
                                    const InnerBatch& batch, const Vector& v) const {
  const Eigen::Index m = batch.samples.cols();
  return mlp_output_vjp(shape_, w, batch.samples.transpose(),
                        Matrix::Constant(m, 1, v[0] / static_cast<double>(m)));
}

IvData IvProblem::to_data(const std::vector<OuterSample>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  IvData data;
  data.X.resize(n, 1);
  data.Z.resize(n, 2);
  data.Y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& p = samples[static_cast<std::size_t>(i)].payload;
    data.X(i, 0) = p[kX];
    data.Z(i, 0) = p[kZ1];
    data.Z(i, 1) = p[kZ2];
    data.Y[i] = p[kY];
  }
  return data;
}

IvData IvProblem::pool_data() const {
  if (pool_.empty()) throw UnsupportedOperation("iv: pool_data needs n_outer_pool > 0");
  return to_data(pool_);
}

std::shared_ptr<const IvProblem> make_iv(const IvSpec& spec) {
  return std::make_shared<const IvProblem>(spec);
}

}  // namespace bsgd

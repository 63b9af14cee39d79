#include "xmod/adapter.hpp"

namespace xmod {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::Visual: return "visual";
    case Branch::Text: return "text";
    case Branch::Both: return "both";
  }
  return "?";
}

Branch parse_branch(const std::string& s) {
  if (s == "visual") return Branch::Visual;
  if (s == "text") return Branch::Text;
  if (s == "both") return Branch::Both;
  throw Error(ErrorCode::InvalidArgument, "unknown branch '" + s + "'");
}

LowRankAdapter LowRankAdapter::initialized(Index dim, Index rank, double scale, Branch branch, double init_sigma,
                                           Rng& rng) {
  if (dim < 1 || rank < 1) throw Error(ErrorCode::InvalidArgument, "adapter needs dim >= 1 and rank >= 1");
  LowRankAdapter a;
  a.scale = scale;
  a.branch = branch;
  a.down.resize(rank, dim);
  std::normal_distribution<double> gauss(0.0, init_sigma);
  for (Index i = 0; i < rank; ++i)
    for (Index j = 0; j < dim; ++j) a.down(i, j) = gauss(rng);
  a.up = Matrix::Zero(dim, rank);
  return a;
}

Vector LowRankAdapter::parameters() const {
  Vector p(parameter_count());
  p << down.reshaped(), up.reshaped();
  return p;
}

void LowRankAdapter::set_parameters(const Vector& params) {
  detail::require_same_dim(params.size(), parameter_count(), "adapter parameter vector");
  down.reshaped() = params.head(down.size());
  up.reshaped() = params.tail(up.size());
}

AdapterGrad AdapterGrad::zeros_like(const LowRankAdapter& adapter) {
  return {Matrix::Zero(adapter.down.rows(), adapter.down.cols()), Matrix::Zero(adapter.up.rows(), adapter.up.cols())};
}

Vector AdapterGrad::flatten() const {
  Vector p(down.size() + up.size());
  p << down.reshaped(), up.reshaped();
  return p;
}

bool AdapterGrad::all_finite() const { return xmod::all_finite(down) && xmod::all_finite(up); }

AdapterGrad& AdapterGrad::operator+=(const AdapterGrad& other) {
  down += other.down;
  up += other.up;
  return *this;
}

AdapterGrad& AdapterGrad::operator*=(double s) {
  down *= s;
  up *= s;
  return *this;
}

AdapterForward adapter_forward(const LowRankAdapter& adapter, const FeatureMatrix& inputs) {
  detail::require_same_dim(inputs.cols(), adapter.dim(), "adapter input dimension");
  AdapterForward fwd;
  fwd.hidden = inputs * adapter.down.transpose();
  FeatureMatrix z = inputs + adapter.scale * fwd.hidden * adapter.up.transpose();
  fwd.norms.resize(z.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    if (!(norm >= kZeroNormThreshold)) {
      throw Error(ErrorCode::ZeroVector, "adapter output row " + std::to_string(i) + " vanished");
    }
    fwd.norms[i] = norm;
    z.row(i) /= norm;
  }
  fwd.output = std::move(z);
  return fwd;
}

FeatureMatrix apply_adapter(const LowRankAdapter& adapter, const FeatureMatrix& inputs) {
  return adapter_forward(adapter, inputs).output;
}

void adapter_backward(const LowRankAdapter& adapter, const FeatureMatrix& inputs, const AdapterForward& forward,
                      const Matrix& d_output, AdapterGrad& grad) {
  // Through the renormalization: dz = (I - f f^T) g / ||z||.
  const Vector radial = (forward.output.array() * d_output.array()).rowwise().sum();
  Matrix d_z = d_output - forward.output.cwiseProduct(radial.replicate(1, d_output.cols()));
  d_z.array().colwise() /= forward.norms.array();
  grad.up.noalias() += adapter.scale * d_z.transpose() * forward.hidden;
  const Matrix d_hidden = adapter.scale * d_z * adapter.up;
  grad.down.noalias() += d_hidden.transpose() * inputs;
}

LowRankAdapter sgd_step(const LowRankAdapter& adapter, const AdapterGrad& grad, double eta) {
  detail::require_same_dim(grad.down.size(), adapter.down.size(), "down gradient");
  detail::require_same_dim(grad.up.size(), adapter.up.size(), "up gradient");
  if (!grad.all_finite()) throw Error(ErrorCode::NonFiniteGradient, "gradient has NaN or Inf entries");
  LowRankAdapter next = adapter;
  next.down -= eta * grad.down;
  next.up -= eta * grad.up;
  return next;
}

}  // namespace xmod

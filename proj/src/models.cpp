#include "crpslab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crpslab/errors.hpp"

namespace crpslab {

double softplus(double u) noexcept {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double softplus_inverse(double v) {
  if (!(v > 0.0)) throw InputError("softplus_inverse: argument must be positive");
  return v + std::log(-std::expm1(-v));
}

double sigmoid(double u) noexcept {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

ParamBox::ParamBox(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw InputError("box bounds differ in length");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) throw InputError("box bounds must be finite");
    if (lower_[i] > upper_[i]) throw InputError("box lower bound exceeds upper bound");
  }
}

ParamBox ParamBox::around(std::span<const double> center, double half_width) {
  if (!(half_width >= 0.0)) throw InputError("box half-width must be nonnegative");
  std::vector<double> lo(center.size());
  std::vector<double> hi(center.size());
  for (std::size_t i = 0; i < center.size(); ++i) {
    lo[i] = center[i] - half_width;
    hi[i] = center[i] + half_width;
  }
  return {std::move(lo), std::move(hi)};
}

bool ParamBox::contains(std::span<const double> theta, double tol) const noexcept {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] < lower_[i] - tol || theta[i] > upper_[i] + tol) return false;
  }
  return true;
}

void ParamBox::project(std::span<double> theta) const noexcept {
  for (std::size_t i = 0; i < theta.size() && i < dim(); ++i) theta[i] = std::clamp(theta[i], lower_[i], upper_[i]);
}

double ParamBox::circumradius() const noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    const double r = std::max(std::abs(lower_[i]), std::abs(upper_[i]));
    acc += r * r;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// EMOS

namespace {

void require_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw InputError("covariate dimension mismatch: expected " + std::to_string(expected) + ", got " +
                     std::to_string(got));
  }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// sigma and d sigma / d u for the clamped softplus link.
struct ScaleLink {
  double sigma;
  double dsigma_du;
  bool clamped;
};

ScaleLink scale_link(double u) noexcept {
  const bool clamped = u < kMinScaleArgument;
  const double ue = clamped ? kMinScaleArgument : u;
  const double sigma = std::sqrt(softplus(ue));
  return {sigma, clamped ? 0.0 : sigmoid(ue) / (2.0 * sigma), clamped};
}

}  // namespace

std::vector<double> EmosParams::to_vector() const {
  std::vector<double> theta;
  theta.reserve(size());
  theta.push_back(alpha);
  theta.insert(theta.end(), beta.begin(), beta.end());
  theta.push_back(alpha_scale);
  theta.insert(theta.end(), beta_scale.begin(), beta_scale.end());
  return theta;
}

EmosParams EmosParams::from_vector(std::span<const double> theta, std::size_t dim) {
  if (theta.size() != 2 * (1 + dim)) throw InputError("EMOS parameter vector has wrong length");
  EmosParams p;
  p.alpha = theta[0];
  p.beta.assign(theta.begin() + 1, theta.begin() + 1 + static_cast<std::ptrdiff_t>(dim));
  p.alpha_scale = theta[1 + dim];
  p.beta_scale.assign(theta.begin() + 2 + static_cast<std::ptrdiff_t>(dim), theta.end());
  return p;
}

GaussianLS emos_predict(const EmosParams& p, std::span<const double> x) {
  require_dim(p.dim(), x.size());
  if (p.beta_scale.size() != p.beta.size()) throw InputError("EMOS slope vectors differ in length");
  const double m = p.alpha + dot(p.beta, x);
  const double u = p.alpha_scale + dot(p.beta_scale, x);
  return {m, scale_link(u).sigma};
}

std::vector<double> emos_grad(const EmosParams& p, std::span<const double> x, double y) {
  require_dim(p.dim(), x.size());
  const double m = p.alpha + dot(p.beta, x);
  const ScaleLink link = scale_link(p.alpha_scale + dot(p.beta_scale, x));
  const auto g = crps_gaussian_grad(GaussianLS(m, link.sigma), y);
  const double d_u = g.d_scale * link.dsigma_du;
  const std::size_t d = p.dim();
  std::vector<double> out(p.size());
  out[0] = g.d_location;
  for (std::size_t j = 0; j < d; ++j) out[1 + j] = g.d_location * x[j];
  out[1 + d] = d_u;
  for (std::size_t j = 0; j < d; ++j) out[2 + d + j] = d_u * x[j];
  return out;
}

// ---------------------------------------------------------------------------
// DRN

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw InputError("unknown activation '" + name + "'");
}

namespace {

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

// relu'(0) := 0.
double activate_derivative(Activation a, double z, double value) noexcept {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - value * value;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

}  // namespace

void DrnParams::validate() const {
  if (beta.size() != hidden || beta_scale.size() != hidden || gamma.size() != hidden ||
      delta.size() != hidden * input_dim) {
    throw InputError("DRN parameter blocks do not match hidden width and input dimension");
  }
}

std::vector<double> DrnParams::to_vector() const {
  validate();
  std::vector<double> theta;
  theta.reserve(size());
  theta.push_back(alpha);
  theta.insert(theta.end(), beta.begin(), beta.end());
  theta.push_back(alpha_scale);
  theta.insert(theta.end(), beta_scale.begin(), beta_scale.end());
  theta.insert(theta.end(), gamma.begin(), gamma.end());
  theta.insert(theta.end(), delta.begin(), delta.end());
  return theta;
}

DrnParams DrnParams::from_vector(std::span<const double> theta, std::size_t hidden, std::size_t input_dim,
                                 Activation activation) {
  DrnParams p;
  p.hidden = hidden;
  p.input_dim = input_dim;
  p.activation = activation;
  if (theta.size() != p.size()) throw InputError("DRN parameter vector has wrong length");
  auto it = theta.begin();
  const auto h = static_cast<std::ptrdiff_t>(hidden);
  p.alpha = *it++;
  p.beta.assign(it, it + h);
  it += h;
  p.alpha_scale = *it++;
  p.beta_scale.assign(it, it + h);
  it += h;
  p.gamma.assign(it, it + h);
  it += h;
  p.delta.assign(it, theta.end());
  return p;
}

namespace {

struct DrnForward {
  std::vector<double> pre;     // gamma + delta x
  std::vector<double> hidden;  // g(pre)
  double location;
  double scale_arg;
};

DrnForward drn_forward(const DrnParams& p, std::span<const double> x) {
  require_dim(p.input_dim, x.size());
  p.validate();
  DrnForward f;
  f.pre.resize(p.hidden);
  f.hidden.resize(p.hidden);
  f.location = p.alpha;
  f.scale_arg = p.alpha_scale;
  for (std::size_t h = 0; h < p.hidden; ++h) {
    const std::span<const double> w(p.delta.data() + h * p.input_dim, p.input_dim);
    f.pre[h] = p.gamma[h] + dot(w, x);
    f.hidden[h] = activate(p.activation, f.pre[h]);
    f.location += p.beta[h] * f.hidden[h];
    f.scale_arg += p.beta_scale[h] * f.hidden[h];
  }
  return f;
}

}  // namespace

GaussianLS drn_predict(const DrnParams& p, std::span<const double> x) {
  const DrnForward f = drn_forward(p, x);
  return {f.location, scale_link(f.scale_arg).sigma};
}

DrnGradient drn_grad(const DrnParams& p, std::span<const double> x, double y) {
  const DrnForward f = drn_forward(p, x);
  const ScaleLink link = scale_link(f.scale_arg);
  const auto g = crps_gaussian_grad(GaussianLS(f.location, link.sigma), y);
  const double d_m = g.d_location;
  const double d_u = g.d_scale * link.dsigma_du;

  const std::size_t H = p.hidden;
  const std::size_t d = p.input_dim;
  DrnGradient out;
  out.scale_clamped = link.clamped;
  out.values.assign(p.size(), 0.0);
  double* alpha = out.values.data();
  double* beta = alpha + 1;
  double* alpha_s = beta + H;
  double* beta_s = alpha_s + 1;
  double* gamma = beta_s + H;
  double* delta = gamma + H;

  *alpha = d_m;
  *alpha_s = d_u;
  for (std::size_t h = 0; h < H; ++h) {
    beta[h] = d_m * f.hidden[h];
    beta_s[h] = d_u * f.hidden[h];
    const double back =
        (d_m * p.beta[h] + d_u * p.beta_scale[h]) * activate_derivative(p.activation, f.pre[h], f.hidden[h]);
    gamma[h] = back;
    for (std::size_t j = 0; j < d; ++j) delta[h * d + j] = back * x[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// KNN

KnnModel knn_fit(const Dataset& train, std::size_t k, bool standardize) {
  train.validate();
  if (train.size() == 0) throw InputError("KNN needs a nonempty training set");
  if (k < 1 || k > train.size()) {
    throw InputError("KNN requires 1 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(train.size()) + ")");
  }
  KnnModel m;
  m.k = k;
  m.x = train.x;
  m.y = train.y;
  m.standardize = standardize;
  const std::size_t d = train.dim();
  m.center.assign(d, 0.0);
  m.spread.assign(d, 1.0);
  if (standardize) {
    const auto n = static_cast<double>(train.size());
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) mean += train.x(i, j);
      mean /= n;
      double var = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) var += (train.x(i, j) - mean) * (train.x(i, j) - mean);
      const double sd = std::sqrt(var / n);
      m.center[j] = mean;
      m.spread[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  return m;
}

std::vector<std::size_t> knn_neighbors(const KnnModel& m, std::span<const double> x, std::size_t count) {
  require_dim(m.dim(), x.size());
  const std::size_t n = m.y.size();
  if (count > n) throw InputError("requested more neighbours than training points");
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = m.x.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = (r[j] - x[j]) / m.spread[j];
      acc += diff * diff;
    }
    dist[i] = {acc, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = dist[i].second;
  return out;
}

WeightedEmpirical knn_predict(const KnnModel& m, std::span<const double> x) {
  if (m.k < 1 || m.k > m.y.size()) throw InputError("KNN requires 1 <= k <= n");
  const auto idx = knn_neighbors(m, x, m.k);
  std::vector<double> values(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) values[i] = m.y[idx[i]];
  return WeightedEmpirical::uniform(std::move(values));
}

double subgauss_proxy(std::span<const double> train_y) {
  if (train_y.empty()) throw InputError("subgauss_proxy: empty response vector");
  double out = 0.0;
  for (double v : train_y) out = std::max(out, std::abs(v));
  return out;
}

}  // namespace crpslab

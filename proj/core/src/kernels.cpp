#include "gpatt/kernels.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"

namespace gpatt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPiSq = 2.0 * kPi * kPi;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string(name) + " must be positive and finite");
  }
}

double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * kPi * var);
}

}  // namespace

double k_se(double tau, double lengthscale) {
  require_positive(lengthscale, "lengthscale");
  const double r = tau / lengthscale;
  return std::exp(-0.5 * r * r);
}

double k_se(std::span<const double> tau, double lengthscale) {
  require_positive(lengthscale, "lengthscale");
  double sq = 0.0;
  for (double t : tau) sq += t * t;
  return std::exp(-0.5 * sq / (lengthscale * lengthscale));
}

double k_matern32(double tau, double lengthscale) {
  require_positive(lengthscale, "lengthscale");
  const double r = std::sqrt(3.0) * std::abs(tau) / lengthscale;
  return (1.0 + r) * std::exp(-r);
}

double k_rq(double tau, double lengthscale, double alpha) {
  require_positive(lengthscale, "lengthscale");
  require_positive(alpha, "alpha");
  return std::pow(1.0 + tau * tau / (2.0 * alpha * lengthscale * lengthscale), -alpha);
}

double k_periodic(double tau, double omega, double lengthscale) {
  require_positive(omega, "omega");
  require_positive(lengthscale, "lengthscale");
  const double s = std::sin(kPi * tau * omega);
  return std::exp(-2.0 * s * s / (lengthscale * lengthscale));
}

void SMKernel1D::validate() const {
  if (components.empty()) throw ParameterError("spectral mixture needs at least one component");
  for (const auto& c : components) {
    require_positive(c.weight_sq, "weight_sq");
    require_positive(c.var_freq, "var_freq");
    if (!(c.mean_freq >= 0.0) || !std::isfinite(c.mean_freq)) {
      throw ParameterError("mean_freq must be non-negative");
    }
  }
}

double SMKernel1D::at_zero() const {
  double s = 0.0;
  for (const auto& c : components) s += c.weight_sq;
  return s;
}

void SMPKernel::validate() const {
  if (per_dim.empty()) throw ParameterError("SMP kernel needs at least one dimension");
  const auto a = per_dim.front().components.size();
  for (const auto& k : per_dim) {
    k.validate();
    if (k.components.size() != a) {
      throw ParameterError("SMP kernel needs the same component count in every dimension");
    }
  }
}

double SMPKernel::at_zero() const {
  double v = 1.0;
  for (const auto& k : per_dim) v *= k.at_zero();
  return v;
}

double k_sm_1d(double tau, const SMKernel1D& kernel) {
  double v = 0.0;
  for (const auto& c : kernel.components) {
    v += c.weight_sq * std::exp(-kTwoPiSq * tau * tau * c.var_freq) *
         std::cos(2.0 * kPi * tau * c.mean_freq);
  }
  return v;
}

double k_smp(std::span<const double> tau, const SMPKernel& kernel) {
  if (tau.size() != kernel.dims()) throw ShapeError("lag dimension does not match SMP kernel");
  double v = 1.0;
  for (std::size_t p = 0; p < tau.size(); ++p) v *= k_sm_1d(tau[p], kernel.per_dim[p]);
  return v;
}

double sm_spectral_density(double s, const SMKernel1D& kernel) {
  double v = 0.0;
  for (const auto& c : kernel.components) {
    v += c.weight_sq * 0.5 *
         (normal_pdf(s, c.mean_freq, c.var_freq) + normal_pdf(-s, c.mean_freq, c.var_freq));
  }
  return v;
}

// ---------------------------------------------------------------------------

std::string to_string(Family family) {
  switch (family) {
    case Family::spectral_mixture: return "smp";
    case Family::squared_exponential: return "se";
    case Family::matern32: return "matern32";
    case Family::rational_quadratic: return "rq";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  if (name == "smp" || name == "sm") return Family::spectral_mixture;
  if (name == "se") return Family::squared_exponential;
  if (name == "matern32" || name == "ma") return Family::matern32;
  if (name == "rq") return Family::rational_quadratic;
  throw ParameterError("unknown kernel family '" + name + "'");
}

std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::log_weight_sq: return "log_weight_sq";
    case ParamKind::log_mean_freq: return "log_mean_freq";
    case ParamKind::log_var_freq: return "log_var_freq";
    case ParamKind::log_lengthscale: return "log_lengthscale";
    case ParamKind::log_alpha: return "log_alpha";
    case ParamKind::log_signal_var: return "log_signal_var";
    case ParamKind::log_noise_var: return "log_noise_var";
  }
  return "?";
}

FactorKernel::FactorKernel(Family family, std::size_t components, bool with_amplitude)
    : family_(family), components_(components), amplitude_(with_amplitude) {
  if (components_ == 0) throw ParameterError("factor kernel needs at least one component");
  if (family_ == Family::spectral_mixture && amplitude_) {
    throw ParameterError("spectral mixture factors carry their own weights");
  }
  if (family_ != Family::spectral_mixture && components_ != 1) {
    throw ParameterError("only spectral mixture factors have multiple components");
  }
}

std::size_t FactorKernel::num_params() const noexcept {
  const std::size_t amp = amplitude_ ? 1 : 0;
  switch (family_) {
    case Family::spectral_mixture: return 3 * components_;
    case Family::squared_exponential:
    case Family::matern32: return amp + 1;
    case Family::rational_quadratic: return amp + 2;
  }
  return 0;
}

double FactorKernel::value(double tau, std::span<const double> raw) const {
  if (family_ == Family::spectral_mixture) {
    double v = 0.0;
    for (std::size_t a = 0; a < components_; ++a) {
      const double w2 = std::exp(raw[3 * a]);
      const double mu = std::exp(raw[3 * a + 1]);
      const double s2 = std::exp(raw[3 * a + 2]);
      v += w2 * std::exp(-kTwoPiSq * tau * tau * s2) * std::cos(2.0 * kPi * tau * mu);
    }
    return v;
  }
  const std::size_t o = amplitude_ ? 1 : 0;
  const double scale = amplitude_ ? std::exp(raw[0]) : 1.0;
  const double ell = std::exp(raw[o]);
  switch (family_) {
    case Family::squared_exponential: {
      const double r = tau / ell;
      return scale * std::exp(-0.5 * r * r);
    }
    case Family::matern32: {
      const double r = std::sqrt(3.0) * std::abs(tau) / ell;
      return scale * (1.0 + r) * std::exp(-r);
    }
    case Family::rational_quadratic: {
      const double alpha = std::exp(raw[o + 1]);
      return scale * std::pow(1.0 + tau * tau / (2.0 * alpha * ell * ell), -alpha);
    }
    default: return 0.0;
  }
}

void FactorKernel::gradient(double tau, std::span<const double> raw, std::span<double> grad) const {
  if (family_ == Family::spectral_mixture) {
    for (std::size_t a = 0; a < components_; ++a) {
      const double w2 = std::exp(raw[3 * a]);
      const double mu = std::exp(raw[3 * a + 1]);
      const double s2 = std::exp(raw[3 * a + 2]);
      const double env = std::exp(-kTwoPiSq * tau * tau * s2);
      const double phase = 2.0 * kPi * tau * mu;
      const double term = w2 * env * std::cos(phase);
      grad[3 * a] = term;
      grad[3 * a + 1] = -w2 * env * std::sin(phase) * phase;
      grad[3 * a + 2] = -term * kTwoPiSq * tau * tau * s2;
    }
    return;
  }
  const std::size_t o = amplitude_ ? 1 : 0;
  const double scale = amplitude_ ? std::exp(raw[0]) : 1.0;
  const double ell = std::exp(raw[o]);
  switch (family_) {
    case Family::squared_exponential: {
      const double r2 = (tau / ell) * (tau / ell);
      const double base = std::exp(-0.5 * r2);
      if (amplitude_) grad[0] = scale * base;
      grad[o] = scale * base * r2;
      break;
    }
    case Family::matern32: {
      const double r = std::sqrt(3.0) * std::abs(tau) / ell;
      const double e = std::exp(-r);
      if (amplitude_) grad[0] = scale * (1.0 + r) * e;
      grad[o] = scale * r * r * e;
      break;
    }
    case Family::rational_quadratic: {
      const double alpha = std::exp(raw[o + 1]);
      const double u = 1.0 + tau * tau / (2.0 * alpha * ell * ell);
      const double base = std::pow(u, -alpha);
      if (amplitude_) grad[0] = scale * base;
      grad[o] = scale * (tau * tau / (ell * ell)) * std::pow(u, -alpha - 1.0);
      grad[o + 1] = scale * base * alpha * (-std::log(u) + (u - 1.0) / u);
      break;
    }
    default: break;
  }
}

Eigen::MatrixXd FactorKernel::gram(std::span<const double> axis, std::span<const double> raw) const {
  return gram_1d([&](double tau) { return value(tau, raw); }, axis);
}

std::vector<Eigen::MatrixXd> FactorKernel::gram_gradients(std::span<const double> axis,
                                                          std::span<const double> raw) const {
  const auto n = static_cast<Eigen::Index>(axis.size());
  const std::size_t np = num_params();
  std::vector<Eigen::MatrixXd> out(np, Eigen::MatrixXd(n, n));
  std::vector<double> g(np);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      gradient(axis[static_cast<std::size_t>(i)] - axis[static_cast<std::size_t>(j)], raw, g);
      for (std::size_t k = 0; k < np; ++k) {
        out[k](i, j) = g[k];
        out[k](j, i) = g[k];
      }
    }
  }
  return out;
}

std::vector<ParamRole> FactorKernel::roles(std::size_t dim) const {
  std::vector<ParamRole> r;
  if (family_ == Family::spectral_mixture) {
    for (std::size_t a = 0; a < components_; ++a) {
      r.push_back({dim, a, ParamKind::log_weight_sq});
      r.push_back({dim, a, ParamKind::log_mean_freq});
      r.push_back({dim, a, ParamKind::log_var_freq});
    }
    return r;
  }
  if (amplitude_) r.push_back({dim, 0, ParamKind::log_signal_var});
  r.push_back({dim, 0, ParamKind::log_lengthscale});
  if (family_ == Family::rational_quadratic) r.push_back({dim, 0, ParamKind::log_alpha});
  return r;
}

double HyperParams::noise_var() const { return std::exp(noise_raw); }

Eigen::VectorXd HyperParams::flat() const {
  Eigen::VectorXd f(raw.size() + 1);
  f.head(raw.size()) = raw;
  f[raw.size()] = noise_raw;
  return f;
}

void HyperParams::set_flat(const Eigen::VectorXd& flat) {
  if (flat.size() != raw.size() + 1) throw ShapeError("flat hyperparameter vector has wrong size");
  raw = flat.head(raw.size());
  noise_raw = flat[raw.size()];
}

// ---------------------------------------------------------------------------

ProductKernel::ProductKernel(std::vector<FactorKernel> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ParameterError("product kernel needs at least one factor");
  offsets_.push_back(0);
  for (const auto& f : factors_) offsets_.push_back(offsets_.back() + f.num_params());
}

ProductKernel ProductKernel::smp(std::size_t dims, std::size_t components) {
  return ProductKernel(std::vector<FactorKernel>(dims, FactorKernel(Family::spectral_mixture, components)));
}

ProductKernel ProductKernel::baseline(Family family, std::size_t dims) {
  if (family == Family::spectral_mixture) throw ParameterError("use ProductKernel::smp for SMP kernels");
  if (dims == 0) throw ParameterError("product kernel needs at least one factor");
  std::vector<FactorKernel> f;
  f.emplace_back(family, 1, true);
  for (std::size_t p = 1; p < dims; ++p) f.emplace_back(family, 1, false);
  return ProductKernel(std::move(f));
}

ProductKernel ProductKernel::from_json(const nlohmann::json& spec, std::size_t dims_hint) {
  const auto type = spec.at("type").get<std::string>();
  const std::size_t dims = spec.contains("P") ? spec.at("P").get<std::size_t>() : dims_hint;
  if (dims == 0) throw ParameterError("kernel spec needs a dimension count P");
  if (dims_hint != 0 && dims != dims_hint) {
    throw ShapeError("kernel spec P does not match the data dimension");
  }
  const Family family = family_from_string(type);
  if (family == Family::spectral_mixture) {
    return smp(dims, spec.value("A", std::size_t{10}));
  }
  return baseline(family, dims);
}

nlohmann::json ProductKernel::to_json() const {
  nlohmann::json j{{"type", to_string(factors_.front().family())}, {"P", dims()}};
  if (factors_.front().family() == Family::spectral_mixture) j["A"] = factors_.front().components();
  return j;
}

std::span<const double> ProductKernel::factor_params(const HyperParams& h, std::size_t p) const {
  return {h.raw.data() + offsets_.at(p), factors_.at(p).num_params()};
}

std::vector<ParamRole> ProductKernel::layout() const {
  std::vector<ParamRole> roles;
  for (std::size_t p = 0; p < factors_.size(); ++p) {
    auto r = factors_[p].roles(p);
    roles.insert(roles.end(), r.begin(), r.end());
  }
  return roles;
}

HyperParams ProductKernel::make_hypers(Eigen::VectorXd raw, double noise_var) const {
  if (static_cast<std::size_t>(raw.size()) != num_params()) {
    throw ShapeError("raw parameter vector has wrong size");
  }
  require_positive(noise_var, "noise variance");
  return HyperParams{std::move(raw), layout(), std::log(noise_var)};
}

double ProductKernel::value(std::span<const double> tau, const HyperParams& h) const {
  if (tau.size() != dims()) throw ShapeError("lag dimension does not match kernel");
  double v = 1.0;
  for (std::size_t p = 0; p < dims(); ++p) v *= factors_[p].value(tau[p], factor_params(h, p));
  return v;
}

double ProductKernel::at_zero(const HyperParams& h) const {
  std::vector<double> zero(dims(), 0.0);
  return value(zero, h);
}

std::vector<Eigen::MatrixXd> ProductKernel::grams(const Grid& grid, const HyperParams& h) const {
  if (grid.dims() != dims()) throw ShapeError("grid dimension does not match kernel");
  std::vector<Eigen::MatrixXd> g;
  g.reserve(dims());
  for (std::size_t p = 0; p < dims(); ++p) g.push_back(factors_[p].gram(grid.axis(p), factor_params(h, p)));
  return g;
}

HyperParams pack_smp(const SMPKernel& kernel, double noise_var) {
  kernel.validate();
  const auto pk = ProductKernel::smp(kernel.dims(), kernel.components());
  Eigen::VectorXd raw(static_cast<Eigen::Index>(pk.num_params()));
  Eigen::Index k = 0;
  for (const auto& dim : kernel.per_dim) {
    for (const auto& c : dim.components) {
      raw[k++] = std::log(c.weight_sq);
      raw[k++] = std::log(std::max(c.mean_freq, kMinMeanFreq));
      raw[k++] = std::log(c.var_freq);
    }
  }
  return pk.make_hypers(std::move(raw), noise_var);
}

SMKernel1D unpack_sm(const FactorKernel& factor, std::span<const double> raw) {
  if (factor.family() != Family::spectral_mixture) throw ParameterError("not a spectral mixture factor");
  SMKernel1D k;
  for (std::size_t a = 0; a < factor.components(); ++a) {
    k.components.push_back({std::exp(raw[3 * a]), std::exp(raw[3 * a + 1]), std::exp(raw[3 * a + 2])});
  }
  return k;
}

SMPKernel unpack_smp(const ProductKernel& kernel, const HyperParams& h) {
  SMPKernel out;
  for (std::size_t p = 0; p < kernel.dims(); ++p) {
    out.per_dim.push_back(unpack_sm(kernel.factor(p), kernel.factor_params(h, p)));
  }
  return out;
}

nlohmann::json hypers_to_json(const ProductKernel& kernel, const HyperParams& h) {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < h.layout.size(); ++i) {
    const auto& r = h.layout[i];
    params.push_back({{"dim", r.dim},
                      {"component", r.component},
                      {"role", to_string(r.kind)},
                      {"raw", h.raw[static_cast<Eigen::Index>(i)]},
                      {"value", std::exp(h.raw[static_cast<Eigen::Index>(i)])}});
  }
  return {{"kernel", kernel.to_json()},
          {"params", params},
          {"noise_raw", h.noise_raw},
          {"noise_var", h.noise_var()}};
}

HyperParams hypers_from_json(const ProductKernel& kernel, const nlohmann::json& doc) {
  const auto& params = doc.at("params");
  if (params.size() != kernel.num_params()) throw InputError("hyperparameter count mismatch");
  Eigen::VectorXd raw(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    raw[static_cast<Eigen::Index>(i)] = params[i].at("raw").get<double>();
  }
  HyperParams h{std::move(raw), kernel.layout(), doc.at("noise_raw").get<double>()};
  return h;
}

bool operator==(const ProductKernel& a, const ProductKernel& b) { return a.to_json() == b.to_json(); }

}  // namespace gpatt

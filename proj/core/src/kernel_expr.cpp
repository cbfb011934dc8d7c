#include "gpatt/kernel_expr.hpp"

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"

namespace gpatt {

struct KernelExpr::Node {
  enum class Kind { se, matern32, rq, periodic, sm, sum, product } kind;
  double variance = 1.0;
  double lengthscale = 1.0;
  double alpha = 1.0;
  double omega = 1.0;
  SMKernel1D spectral;
  std::vector<KernelExpr> children;
};

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ParameterError(std::string(name) + " must be positive");
}

}  // namespace

KernelExpr KernelExpr::se(double lengthscale, double variance) {
  check_positive(lengthscale, "lengthscale");
  check_positive(variance, "variance");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::se;
  n->lengthscale = lengthscale;
  n->variance = variance;
  return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::matern32(double lengthscale, double variance) {
  check_positive(lengthscale, "lengthscale");
  check_positive(variance, "variance");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::matern32;
  n->lengthscale = lengthscale;
  n->variance = variance;
  return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::rq(double lengthscale, double alpha, double variance) {
  check_positive(lengthscale, "lengthscale");
  check_positive(alpha, "alpha");
  check_positive(variance, "variance");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::rq;
  n->lengthscale = lengthscale;
  n->alpha = alpha;
  n->variance = variance;
  return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::periodic(double omega, double lengthscale, double variance) {
  check_positive(omega, "omega");
  check_positive(lengthscale, "lengthscale");
  check_positive(variance, "variance");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::periodic;
  n->omega = omega;
  n->lengthscale = lengthscale;
  n->variance = variance;
  return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::sm(SMKernel1D kernel) {
  kernel.validate();
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::sm;
  n->spectral = std::move(kernel);
  return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::sum(std::vector<KernelExpr> children) {
  if (children.empty()) throw ParameterError("sum kernel needs children");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::sum;
  n->children = std::move(children);
  return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::product(std::vector<KernelExpr> children) {
  if (children.empty()) throw ParameterError("product kernel needs children");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::product;
  n->children = std::move(children);
  return KernelExpr(std::move(n));
}

double KernelExpr::operator()(double tau) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Node::Kind::se: return n.variance * k_se(tau, n.lengthscale);
    case Node::Kind::matern32: return n.variance * k_matern32(tau, n.lengthscale);
    case Node::Kind::rq: return n.variance * k_rq(tau, n.lengthscale, n.alpha);
    case Node::Kind::periodic: return n.variance * k_periodic(tau, n.omega, n.lengthscale);
    case Node::Kind::sm: return k_sm_1d(tau, n.spectral);
    case Node::Kind::sum: {
      double v = 0.0;
      for (const auto& c : n.children) v += c(tau);
      return v;
    }
    case Node::Kind::product: {
      double v = 1.0;
      for (const auto& c : n.children) v *= c(tau);
      return v;
    }
  }
  return 0.0;
}

KernelExpr KernelExpr::from_json(const nlohmann::json& doc) {
  const auto type = doc.at("type").get<std::string>();
  const double var = doc.value("variance", 1.0);
  if (type == "se") return se(doc.at("lengthscale").get<double>(), var);
  if (type == "matern32" || type == "ma") return matern32(doc.at("lengthscale").get<double>(), var);
  if (type == "rq") return rq(doc.at("lengthscale").get<double>(), doc.at("alpha").get<double>(), var);
  if (type == "periodic" || type == "per") {
    return periodic(doc.at("omega").get<double>(), doc.at("lengthscale").get<double>(), var);
  }
  if (type == "sm") {
    SMKernel1D k;
    for (const auto& c : doc.at("components")) {
      k.components.push_back({c.at("weight_sq").get<double>(), c.at("mean_freq").get<double>(),
                              c.at("var_freq").get<double>()});
    }
    return sm(std::move(k));
  }
  if (type == "sum" || type == "product") {
    std::vector<KernelExpr> children;
    for (const auto& c : doc.at("children")) children.push_back(from_json(c));
    return type == "sum" ? sum(std::move(children)) : product(std::move(children));
  }
  throw ParameterError("unknown kernel expression type '" + type + "'");
}

nlohmann::json KernelExpr::to_json() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Node::Kind::se: return {{"type", "se"}, {"lengthscale", n.lengthscale}, {"variance", n.variance}};
    case Node::Kind::matern32:
      return {{"type", "matern32"}, {"lengthscale", n.lengthscale}, {"variance", n.variance}};
    case Node::Kind::rq:
      return {{"type", "rq"}, {"lengthscale", n.lengthscale}, {"alpha", n.alpha}, {"variance", n.variance}};
    case Node::Kind::periodic:
      return {{"type", "periodic"}, {"omega", n.omega}, {"lengthscale", n.lengthscale}, {"variance", n.variance}};
    case Node::Kind::sm: {
      nlohmann::json comps = nlohmann::json::array();
      for (const auto& c : n.spectral.components) {
        comps.push_back({{"weight_sq", c.weight_sq}, {"mean_freq", c.mean_freq}, {"var_freq", c.var_freq}});
      }
      return {{"type", "sm"}, {"components", comps}};
    }
    case Node::Kind::sum:
    case Node::Kind::product: {
      nlohmann::json children = nlohmann::json::array();
      for (const auto& c : n.children) children.push_back(c.to_json());
      return {{"type", n.kind == Node::Kind::sum ? "sum" : "product"}, {"children", children}};
    }
  }
  return nullptr;
}

std::vector<KernelExpr> per_axis_kernels(const nlohmann::json& doc, std::size_t dims) {
  std::vector<KernelExpr> out;
  if (doc.value("type", "") == "grid_product") {
    for (const auto& f : doc.at("factors")) out.push_back(KernelExpr::from_json(f));
    if (out.size() != dims) throw ShapeError("grid_product factor count does not match grid dimension");
    return out;
  }
  out.assign(dims, KernelExpr::from_json(doc));
  return out;
}

}  // namespace gpatt

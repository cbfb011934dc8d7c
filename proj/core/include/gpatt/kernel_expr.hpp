#pragma once

#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gpatt/kernels.hpp"

namespace gpatt {

/// Immutable sum/product tree of one-dimensional stationary kernels.
///
/// Used for ground-truth generating kernels; not trainable. JSON form:
///   {"type":"se","lengthscale":2,"variance":1}
///   {"type":"matern32","lengthscale":2}
///   {"type":"rq","lengthscale":2,"alpha":1.5}
///   {"type":"periodic","omega":0.25,"lengthscale":1}
///   {"type":"sm","components":[{"weight_sq":1,"mean_freq":0.2,"var_freq":0.01}]}
///   {"type":"sum"|"product","children":[...]}
/// Leaves accept an optional "variance" multiplier (default 1).
class KernelExpr {
 public:
  static KernelExpr se(double lengthscale, double variance = 1.0);
  static KernelExpr matern32(double lengthscale, double variance = 1.0);
  static KernelExpr rq(double lengthscale, double alpha, double variance = 1.0);
  static KernelExpr periodic(double omega, double lengthscale, double variance = 1.0);
  static KernelExpr sm(SMKernel1D kernel);
  static KernelExpr sum(std::vector<KernelExpr> children);
  static KernelExpr product(std::vector<KernelExpr> children);

  static KernelExpr from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  double operator()(double tau) const;

 private:
  struct Node;
  explicit KernelExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Per-axis generating kernels. Accepts {"type":"grid_product","factors":[...]}
/// (one expression per axis) or a single expression replicated on every axis.
std::vector<KernelExpr> per_axis_kernels(const nlohmann::json& doc, std::size_t dims);

}  // namespace gpatt

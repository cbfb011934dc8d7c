#include "gpatt/kronecker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "gpatt/errors.hpp"

namespace gpatt {

namespace {

std::size_t product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_symmetric(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols()) throw ContractViolation("Kronecker factor is not square");
  if (!K.allFinite()) throw NumericalError("Kronecker factor has non-finite entries");
  const double scale = K.cwiseAbs().maxCoeff();
  const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) throw ContractViolation("Kronecker factor is not symmetric");
}

}  // namespace

Eigen::VectorXd kron_mvprod(std::span<const Eigen::MatrixXd> factors, const Eigen::VectorXd& u) {
  std::size_t n_total = 1;
  for (const auto& K : factors) {
    if (K.rows() != K.cols()) throw ShapeError("kron_mvprod factors must be square");
    n_total *= static_cast<std::size_t>(K.rows());
  }
  if (static_cast<std::size_t>(u.size()) != n_total) {
    throw ShapeError("kron_mvprod vector length does not match the operator");
  }
  const auto N = static_cast<Eigen::Index>(n_total);
  Eigen::VectorXd x = u;
  Eigen::VectorXd buf(N);
  // [K^p, U] = reshape((K^p U)^T, n, N / n), innermost factor first.
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
    const Eigen::Index n = it->rows();
    const Eigen::Index cols = N / n;
    Eigen::Map<const Eigen::MatrixXd> X(x.data(), n, cols);
    Eigen::Map<Eigen::MatrixXd> Y(buf.data(), cols, n);
    Y.noalias() = X.transpose() * it->transpose();
    x.swap(buf);
  }
  return x;
}

Eigen::VectorXd mode_product(std::span<const std::size_t> shape, std::size_t mode,
                             const Eigen::MatrixXd& A, const Eigen::VectorXd& x) {
  const std::size_t N = product(shape);
  if (static_cast<std::size_t>(x.size()) != N) throw ShapeError("mode_product vector length mismatch");
  const auto n = static_cast<Eigen::Index>(shape[mode]);
  if (A.rows() != n || A.cols() != n) throw ShapeError("mode_product matrix size mismatch");
  const auto inner = static_cast<Eigen::Index>(product(shape.subspan(mode + 1)));
  const auto outer = static_cast<Eigen::Index>(product(shape.subspan(0, mode)));

  Eigen::VectorXd out(static_cast<Eigen::Index>(N));
  if (inner == 1) {
    Eigen::Map<const Eigen::MatrixXd> X(x.data(), n, outer);
    Eigen::Map<Eigen::MatrixXd> Y(out.data(), n, outer);
    Y.noalias() = A * X;
    return out;
  }
  for (Eigen::Index r = 0; r < outer; ++r) {
    Eigen::Map<const Eigen::MatrixXd> X(x.data() + r * inner * n, inner, n);
    Eigen::Map<Eigen::MatrixXd> Y(out.data() + r * inner * n, inner, n);
    Y.noalias() = X * A.transpose();
  }
  return out;
}

Eigen::MatrixXd mode_contraction(std::span<const std::size_t> shape, std::size_t mode,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const std::size_t N = product(shape);
  if (static_cast<std::size_t>(x.size()) != N || static_cast<std::size_t>(y.size()) != N) {
    throw ShapeError("mode_contraction vector length mismatch");
  }
  const auto n = static_cast<Eigen::Index>(shape[mode]);
  const auto inner = static_cast<Eigen::Index>(product(shape.subspan(mode + 1)));
  const auto outer = static_cast<Eigen::Index>(product(shape.subspan(0, mode)));
  if (inner == 1) {
    Eigen::Map<const Eigen::MatrixXd> X(x.data(), n, outer);
    Eigen::Map<const Eigen::MatrixXd> Y(y.data(), n, outer);
    return X * Y.transpose();
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < outer; ++r) {
    Eigen::Map<const Eigen::MatrixXd> X(x.data() + r * inner * n, inner, n);
    Eigen::Map<const Eigen::MatrixXd> Y(y.data() + r * inner * n, inner, n);
    G.noalias() += X.transpose() * Y;
  }
  return G;
}

// ---------------------------------------------------------------------------

KroneckerOperator::KroneckerOperator(std::vector<Eigen::MatrixXd> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ShapeError("Kronecker operator needs at least one factor");
  for (const auto& K : factors_) {
    check_symmetric(K);
    shape_.push_back(static_cast<std::size_t>(K.rows()));
    size_ *= static_cast<std::size_t>(K.rows());
  }
}

KroneckerOperator KroneckerOperator::from_axis_factors(std::vector<Eigen::MatrixXd> by_axis) {
  std::reverse(by_axis.begin(), by_axis.end());
  return KroneckerOperator(std::move(by_axis));
}

Eigen::VectorXd KroneckerOperator::apply(const Eigen::VectorXd& u) const {
  return kron_mvprod(factors_, u);
}

Eigen::VectorXd KroneckerOperator::column(std::size_t j) const {
  if (j >= size_) throw BoundsError("column index out of range");
  // Decompose j into Kronecker multi-index, last factor fastest.
  std::vector<Eigen::Index> idx(factors_.size());
  for (std::size_t k = factors_.size(); k-- > 0;) {
    idx[k] = static_cast<Eigen::Index>(j % shape_[k]);
    j /= shape_[k];
  }
  Eigen::VectorXd col = factors_[0].col(idx[0]);
  for (std::size_t k = 1; k < factors_.size(); ++k) {
    const Eigen::VectorXd c = factors_[k].col(idx[k]);
    Eigen::VectorXd next(col.size() * c.size());
    for (Eigen::Index a = 0; a < col.size(); ++a) next.segment(a * c.size(), c.size()) = col[a] * c;
    col.swap(next);
  }
  return col;
}

double KroneckerOperator::diagonal(std::size_t j) const {
  if (j >= size_) throw BoundsError("diagonal index out of range");
  double v = 1.0;
  for (std::size_t k = factors_.size(); k-- > 0;) {
    const auto i = static_cast<Eigen::Index>(j % shape_[k]);
    v *= factors_[k](i, i);
    j /= shape_[k];
  }
  return v;
}

Eigen::MatrixXd KroneckerOperator::dense() const {
  Eigen::MatrixXd D = factors_[0];
  for (std::size_t k = 1; k < factors_.size(); ++k) {
    const auto& B = factors_[k];
    Eigen::MatrixXd next(D.rows() * B.rows(), D.cols() * B.cols());
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
      for (Eigen::Index j = 0; j < D.cols(); ++j) {
        next.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = D(i, j) * B;
      }
    }
    D.swap(next);
  }
  return D;
}

// ---------------------------------------------------------------------------

std::size_t EigenSystem::size() const {
  std::size_t n = 1;
  for (const auto& v : values) n *= static_cast<std::size_t>(v.size());
  return n;
}

std::vector<std::size_t> EigenSystem::shape() const {
  std::vector<std::size_t> s;
  for (const auto& v : values) s.push_back(static_cast<std::size_t>(v.size()));
  return s;
}

Eigen::VectorXd EigenSystem::merged() const {
  Eigen::VectorXd out = values.at(0);
  for (std::size_t k = 1; k < values.size(); ++k) {
    const auto& v = values[k];
    Eigen::VectorXd next(out.size() * v.size());
    for (Eigen::Index a = 0; a < out.size(); ++a) next.segment(a * v.size(), v.size()) = out[a] * v;
    out.swap(next);
  }
  return out;
}

namespace {

template <typename Visit>
void walk_lattice(const std::vector<Eigen::VectorXd>& values, std::size_t k, double partial, Visit& visit) {
  const auto& v = values[k];
  if (k + 1 == values.size()) {
    for (Eigen::Index i = 0; i < v.size(); ++i) visit(partial * v[i]);
    return;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) walk_lattice(values, k + 1, partial * v[i], visit);
}

}  // namespace

std::size_t EigenSystem::negative_count() const {
  std::size_t count = 0;
  auto visit = [&](double lambda) { count += lambda < 0.0 ? 1 : 0; };
  walk_lattice(values, 0, 1.0, visit);
  return count;
}

EigenSystem eigendecompose(const KroneckerOperator& op) {
  EigenSystem eig;
  for (const auto& K : op.factors()) {
    check_symmetric(K);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    eig.vectors.push_back(solver.eigenvectors());
    eig.values.push_back(solver.eigenvalues());
  }
  return eig;
}

Eigen::VectorXd apply_inverse_full_grid(const EigenSystem& eig, double noise_var, const Eigen::VectorXd& y) {
  if (!(noise_var > 0.0)) throw ParameterError("noise variance must be positive");
  std::vector<Eigen::MatrixXd> qt;
  qt.reserve(eig.vectors.size());
  for (const auto& Q : eig.vectors) qt.push_back(Q.transpose());
  Eigen::VectorXd w = kron_mvprod(qt, y);
  w.array() /= eig.merged().array().max(0.0) + noise_var;
  return kron_mvprod(eig.vectors, w);
}

double log_det_full_grid(const EigenSystem& eig, double noise_var) {
  if (!(noise_var > 0.0)) throw ParameterError("noise variance must be positive");
  double total = 0.0;
  auto visit = [&](double lambda) { total += std::log(std::max(lambda, 0.0) + noise_var); };
  walk_lattice(eig.values, 0, 1.0, visit);
  if (!std::isfinite(total)) throw NumericalError("log-determinant is not finite");
  return total;
}

TopEigenvalues top_eigenvalues(const EigenSystem& eig, std::size_t count, std::size_t enumeration_limit) {
  const std::size_t N = eig.size();
  if (count > N) throw ShapeError("cannot select more eigenvalues than the operator has");
  TopEigenvalues top;
  if (count == 0) return top;

  if (N <= enumeration_limit) {
    const Eigen::VectorXd all = eig.merged().cwiseMax(0.0);
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto greater = [&](std::size_t a, std::size_t b) {
      return all[static_cast<Eigen::Index>(a)] > all[static_cast<Eigen::Index>(b)] ||
             (all[static_cast<Eigen::Index>(a)] == all[static_cast<Eigen::Index>(b)] && a < b);
    };
    const auto cut = order.begin() + static_cast<std::ptrdiff_t>(count);
    std::nth_element(order.begin(), cut - 1, order.end(), greater);
    std::sort(order.begin(), cut, greater);
    order.resize(count);
    top.values.resize(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) top.values[static_cast<Eigen::Index>(i)] = all[static_cast<Eigen::Index>(order[i])];
    top.indices = std::move(order);
    return top;
  }

  // Best-first walk: factors sorted descending, so a tuple's parent (its last
  // non-zero coordinate decremented) never has a smaller product.
  const std::size_t P = eig.values.size();
  std::vector<std::vector<Eigen::Index>> perm(P);
  std::vector<std::vector<double>> sorted(P);
  std::vector<std::size_t> stride(P, 1);
  for (std::size_t k = P - 1; k-- > 0;) stride[k] = stride[k + 1] * static_cast<std::size_t>(eig.values[k + 1].size());
  for (std::size_t k = 0; k < P; ++k) {
    const auto& v = eig.values[k];
    perm[k].resize(static_cast<std::size_t>(v.size()));
    std::iota(perm[k].begin(), perm[k].end(), Eigen::Index{0});
    std::stable_sort(perm[k].begin(), perm[k].end(), [&](auto a, auto b) { return v[a] > v[b]; });
    for (auto i : perm[k]) sorted[k].push_back(std::max(v[i], 0.0));
  }

  struct Entry {
    double value;
    std::vector<std::uint32_t> pos;
    std::size_t last;  // index of the last non-zero coordinate, or 0
  };
  auto less = [](const Entry& a, const Entry& b) { return a.value < b.value; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(less)> queue(less);
  auto value_of = [&](const std::vector<std::uint32_t>& pos) {
    double v = 1.0;
    for (std::size_t k = 0; k < P; ++k) v *= sorted[k][pos[k]];
    return v;
  };
  std::vector<std::uint32_t> origin(P, 0);
  queue.push({value_of(origin), origin, 0});

  top.values.resize(static_cast<Eigen::Index>(count));
  top.indices.reserve(count);
  while (top.indices.size() < count) {
    Entry e = queue.top();
    queue.pop();
    std::size_t linear = 0;
    for (std::size_t k = 0; k < P; ++k) linear += static_cast<std::size_t>(perm[k][e.pos[k]]) * stride[k];
    top.values[static_cast<Eigen::Index>(top.indices.size())] = e.value;
    top.indices.push_back(linear);
    for (std::size_t k = e.last; k < P; ++k) {
      if (e.pos[k] + 1 >= sorted[k].size()) continue;
      auto child = e.pos;
      ++child[k];
      queue.push({value_of(child), std::move(child), k});
    }
  }
  return top;
}

}  // namespace gpatt

#pragma once

#include <Eigen/Dense>

#include <memory>
#include <mutex>

namespace adgamp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorCRef = Eigen::Ref<const Eigen::VectorXd>;

/// Measurement operator A (rows x cols) seen through the four products the
/// message-passing recursion needs. Real-valued: the adjoint is the transpose.
///
/// Implementations are immutable once built and may be shared between
/// concurrently running solvers.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;

  /// A x
  Vector apply(VectorCRef x) const;
  /// A^T s
  Vector adjoint(VectorCRef s) const;
  /// (|a_mn|^2) v, v >= 0
  Vector abs2_apply(VectorCRef v) const;
  /// (|a_mn|^2)^T w, w >= 0
  Vector abs2_adjoint(VectorCRef w) const;

 protected:
  // Inputs reaching these have already been size- and sign-checked.
  virtual Vector do_apply(VectorCRef x) const = 0;
  virtual Vector do_adjoint(VectorCRef s) const = 0;
  virtual Vector do_abs2_apply(VectorCRef v) const = 0;
  virtual Vector do_abs2_adjoint(VectorCRef w) const = 0;
};

/// Explicit dense matrix. The elementwise-squared matrix is built on the
/// first abs2 product and reused afterwards.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix a);

  DenseOperator(const DenseOperator&) = delete;
  DenseOperator& operator=(const DenseOperator&) = delete;

  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }

  const Matrix& matrix() const { return a_; }
  const Matrix& squared() const;

 protected:
  Vector do_apply(VectorCRef x) const override;
  Vector do_adjoint(VectorCRef s) const override;
  Vector do_abs2_apply(VectorCRef v) const override;
  Vector do_abs2_adjoint(VectorCRef w) const override;

 private:
  Matrix a_;
  mutable Matrix a2_;
  mutable std::once_flag a2_once_;
};

std::shared_ptr<const DenseOperator> make_dense(Matrix a);

}  // namespace adgamp

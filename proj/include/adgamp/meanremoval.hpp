#pragma once

// Mean removal: rewrite z = A x as the (M+2) x (N+2) system
//
//   [ z ]   [ Ã          b12 γ     b13 1  ] [ x   ]
//   [ 0 ] = [ b21 1ᵀ    -b21 b12   0      ] [ x_a ]
//   [ 0 ]   [ b31 cᵀ     0        -b31 b13] [ x_b ]
//
// whose rows and columns are close to zero-mean, with Dirac likelihoods on the
// two extra rows and improper uniform priors on the two extra columns.

#include <memory>
#include <vector>

#include "adgamp/channels.hpp"
#include "adgamp/engine.hpp"
#include "adgamp/linop.hpp"

namespace adgamp {

struct MeanRemovalScales {
  double b12, b13, b21, b31;
};

/// Composite operator for the augmented matrix. Applies Ã through its own
/// operator and the rank-one blocks analytically; never materializes Ā.
class MeanRemovedOperator final : public LinearOperator {
 public:
  MeanRemovedOperator(std::shared_ptr<const LinearOperator> centered, Vector row_means,
                      Vector col_means, MeanRemovalScales scales);

  Eigen::Index rows() const override { return centered_->rows() + 2; }
  Eigen::Index cols() const override { return centered_->cols() + 2; }

  /// Explicit (M+2) x (N+2) matrix, for tests and diagnostics.
  Matrix assemble() const;

 protected:
  Vector do_apply(VectorCRef x) const override;
  Vector do_adjoint(VectorCRef s) const override;
  Vector do_abs2_apply(VectorCRef v) const override;
  Vector do_abs2_adjoint(VectorCRef w) const override;

 private:
  std::shared_ptr<const LinearOperator> centered_;
  Vector gamma_;
  Vector c_;
  Vector gamma2_;
  Vector c2_;
  double c2_sum_;
  MeanRemovalScales b_;
};

struct MeanRemovalDecomposition {
  double mu = 0.0;
  Vector gamma;     // row means, length M
  Vector c;         // column means of A - mu 11ᵀ, length N
  Matrix centered;  // Ã
  MeanRemovalScales scales{};
  std::shared_ptr<const MeanRemovedOperator> augmented_op;
};

MeanRemovalDecomposition decompose(const Matrix& a);

struct AugmentedChannels {
  std::vector<InputChannel> in;
  std::vector<OutputChannel> out;
};
AugmentedChannels augment_channels(std::vector<InputChannel> in, std::vector<OutputChannel> out);

struct ExtractedSolution {
  Vector x_hat;
  double x_sum;  // x_{N+1}
  double x_col;  // x_{N+2}
  double sum_residual;  // |x_{N+1} - 1ᵀx̂ / b12|
  double col_residual;  // |x_{N+2} - cᵀx̂ / b13|
};
ExtractedSolution extract_solution(const MeanRemovalDecomposition& d, const Vector& x_aug);

/// Mean-removed solve: augment, run, and strip the two auxiliary unknowns from
/// the returned estimates. The damping configuration is used unchanged.
struct MeanRemovedReport {
  SolveReport solve;  // x_hat, nu_x, r_hat, nu_r truncated to N; p_hat, nu_p to M
  ExtractedSolution extracted;
};
MeanRemovedReport solve_mean_removed(const Matrix& a, std::vector<InputChannel> in,
                                     std::vector<OutputChannel> out, SolverOptions options,
                                     const Vector* truth = nullptr);

}  // namespace adgamp

#include "adgamp/meanremoval.hpp"

#include <cmath>
#include <stdexcept>

namespace adgamp {

MeanRemovedOperator::MeanRemovedOperator(std::shared_ptr<const LinearOperator> centered,
                                         Vector row_means, Vector col_means,
                                         MeanRemovalScales scales)
    : centered_(std::move(centered)),
      gamma_(std::move(row_means)),
      c_(std::move(col_means)),
      b_(scales) {
  if (!centered_) throw std::invalid_argument("MeanRemovedOperator: null operator");
  if (gamma_.size() != centered_->rows() || c_.size() != centered_->cols()) {
    throw std::invalid_argument("MeanRemovedOperator: mean vector sizes do not match operator");
  }
  gamma2_ = gamma_.cwiseAbs2();
  c2_ = c_.cwiseAbs2();
  c2_sum_ = c2_.sum();
}

Vector MeanRemovedOperator::do_apply(VectorCRef x) const {
  const auto m = centered_->rows();
  const auto n = centered_->cols();
  const auto head = x.head(n);
  const double xa = x[n];
  const double xb = x[n + 1];

  Vector z(m + 2);
  z.head(m) = centered_->apply(head) + (b_.b12 * xa) * gamma_ + Vector::Constant(m, b_.b13 * xb);
  z[m] = b_.b21 * (head.sum() - b_.b12 * xa);
  z[m + 1] = b_.b31 * (c_.dot(head) - b_.b13 * xb);
  return z;
}

Vector MeanRemovedOperator::do_adjoint(VectorCRef s) const {
  const auto m = centered_->rows();
  const auto n = centered_->cols();
  const auto head = s.head(m);
  const double sa = s[m];
  const double sb = s[m + 1];

  Vector x(n + 2);
  x.head(n) = centered_->adjoint(head) + Vector::Constant(n, b_.b21 * sa) + (b_.b31 * sb) * c_;
  x[n] = b_.b12 * (gamma_.dot(head) - b_.b21 * sa);
  x[n + 1] = b_.b13 * (head.sum() - b_.b31 * sb);
  return x;
}

Vector MeanRemovedOperator::do_abs2_apply(VectorCRef v) const {
  const auto m = centered_->rows();
  const auto n = centered_->cols();
  const auto head = v.head(n);
  const double va = v[n];
  const double vb = v[n + 1];
  const double b12s = b_.b12 * b_.b12;
  const double b13s = b_.b13 * b_.b13;
  const double b21s = b_.b21 * b_.b21;
  const double b31s = b_.b31 * b_.b31;

  Vector z(m + 2);
  z.head(m) = centered_->abs2_apply(head) + (b12s * va) * gamma2_ + Vector::Constant(m, b13s * vb);
  z[m] = b21s * (head.sum() + b12s * va);
  z[m + 1] = b31s * (c2_.dot(head) + b13s * vb);
  return z;
}

Vector MeanRemovedOperator::do_abs2_adjoint(VectorCRef w) const {
  const auto m = centered_->rows();
  const auto n = centered_->cols();
  const auto head = w.head(m);
  const double wa = w[m];
  const double wb = w[m + 1];
  const double b12s = b_.b12 * b_.b12;
  const double b13s = b_.b13 * b_.b13;
  const double b21s = b_.b21 * b_.b21;
  const double b31s = b_.b31 * b_.b31;

  Vector x(n + 2);
  x.head(n) = centered_->abs2_adjoint(head) + Vector::Constant(n, b21s * wa) + (b31s * wb) * c2_;
  x[n] = b12s * (gamma2_.dot(head) + b21s * wa);
  x[n + 1] = b13s * (head.sum() + b31s * wb);
  return x;
}

Matrix MeanRemovedOperator::assemble() const {
  const auto m = centered_->rows();
  const auto n = centered_->cols();
  Matrix full = Matrix::Zero(m + 2, n + 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    full.col(j).head(m) = centered_->apply(Vector::Unit(n, j));
  }
  full.col(n).head(m) = b_.b12 * gamma_;
  full.col(n + 1).head(m).setConstant(b_.b13);
  full.row(m).head(n).setConstant(b_.b21);
  full(m, n) = -b_.b21 * b_.b12;
  full.row(m + 1).head(n) = b_.b31 * c_.transpose();
  full(m + 1, n + 1) = -b_.b31 * b_.b13;
  return full;
}

MeanRemovalDecomposition decompose(const Matrix& a) {
  const auto m = a.rows();
  const auto n = a.cols();
  if (m < 1 || n < 1) throw std::invalid_argument("decompose: matrix must be non-empty");
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);

  MeanRemovalDecomposition d;
  d.mu = a.sum() / (md * nd);
  d.gamma = a.rowwise().sum() / nd;
  d.c = (a.colwise().sum().transpose() / md).array() - d.mu;
  d.centered = a - d.gamma * Vector::Ones(n).transpose() - Vector::Ones(m) * d.c.transpose();

  // Equalize the mean-square entry of each added row/column with that of Ã.
  // An all-zero Ã (A is exactly a rank-one mean pattern) falls back to the
  // scale of A so the extra rows and columns stay usable.
  double fro = d.centered.norm();
  if (fro == 0.0) fro = a.norm();
  if (fro == 0.0) fro = 1.0;
  const double flat = fro / std::sqrt(md * nd);
  const double gamma_norm = d.gamma.norm();
  const double c_norm = d.c.norm();
  d.scales.b12 = gamma_norm > 0.0 ? fro / (std::sqrt(nd) * gamma_norm) : flat;
  d.scales.b13 = flat;
  d.scales.b21 = flat;
  d.scales.b31 = c_norm > 0.0 ? fro / (std::sqrt(md) * c_norm) : flat;

  d.augmented_op =
      std::make_shared<const MeanRemovedOperator>(make_dense(d.centered), d.gamma, d.c, d.scales);
  return d;
}

AugmentedChannels augment_channels(std::vector<InputChannel> in, std::vector<OutputChannel> out) {
  in.push_back(InputChannel::improper_uniform());
  in.push_back(InputChannel::improper_uniform());
  out.push_back(OutputChannel::dirac_zero());
  out.push_back(OutputChannel::dirac_zero());
  return {std::move(in), std::move(out)};
}

ExtractedSolution extract_solution(const MeanRemovalDecomposition& d, const Vector& x_aug) {
  const auto n = d.c.size();
  if (x_aug.size() != n + 2) throw std::invalid_argument("extract_solution: expected length N+2");
  ExtractedSolution e;
  e.x_hat = x_aug.head(n);
  e.x_sum = x_aug[n];
  e.x_col = x_aug[n + 1];
  e.sum_residual = std::abs(e.x_sum - e.x_hat.sum() / d.scales.b12);
  e.col_residual = std::abs(e.x_col - d.c.dot(e.x_hat) / d.scales.b13);
  return e;
}

MeanRemovedReport solve_mean_removed(const Matrix& a, std::vector<InputChannel> in,
                                     std::vector<OutputChannel> out, SolverOptions options,
                                     const Vector* truth) {
  const MeanRemovalDecomposition d = decompose(a);
  auto aug = augment_channels(std::move(in), std::move(out));

  Vector truth_aug;
  if (truth) {
    truth_aug.resize(truth->size() + 2);
    truth_aug << *truth, truth->sum() / d.scales.b12, d.c.dot(*truth) / d.scales.b13;
  }

  const AdGamp solver(d.augmented_op, std::move(aug.in), std::move(aug.out), std::move(options));
  SolveReport rep = solver.run(truth ? &truth_aug : nullptr);

  MeanRemovedReport out_rep;
  out_rep.extracted = extract_solution(d, rep.x_hat);
  const auto n = a.cols();
  const auto m = a.rows();
  rep.x_hat.conservativeResize(n);
  rep.nu_x.conservativeResize(n);
  rep.r_hat.conservativeResize(n);
  rep.nu_r.conservativeResize(n);
  rep.p_hat.conservativeResize(m);
  rep.nu_p.conservativeResize(m);
  out_rep.solve = std::move(rep);
  return out_rep;
}

}  // namespace adgamp

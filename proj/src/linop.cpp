#include "adgamp/linop.hpp"

#include <stdexcept>
#include <string>

namespace adgamp {

namespace {

void check_length(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
  }
}

void check_nonnegative(VectorCRef v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    // NaN also fails this test.
    if (!(v[i] >= 0.0)) {
      throw std::invalid_argument(std::string(what) + ": negative or NaN entry at index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

Vector LinearOperator::apply(VectorCRef x) const {
  check_length(x.size(), cols(), "apply");
  return do_apply(x);
}

Vector LinearOperator::adjoint(VectorCRef s) const {
  check_length(s.size(), rows(), "adjoint");
  return do_adjoint(s);
}

Vector LinearOperator::abs2_apply(VectorCRef v) const {
  check_length(v.size(), cols(), "abs2_apply");
  check_nonnegative(v, "abs2_apply");
  return do_abs2_apply(v);
}

Vector LinearOperator::abs2_adjoint(VectorCRef w) const {
  check_length(w.size(), rows(), "abs2_adjoint");
  check_nonnegative(w, "abs2_adjoint");
  return do_abs2_adjoint(w);
}

DenseOperator::DenseOperator(Matrix a) : a_(std::move(a)) {}

const Matrix& DenseOperator::squared() const {
  std::call_once(a2_once_, [this] { a2_ = a_.cwiseAbs2(); });
  return a2_;
}

Vector DenseOperator::do_apply(VectorCRef x) const { return a_ * x; }

Vector DenseOperator::do_adjoint(VectorCRef s) const { return a_.transpose() * s; }

Vector DenseOperator::do_abs2_apply(VectorCRef v) const { return squared() * v; }

Vector DenseOperator::do_abs2_adjoint(VectorCRef w) const { return squared().transpose() * w; }

std::shared_ptr<const DenseOperator> make_dense(Matrix a) {
  return std::make_shared<const DenseOperator>(std::move(a));
}

}  // namespace adgamp

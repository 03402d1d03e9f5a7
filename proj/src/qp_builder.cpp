#include "drjcc/qp_builder.hpp"

#include <cmath>
#include <limits>

namespace drjcc::qp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int Builder::add_vars(const std::string& name, int count) {
  if (count < 0) throw std::invalid_argument("builder: negative variable count");
  if (vars_.count(name))
    throw std::invalid_argument("builder: duplicate variable name '" + name + "'");
  const int offset = n_;
  vars_[name] = {offset, count};
  n_ += count;
  return offset;
}

void Builder::add_quadratic(int i, double coeff) { add_quadratic(i, i, coeff); }

void Builder::add_quadratic(int i, int j, double coeff) {
  if (coeff == 0.0) return;
  if (i == j) {
    p_trips_.emplace_back(i, i, 2.0 * coeff);
  } else {
    p_trips_.emplace_back(i, j, coeff);
    p_trips_.emplace_back(j, i, coeff);
  }
}

void Builder::add_linear(int i, double coeff) {
  if (coeff != 0.0) q_terms_.push_back({i, coeff});
}

void Builder::add_linear(const Affine& expr, double scale) {
  for (const auto& [i, c] : expr.terms) add_linear(i, scale * c);
  constant_ += scale * expr.constant;
}

void Builder::add_constant(double c) { constant_ += c; }

void Builder::add_eq(const Affine& expr, double rhs) {
  const int row = eq_count();
  for (const auto& [i, c] : expr.terms)
    if (c != 0.0) eq_trips_.emplace_back(row, i, c);
  b_eq_.push_back(rhs - expr.constant);
}

void Builder::add_ineq(const Affine& expr, double rhs) {
  const int row = ineq_count();
  for (const auto& [i, c] : expr.terms)
    if (c != 0.0) in_trips_.emplace_back(row, i, c);
  b_in_.push_back(rhs - expr.constant);
}

void Builder::add_bounds(int i, double lo, double hi) {
  if (lo > hi)
    throw ValidationError("builder: infeasible bound (lo > hi) on variable " +
                          std::to_string(i));
  if (hi < kInf) add_ineq(Affine::variable(i), hi);
  if (lo > -kInf) add_ineq(Affine::variable(i, -1.0), -lo);
}

StandardQP Builder::build() const {
  StandardQP qp;
  qp.n = n_;
  qp.P = SpMat(n_, n_);
  qp.P.setFromTriplets(p_trips_.begin(), p_trips_.end());
  qp.q = Vec::Zero(n_);
  for (const auto& [i, c] : q_terms_) qp.q[i] += c;
  qp.constant = constant_;
  qp.A_eq = SpMat(eq_count(), n_);
  qp.A_eq.setFromTriplets(eq_trips_.begin(), eq_trips_.end());
  qp.b_eq = Eigen::Map<const Vec>(b_eq_.data(), b_eq_.size());
  qp.A_in = SpMat(ineq_count(), n_);
  qp.A_in.setFromTriplets(in_trips_.begin(), in_trips_.end());
  qp.b_in = Eigen::Map<const Vec>(b_in_.data(), b_in_.size());
  qp.vars = vars_;
  return qp;
}

}  // namespace drjcc::qp

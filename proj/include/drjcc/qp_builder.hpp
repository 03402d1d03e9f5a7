#pragma once

#include <string>
#include <vector>

#include "drjcc/qp.hpp"

namespace drjcc::qp {

/// Sparse affine expression sum(coeff_i * x_i) + constant. Builders express
/// model quantities this way so the same code paths handle both decision
/// variables and fixed numeric data.
struct Affine {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  Affine() = default;
  explicit Affine(double c) : constant(c) {}
  static Affine variable(int index, double coeff = 1.0) {
    Affine a;
    a.terms.push_back({index, coeff});
    return a;
  }

  Affine& add(int index, double coeff) {
    if (coeff != 0.0) terms.push_back({index, coeff});
    return *this;
  }
  Affine& add(const Affine& other, double scale = 1.0) {
    for (const auto& [i, c] : other.terms)
      if (scale * c != 0.0) terms.push_back({i, scale * c});
    constant += scale * other.constant;
    return *this;
  }
  bool is_constant() const { return terms.empty(); }

  Affine operator*(double s) const {
    Affine a;
    a.constant = constant * s;
    for (const auto& [i, c] : terms) a.terms.push_back({i, c * s});
    return a;
  }
};

class Builder {
 public:
  /// Registers `count` contiguous variables under `name`; returns the offset.
  int add_vars(const std::string& name, int count);
  int num_vars() const { return n_; }

  // Objective accumulation: 1/2 x'Px + q'x + constant, with add_quadratic
  // contributing coeff * x_i * x_j.
  void add_quadratic(int i, double coeff);
  void add_quadratic(int i, int j, double coeff);
  void add_linear(int i, double coeff);
  void add_linear(const Affine& expr, double scale = 1.0);
  void add_constant(double c);

  void add_eq(const Affine& expr, double rhs);    // expr == rhs
  void add_ineq(const Affine& expr, double rhs);  // expr <= rhs
  /// Two-sided bound lo <= x_i <= hi; infinite sides are skipped.
  void add_bounds(int i, double lo, double hi);

  int eq_count() const { return static_cast<int>(b_eq_.size()); }
  int ineq_count() const { return static_cast<int>(b_in_.size()); }

  StandardQP build() const;

 private:
  int n_ = 0;
  std::map<std::string, std::pair<int, int>> vars_;
  std::vector<Eigen::Triplet<double>> p_trips_;
  std::vector<std::pair<int, double>> q_terms_;
  double constant_ = 0.0;
  std::vector<Eigen::Triplet<double>> eq_trips_;
  std::vector<double> b_eq_;
  std::vector<Eigen::Triplet<double>> in_trips_;
  std::vector<double> b_in_;
};

}  // namespace drjcc::qp

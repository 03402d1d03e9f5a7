#pragma once

#include <Eigen/Sparse>

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "drjcc/types.hpp"

namespace drjcc::qp {

using SpMat = Eigen::SparseMatrix<double>;

/// Solver-agnostic convex quadratic program:
///   min 1/2 x'P x + q'x + constant
///   s.t. A_eq x = b_eq, A_in x <= b_in.
struct StandardQP {
  int n = 0;
  SpMat P;  // n x n symmetric positive semidefinite
  Vec q;
  double constant = 0.0;
  SpMat A_eq;
  Vec b_eq;
  SpMat A_in;
  Vec b_in;
  std::map<std::string, std::pair<int, int>> vars;  // name -> (offset, size)

  int eq_count() const { return static_cast<int>(b_eq.size()); }
  int ineq_count() const { return static_cast<int>(b_in.size()); }
  Vec segment_of(const Vec& x, const std::string& name) const;

  /// Throws std::invalid_argument on inconsistent dimensions, an asymmetric
  /// quadratic, or indefiniteness beyond 1e-9.
  void validate() const;
};

struct KktResiduals {
  double stationarity = 0;
  double primal = 0;
  double dual = 0;
  double complementarity = 0;
  double max() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };
std::string to_string(SolveStatus s);

struct QpSolution {
  Vec x;
  Vec eq_duals;
  Vec in_duals;
  double objective = 0;
  SolveStatus status = SolveStatus::MaxIter;
  KktResiduals kkt;
  int iterations = 0;
};

/// stationarity = ||Px + q + A_eq'y + A_in'z||_inf, primal = worst violation,
/// dual = max(0, -min z), complementarity = max |z_i (A_in x - b_in)_i|.
KktResiduals kkt_residuals(const StandardQP& qp, const Vec& x, const Vec& eq_duals,
                           const Vec& in_duals);

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 200000;
};

/// Operator-splitting solver with a persistent factorization. The constraint
/// structure is fixed at construction; the linear cost may be swapped between
/// solves, and each solve warm-starts from the previous one.
class Workspace {
 public:
  explicit Workspace(const StandardQP& qp);
  ~Workspace();
  Workspace(Workspace&&) noexcept;
  Workspace& operator=(Workspace&&) noexcept;

  void update_linear_cost(const Vec& q, double constant);
  QpSolution solve(const SolveOptions& opts = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot solve. Status Optimal guarantees every KKT residual <= tol.
QpSolution solve_qp(const StandardQP& qp, double tol = 1e-8, int max_iter = 200000);

/// Sparse-triplet text dump for external cross-checking, and its reader.
void dump_qp(const StandardQP& qp, std::ostream& out);
StandardQP parse_qp_dump(std::istream& in);

}  // namespace drjcc::qp

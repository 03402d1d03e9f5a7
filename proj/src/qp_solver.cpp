#include "drjcc/qp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <vector>

#include "drjcc/io_util.hpp"

namespace drjcc::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlpha = 1.6;       // over-relaxation
constexpr double kEpsCert = 1e-8;    // certificate residual tolerance
constexpr int kRuizIters = 10;
constexpr int kCheckEvery = 10;
constexpr int kRhoEvery = 50;
constexpr double kRhoEqFactor = 1e3;

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIter: return "max_iter";
  }
  return "max_iter";
}

Vec StandardQP::segment_of(const Vec& x, const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end())
    throw std::invalid_argument("StandardQP: unknown variable '" + name + "'");
  return x.segment(it->second.first, it->second.second);
}

void StandardQP::validate() const {
  if (n < 1) throw std::invalid_argument("StandardQP: empty variable space");
  if (P.rows() != n || P.cols() != n)
    throw std::invalid_argument("StandardQP: P must be n x n");
  if (q.size() != n) throw std::invalid_argument("StandardQP: q must have length n");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
    throw std::invalid_argument("StandardQP: A_eq/b_eq dimensions inconsistent");
  if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != n))
    throw std::invalid_argument("StandardQP: A_in/b_in dimensions inconsistent");

  const double scale = std::max(1.0, Mat(P).cwiseAbs().maxCoeff());
  SpMat Pt = SpMat(P.transpose());
  SpMat diff = P - Pt;
  if (Mat(diff).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("StandardQP: quadratic matrix is asymmetric");

  bool diagonal_only = true;
  for (int k = 0; k < P.outerSize(); ++k)
    for (SpMat::InnerIterator it(P, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) diagonal_only = false;
  if (diagonal_only) {
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator it(P, k); it; ++it)
        if (it.value() < -1e-9 * scale)
          throw std::invalid_argument("StandardQP: quadratic matrix is indefinite");
  } else if (n <= 512) {
    const Mat dense(P);
    Eigen::SelfAdjointEigenSolver<Mat> eig(dense);
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale)
      throw std::invalid_argument("StandardQP: quadratic matrix is indefinite");
  } else {
    for (int i = 0; i < n; ++i)
      if (P.coeff(i, i) < -1e-9 * scale)
        throw std::invalid_argument("StandardQP: quadratic matrix is indefinite");
  }
}

KktResiduals kkt_residuals(const StandardQP& qp, const Vec& x, const Vec& eq_duals,
                           const Vec& in_duals) {
  if (x.size() != qp.n || eq_duals.size() != qp.eq_count() ||
      in_duals.size() != qp.ineq_count())
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  KktResiduals r;
  Vec stat = qp.P * x + qp.q;
  if (qp.eq_count()) stat += qp.A_eq.transpose() * eq_duals;
  if (qp.ineq_count()) stat += qp.A_in.transpose() * in_duals;
  r.stationarity = inf_norm(stat);
  double prim = 0.0;
  if (qp.eq_count()) prim = inf_norm(qp.A_eq * x - qp.b_eq);
  if (qp.ineq_count()) {
    Vec viol = qp.A_in * x - qp.b_in;
    prim = std::max(prim, viol.maxCoeff());
    r.dual = std::max(0.0, -in_duals.minCoeff());
    r.complementarity = viol.cwiseProduct(in_duals).cwiseAbs().maxCoeff();
  }
  r.primal = std::max(0.0, prim);
  return r;
}

struct Workspace::Impl {
  StandardQP qp;
  int n = 0, me = 0, mi = 0, m = 0;
  SpMat A;  // stacked [A_eq; A_in]
  Vec l, u;

  // Frozen scalings.
  Vec D, E;
  double cost_scale = 1.0;
  SpMat Ps, As;
  Vec qs, ls, us;

  double sigma = 1e-6;
  // Proximal term pinning the x-block between rounds; keeps flat directions
  // (epigraph variables whose objective weight can be zero) from drifting.
  // The recentering makes the fixed point exact for the original problem.
  double prox = 1e-4;
  Vec x_center;
  double rho_bar = 0.1;
  Vec rho;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;

  // Scaled iterates, kept across solves for warm starting.
  Vec xh, zh, yh;
  int total_iters = 0;

  explicit Impl(const StandardQP& problem) : qp(problem) {
    qp.validate();
    n = qp.n;
    me = qp.eq_count();
    mi = qp.ineq_count();
    m = me + mi;

    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < qp.A_eq.outerSize(); ++k)
      for (SpMat::InnerIterator it(qp.A_eq, k); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    for (int k = 0; k < qp.A_in.outerSize(); ++k)
      for (SpMat::InnerIterator it(qp.A_in, k); it; ++it)
        trips.emplace_back(me + static_cast<int>(it.row()),
                           static_cast<int>(it.col()), it.value());
    A = SpMat(m, n);
    A.setFromTriplets(trips.begin(), trips.end());
    l = Vec(m);
    u = Vec(m);
    l.head(me) = qp.b_eq;
    u.head(me) = qp.b_eq;
    l.tail(mi).setConstant(-kInf);
    u.tail(mi) = qp.b_in;

    equilibrate();
    xh = Vec::Zero(n);
    zh = Vec::Zero(m);
    yh = Vec::Zero(m);
    x_center = Vec::Zero(n);
    rho = Vec(m);
    set_rho(rho_bar);
    factorize();
  }

  void equilibrate() {
    D = Vec::Ones(n);
    E = Vec::Ones(m);
    Ps = qp.P;
    As = A;
    qs = qp.q;
    for (int pass = 0; pass < kRuizIters; ++pass) {
      Vec col_norm = Vec::Zero(n);
      for (int k = 0; k < Ps.outerSize(); ++k)
        for (SpMat::InnerIterator it(Ps, k); it; ++it)
          col_norm[it.col()] = std::max(col_norm[it.col()], std::abs(it.value()));
      Vec row_norm = Vec::Zero(m);
      for (int k = 0; k < As.outerSize(); ++k)
        for (SpMat::InnerIterator it(As, k); it; ++it) {
          col_norm[it.col()] = std::max(col_norm[it.col()], std::abs(it.value()));
          row_norm[it.row()] = std::max(row_norm[it.row()], std::abs(it.value()));
        }
      Vec dd(n), de(m);
      for (int j = 0; j < n; ++j)
        dd[j] = col_norm[j] > 1e-12 ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
      for (int i = 0; i < m; ++i)
        de[i] = row_norm[i] > 1e-12 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
      Ps = SpMat(dd.asDiagonal()) * Ps * SpMat(dd.asDiagonal());
      As = SpMat(de.asDiagonal()) * As * SpMat(dd.asDiagonal());
      qs = qs.cwiseProduct(dd);
      D = D.cwiseProduct(dd);
      E = E.cwiseProduct(de);
    }
    double p_col_mean = 0.0;
    {
      Vec col_norm = Vec::Zero(n);
      for (int k = 0; k < Ps.outerSize(); ++k)
        for (SpMat::InnerIterator it(Ps, k); it; ++it)
          col_norm[it.col()] = std::max(col_norm[it.col()], std::abs(it.value()));
      p_col_mean = col_norm.mean();
    }
    const double denom = std::max(p_col_mean, inf_norm(qs));
    cost_scale = denom > 1e-12 ? 1.0 / denom : 1.0;
    cost_scale = std::clamp(cost_scale, 1e-6, 1e6);
    Ps = Ps * cost_scale;
    qs = qs * cost_scale;
    ls = E.cwiseProduct(l);
    us = Vec(m);
    for (int i = 0; i < m; ++i) us[i] = u[i] == kInf ? kInf : E[i] * u[i];
    for (int i = 0; i < m; ++i)
      if (l[i] == -kInf) ls[i] = -kInf;
  }

  void set_rho(double value) {
    rho_bar = value;
    for (int i = 0; i < m; ++i)
      rho[i] = i < me ? rho_bar * kRhoEqFactor : rho_bar;
  }

  void factorize() {
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < Ps.outerSize(); ++k)
      for (SpMat::InnerIterator it(Ps, k); it; ++it)
        if (it.row() >= it.col())
          trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                             it.value());
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, sigma + prox);
    for (int k = 0; k < As.outerSize(); ++k)
      for (SpMat::InnerIterator it(As, k); it; ++it)
        trips.emplace_back(n + static_cast<int>(it.row()),
                           static_cast<int>(it.col()), it.value());
    for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho[i]);
    SpMat K(n + m, n + m);
    K.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed) {
      ldlt.analyzePattern(K);
      analyzed = true;
    }
    ldlt.factorize(K);
    if (ldlt.info() != Eigen::Success) {
      // Retry with heavier regularization; quasi-definiteness can be lost to
      // cancellation on extreme data.
      sigma *= 100.0;
      if (sigma > 1.0) throw NumericError("qp: KKT factorization failed");
      factorize();
    }
  }

  void update_linear_cost(const Vec& q_new, double constant) {
    if (q_new.size() != n)
      throw std::invalid_argument("update_linear_cost: wrong length");
    qp.q = q_new;
    qp.constant = constant;
    qs = cost_scale * D.cwiseProduct(q_new);
  }

  struct Candidate {
    Vec x, y_eq, z_in;
    KktResiduals kkt;
    bool valid = false;
  };

  Candidate extract() const {
    Candidate c;
    c.x = D.cwiseProduct(xh);
    Vec y = E.cwiseProduct(yh) / cost_scale;
    c.y_eq = y.head(me);
    c.z_in = y.tail(mi).cwiseMax(0.0);
    c.kkt = kkt_residuals(qp, c.x, c.y_eq, c.z_in);
    c.valid = true;
    return c;
  }

  Candidate polish() const {
    std::vector<int> active;  // rows of As
    for (int i = 0; i < me; ++i) active.push_back(i);
    for (int i = me; i < m; ++i)
      if (yh[i] > 1e-12) active.push_back(i);
    const int ma = static_cast<int>(active.size());

    std::vector<Eigen::Triplet<double>> trips0;
    for (int k = 0; k < Ps.outerSize(); ++k)
      for (SpMat::InnerIterator it(Ps, k); it; ++it)
        if (it.row() >= it.col())
          trips0.emplace_back(static_cast<int>(it.row()),
                              static_cast<int>(it.col()), it.value());
    // As is column-major; gather active rows by iterating all entries once.
    for (int k = 0; k < As.outerSize(); ++k)
      for (SpMat::InnerIterator it(As, k); it; ++it) {
        auto pos = std::lower_bound(active.begin(), active.end(),
                                    static_cast<int>(it.row()));
        if (pos != active.end() && *pos == static_cast<int>(it.row())) {
          const int r = static_cast<int>(pos - active.begin());
          trips0.emplace_back(n + r, static_cast<int>(it.col()), it.value());
        }
      }

    Candidate c;
    SpMat K0(n + ma, n + ma);
    K0.setFromTriplets(trips0.begin(), trips0.end());
    Eigen::SimplicialLDLT<SpMat> fact;
    double delta = 1e-6;
    for (;; delta *= 100.0) {
      if (delta > 1e-2) return c;
      auto trips = trips0;
      for (int j = 0; j < n; ++j) trips.emplace_back(j, j, delta);
      for (int r = 0; r < ma; ++r) trips.emplace_back(n + r, n + r, -delta);
      SpMat K(n + ma, n + ma);
      K.setFromTriplets(trips.begin(), trips.end());
      fact.compute(K);
      if (fact.info() == Eigen::Success) break;
    }

    Vec rhs(n + ma);
    rhs.head(n) = -qs;
    for (int r = 0; r < ma; ++r) rhs[n + r] = us[active[r]];

    SpMat K0full = SpMat(K0.selfadjointView<Eigen::Lower>());
    Vec sol = fact.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      Vec resid = rhs - K0full * sol;
      sol += fact.solve(resid);
    }

    Vec yh_p = Vec::Zero(m);
    for (int r = 0; r < ma; ++r) yh_p[active[r]] = sol[n + r];
    c.x = D.cwiseProduct(sol.head(n));
    Vec y = E.cwiseProduct(yh_p) / cost_scale;
    c.y_eq = y.head(me);
    c.z_in = y.tail(mi).cwiseMax(0.0);
    c.kkt = kkt_residuals(qp, c.x, c.y_eq, c.z_in);
    c.valid = true;
    return c;
  }

  struct Residuals {
    double r_prim = 0, r_dual = 0;
    double norm_Ax = 0, norm_z = 0, norm_Px = 0, norm_Aty = 0, norm_q = 0;
  };

  Residuals residuals() const {
    Residuals r;
    Vec Ax = As * xh;
    Vec Px = Ps * xh;
    Vec Aty = As.transpose() * yh;
    r.r_prim = m ? inf_norm((Ax - zh).cwiseQuotient(E)) : 0.0;
    r.norm_Ax = m ? inf_norm(Ax.cwiseQuotient(E)) : 0.0;
    r.norm_z = m ? inf_norm(zh.cwiseQuotient(E)) : 0.0;
    const double inv_c = 1.0 / cost_scale;
    // Stationarity of the proximally regularized round; the contract check on
    // the original problem happens in kkt_residuals.
    r.r_dual = inv_c *
               inf_norm((Px + qs + prox * (xh - x_center) + Aty).cwiseQuotient(D));
    r.norm_Px = inv_c * inf_norm(Px.cwiseQuotient(D));
    r.norm_Aty = inv_c * inf_norm(Aty.cwiseQuotient(D));
    r.norm_q = inv_c * inf_norm(qs.cwiseQuotient(D));
    return r;
  }

  bool primal_infeasible(const Vec& dyh) const {
    if (m == 0) return false;
    Vec dy = E.cwiseProduct(dyh) / cost_scale;
    const double ndy = inf_norm(dy);
    if (ndy < 1e-14) return false;
    if (inf_norm(A.transpose() * dy) > kEpsCert * ndy) return false;
    double support = 0.0;
    for (int i = 0; i < m; ++i) {
      if (dy[i] > 0) {
        if (u[i] == kInf) return false;
        support += u[i] * dy[i];
      } else if (dy[i] < 0) {
        if (l[i] == -kInf) {
          if (dy[i] < -kEpsCert * ndy) return false;
        } else {
          support += l[i] * dy[i];
        }
      }
    }
    return support <= -kEpsCert * ndy;
  }

  bool dual_infeasible(const Vec& dxh) const {
    Vec dx = D.cwiseProduct(dxh);
    const double ndx = inf_norm(dx);
    if (ndx < 1e-14) return false;
    if (qp.q.dot(dx) > -kEpsCert * ndx) return false;
    if (inf_norm(qp.P * dx) > kEpsCert * ndx) return false;
    Vec Adx = A * dx;
    for (int i = 0; i < m; ++i) {
      if (i < me) {
        if (std::abs(Adx[i]) > kEpsCert * ndx) return false;
      } else {
        if (Adx[i] > kEpsCert * ndx) return false;
      }
    }
    return true;
  }

  QpSolution finish(Candidate c, SolveStatus status) const {
    QpSolution s;
    s.x = std::move(c.x);
    s.eq_duals = std::move(c.y_eq);
    s.in_duals = std::move(c.z_in);
    s.kkt = c.kkt;
    s.status = status;
    s.iterations = total_iters;
    s.objective = 0.5 * s.x.dot(qp.P * s.x) + qp.q.dot(s.x) + qp.constant;
    return s;
  }

  // One proximal round: ADMM iterations against the current center until the
  // regularized residuals fall below eps, the round budget runs out, or the
  // original problem's KKT contract is already met (checked sparsely; decisive
  // for warm-started re-solves). Returns the iterations consumed, or a
  // negative status on certificates.
  static constexpr int kRoundCap = 5000;
  static constexpr int kInfeasibleRound = -1;
  static constexpr int kUnboundedRound = -2;
  static constexpr int kContractEvery = 50;

  int run_round(int round_budget, double eps, double contract_tol,
                bool* converged, Candidate* contract_hit) {
    *converged = false;
    for (int k = 0; k < round_budget; ++k) {
      ++total_iters;
      Vec x_prev = xh;
      Vec y_prev = yh;

      Vec rhs(n + m);
      rhs.head(n) = sigma * xh + prox * x_center - qs;
      rhs.tail(m) = zh - yh.cwiseQuotient(rho);
      Vec sol = ldlt.solve(rhs);
      Vec xt = sol.head(n);
      Vec nu = sol.tail(m);
      Vec zt = zh + (nu - yh).cwiseQuotient(rho);

      xh = kAlpha * xt + (1.0 - kAlpha) * xh;
      Vec v = kAlpha * zt + (1.0 - kAlpha) * zh + yh.cwiseQuotient(rho);
      Vec z_new = v.cwiseMax(ls).cwiseMin(us);
      yh = rho.cwiseProduct(v - z_new);
      zh = z_new;

      const bool check =
          (k + 1) % kCheckEvery == 0 || k + 1 == round_budget || k == 0;
      if (!check) continue;

      if (primal_infeasible(yh - y_prev)) return kInfeasibleRound;
      if (dual_infeasible(xh - x_prev)) return kUnboundedRound;

      Residuals r = residuals();
      const double eps_pri = eps + eps * std::max(r.norm_Ax, r.norm_z);
      const double eps_dua =
          eps + eps * std::max({r.norm_Px, r.norm_Aty, r.norm_q});
      if (r.r_prim <= eps_pri && r.r_dual <= eps_dua) {
        *converged = true;
        return k + 1;
      }

      if ((k + 1) % kContractEvery == 0) {
        Candidate raw = extract();
        if (raw.kkt.max() <= contract_tol) {
          *contract_hit = std::move(raw);
          return k + 1;
        }
      }

      if ((k + 1) % kRhoEvery == 0) {
        const double pn = r.r_prim / std::max({r.norm_Ax, r.norm_z, 1e-10});
        const double dn =
            r.r_dual / std::max({r.norm_Px, r.norm_Aty, r.norm_q, 1e-10});
        if (pn > 0 && dn > 0) {
          const double target =
              std::clamp(rho_bar * std::sqrt(pn / dn), 1e-6, 1e6);
          if (target > 5.0 * rho_bar || target < rho_bar / 5.0) {
            set_rho(target);
            factorize();
          }
        }
      }
    }
    return round_budget;
  }

  QpSolution solve(const SolveOptions& opts) {
    if (opts.tol <= 0) throw std::invalid_argument("solve: tol must be positive");
    // Converge loosely first and let polish reach machine precision; the
    // contract loop tightens eps only when that fails.
    double eps = std::max(opts.tol * 0.5, 1e-4);
    int budget = opts.max_iter;
    int rounds_at_eps = 0;
    Candidate best;

    while (budget > 0) {
      bool converged = false;
      Candidate contract_hit;
      const int used = run_round(std::min(budget, kRoundCap), eps, opts.tol,
                                 &converged, &contract_hit);
      if (used == kInfeasibleRound)
        return finish(extract(), SolveStatus::Infeasible);
      if (used == kUnboundedRound)
        return finish(extract(), SolveStatus::Unbounded);
      budget -= used;
      if (contract_hit.valid)
        return finish(contract_hit, SolveStatus::Optimal);

      Candidate raw = extract();
      if (raw.kkt.max() <= opts.tol)
        return finish(raw, SolveStatus::Optimal);
      Candidate pol = polish();
#ifdef DRJCC_QP_TRACE
      std::fprintf(stderr, "round: eps=%.1e raw=%.2e polish=%.2e (%s)\n", eps,
                   raw.kkt.max(), pol.valid ? pol.kkt.max() : -1.0,
                   pol.valid ? "valid" : "failed");
#endif
      Candidate& cand = (pol.valid && pol.kkt.max() < raw.kkt.max()) ? pol : raw;
      if (!best.valid || cand.kkt.max() < best.kkt.max()) best = cand;
      if (best.kkt.max() <= opts.tol)
        return finish(best, SolveStatus::Optimal);

      // Recenter the proximal term; tighten the inner tolerance once the
      // center stops moving (outer progress exhausted at this eps) or after a
      // few recenterings that failed to reach the contract anyway.
      const double shift = inf_norm(xh - x_center) / (1.0 + inf_norm(xh));
      x_center = xh;
      ++rounds_at_eps;
      if (converged && (shift <= 10.0 * eps || rounds_at_eps >= 3)) {
        eps /= 20.0;
        rounds_at_eps = 0;
        if (eps < 1e-14) break;  // machine precision reached, contract unmet
      }
    }
    return finish(best.valid ? best : extract(), SolveStatus::MaxIter);
  }
};

Workspace::Workspace(const StandardQP& problem) : impl_(new Impl(problem)) {}
Workspace::~Workspace() = default;
Workspace::Workspace(Workspace&&) noexcept = default;
Workspace& Workspace::operator=(Workspace&&) noexcept = default;

void Workspace::update_linear_cost(const Vec& q, double constant) {
  impl_->update_linear_cost(q, constant);
}

QpSolution Workspace::solve(const SolveOptions& opts) { return impl_->solve(opts); }

QpSolution solve_qp(const StandardQP& qp, double tol, int max_iter) {
  Workspace ws(qp);
  return ws.solve({tol, max_iter});
}

void dump_qp(const StandardQP& qp, std::ostream& out) {
  auto write_mat = [&](const char* name, const SpMat& mat) {
    out << name << ' ' << mat.nonZeros() << '\n';
    for (int k = 0; k < mat.outerSize(); ++k)
      for (SpMat::InnerIterator it(mat, k); it; ++it)
        out << it.row() << ' ' << it.col() << ' ' << format_sig12(it.value())
            << '\n';
  };
  auto write_vec = [&](const char* name, const Vec& v) {
    out << name << ' ' << v.size() << '\n';
    for (int i = 0; i < v.size(); ++i) out << format_sig12(v[i]) << '\n';
  };
  out << "standard_qp v1\n";
  out << "n " << qp.n << " me " << qp.eq_count() << " mi " << qp.ineq_count()
      << '\n';
  write_mat("P", qp.P);
  write_vec("q", qp.q);
  out << "constant " << format_sig12(qp.constant) << '\n';
  write_mat("A_eq", qp.A_eq);
  write_vec("b_eq", qp.b_eq);
  write_mat("A_in", qp.A_in);
  write_vec("b_in", qp.b_in);
  out << "vars " << qp.vars.size() << '\n';
  for (const auto& [name, range] : qp.vars)
    out << name << ' ' << range.first << ' ' << range.second << '\n';
}

StandardQP parse_qp_dump(std::istream& in) {
  StandardQP qp;
  std::string tag, word;
  int me = 0, mi = 0;
  in >> tag >> word;
  if (tag != "standard_qp" || word != "v1")
    throw ParseError("qp dump: unknown header");
  in >> tag >> qp.n >> word >> me >> word >> mi;
  auto read_mat = [&](const char* name, int rows, int cols) {
    long nnz = 0;
    in >> tag >> nnz;
    if (tag != name) throw ParseError("qp dump: expected section " + std::string(name));
    std::vector<Eigen::Triplet<double>> trips;
    for (long i = 0; i < nnz; ++i) {
      int r, c;
      double v;
      in >> r >> c >> v;
      trips.emplace_back(r, c, v);
    }
    SpMat m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  };
  auto read_vec = [&](const char* name) {
    long size = 0;
    in >> tag >> size;
    if (tag != name) throw ParseError("qp dump: expected section " + std::string(name));
    Vec v(size);
    for (long i = 0; i < size; ++i) in >> v[i];
    return v;
  };
  qp.P = read_mat("P", qp.n, qp.n);
  qp.q = read_vec("q");
  in >> tag >> qp.constant;
  qp.A_eq = read_mat("A_eq", me, qp.n);
  qp.b_eq = read_vec("b_eq");
  qp.A_in = read_mat("A_in", mi, qp.n);
  qp.b_in = read_vec("b_in");
  long n_vars = 0;
  in >> tag >> n_vars;
  for (long i = 0; i < n_vars; ++i) {
    std::string name;
    int offset, size;
    in >> name >> offset >> size;
    qp.vars[name] = {offset, size};
  }
  if (!in) throw ParseError("qp dump: truncated input");
  return qp;
}

}  // namespace drjcc::qp

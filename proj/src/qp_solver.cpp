#include "mvtc/qp_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace mvtc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Bound : char { Free, Lower, Upper, Fixed };

double inf_norm(const Vector &v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix take_columns(const Matrix &a, const std::vector<Index> &cols)
{
  Matrix out(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Index>(j)) = a.col(cols[j]);
  return out;
}

Index column_rank(const Matrix &m)
{
  if (m.size() == 0)
    return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(1e-12);
  return qr.rank();
}

/// Active-set minimization of 1/2 x'Qx - x'R over {A x = const, lo <= x <= hi}
/// starting from a point that already satisfies the constraints. A must have
/// full row rank. Every step stays in the nullspace of A, so the equality
/// residual of the starting point is preserved.
class ActiveSet
{
public:
  ActiveSet(const Matrix &Q, const Vector &R, const Matrix &A, const Vector &lo, const Vector &hi,
            double tol, int max_iter)
      : Q_(Q), R_(R), A_(A), lo_(lo), hi_(hi), tol_(tol), max_iter_(max_iter),
        q_scale_(max_abs(Q))
  {
  }

  /// Returns true on convergence; `x` is updated in place.
  bool run(Vector &x, int &iterations)
  {
    const Index m = x.size();
    state_.assign(static_cast<std::size_t>(m), Bound::Free);
    for (Index i = 0; i < m; ++i) {
      if (lo_[i] == hi_[i]) {
        state_[i] = Bound::Fixed;
        x[i] = lo_[i];
      } else if (x[i] <= lo_[i] + 1e-14 * (1.0 + std::abs(lo_[i]))) {
        state_[i] = Bound::Lower;
        x[i] = lo_[i];
      } else if (x[i] >= hi_[i] - 1e-14 * (1.0 + std::abs(hi_[i]))) {
        state_[i] = Bound::Upper;
        x[i] = hi_[i];
      }
    }
    restore_rank();

    int zero_steps = 0;
    for (iterations = 0; iterations < max_iter_; ++iterations) {
      const Vector g = Q_ * x - R_;
      const std::vector<Index> free = free_set();
      const Index k = static_cast<Index>(free.size());

      Vector step = Vector::Zero(m);
      bool zero_curvature = false;
      if (k > 0) {
        const Matrix Z = nullspace(free);
        if (Z.cols() > 0) {
          Matrix Qff(k, k);
          Vector gf(k);
          for (Index a = 0; a < k; ++a) {
            gf[a] = g[free[a]];
            for (Index b = 0; b < k; ++b)
              Qff(a, b) = Q_(free[a], free[b]);
          }
          const Matrix H = Z.transpose() * Qff * Z;
          const Vector rg = Z.transpose() * gf;
          Eigen::SelfAdjointEigenSolver<Matrix> es(H);
          const Vector &lam = es.eigenvalues();
          const Matrix &V = es.eigenvectors();
          const double tau = 1e-11 * std::max(lam.cwiseAbs().maxCoeff(), q_scale_);
          const Vector c = V.transpose() * rg;

          Vector null_part = Vector::Zero(c.size());
          Vector newton = Vector::Zero(c.size());
          for (Index j = 0; j < c.size(); ++j) {
            if (lam[j] <= tau)
              null_part[j] = c[j];
            else
              newton[j] = c[j] / lam[j];
          }
          const double null_thresh = 1e-12 * (1.0 + inf_norm(g) * std::sqrt(double(k)));
          Vector sf;
          if (null_part.norm() > null_thresh) {
            sf = -Z * (V * null_part);
            zero_curvature = true;
          } else {
            sf = -Z * (V * newton);
          }
          for (Index a = 0; a < k; ++a)
            step[free[a]] = sf[a];
        }
      }

      const double step_norm = inf_norm(step);
      if (step_norm <= 1e-15 * (1.0 + inf_norm(x))) {
        const Index release = pick_release(x);
        if (release < 0)
          return true;
        state_[release] = Bound::Free;
        continue;
      }

      double alpha = zero_curvature ? kInf : 1.0;
      Index blocking = -1;
      const double small = 1e-14 * step_norm;
      for (Index i = 0; i < m; ++i) {
        if (state_[i] != Bound::Free || std::abs(step[i]) <= small)
          continue;
        double limit = kInf;
        if (step[i] < 0.0 && std::isfinite(lo_[i]))
          limit = std::max(0.0, (lo_[i] - x[i]) / step[i]);
        else if (step[i] > 0.0 && std::isfinite(hi_[i]))
          limit = std::max(0.0, (hi_[i] - x[i]) / step[i]);
        if (limit < alpha) {
          alpha = limit;
          blocking = i;
        }
      }
      if (!std::isfinite(alpha))
        throw SolverError("QP is unbounded below along a zero-curvature direction");

      x += alpha * step;
      if (blocking >= 0) {
        if (step[blocking] < 0.0) {
          state_[blocking] = Bound::Lower;
          x[blocking] = lo_[blocking];
        } else {
          state_[blocking] = Bound::Upper;
          x[blocking] = hi_[blocking];
        }
      }
      zero_steps = alpha == 0.0 ? zero_steps + 1 : 0;
      bland_ = zero_steps > static_cast<int>(m);
    }
    return false;
  }

  /// Equality multipliers and bound multipliers at x (valid at a stationary point).
  void multipliers(const Vector &x, Vector &nu, Vector &z) const
  {
    const Vector g = Q_ * x - R_;
    nu = Vector::Zero(A_.rows());
    const std::vector<Index> free = free_set();
    if (A_.rows() > 0 && !free.empty()) {
      const Matrix Af = take_columns(A_, free);
      Vector gf(static_cast<Index>(free.size()));
      for (std::size_t a = 0; a < free.size(); ++a)
        gf[static_cast<Index>(a)] = g[free[a]];
      nu = -Af.transpose().colPivHouseholderQr().solve(gf);
    }
    z = g + A_.transpose() * nu;
    for (Index i = 0; i < x.size(); ++i)
      if (state_[i] == Bound::Free)
        z[i] = 0.0;
  }

  double dual_tolerance(const Vector &x) const
  {
    return tol_ * std::max(1.0, q_scale_ * std::max(1.0, inf_norm(x)) + inf_norm(R_));
  }

  const std::vector<Bound> &state() const { return state_; }

private:
  std::vector<Index> free_set() const
  {
    std::vector<Index> free;
    for (std::size_t i = 0; i < state_.size(); ++i)
      if (state_[i] == Bound::Free)
        free.push_back(static_cast<Index>(i));
    return free;
  }

  Matrix nullspace(const std::vector<Index> &free) const
  {
    const Index k = static_cast<Index>(free.size());
    if (A_.rows() == 0)
      return Matrix::Identity(k, k);
    const Matrix AfT = take_columns(A_, free).transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(AfT);
    qr.setThreshold(1e-12);
    const Index r = qr.rank();
    const Matrix Qh = qr.householderQ();
    return Qh.rightCols(k - r);
  }

  /// Releases bound variables until the free columns of A span its rows.
  void restore_rank()
  {
    if (A_.rows() == 0)
      return;
    std::vector<Index> free = free_set();
    Index rank = column_rank(take_columns(A_, free));
    for (std::size_t i = 0; i < state_.size() && rank < A_.rows(); ++i) {
      if (state_[i] != Bound::Lower && state_[i] != Bound::Upper)
        continue;
      std::vector<Index> trial = free;
      trial.push_back(static_cast<Index>(i));
      const Index r = column_rank(take_columns(A_, trial));
      if (r > rank) {
        state_[i] = Bound::Free;
        free = std::move(trial);
        rank = r;
      }
    }
  }

  Index pick_release(const Vector &x) const
  {
    Vector nu, z;
    multipliers(x, nu, z);
    const double dtol = dual_tolerance(x);
    Index best = -1;
    double worst = dtol;
    for (Index i = 0; i < x.size(); ++i) {
      double violation = 0.0;
      if (state_[i] == Bound::Lower)
        violation = -z[i];
      else if (state_[i] == Bound::Upper)
        violation = z[i];
      if (violation > worst) {
        best = i;
        if (bland_)
          break;
        worst = violation;
      }
    }
    return best;
  }

  const Matrix &Q_;
  const Vector &R_;
  const Matrix &A_;
  const Vector &lo_;
  const Vector &hi_;
  double tol_;
  int max_iter_;
  double q_scale_;
  bool bland_ = false;
  std::vector<Bound> state_;
};

Vector clamp(const Vector &x, const Vector &lo, const Vector &hi)
{
  return x.cwiseMax(lo).cwiseMin(hi);
}

/// Minimum-norm correction of the equality residual using variables strictly
/// inside their bounds.
void refine_equality(Vector &x, const Matrix &A, const Vector &B, const Vector &lo,
                     const Vector &hi)
{
  if (A.rows() == 0)
    return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector r = B - A * x;
    if (inf_norm(r) == 0.0)
      return;
    std::vector<Index> inner;
    for (Index i = 0; i < x.size(); ++i)
      if (x[i] > lo[i] && x[i] < hi[i])
        inner.push_back(i);
    if (inner.empty())
      return;
    const Matrix Af = take_columns(A, inner);
    const Vector d = Af.completeOrthogonalDecomposition().solve(r);
    for (std::size_t a = 0; a < inner.size(); ++a) {
      const Index i = inner[a];
      x[i] = std::clamp(x[i] + d[static_cast<Index>(a)], lo[i], hi[i]);
    }
  }
}

} // namespace

const char *to_string(QpStatus status)
{
  switch (status) {
  case QpStatus::Optimal:
    return "optimal";
  case QpStatus::Infeasible:
    return "infeasible";
  case QpStatus::IterationLimit:
    return "iteration_limit";
  }
  return "unknown";
}

void validate_qp(const QpProblem &p, bool check_convexity)
{
  const Index m = p.R.size();
  if (p.Q.rows() != m || p.Q.cols() != m)
    throw InputError("QP: Q must be m x m with m = len(R)");
  if (p.A.cols() != m && !(p.A.rows() == 0))
    throw InputError("QP: A must have m columns");
  if (p.A.rows() != p.B.size())
    throw InputError("QP: A and B row counts differ");
  if (p.lower.size() != m || p.upper.size() != m)
    throw InputError("QP: bounds must have length m");
  if (!p.Q.allFinite() || !p.R.allFinite() || !p.A.allFinite() || !p.B.allFinite())
    throw InputError("QP: non-finite problem data");
  for (Index i = 0; i < m; ++i) {
    if (std::isnan(p.lower[i]) || std::isnan(p.upper[i]) || p.lower[i] > p.upper[i]) {
      std::ostringstream msg;
      msg << "QP: invalid bounds at index " << i << ": [" << p.lower[i] << ", " << p.upper[i]
          << "]";
      throw InputError(msg.str());
    }
  }
  if (!check_convexity || m == 0)
    return;
  const double scale = std::max(1.0, max_abs(p.Q));
  if ((p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("QP: Q is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.Q, Eigen::EigenvaluesOnly);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(lmax, 1e-300))
    throw InputError("QP: Q is not positive semi-definite");
}

namespace {

QpSolution solve_impl(const QpProblem &p, const QpSettings &settings, const Vector *warm)
{
  validate_qp(p, settings.check_convexity);
  const Index m = p.dimension();
  const int max_iter = settings.max_iter > 0 ? settings.max_iter : static_cast<int>(10 * m + 100);
  const double feas_tol = settings.tol * (1.0 + inf_norm(p.B));

  // Independent equality rows via pivoted QR of A'.
  Matrix Ar(0, m);
  Vector Br(0);
  if (p.A.rows() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(p.A.transpose());
    qr.setThreshold(1e-12);
    const Index r = qr.rank();
    std::vector<Index> rows;
    for (Index j = 0; j < r; ++j)
      rows.push_back(qr.colsPermutation().indices()[j]);
    std::sort(rows.begin(), rows.end());
    Ar.resize(r, m);
    Br.resize(r);
    for (Index j = 0; j < r; ++j) {
      Ar.row(j) = p.A.row(rows[j]);
      Br[j] = p.B[rows[j]];
    }
  }

  QpSolution sol;
  sol.iterations = 0;
  Vector x;
  bool have_start = false;
  if (warm != nullptr && warm->size() == m && warm->allFinite()) {
    x = clamp(*warm, p.lower, p.upper);
    have_start = p.A.rows() == 0 || inf_norm(p.A * x - p.B) <= feas_tol;
  }

  if (!have_start) {
    x = clamp(Vector::Zero(m), p.lower, p.upper);
    if (Ar.rows() > 0) {
      // Feasibility phase: bound-constrained least squares on the equality rows.
      const Matrix Q1 = Ar.transpose() * Ar;
      const Vector R1 = Ar.transpose() * Br;
      const Matrix none(0, m);
      ActiveSet phase1(Q1, R1, none, p.lower, p.upper, settings.tol * 1e-3, max_iter);
      int it = 0;
      const bool ok = phase1.run(x, it);
      sol.iterations += it;
      refine_equality(x, Ar, Br, p.lower, p.upper);
      if (!ok) {
        sol.x = x;
        sol.objective = p.objective(x);
        sol.status = QpStatus::IterationLimit;
        sol.kkt_residual = inf_norm(p.A * x - p.B);
        sol.eq_multipliers = Vector::Zero(Ar.rows());
        return sol;
      }
    }
  }
  if (p.A.rows() > 0 && inf_norm(p.A * x - p.B) > feas_tol) {
    sol.x = x;
    sol.objective = p.objective(x);
    sol.status = QpStatus::Infeasible;
    sol.kkt_residual = inf_norm(p.A * x - p.B);
    sol.eq_multipliers = Vector::Zero(Ar.rows());
    return sol;
  }

  ActiveSet solver(p.Q, p.R, Ar, p.lower, p.upper, settings.tol, max_iter);
  int it = 0;
  const bool converged = solver.run(x, it);
  sol.iterations += it;
  refine_equality(x, Ar, Br, p.lower, p.upper);

  Vector nu, z;
  solver.multipliers(x, nu, z);
  const Vector g = p.Q * x - p.R;
  Vector stationarity = g + Ar.transpose() * nu - z;
  double complementarity = 0.0;
  const auto &state = solver.state();
  for (Index i = 0; i < m; ++i) {
    if (state[i] == Bound::Lower)
      complementarity = std::max(complementarity, -z[i]);
    else if (state[i] == Bound::Upper)
      complementarity = std::max(complementarity, z[i]);
  }
  double bound_violation = 0.0;
  for (Index i = 0; i < m; ++i)
    bound_violation = std::max({bound_violation, p.lower[i] - x[i], x[i] - p.upper[i]});
  const double primal = p.A.rows() > 0 ? inf_norm(p.A * x - p.B) : 0.0;

  sol.x = x;
  sol.objective = p.objective(x);
  sol.eq_multipliers = nu;
  sol.kkt_residual =
      std::max({inf_norm(stationarity), complementarity, primal, bound_violation});
  sol.status = converged ? QpStatus::Optimal : QpStatus::IterationLimit;
  return sol;
}

} // namespace

QpSolution solve_qp(const QpProblem &p, const QpSettings &settings)
{
  return solve_impl(p, settings, nullptr);
}

QpSolution solve_qp(const QpProblem &p, const QpSettings &settings, const Vector &warm_start)
{
  return solve_impl(p, settings, &warm_start);
}

} // namespace mvtc

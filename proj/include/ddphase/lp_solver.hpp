#pragma once

// Dense two-phase primal simplex with bounded variables.
//
// Problem form: minimize c.x subject to A x <= b and lower <= x <= upper, with
// infinite bounds allowed (free variables rest at zero while nonbasic). One
// slack per row turns the rows into equalities; rows whose slack would start
// negative get an artificial variable, and phase 1 minimizes the artificial sum.
//
// Nonbasic variables sit at one of their bounds, so variable bounds never become
// rows. The explicit basis inverse is updated with one eta transformation per
// pivot and recomputed from scratch every `refactor_interval` pivots. Columns
// are priced from a compressed sparse copy of A.
//
// Pricing is Dantzig (most negative reduced cost, lowest index on ties) and
// switches to Bland's rule after `bland_after` consecutive degenerate pivots,
// until the next nondegenerate step. The ratio test is Harris' two-pass test
// outside Bland mode.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "ddphase/errors.hpp"
#include "ddphase/lp_builder.hpp"

namespace ddphase {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

struct SolverOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  long max_iters = 500000;
  int refactor_interval = 100;
  int bland_after = 50;
  double pivot_tol = 1e-9;
  // Stop after phase 1; status is then optimal iff the LP is feasible.
  bool phase1_only = false;
};

struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double max_primal_residual = std::numeric_limits<double>::infinity();
  long iterations = 0;
  // Sum of artificial variables at the end of phase 1 (0 when feasible).
  double phase1_objective = 0.0;
};

// Largest violation of A x <= b and of the variable bounds.
inline double primal_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const Eigen::VectorXd& x) {
  double worst = 0.0;
  if (a.rows() > 0) worst = std::max(worst, (a * x - b).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lower(j) - x(j));
    worst = std::max(worst, x(j) - upper(j));
  }
  return worst;
}

namespace detail {

class BoundedSimplex {
 public:
  BoundedSimplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& lower,
                 const Eigen::VectorXd& upper, const SolverOptions& opts)
      : opts_(opts), m_(a.rows()), n_(a.cols()), b_(b) {
    // Compressed sparse columns of A.
    col_start_.reserve(static_cast<std::size_t>(n_) + 1);
    col_start_.push_back(0);
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double v = a(i, j);
        if (v != 0.0) {
          row_idx_.push_back(i);
          vals_.push_back(v);
        }
      }
      col_start_.push_back(static_cast<Eigen::Index>(row_idx_.size()));
    }
    const Eigen::Index total = n_ + 2 * m_;
    lo_ = Eigen::VectorXd::Zero(total);
    up_ = Eigen::VectorXd::Zero(total);
    lo_.head(n_) = lower;
    up_.head(n_) = upper;
    up_.segment(n_, m_).setConstant(kInf);
    x_ = Eigen::VectorXd::Zero(total);
    state_.assign(static_cast<std::size_t>(total), State::kLower);
    head_.assign(static_cast<std::size_t>(m_), 0);
  }

  LpSolution run() {
    LpSolution sol;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (lo_(j) > up_(j)) {
        sol.status = LpStatus::kInfeasible;
        sol.phase1_objective = lo_(j) - up_(j);
        sol.x = Eigen::VectorXd::Zero(n_);
        return sol;
      }
    }
    initial_basis();

    bool need_phase1 = false;
    for (Eigen::Index i = 0; i < m_; ++i) need_phase1 |= up_(artificial(i)) > 0.0;
    if (need_phase1) {
      Eigen::VectorXd cost = Eigen::VectorXd::Zero(lo_.size());
      for (Eigen::Index i = 0; i < m_; ++i)
        if (up_(artificial(i)) > 0.0) cost(artificial(i)) = 1.0;
      const LpStatus s = iterate(cost, /*phase1=*/true);
      refactor();
      double infeas = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) infeas += std::max(0.0, x_(artificial(i)));
      sol.phase1_objective = infeas;
      if (s == LpStatus::kIterationLimit) return finish(sol, s);
      if (infeas > opts_.feas_tol) return finish(sol, LpStatus::kInfeasible);
    }
    // Artificials are pinned at zero from here on.
    for (Eigen::Index i = 0; i < m_; ++i) {
      up_(artificial(i)) = 0.0;
      if (state_[static_cast<std::size_t>(artificial(i))] != State::kBasic) x_(artificial(i)) = 0.0;
    }
    if (opts_.phase1_only) return finish(sol, LpStatus::kOptimal);

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(lo_.size());
    cost.head(n_) = phase2_cost_;
    const LpStatus s = iterate(cost, /*phase1=*/false);
    return finish(sol, s);
  }

  void set_cost(const Eigen::VectorXd& c) { phase2_cost_ = c; }

 private:
  enum class State { kBasic, kLower, kUpper, kFree };
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  Eigen::Index slack(Eigen::Index i) const { return n_ + i; }
  Eigen::Index artificial(Eigen::Index i) const { return n_ + m_ + i; }

  template <typename Fn>
  void for_each_nz(Eigen::Index j, Fn&& fn) const {
    if (j < n_) {
      for (Eigen::Index k = col_start_[static_cast<std::size_t>(j)];
           k < col_start_[static_cast<std::size_t>(j) + 1]; ++k)
        fn(row_idx_[static_cast<std::size_t>(k)], vals_[static_cast<std::size_t>(k)]);
    } else if (j < n_ + m_) {
      fn(j - n_, 1.0);
    } else {
      fn(j - n_ - m_, -1.0);
    }
  }

  void initial_basis() {
    for (Eigen::Index j = 0; j < n_; ++j) {
      auto& st = state_[static_cast<std::size_t>(j)];
      if (std::isfinite(lo_(j))) {
        st = State::kLower;
        x_(j) = lo_(j);
      } else if (std::isfinite(up_(j))) {
        st = State::kUpper;
        x_(j) = up_(j);
      } else {
        st = State::kFree;
        x_(j) = 0.0;
      }
    }
    Eigen::VectorXd residual = b_;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (x_(j) == 0.0) continue;
      for_each_nz(j, [&](Eigen::Index i, double v) { residual(i) -= v * x_(j); });
    }
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const auto s = static_cast<std::size_t>(slack(i));
      const auto a = static_cast<std::size_t>(artificial(i));
      if (residual(i) >= 0.0) {
        head_[static_cast<std::size_t>(i)] = slack(i);
        state_[s] = State::kBasic;
        x_(slack(i)) = residual(i);
        state_[a] = State::kLower;
        up_(artificial(i)) = 0.0;
        binv_(i, i) = 1.0;
      } else {
        head_[static_cast<std::size_t>(i)] = artificial(i);
        state_[a] = State::kBasic;
        x_(artificial(i)) = -residual(i);
        up_(artificial(i)) = kInf;
        state_[s] = State::kLower;
        x_(slack(i)) = 0.0;
        binv_(i, i) = -1.0;
      }
    }
  }

  // Rebuilds the basis inverse and the basic values from the nonbasic ones.
  void refactor() {
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m_, m_);
    for (Eigen::Index p = 0; p < m_; ++p)
      for_each_nz(head_[static_cast<std::size_t>(p)],
                  [&](Eigen::Index i, double v) { basis(i, p) = v; });
    binv_ = basis.partialPivLu().inverse();
    Eigen::VectorXd rhs = b_;
    const Eigen::Index total = lo_.size();
    for (Eigen::Index j = 0; j < total; ++j) {
      if (state_[static_cast<std::size_t>(j)] == State::kBasic || x_(j) == 0.0) continue;
      for_each_nz(j, [&](Eigen::Index i, double v) { rhs(i) -= v * x_(j); });
    }
    const Eigen::VectorXd xb = binv_ * rhs;
    for (Eigen::Index p = 0; p < m_; ++p) x_(head_[static_cast<std::size_t>(p)]) = xb(p);
    pivots_since_refactor_ = 0;
  }

  LpStatus iterate(const Eigen::VectorXd& cost, bool phase1) {
    int degenerate_run = 0;
    bool bland = false;
    const Eigen::Index total = lo_.size();
    Eigen::VectorXd cb(m_);
    Eigen::VectorXd w(m_);
    while (true) {
      if (iterations_ >= opts_.max_iters) return LpStatus::kIterationLimit;

      for (Eigen::Index p = 0; p < m_; ++p) cb(p) = cost(head_[static_cast<std::size_t>(p)]);
      const Eigen::VectorXd y = binv_.transpose() * cb;

      // Pricing.
      Eigen::Index entering = -1;
      double best = 0.0;
      double entering_d = 0.0;
      for (Eigen::Index j = 0; j < total; ++j) {
        const State st = state_[static_cast<std::size_t>(j)];
        if (st == State::kBasic || lo_(j) == up_(j)) continue;
        double d = cost(j);
        for_each_nz(j, [&](Eigen::Index i, double v) { d -= y(i) * v; });
        bool eligible = false;
        if (st == State::kLower) eligible = d < -opts_.opt_tol;
        else if (st == State::kUpper) eligible = d > opts_.opt_tol;
        else eligible = std::abs(d) > opts_.opt_tol;
        if (!eligible) continue;
        if (bland) {
          entering = j;
          entering_d = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          entering_d = d;
        }
      }
      if (entering < 0) return LpStatus::kOptimal;
      const double dir = entering_d < 0.0 ? 1.0 : -1.0;

      w.setZero();
      for_each_nz(entering, [&](Eigen::Index i, double v) { w += v * binv_.col(i); });

      // Ratio test. Basic variable at position p moves at rate -dir * w(p).
      Eigen::Index leave = -1;
      double step = kInf;
      const double harris_tol = 0.5 * opts_.feas_tol;
      if (!bland) {
        double bound_relaxed = kInf;
        for (Eigen::Index p = 0; p < m_; ++p) {
          if (std::abs(w(p)) <= opts_.pivot_tol) continue;
          const Eigen::Index v = head_[static_cast<std::size_t>(p)];
          const double rate = -dir * w(p);
          double r = kInf;
          if (rate < 0.0 && std::isfinite(lo_(v))) r = (x_(v) - lo_(v) + harris_tol) / -rate;
          else if (rate > 0.0 && std::isfinite(up_(v))) r = (up_(v) - x_(v) + harris_tol) / rate;
          bound_relaxed = std::min(bound_relaxed, r);
        }
        if (std::isfinite(bound_relaxed)) {
          double best_pivot = 0.0;
          for (Eigen::Index p = 0; p < m_; ++p) {
            if (std::abs(w(p)) <= opts_.pivot_tol) continue;
            const Eigen::Index v = head_[static_cast<std::size_t>(p)];
            const double rate = -dir * w(p);
            double r = kInf;
            if (rate < 0.0 && std::isfinite(lo_(v))) r = (x_(v) - lo_(v)) / -rate;
            else if (rate > 0.0 && std::isfinite(up_(v))) r = (up_(v) - x_(v)) / rate;
            if (r > bound_relaxed) continue;
            const double piv = std::abs(w(p));
            if (piv > best_pivot ||
                (piv == best_pivot && leave >= 0 && v < head_[static_cast<std::size_t>(leave)])) {
              best_pivot = piv;
              leave = p;
              step = std::max(0.0, r);
            }
          }
        }
      } else {
        for (Eigen::Index p = 0; p < m_; ++p) {
          if (std::abs(w(p)) <= opts_.pivot_tol) continue;
          const Eigen::Index v = head_[static_cast<std::size_t>(p)];
          const double rate = -dir * w(p);
          double r = kInf;
          if (rate < 0.0 && std::isfinite(lo_(v))) r = std::max(0.0, (x_(v) - lo_(v)) / -rate);
          else if (rate > 0.0 && std::isfinite(up_(v))) r = std::max(0.0, (up_(v) - x_(v)) / rate);
          if (!std::isfinite(r)) continue;
          if (leave < 0 || r < step - 1e-12) {
            leave = p;
            step = r;
          } else if (r <= step + 1e-12 && v < head_[static_cast<std::size_t>(leave)]) {
            leave = p;
            step = std::min(step, r);
          }
        }
      }

      const double flip = up_(entering) - lo_(entering);
      const bool bound_flip = std::isfinite(flip) && flip <= step;
      if (!bound_flip && leave < 0) {
        // Phase 1 is bounded below by zero, so this only happens in phase 2.
        return phase1 ? LpStatus::kOptimal : LpStatus::kUnbounded;
      }
      if (bound_flip) step = flip;

      ++iterations_;
      x_(entering) += dir * step;
      for (Eigen::Index p = 0; p < m_; ++p) x_(head_[static_cast<std::size_t>(p)]) -= dir * step * w(p);

      if (bound_flip) {
        auto& st = state_[static_cast<std::size_t>(entering)];
        st = dir > 0.0 ? State::kUpper : State::kLower;
        x_(entering) = dir > 0.0 ? up_(entering) : lo_(entering);
      } else {
        const Eigen::Index out = head_[static_cast<std::size_t>(leave)];
        const double rate = -dir * w(leave);
        if (rate < 0.0) {
          state_[static_cast<std::size_t>(out)] = State::kLower;
          x_(out) = lo_(out);
        } else {
          state_[static_cast<std::size_t>(out)] = State::kUpper;
          x_(out) = up_(out);
        }
        // An artificial that leaves in phase 1 is never needed again.
        if (phase1 && out >= n_ + m_) {
          up_(out) = 0.0;
          x_(out) = 0.0;
          state_[static_cast<std::size_t>(out)] = State::kLower;
        }
        state_[static_cast<std::size_t>(entering)] = State::kBasic;
        head_[static_cast<std::size_t>(leave)] = entering;

        const Eigen::RowVectorXd pivot_row = binv_.row(leave) / w(leave);
        binv_.noalias() -= w * pivot_row;
        binv_.row(leave) = pivot_row;
        if (++pivots_since_refactor_ >= opts_.refactor_interval) refactor();
      }

      if (step <= 1e-12) {
        if (++degenerate_run >= opts_.bland_after) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

  LpSolution finish(LpSolution sol, LpStatus status) {
    sol.status = status;
    sol.iterations = iterations_;
    sol.x = x_.head(n_);
    return sol;
  }

  SolverOptions opts_;
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::VectorXd b_;
  std::vector<Eigen::Index> col_start_;
  std::vector<Eigen::Index> row_idx_;
  std::vector<double> vals_;
  Eigen::VectorXd lo_, up_, x_;
  std::vector<State> state_;
  std::vector<Eigen::Index> head_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd phase2_cost_;
  long iterations_ = 0;
  int pivots_since_refactor_ = 0;
};

}  // namespace detail

inline LpSolution solve(const Eigen::VectorXd& cost, const Eigen::MatrixXd& a,
                        const Eigen::VectorXd& b, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper, const SolverOptions& opts = {}) {
  const Eigen::Index n = a.cols();
  if (cost.size() != n || lower.size() != n || upper.size() != n || b.size() != a.rows())
    throw DomainError("solve: dimension mismatch");
  detail::BoundedSimplex simplex(a, b, lower, upper, opts);
  simplex.set_cost(cost);
  LpSolution sol = simplex.run();
  sol.max_primal_residual = primal_residual(a, b, lower, upper, sol.x);
  if (sol.status == LpStatus::kOptimal && !opts.phase1_only) sol.objective = cost.dot(sol.x);
  return sol;
}

inline LpSolution solve(const LinearProgram& lp, const SolverOptions& opts = {}) {
  return solve(lp.cost, lp.a_matrix, lp.b, lp.lower, lp.upper, opts);
}

}  // namespace ddphase

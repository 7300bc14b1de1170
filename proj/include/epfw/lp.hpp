#ifndef EPFW_LP_HPP
#define EPFW_LP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "epfw/core.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(IterationLimit);
EPFW_DEFINE_ERROR(Infeasible);
EPFW_DEFINE_ERROR(Unbounded);

enum class Sense { Min, Max };
enum class RowSense { LE, EQ, GE };
enum class LpStatus { Optimal, Infeasible, Unbounded };

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense linear program: optimize c'x subject to A x {<=,=,>=} b, lb <= x <= ub.
struct LpProblem {
  Sense sense = Sense::Min;
  std::vector<double> c;
  std::vector<std::vector<double>> A;  // row-major dense
  std::vector<RowSense> row_sense;
  std::vector<double> b;
  std::vector<double> lb;  // defaults to 0 when empty
  std::vector<double> ub;  // defaults to +inf when empty
  int max_iterations = 0;  // 0 => 50 * (rows + cols)

  std::size_t n_rows() const { return A.size(); }
  std::size_t n_cols() const { return c.size(); }

  void validate() const {
    const std::size_t m = n_rows(), n = n_cols();
    if (row_sense.size() != m || b.size() != m)
      throw InvalidConfig("lp: row dimension mismatch");
    for (const auto& row : A)
      if (row.size() != n) throw InvalidConfig("lp: A column dimension mismatch");
    if (!lb.empty() && lb.size() != n) throw InvalidConfig("lp: lb size");
    if (!ub.empty() && ub.size() != n) throw InvalidConfig("lp: ub size");
    for (std::size_t j = 0; j < n; ++j) {
      const double l = lower(j), u = upper(j);
      if (l > u) throw InvalidConfig("lp: lb > ub at variable " + std::to_string(j));
      if (!std::isfinite(c[j])) throw InvalidConfig("lp: non-finite cost");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::isfinite(b[i])) throw InvalidConfig("lp: non-finite rhs");
      for (double a : A[i])
        if (!std::isfinite(a)) throw InvalidConfig("lp: non-finite matrix entry");
    }
  }

  double lower(std::size_t j) const { return lb.empty() ? 0.0 : lb[j]; }
  double upper(std::size_t j) const { return ub.empty() ? kInf : ub[j]; }
};

/// Solver output. Duals follow the marginal-value convention: duals[i] is the
/// change of the optimal objective (in the problem's own sense) per unit
/// increase of b[i]. For a binding "=" demand row of a min-cost dispatch this
/// is the marginal cost of one more unit of demand.
struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  std::vector<double> x;
  std::vector<double> duals;
  double objective = 0.0;
  int iterations = 0;
  bool used_blands_rule = false;
};

namespace lp_detail {

struct Tableau {
  // rows x (n_struct + n_slack + m artificials), plus rhs column.
  std::size_t m = 0, n_struct = 0, n_slack = 0;
  std::vector<double> t;  // (m) x (width)
  std::vector<double> rhs;
  std::vector<int> basis;          // basic column per row
  std::vector<char> row_active;    // redundant rows excluded from pivoting
  std::size_t width() const { return n_struct + n_slack + m; }
  double& at(std::size_t i, std::size_t j) { return t[i * width() + j]; }
  double at(std::size_t i, std::size_t j) const { return t[i * width() + j]; }
  std::size_t art_col(std::size_t i) const { return n_struct + n_slack + i; }
};

inline void pivot(Tableau& tb, std::size_t prow, std::size_t pcol) {
  const std::size_t w = tb.width();
  double* pr = &tb.t[prow * w];
  const double pv = pr[pcol];
  for (std::size_t j = 0; j < w; ++j) pr[j] /= pv;
  tb.rhs[prow] /= pv;
  for (std::size_t i = 0; i < tb.m; ++i) {
    if (i == prow) continue;
    double* ri = &tb.t[i * w];
    const double f = ri[pcol];
    if (f == 0.0) continue;
    for (std::size_t j = 0; j < w; ++j) ri[j] -= f * pr[j];
    ri[pcol] = 0.0;  // kill roundoff in the pivot column
    tb.rhs[i] -= f * tb.rhs[prow];
  }
  tb.basis[prow] = static_cast<int>(pcol);
}

}  // namespace lp_detail

/// Two-phase dense-tableau simplex with dual extraction. Dantzig pricing with
/// an automatic switch to Bland's rule once stalling is detected, which
/// guarantees termination on degenerate problems. Deterministic.
class SimplexSolver {
 public:
  struct Options {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    int stall_limit = 0;  // 0 => rows + cols
  };

  SimplexSolver() = default;
  explicit SimplexSolver(Options opt) : opt_(opt) {}

  LpSolution solve(const LpProblem& p) const {
    p.validate();
    const std::size_t n = p.n_cols(), m_user = p.n_rows();

    // --- map user variables onto shifted nonnegative internal columns ---
    struct VarMap {
      int kind;  // 0: x = l + t, 1: x = u - t, 2: x = t1 - t2 (free)
      std::size_t col, col2;
      double shift;
    };
    std::vector<VarMap> vmap(n);
    std::size_t nc = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double l = p.lower(j), u = p.upper(j);
      if (std::isfinite(l)) {
        vmap[j] = {0, nc++, 0, l};
      } else if (std::isfinite(u)) {
        vmap[j] = {1, nc++, 0, u};
      } else {
        vmap[j] = {2, nc, nc + 1, 0.0};
        nc += 2;
      }
    }

    const bool maximize = p.sense == Sense::Max;

    // internal cost vector (min sense)
    std::vector<double> cost(nc, 0.0);
    double obj_offset = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double cj = maximize ? -p.c[j] : p.c[j];
      const auto& vm = vmap[j];
      if (vm.kind == 0) {
        cost[vm.col] += cj;
        obj_offset += cj * vm.shift;
      } else if (vm.kind == 1) {
        cost[vm.col] -= cj;
        obj_offset += cj * vm.shift;
      } else {
        cost[vm.col] += cj;
        cost[vm.col2] -= cj;
      }
    }

    // rows: user rows plus upper-bound rows t_j <= u_j - l_j
    struct IRow {
      std::vector<double> a;
      double b;
      RowSense sense;
      int user_row;   // -1 for bound rows
      double flip;    // +1 / -1 applied to reach b >= 0
    };
    std::vector<IRow> rows;
    rows.reserve(m_user + n);
    for (std::size_t i = 0; i < m_user; ++i) {
      IRow r{std::vector<double>(nc, 0.0), p.b[i], p.row_sense[i],
             static_cast<int>(i), 1.0};
      for (std::size_t j = 0; j < n; ++j) {
        const double a = p.A[i][j];
        if (a == 0.0) continue;
        const auto& vm = vmap[j];
        if (vm.kind == 0) {
          r.a[vm.col] += a;
          r.b -= a * vm.shift;
        } else if (vm.kind == 1) {
          r.a[vm.col] -= a;
          r.b -= a * vm.shift;
        } else {
          r.a[vm.col] += a;
          r.a[vm.col2] -= a;
        }
      }
      rows.push_back(std::move(r));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double l = p.lower(j), u = p.upper(j);
      if (vmap[j].kind == 0 && std::isfinite(u)) {
        IRow r{std::vector<double>(nc, 0.0), u - l, RowSense::LE, -1, 1.0};
        r.a[vmap[j].col] = 1.0;
        rows.push_back(std::move(r));
      }
    }
    for (auto& r : rows) {
      if (r.b < 0.0) {
        for (auto& a : r.a) a = -a;
        r.b = -r.b;
        r.flip = -1.0;
        r.sense = r.sense == RowSense::LE   ? RowSense::GE
                  : r.sense == RowSense::GE ? RowSense::LE
                                            : RowSense::EQ;
      }
    }

    // --- tableau: structural | slack/surplus | artificial ---
    const std::size_t m = rows.size();
    std::size_t n_slack = 0;
    for (const auto& r : rows)
      if (r.sense != RowSense::EQ) ++n_slack;

    lp_detail::Tableau tb;
    tb.m = m;
    tb.n_struct = nc;
    tb.n_slack = n_slack;
    tb.t.assign(m * tb.width(), 0.0);
    tb.rhs.resize(m);
    tb.basis.assign(m, -1);
    tb.row_active.assign(m, 1);

    std::size_t slack_idx = 0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < nc; ++j) tb.at(i, j) = rows[i].a[j];
      tb.rhs[i] = rows[i].b;
      if (rows[i].sense != RowSense::EQ) {
        tb.at(i, nc + slack_idx) = rows[i].sense == RowSense::LE ? 1.0 : -1.0;
        ++slack_idx;
      }
      tb.at(i, tb.art_col(i)) = 1.0;  // artificial basis, also yields B^-1
      tb.basis[i] = static_cast<int>(tb.art_col(i));
    }

    const int max_iter =
        p.max_iterations > 0 ? p.max_iterations : 50 * static_cast<int>(m + nc);
    LpSolution sol;

    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1_cost(tb.width(), 0.0);
    for (std::size_t i = 0; i < m; ++i) phase1_cost[tb.art_col(i)] = 1.0;
    int iters = 0;
    if (!run_simplex(tb, phase1_cost, nc + n_slack, max_iter, iters, sol)) {
      throw IterationLimit("lp: phase-1 iteration limit (" +
                           std::to_string(max_iter) + ")");
    }
    double phase1_obj = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (static_cast<std::size_t>(tb.basis[i]) >= tb.art_col(0)) phase1_obj += tb.rhs[i];
    const double scale = 1.0 + max_abs_b(rows);
    if (phase1_obj > opt_.feas_tol * scale * 1e3) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = iters;
      return sol;
    }
    // Drive leftover artificials out of the basis; all-zero rows are redundant.
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<std::size_t>(tb.basis[i]) < tb.art_col(0)) continue;
      std::size_t pcol = tb.width();
      for (std::size_t j = 0; j < nc + n_slack; ++j) {
        if (std::abs(tb.at(i, j)) > 1e-8) {
          pcol = j;
          break;
        }
      }
      if (pcol == tb.width()) {
        tb.row_active[i] = 0;  // redundant constraint
      } else {
        lp_detail::pivot(tb, i, pcol);
      }
    }

    // Phase 2: original costs, artificials barred from entering.
    std::vector<double> phase2_cost(tb.width(), 0.0);
    for (std::size_t j = 0; j < nc; ++j) phase2_cost[j] = cost[j];
    if (!run_simplex(tb, phase2_cost, nc + n_slack, max_iter, iters, sol)) {
      throw IterationLimit("lp: phase-2 iteration limit (" +
                           std::to_string(max_iter) + ")");
    }
    sol.iterations = iters;
    if (sol.status == LpStatus::Unbounded) return sol;

    // --- recover primal solution ---
    std::vector<double> xi(nc, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t bj = static_cast<std::size_t>(tb.basis[i]);
      if (bj < nc) xi[bj] = tb.rhs[i];
    }
    sol.x.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& vm = vmap[j];
      if (vm.kind == 0)
        sol.x[j] = vm.shift + xi[vm.col];
      else if (vm.kind == 1)
        sol.x[j] = vm.shift - xi[vm.col];
      else
        sol.x[j] = xi[vm.col] - xi[vm.col2];
    }
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += p.c[j] * sol.x[j];
    sol.objective = obj;

    // --- duals: y = c_B * B^-1; the artificial block of the tableau is B^-1 ---
    sol.duals.assign(m_user, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (rows[i].user_row < 0) continue;
      double y = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t bj = static_cast<std::size_t>(tb.basis[k]);
        const double cb = bj < tb.width() ? phase2_cost[bj] : 0.0;
        if (cb != 0.0) y += cb * tb.at(k, tb.art_col(i));
      }
      y *= rows[i].flip;
      sol.duals[static_cast<std::size_t>(rows[i].user_row)] = maximize ? -y : y;
    }
    sol.status = LpStatus::Optimal;
    return sol;
  }

 private:
  struct IRowAbs {
    double v;
  };
  template <typename Rows>
  static double max_abs_b(const Rows& rows) {
    double v = 0.0;
    for (const auto& r : rows) v = std::max(v, std::abs(r.b));
    return v;
  }

  // Returns false on iteration limit; sets Unbounded status when detected.
  bool run_simplex(lp_detail::Tableau& tb, const std::vector<double>& cost,
                   std::size_t n_pivotable, int max_iter, int& iters,
                   LpSolution& sol) const {
    const std::size_t m = tb.m;
    bool bland = false;
    int stall = 0;
    const int stall_limit =
        opt_.stall_limit > 0 ? opt_.stall_limit
                             : static_cast<int>(m + n_pivotable);
    double last_obj = std::numeric_limits<double>::infinity();

    while (true) {
      if (iters >= max_iter) return false;
      // pricing: rc_j = c_j - c_B'(B^-1 A_j), the tableau column is B^-1 A_j
      std::size_t enter = tb.width();
      double best = -opt_.opt_tol;
      for (std::size_t j = 0; j < n_pivotable; ++j) {
        double zj = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t bj = static_cast<std::size_t>(tb.basis[i]);
          const double cb = cost[bj];
          if (cb != 0.0) zj += cb * tb.at(i, j);
        }
        const double rc = cost[j] - zj;
        if (bland) {
          if (rc < -opt_.opt_tol) {
            enter = j;
            break;
          }
        } else if (rc < best) {
          best = rc;
          enter = j;
        }
      }
      if (enter == tb.width()) return true;  // optimal

      // ratio test (ties to the smallest basis index under Bland, else row)
      std::size_t leave = m;
      double min_ratio = kInf;
      for (std::size_t i = 0; i < m; ++i) {
        if (!tb.row_active[i]) continue;
        const double a = tb.at(i, enter);
        if (a > 1e-10) {
          const double ratio = tb.rhs[i] / a;
          if (ratio < min_ratio - 1e-12 ||
              (ratio < min_ratio + 1e-12 && leave < m &&
               (bland ? tb.basis[i] < tb.basis[leave] : i < leave))) {
            min_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave == m) {
        sol.status = LpStatus::Unbounded;
        return true;
      }
      lp_detail::pivot(tb, leave, enter);
      ++iters;

      // stall detection -> Bland's rule (anti-cycling)
      double obj = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bj = static_cast<std::size_t>(tb.basis[i]);
        obj += cost[bj] * tb.rhs[i];
      }
      if (obj >= last_obj - 1e-12) {
        if (++stall > stall_limit && !bland) {
          bland = true;
          sol.used_blands_rule = true;
        }
      } else {
        stall = 0;
      }
      last_obj = obj;
    }
  }

  Options opt_{};
};

inline LpSolution solve_lp(const LpProblem& problem) {
  return SimplexSolver().solve(problem);
}

/// Independent quality check on a solution: primal feasibility, the duality
/// gap of the bounded-variable dual, and complementary slackness. All values
/// are reported as absolute violations.
struct LpCheck {
  double primal_infeas = 0.0;
  double duality_gap = 0.0;
  double comp_slack = 0.0;
};

inline LpCheck check_solution(const LpProblem& p, const LpSolution& s) {
  LpCheck out;
  const std::size_t m = p.n_rows(), n = p.n_cols();
  const double sgn = p.sense == Sense::Max ? -1.0 : 1.0;  // to min convention
  std::vector<double> row_val(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) v += p.A[i][j] * s.x[j];
    row_val[i] = v;
    double viol = 0.0;
    if (p.row_sense[i] == RowSense::LE) viol = v - p.b[i];
    else if (p.row_sense[i] == RowSense::GE) viol = p.b[i] - v;
    else viol = std::abs(v - p.b[i]);
    out.primal_infeas = std::max(out.primal_infeas, viol);
    // complementary slackness on rows: y_i * slack_i = 0
    if (p.row_sense[i] != RowSense::EQ)
      out.comp_slack = std::max(out.comp_slack,
                                std::abs(s.duals[i] * (p.b[i] - row_val[i])));
  }
  for (std::size_t j = 0; j < n; ++j) {
    out.primal_infeas = std::max(out.primal_infeas, p.lower(j) - s.x[j]);
    out.primal_infeas = std::max(out.primal_infeas, s.x[j] - p.upper(j));
  }
  // bounded-variable dual objective: y'b + sum_j rc_j * (active bound)
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < m; ++i) dual_obj += sgn * s.duals[i] * p.b[i];
  for (std::size_t j = 0; j < n; ++j) {
    double rc = sgn * p.c[j];
    for (std::size_t i = 0; i < m; ++i) rc -= sgn * s.duals[i] * p.A[i][j];
    if (std::abs(rc) < 1e-12) continue;
    const double bound = rc > 0.0 ? p.lower(j) : p.upper(j);
    if (std::isfinite(bound)) {
      dual_obj += rc * bound;
      // variable complementary slackness: rc != 0 => x at that bound
      out.comp_slack = std::max(out.comp_slack, std::abs(rc * (s.x[j] - bound)));
    } else {
      out.duality_gap = std::max(out.duality_gap, std::abs(rc));
    }
  }
  const double prim_obj = sgn * s.objective;
  out.duality_gap = std::max(
      out.duality_gap,
      std::abs(prim_obj - dual_obj) / (1.0 + std::abs(prim_obj)));
  return out;
}

/// Debug dump in CPLEX LP text format for external cross-checking.
inline void write_lp_format(const LpProblem& p, std::ostream& out) {
  out << (p.sense == Sense::Min ? "Minimize\n obj:" : "Maximize\n obj:");
  for (std::size_t j = 0; j < p.n_cols(); ++j)
    out << (p.c[j] >= 0 ? " + " : " - ") << std::abs(p.c[j]) << " x" << j;
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < p.n_rows(); ++i) {
    out << " c" << i << ":";
    for (std::size_t j = 0; j < p.n_cols(); ++j) {
      if (p.A[i][j] == 0.0) continue;
      out << (p.A[i][j] >= 0 ? " + " : " - ") << std::abs(p.A[i][j]) << " x" << j;
    }
    const char* rel = p.row_sense[i] == RowSense::LE   ? "<="
                      : p.row_sense[i] == RowSense::GE ? ">="
                                                       : "=";
    out << ' ' << rel << ' ' << p.b[i] << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < p.n_cols(); ++j) {
    const double l = p.lower(j), u = p.upper(j);
    out << ' ';
    if (std::isfinite(l)) out << l << " <= "; else out << "-inf <= ";
    out << 'x' << j;
    if (std::isfinite(u)) out << " <= " << u;
    out << '\n';
  }
  out << "End\n";
}

}  // namespace epfw

#endif  // EPFW_LP_HPP

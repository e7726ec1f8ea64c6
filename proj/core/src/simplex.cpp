#include "ladle/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ladle/error.hpp"

namespace ladle {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Tableau over columns [structural | slack | artificial | rhs]. Row i holds
// B^-1 A for the current basis; basis[i] is the column basic in row i.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * (cols + 1), 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double rhs(std::size_t i) const { return at(i, cols_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t row, std::size_t col) {
    const double p = at(row, col);
    for (std::size_t j = 0; j <= cols_; ++j) at(row, j) /= p;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(row, j);
      at(i, col) = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

enum class PhaseResult { Optimal, Unbounded, IterationLimit };

class SimplexRun {
 public:
  SimplexRun(Tableau& t, std::vector<std::size_t>& basis, const SimplexOptions& opt)
      : t_(t), basis_(basis), opt_(opt) {}

  // Minimizes cost over the columns with allowed[j] true.
  PhaseResult minimize(const std::vector<double>& cost, const std::vector<bool>& allowed,
                       std::size_t& iterations) {
    const std::size_t n = t_.cols();
    std::vector<double> reduced(n);
    while (true) {
      for (std::size_t j = 0; j < n; ++j) {
        double d = cost[j];
        for (std::size_t i = 0; i < t_.rows(); ++i) d -= cost[basis_[i]] * t_.at(i, j);
        reduced[j] = d;
      }
      // Bland: lowest-index improving column.
      std::size_t entering = kNone;
      for (std::size_t j = 0; j < n; ++j) {
        if (allowed[j] && reduced[j] < -opt_.pivot_tolerance) {
          entering = j;
          break;
        }
      }
      if (entering == kNone) return PhaseResult::Optimal;

      std::size_t leaving = kNone;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < t_.rows(); ++i) {
        const double a = t_.at(i, entering);
        if (a <= opt_.pivot_tolerance) continue;
        const double ratio = t_.rhs(i) / a;
        if (leaving == kNone || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
      if (leaving == kNone) return PhaseResult::Unbounded;
      if (++iterations > opt_.max_iterations) return PhaseResult::IterationLimit;
      t_.pivot(leaving, entering);
      basis_[leaving] = entering;
    }
  }

 private:
  Tableau& t_;
  std::vector<std::size_t>& basis_;
  const SimplexOptions& opt_;
};

}  // namespace

std::string_view to_string(LpStatus status) noexcept {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

LpSolution simplex_solve(const LinearProgram& lp, const SimplexOptions& options) {
  const std::size_t n = lp.cost.size();
  const std::size_t m_ub = lp.a_ub.size();
  if (lp.b_ub.size() != m_ub) throw Error(ErrorCode::InvalidArgument, "b_ub size mismatch");
  if (!lp.bounds.empty() && lp.bounds.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "bounds size mismatch");
  }
  for (const auto& row : lp.a_ub) {
    if (row.size() != n) throw Error(ErrorCode::InvalidArgument, "a_ub row size mismatch");
  }

  std::vector<VariableBounds> bounds = lp.bounds.empty() ? std::vector<VariableBounds>(n) : lp.bounds;
  LpSolution out;
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lower)) throw Error(ErrorCode::InvalidArgument, "lower bounds must be finite");
    if (b.upper < b.lower) {
      out.status = LpStatus::Infeasible;
      return out;
    }
  }

  // Shift x = lower + y, y >= 0; finite upper bounds become rows y_j <= u - l.
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t r = 0; r < m_ub; ++r) {
    double b = lp.b_ub[r];
    for (std::size_t j = 0; j < n; ++j) b -= lp.a_ub[r][j] * bounds[j].lower;
    rows.push_back(lp.a_ub[r]);
    rhs.push_back(b);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(bounds[j].upper)) continue;
    std::vector<double> row(n, 0.0);
    row[j] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(bounds[j].upper - bounds[j].lower);
  }
  const std::size_t m = rows.size();

  // Equilibrate rows so the pivot tolerance means the same thing everywhere.
  for (std::size_t r = 0; r < m; ++r) {
    double scale = 0.0;
    for (double a : rows[r]) scale = std::max(scale, std::abs(a));
    // An all-zero row keeps its artificial (if any), so phase 1 decides it.
    if (scale == 0.0) continue;
    for (double& a : rows[r]) a /= scale;
    rhs[r] /= scale;
  }

  std::vector<std::size_t> need_artificial;
  for (std::size_t r = 0; r < m; ++r) {
    if (rhs[r] < 0.0) need_artificial.push_back(r);
  }
  const std::size_t n_art = need_artificial.size();
  const std::size_t cols = n + m + n_art;
  Tableau t(m, cols);
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double sign = rhs[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t.at(r, j) = sign * rows[r][j];
    t.at(r, n + r) = sign;
    t.rhs(r) = sign * rhs[r];
    basis[r] = n + r;
  }
  for (std::size_t a = 0; a < n_art; ++a) {
    const std::size_t r = need_artificial[a];
    t.at(r, n + m + a) = 1.0;
    basis[r] = n + m + a;
  }

  SimplexRun run(t, basis, options);
  double rhs_scale = 1.0;
  for (double b : rhs) rhs_scale = std::max(rhs_scale, std::abs(b));

  auto extract = [&]() {
    std::vector<double> y(cols, 0.0);
    for (std::size_t r = 0; r < m; ++r) y[basis[r]] = t.rhs(r);
    out.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double v = std::max(0.0, y[j]);
      if (std::isfinite(bounds[j].upper)) v = std::min(v, bounds[j].upper - bounds[j].lower);
      out.x[j] = bounds[j].lower + v;
    }
    out.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) out.objective += lp.cost[j] * out.x[j];
    out.row_excess.assign(m_ub, 0.0);
    for (std::size_t r = 0; r < m_ub; ++r) {
      double activity = 0.0;
      for (std::size_t j = 0; j < n; ++j) activity += lp.a_ub[r][j] * out.x[j];
      out.row_excess[r] = activity - lp.b_ub[r];
    }
  };

  if (n_art > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t a = 0; a < n_art; ++a) phase1[n + m + a] = 1.0;
    std::vector<bool> allowed(cols, true);
    const auto result = run.minimize(phase1, allowed, out.iterations);
    if (result == PhaseResult::IterationLimit) {
      out.status = LpStatus::IterationLimit;
      extract();
      return out;
    }
    double infeasibility = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] >= n + m) infeasibility += t.rhs(r);
    }
    if (infeasibility > options.feasibility_tolerance * rhs_scale) {
      out.status = LpStatus::Infeasible;
      extract();
      return out;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j) {
        if (std::abs(t.at(r, j)) > options.pivot_tolerance) {
          t.pivot(r, j);
          basis[r] = j;
          break;
        }
      }
    }
  }
  std::vector<double> phase2(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = lp.cost[j];
  std::vector<bool> allowed(cols, true);
  for (std::size_t a = 0; a < n_art; ++a) allowed[n + m + a] = false;
  const auto result = run.minimize(phase2, allowed, out.iterations);
  extract();
  switch (result) {
    case PhaseResult::Optimal: out.status = LpStatus::Optimal; break;
    case PhaseResult::Unbounded: out.status = LpStatus::Unbounded; break;
    case PhaseResult::IterationLimit: out.status = LpStatus::IterationLimit; break;
  }
  return out;
}

}  // namespace ladle

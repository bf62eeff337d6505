#include "relaybf/gp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "relaybf/errors.hpp"

namespace relaybf::gp {

namespace {

constexpr double kVarFloor = 1e-12;
constexpr double kVarCeil = 1e12;
constexpr double kSlackCeil = 1e32;     // phase-1 slack gets extra headroom
constexpr double kGapTol = 1e-8;        // barrier duality-gap target
constexpr double kNewtonTol = 1e-10;    // Newton decrement^2 / 2
constexpr double kLineAlpha = 0.3;
constexpr double kLineBeta = 0.8;
constexpr int kNewtonCap = 500;

void check_monomial(const Monomial& m, int num_vars, const char* where) {
  if (!(m.coefficient > 0.0) || !std::isfinite(m.coefficient)) {
    throw InvalidInputError(std::string(where) + ": monomial coefficient must be positive and finite");
  }
  if (m.exponents.size() != num_vars || !m.exponents.array().isFinite().all()) {
    throw InvalidInputError(std::string(where) + ": bad exponent vector");
  }
}

// One constraint in log variables: f(y) = log sum_j exp(b_j + a_j . y) <= 0.
struct LogConstraint {
  Eigen::MatrixXd a;  // term exponents, one row per term
  Eigen::VectorXd b;  // log coefficients

  double value(const Eigen::VectorXd& y) const {
    Eigen::VectorXd z = b + a * y;
    const double zmax = z.maxCoeff();
    return zmax + std::log((z.array() - zmax).exp().sum());
  }

  // value, gradient and Hessian contribution in one pass
  double eval(const Eigen::VectorXd& y, Eigen::VectorXd& grad,
              Eigen::MatrixXd& hess) const {
    Eigen::VectorXd z = b + a * y;
    const double zmax = z.maxCoeff();
    Eigen::VectorXd theta = (z.array() - zmax).exp();
    const double s = theta.sum();
    theta /= s;
    grad = a.transpose() * theta;
    hess = a.transpose() * theta.asDiagonal() * a - grad * grad.transpose();
    return zmax + std::log(s);
  }
};

LogConstraint to_log(const Posynomial& p) {
  LogConstraint lc;
  const Eigen::Index n = p.terms.front().exponents.size();
  lc.a.resize(p.terms.size(), n);
  lc.b.resize(p.terms.size());
  for (size_t j = 0; j < p.terms.size(); ++j) {
    lc.a.row(j) = p.terms[j].exponents;
    lc.b(j) = std::log(p.terms[j].coefficient);
  }
  return lc;
}

struct BarrierProblem {
  Eigen::VectorXd obj;  // linear objective in log variables
  std::vector<LogConstraint> cons;
  Eigen::VectorXd lower, upper;  // per-variable log bounds
};

struct BarrierState {
  Eigen::VectorXd y;
  int newton_iterations = 0;
  bool max_iter = false;
  // optional stage-level early exit (used by phase 1 once the slack is
  // decisively below one)
  std::function<bool(const Eigen::VectorXd&)> early_stop;
};

bool strictly_feasible(const BarrierProblem& bp, const Eigen::VectorXd& y) {
  if (((y - bp.lower).array() <= 0.0).any() || ((bp.upper - y).array() <= 0.0).any()) {
    return false;
  }
  for (const auto& c : bp.cons) {
    if (!(c.value(y) < 0.0)) return false;
  }
  return true;
}

// Sum of the barrier log terms; +inf outside the domain.  Kept separate
// from the (possibly huge) scaled linear objective so line-search decrease
// tests stay accurate at large barrier parameters.
double barrier_logs(const BarrierProblem& bp, const Eigen::VectorXd& y) {
  double b = 0.0;
  for (const auto& c : bp.cons) {
    const double f = c.value(y);
    if (!(f < 0.0)) return std::numeric_limits<double>::infinity();
    b -= std::log(-f);
  }
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double du = bp.upper(k) - y(k);
    const double dl = y(k) - bp.lower(k);
    if (!(du > 0.0) || !(dl > 0.0)) return std::numeric_limits<double>::infinity();
    b -= std::log(du) + std::log(dl);
  }
  return b;
}

// Centering followed by barrier-parameter increase; y must start strictly
// feasible.
void barrier_minimize(const BarrierProblem& bp, BarrierState& st) {
  const Eigen::Index n = st.y.size();
  const double m_total = double(bp.cons.size()) + 2.0 * double(n);
  constexpr int kStageCap = 100;
  Eigen::VectorXd grad(n), cgrad(n);
  Eigen::MatrixXd hess(n, n), chess(n, n);
  for (double t_bar = 1.0;; t_bar *= 10.0) {
    for (int stage_iter = 0; stage_iter < kStageCap; ++stage_iter) {
      grad = t_bar * bp.obj;
      hess.setZero();
      bool domain_ok = true;
      for (const auto& c : bp.cons) {
        const double f = c.eval(st.y, cgrad, chess);
        if (!(f < 0.0)) { domain_ok = false; break; }
        grad += cgrad / (-f);
        hess += cgrad * cgrad.transpose() / (f * f) + chess / (-f);
      }
      if (!domain_ok) {
        // line search guarantees this cannot happen from a feasible start
        st.max_iter = true;
        return;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double du = bp.upper(k) - st.y(k);
        const double dl = st.y(k) - bp.lower(k);
        grad(k) += 1.0 / du - 1.0 / dl;
        hess(k, k) += 1.0 / (du * du) + 1.0 / (dl * dl);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(hess);
      Eigen::VectorXd step;
      if (llt.info() == Eigen::Success) {
        step = llt.solve(-grad);
      } else {
        Eigen::MatrixXd reg = hess;
        reg.diagonal().array() += 1e-10 * (1.0 + hess.diagonal().maxCoeff());
        step = Eigen::LDLT<Eigen::MatrixXd>(reg).solve(-grad);
      }
      const double descent = grad.dot(step);  // -lambda^2
      if (!(descent < -2.0 * kNewtonTol)) {
        break;  // centered for this t_bar
      }
      if (st.newton_iterations >= kNewtonCap) {
        st.max_iter = true;
        return;
      }
      ++st.newton_iterations;
      // backtracking on the decrease, with the scaled linear term applied
      // exactly instead of differenced
      const double logs0 = barrier_logs(bp, st.y);
      const double obj_dir = bp.obj.dot(step);
      double s = 1.0;
      int backtracks = 0;
      while (backtracks < 200) {
        const double logs = barrier_logs(bp, st.y + s * step);
        const double decrease = t_bar * s * obj_dir + (logs - logs0);
        if (decrease <= kLineAlpha * s * descent) break;
        s *= kLineBeta;
        ++backtracks;
      }
      if (backtracks >= 200) break;  // stalled at numerical precision
      st.y += s * step;
    }
    if (st.early_stop && st.early_stop(st.y)) return;
    if (m_total / t_bar < kGapTol) return;
  }
}

bool near_bound(double y, double lo, double hi) {
  return y - lo < 1e-6 || hi - y < 1e-6;
}

}  // namespace

Monomial constant(int num_vars, double c) {
  return Monomial{c, Eigen::VectorXd::Zero(num_vars)};
}

Monomial variable(int num_vars, int index, double exponent, double coefficient) {
  Monomial m{coefficient, Eigen::VectorXd::Zero(num_vars)};
  m.exponents(index) = exponent;
  return m;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  return Monomial{a.coefficient * b.coefficient, a.exponents + b.exponents};
}

Monomial operator/(const Monomial& a, const Monomial& b) {
  return Monomial{a.coefficient / b.coefficient, a.exponents - b.exponents};
}

Monomial operator*(double c, const Monomial& a) {
  return Monomial{c * a.coefficient, a.exponents};
}

Posynomial to_posynomial(const Monomial& a) { return Posynomial{{a}}; }

Posynomial operator+(const Posynomial& a, const Posynomial& b) {
  Posynomial r = a;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  return r;
}

Posynomial& operator+=(Posynomial& a, const Monomial& b) {
  a.terms.push_back(b);
  return a;
}

Posynomial& operator+=(Posynomial& a, const Posynomial& b) {
  a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
  return a;
}

Posynomial operator*(const Posynomial& a, const Monomial& b) {
  Posynomial r = a;
  for (auto& t : r.terms) t = t * b;
  return r;
}

Posynomial operator*(const Posynomial& a, const Posynomial& b) {
  Posynomial r;
  r.terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) r.terms.push_back(ta * tb);
  return r;
}

Posynomial operator/(const Posynomial& a, const Monomial& b) {
  Posynomial r = a;
  for (auto& t : r.terms) t = t / b;
  return r;
}

Posynomial normalize(const Posynomial& lhs, const Monomial& rhs) {
  if (lhs.terms.empty()) throw InvalidInputError("normalize: empty posynomial");
  return lhs / rhs;
}

double evaluate(const Monomial& m, const Eigen::VectorXd& x) {
  if (x.size() != m.exponents.size()) {
    throw InvalidInputError("evaluate: wrong vector length");
  }
  if ((x.array() <= 0.0).any()) {
    throw InvalidInputError("evaluate: variables must be strictly positive");
  }
  return m.coefficient * std::exp((m.exponents.array() * x.array().log()).sum());
}

double evaluate(const Posynomial& p, const Eigen::VectorXd& x) {
  if (p.terms.empty()) throw InvalidInputError("evaluate: empty posynomial");
  double s = 0.0;
  for (const auto& t : p.terms) s += evaluate(t, x);
  return s;
}

GpProblem make_min_problem(int num_vars, const Posynomial& objective,
                           std::vector<Posynomial> constraints,
                           std::vector<std::string> var_names) {
  if (objective.terms.empty()) {
    throw InvalidInputError("make_min_problem: empty objective");
  }
  GpProblem prob;
  if (objective.terms.size() == 1) {
    prob.num_vars = num_vars;
    prob.objective = objective.terms.front();
    prob.constraints = std::move(constraints);
    prob.var_names = std::move(var_names);
    return prob;
  }
  // epigraph rewrite: min t with objective/t <= 1
  prob.num_vars = num_vars + 1;
  auto lift = [num_vars](const Monomial& m) {
    Monomial out{m.coefficient, Eigen::VectorXd::Zero(num_vars + 1)};
    out.exponents.head(num_vars) = m.exponents;
    return out;
  };
  prob.objective = variable(num_vars + 1, num_vars);
  Posynomial epi;
  for (const auto& t : objective.terms) {
    epi += lift(t) / prob.objective;
  }
  prob.constraints.push_back(std::move(epi));
  for (auto& c : constraints) {
    Posynomial lifted;
    for (const auto& t : c.terms) lifted += lift(t);
    prob.constraints.push_back(std::move(lifted));
  }
  prob.var_names = std::move(var_names);
  prob.var_names.resize(prob.num_vars);
  if (prob.var_names.back().empty()) prob.var_names.back() = "t_epi";
  return prob;
}

GpSolution solve(const GpProblem& prob) {
  if (prob.num_vars < 1) throw InvalidInputError("solve: no variables");
  check_monomial(prob.objective, prob.num_vars, "solve objective");
  for (const auto& c : prob.constraints) {
    if (c.terms.empty()) throw InvalidInputError("solve: empty constraint posynomial");
    for (const auto& t : c.terms) check_monomial(t, prob.num_vars, "solve constraint");
  }

  const int n = prob.num_vars;
  BarrierProblem bp;
  bp.obj = prob.objective.exponents;
  bp.lower = Eigen::VectorXd::Constant(n, std::log(kVarFloor));
  bp.upper = Eigen::VectorXd::Constant(n, std::log(kVarCeil));
  for (const auto& c : prob.constraints) bp.cons.push_back(to_log(c));

  GpSolution sol;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  int newton_total = 0;

  if (!strictly_feasible(bp, y)) {
    // phase 1: minimize slack s with every posynomial <= s
    BarrierProblem p1;
    p1.obj = Eigen::VectorXd::Zero(n + 1);
    p1.obj(n) = 1.0;
    p1.lower = Eigen::VectorXd::Constant(n + 1, std::log(kVarFloor));
    p1.upper = Eigen::VectorXd::Constant(n + 1, std::log(kVarCeil));
    p1.upper(n) = std::log(kSlackCeil);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& c : bp.cons) {
      LogConstraint lc;
      lc.a.resize(c.a.rows(), n + 1);
      lc.a.leftCols(n) = c.a;
      lc.a.col(n).setConstant(-1.0);
      lc.b = c.b;
      worst = std::max(worst, c.value(y));
      p1.cons.push_back(std::move(lc));
    }
    BarrierState st1;
    st1.y = Eigen::VectorXd::Zero(n + 1);
    st1.y(n) = std::min(worst + std::log(2.0), std::log(kSlackCeil) - 1.0);
    st1.early_stop = [n](const Eigen::VectorXd& y) {
      return y(n) < std::log(0.5);  // decisively feasible
    };
    barrier_minimize(p1, st1);
    newton_total += st1.newton_iterations;
    if (st1.max_iter) {
      sol.status = GpStatus::max_iter;
      sol.variables = st1.y.head(n).array().exp();
      sol.objective_value = evaluate(prob.objective, sol.variables);
      sol.newton_iterations = newton_total;
      return sol;
    }
    const double slack = std::exp(st1.y(n));
    y = st1.y.head(n);
    if (slack > 1.0 + 1e-8 || !strictly_feasible(bp, y)) {
      sol.status = GpStatus::infeasible;
      sol.variables = y.array().exp();
      sol.objective_value = evaluate(prob.objective, sol.variables);
      sol.newton_iterations = newton_total;
      return sol;
    }
  }

  BarrierState st;
  st.y = y;
  barrier_minimize(bp, st);
  newton_total += st.newton_iterations;

  sol.variables = st.y.array().exp();
  sol.objective_value = evaluate(prob.objective, sol.variables);
  sol.newton_iterations = newton_total;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (near_bound(st.y(k), bp.lower(k), bp.upper(k))) sol.hit_bound = true;
  }
  if (st.max_iter) {
    sol.status = GpStatus::max_iter;
    return sol;
  }
  bool objective_var_at_bound = false;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (prob.objective.exponents(k) != 0.0 &&
        near_bound(st.y(k), bp.lower(k), bp.upper(k))) {
      objective_var_at_bound = true;
    }
  }
  if (objective_var_at_bound && sol.objective_value <= kVarFloor * (1.0 + 1e-6)) {
    sol.status = GpStatus::unbounded;
  } else {
    sol.status = GpStatus::optimal;
  }
  return sol;
}

}  // namespace relaybf::gp

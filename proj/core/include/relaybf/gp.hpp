#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace relaybf::gp {

// A positive-coefficient power-law term c * prod_i x_i^{a_i} over strictly
// positive variables.
struct Monomial {
  double coefficient = 1.0;
  Eigen::VectorXd exponents;
};

// Sum of monomials.  Posynomials are closed under addition, multiplication
// and division by a monomial, which is all the modeling layer needs.
struct Posynomial {
  std::vector<Monomial> terms;
};

enum class GpStatus { optimal, infeasible, unbounded, max_iter };

struct GpProblem {
  int num_vars = 0;
  Monomial objective;                   // monomial objective, minimized
  std::vector<Posynomial> constraints;  // each constraint means posy(x) <= 1
  std::vector<std::string> var_names;
};

struct GpSolution {
  GpStatus status = GpStatus::max_iter;
  Eigen::VectorXd variables;     // strictly positive when status == optimal
  double objective_value = 0.0;
  int newton_iterations = 0;
  bool hit_bound = false;        // some variable ended at the 1e-12/1e12 box
};

Monomial constant(int num_vars, double c);
Monomial variable(int num_vars, int index, double exponent = 1.0,
                  double coefficient = 1.0);

Monomial operator*(const Monomial& a, const Monomial& b);
Monomial operator/(const Monomial& a, const Monomial& b);
Monomial operator*(double c, const Monomial& a);

Posynomial to_posynomial(const Monomial& a);
Posynomial operator+(const Posynomial& a, const Posynomial& b);
Posynomial& operator+=(Posynomial& a, const Monomial& b);
Posynomial& operator+=(Posynomial& a, const Posynomial& b);
Posynomial operator*(const Posynomial& a, const Monomial& b);
Posynomial operator*(const Posynomial& a, const Posynomial& b);
Posynomial operator/(const Posynomial& a, const Monomial& b);

/// Rewrites lhs <= rhs (posynomial vs monomial) into standard form
/// lhs/rhs <= 1.
Posynomial normalize(const Posynomial& lhs, const Monomial& rhs);

double evaluate(const Monomial& m, const Eigen::VectorXd& x);
double evaluate(const Posynomial& p, const Eigen::VectorXd& x);

/// Builds a standard-form problem minimizing a posynomial objective.  A
/// single-term objective stays monomial; otherwise an epigraph variable is
/// appended as the last variable with the constraint objective/t <= 1.
GpProblem make_min_problem(int num_vars, const Posynomial& objective,
                           std::vector<Posynomial> constraints,
                           std::vector<std::string> var_names = {});

/// Solves the GP by logarithmic change of variables and a log-barrier
/// interior-point method.  Infeasibility is detected with a phase-1 slack
/// problem; variables are kept inside [1e-12, 1e12].
GpSolution solve(const GpProblem& prob);

}  // namespace relaybf::gp

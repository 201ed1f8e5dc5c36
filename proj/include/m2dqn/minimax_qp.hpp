#pragma once

#include <Eigen/Core>

#include "m2dqn/qnet.hpp"

namespace m2dqn {

/// Group Jacobian: row j holds the gradient of group loss f_j.
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Linearised max-of-groups objective around the current parameters.
struct GroupObjective {
  Eigen::VectorXd losses;  // f, length N, each a mean of squares
  Jacobian jacobian;       // G, N x P

  Eigen::Index groups() const { return losses.size(); }
};

/// Weights on the probability simplex returned by the dual solver, with the
/// Frank-Wolfe duality gap certifying how far the objective can be from the
/// optimum.
struct DualSolution {
  Eigen::VectorXd lambda;
  double objective = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

struct DualSolverOptions {
  /// Stop once the duality gap certifies this absolute accuracy.
  double tolerance = 1e-10;
  /// Projected-gradient phase: stop when the relative objective change
  /// falls below this ...
  double relative_change = 1e-10;
  /// ... or after this many iterations.
  int max_iterations = 10000;
};

/// G G^T, the N x N matrix the dual works with (independent of P).
Eigen::MatrixXd gram_matrix(const Jacobian& jacobian);

/// 1/2 lambda^T (G G^T) lambda - f^T lambda.
double dual_objective(const GroupObjective& objective, const Eigen::VectorXd& lambda);
double dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& losses,
                      const Eigen::VectorXd& lambda);

/// Euclidean projection onto {x : x_i >= 0, sum x_i = 1} (sort-and-threshold).
Eigen::VectorXd project_onto_simplex(const Eigen::VectorXd& v);

/// Minimises the dual objective over the simplex.
///
/// Accelerated projected gradient with adaptive restart, started from the
/// best simplex vertex, followed by a working-set polish that solves the
/// KKT system on the identified support. If G G^T vanishes, every feasible
/// point has the same quadratic term and the result is the vertex at the
/// largest loss (lowest index on ties). Throws ContractViolation on
/// non-finite input or shape mismatch.
DualSolution solve_dual(const GroupObjective& objective, double tolerance);
DualSolution solve_dual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& losses,
                        const DualSolverOptions& options);

/// G^T lambda, the combined gradient. The update direction is its negation.
FlatVector combined_gradient(const GroupObjective& objective, const Eigen::VectorXd& lambda);

/// d = -G^T lambda.
FlatVector descent_direction(const GroupObjective& objective, const Eigen::VectorXd& lambda);

}  // namespace m2dqn

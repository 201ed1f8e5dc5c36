#include "m2dqn/minimax_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "m2dqn/errors.hpp"

namespace m2dqn {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ContractViolation(std::string("dual QP: non-finite entries in ") + what);
}

struct Evaluation {
  double objective;
  double gap;
};

// Objective and Frank-Wolfe gap x.g - min(g) with g = Qx - f. For a convex
// objective over the simplex the gap bounds objective(x) - optimum.
Evaluation evaluate(const Eigen::MatrixXd& gram, const Eigen::VectorXd& f, const Eigen::VectorXd& x) {
  const Eigen::VectorXd qx = gram * x;
  const double objective = 0.5 * x.dot(qx) - f.dot(x);
  const Eigen::VectorXd g = qx - f;
  return {objective, std::max(0.0, x.dot(g) - g.minCoeff())};
}

Eigen::VectorXd vertex(Eigen::Index n, Eigen::Index j) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[j] = 1.0;
  return e;
}

// Minimiser of the objective on the affine hull of the face spanned by
// `support`, or false when the restricted KKT system is inconsistent.
bool solve_on_face(const Eigen::MatrixXd& gram, const Eigen::VectorXd& f,
                   const std::vector<Eigen::Index>& support, Eigen::VectorXd& out) {
  const auto m = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = gram(support[a], support[b]);
    kkt(a, m) = 1.0;
    kkt(m, a) = 1.0;
    rhs[a] = f[support[a]];
  }
  rhs[m] = 1.0;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  const double residual = (kkt * sol - rhs).norm();
  if (!sol.allFinite() || residual > 1e-9 * (kkt.norm() * sol.norm() + rhs.norm())) return false;
  out = Eigen::VectorXd::Zero(gram.rows());
  for (Eigen::Index a = 0; a < m; ++a) out[support[a]] = sol[a];
  return true;
}

// Working-set refinement: repeatedly minimise on the current face, step back
// to feasibility when that leaves the simplex, and grow the face by the most
// violating coordinate.
Eigen::VectorXd polish(const Eigen::MatrixXd& gram, const Eigen::VectorXd& f, Eigen::VectorXd x,
                       double tolerance) {
  const Eigen::Index n = x.size();
  std::vector<bool> active(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) active[i] = x[i] > 0.0;

  for (Eigen::Index iter = 0; iter < 4 * n + 4; ++iter) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[i]) support.push_back(i);
    }
    Eigen::VectorXd z;
    if (support.empty() || !solve_on_face(gram, f, support, z)) break;

    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : support) {
      if (z[i] < 0.0) {
        const double ratio = x[i] / (x[i] - z[i]);
        if (ratio < step) {
          step = ratio;
          blocking = i;
        }
      }
    }
    if (blocking >= 0) {
      x += step * (z - x);
      for (Eigen::Index i : support) {
        if (x[i] <= 0.0 || i == blocking) {
          x[i] = 0.0;
          active[i] = false;
        }
      }
      x /= x.sum();
      continue;
    }

    x = z;
    const Eigen::VectorXd g = gram * x - f;
    Eigen::Index j;
    const double gmin = g.minCoeff(&j);
    if (x.dot(g) - gmin <= tolerance || active[j]) break;
    active[j] = true;
  }
  return x;
}

}  // namespace

Eigen::MatrixXd gram_matrix(const Jacobian& jacobian) {
  Eigen::MatrixXd gram(jacobian.rows(), jacobian.rows());
  gram.noalias() = jacobian * jacobian.transpose();
  return gram;
}

double dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& losses,
                      const Eigen::VectorXd& lambda) {
  if (gram.rows() != gram.cols() || gram.rows() != losses.size() || lambda.size() != losses.size()) {
    throw ContractViolation("dual_objective: dimension mismatch");
  }
  return 0.5 * lambda.dot(gram * lambda) - losses.dot(lambda);
}

double dual_objective(const GroupObjective& objective, const Eigen::VectorXd& lambda) {
  if (objective.jacobian.rows() != objective.losses.size()) {
    throw ContractViolation("dual_objective: jacobian rows do not match the number of groups");
  }
  return dual_objective(gram_matrix(objective.jacobian), objective.losses, lambda);
}

Eigen::VectorXd project_onto_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw ContractViolation("project_onto_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) threshold = candidate;
  }
  return (v.array() - threshold).cwiseMax(0.0).matrix();
}

DualSolution solve_dual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& losses,
                        const DualSolverOptions& options) {
  const Eigen::Index n = losses.size();
  if (n < 1) throw ContractViolation("solve_dual: need at least one group");
  if (gram.rows() != n || gram.cols() != n) throw ContractViolation("solve_dual: Gram matrix must be N x N");
  if (!(options.tolerance > 0.0)) throw ContractViolation("solve_dual: tolerance must be positive");
  check_finite(gram, "G");
  check_finite(losses, "f");

  DualSolution out;
  auto finish = [&](Eigen::VectorXd x) {
    x = x.cwiseMax(0.0);
    x /= x.sum();
    const Evaluation e = evaluate(gram, losses, x);
    out.lambda = std::move(x);
    out.objective = e.objective;
    out.gap = e.gap;
    return out;
  };

  if (n == 1) return finish(Eigen::VectorXd::Ones(1));

  if (gram.cwiseAbs().maxCoeff() == 0.0) {
    Eigen::Index j;
    losses.maxCoeff(&j);  // first maximum
    return finish(vertex(n, j));
  }

  // Start from the best vertex.
  Eigen::Index start = 0;
  double best_vertex = 0.5 * gram(0, 0) - losses[0];
  for (Eigen::Index j = 1; j < n; ++j) {
    const double value = 0.5 * gram(j, j) - losses[j];
    if (value < best_vertex) {
      best_vertex = value;
      start = j;
    }
  }

  const double lipschitz =
      std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff(),
               std::numeric_limits<double>::min());
  const double step = 1.0 / lipschitz;

  Eigen::VectorXd x = vertex(n, start);
  Eigen::VectorXd y = x;
  Evaluation current = evaluate(gram, losses, x);
  Eigen::VectorXd best = x;
  Evaluation best_eval = current;
  double momentum = 1.0;

  int iter = 0;
  while (best_eval.gap > options.tolerance && iter < options.max_iterations) {
    ++iter;
    const Eigen::VectorXd grad_y = gram * y - losses;
    const Eigen::VectorXd x_next = project_onto_simplex(y - step * grad_y);
    const Evaluation next = evaluate(gram, losses, x_next);
    if (next.objective < best_eval.objective ||
        (next.objective == best_eval.objective && next.gap < best_eval.gap)) {
      best = x_next;
      best_eval = next;
    }
    const double change = std::abs(next.objective - current.objective);
    if (next.objective > current.objective) {
      // Function-value restart: drop the momentum.
      momentum = 1.0;
      y = x_next;
    } else {
      const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x);
      momentum = momentum_next;
    }
    x = x_next;
    current = next;
    if (change <= options.relative_change * std::max(1.0, std::abs(current.objective))) break;
  }
  out.iterations = iter;

  if (best_eval.gap > options.tolerance) {
    const Eigen::VectorXd refined = polish(gram, losses, best, options.tolerance);
    if (refined.allFinite() && (refined.array() >= 0.0).all()) {
      const Evaluation e = evaluate(gram, losses, refined);
      if (e.objective < best_eval.objective || (e.objective == best_eval.objective && e.gap < best_eval.gap)) {
        best = refined;
        best_eval = e;
      }
    }
  }
  return finish(best);
}

DualSolution solve_dual(const GroupObjective& objective, double tolerance) {
  if (objective.jacobian.rows() != objective.losses.size()) {
    throw ContractViolation("solve_dual: jacobian rows do not match the number of groups");
  }
  check_finite(objective.jacobian, "G");
  DualSolverOptions options;
  options.tolerance = tolerance;
  return solve_dual(gram_matrix(objective.jacobian), objective.losses, options);
}

FlatVector combined_gradient(const GroupObjective& objective, const Eigen::VectorXd& lambda) {
  if (lambda.size() != objective.jacobian.rows()) {
    throw ContractViolation("combined_gradient: lambda length does not match the number of groups");
  }
  FlatVector out(objective.jacobian.cols());
  out.noalias() = objective.jacobian.transpose() * lambda;
  return out;
}

FlatVector descent_direction(const GroupObjective& objective, const Eigen::VectorXd& lambda) {
  return -combined_gradient(objective, lambda);
}

}  // namespace m2dqn

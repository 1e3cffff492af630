#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "opart/matrix.hpp"

namespace opart {

/// Soft assignment: row n distributes capacity h_n over the M objects.
struct AssignmentMatrix {
  Matrix entries;
  Vector capacities;

  /// Largest |row sum - h_n|.
  double row_residual() const;
  double min_entry() const { return entries.size() ? entries.minCoeff() : 0.0; }
  bool is_feasible(double tol = 1e-9) const;
};

enum class StepMode {
  paper,        // 1 / (2N)
  theoretical,  // 1 / L with L = lambda N + tau
  safe,         // min(paper, theoretical)
};

StepMode parse_step_mode(const std::string& name);
std::string to_string(StepMode mode);

/// Step size. Theoretical and safe modes fall back to the paper step when
/// lambda N + tau is zero.
double lipschitz_step(double lambda, double tau, std::size_t N, StepMode mode = StepMode::paper);

struct HyperParams {
  double alpha = -1.0;
  double beta = 100.0;
  double lambda_bar = 1.0;
  double tau_bar = 1.0;
  double lambda_scale = 1.0;
  double tau_scale = 0.0;
  StepMode step_mode = StepMode::theoretical;
  /// Explicit step; zero means "derive from step_mode".
  double step = 0.0;
  int max_iters = 1000;
  int scaling_samples = 50;

  double lambda() const { return lambda_scale * lambda_bar; }
  double tau() const { return tau_scale * tau_bar; }
};

/// Quadratic pull toward a prior assignment with per-entry weights. A uniform
/// weight tau reproduces (tau/2)||P - P_current||_F^2; larger weights on
/// selected entries act as curatorial locks.
struct ProximalTerm {
  Matrix target;
  Matrix weights;

  static ProximalTerm uniform(const Matrix& target, double tau);
};

struct ObjectiveTerms {
  double linear = 0.0;    // trace(C^T P)
  double capacity = 0.0;  // ||P^T 1 - k||^2
  double prior = 0.0;     // ||P - P_current||_F^2 (unweighted)
  double total = 0.0;
};

/// f(P) = trace(C^T P) + lambda/2 ||P^T 1 - k||^2 + 1/2 sum W .* (P - P_cur)^2
class AssignmentObjective {
 public:
  AssignmentObjective(Matrix cost, Vector object_capacity, double lambda,
                      std::optional<ProximalTerm> prior = std::nullopt);

  double value(const Matrix& P) const;
  ObjectiveTerms terms(const Matrix& P) const;
  Matrix gradient(const Matrix& P) const;
  /// Spectral norm of the gradient's linear part: lambda N + max weight.
  double lipschitz() const;

  const Matrix& cost() const noexcept { return cost_; }
  const Vector& object_capacity() const noexcept { return k_; }
  double lambda() const noexcept { return lambda_; }
  const std::optional<ProximalTerm>& prior() const noexcept { return prior_; }
  double max_prior_weight() const;

 private:
  void check_shape(const Matrix& P) const;

  Matrix cost_;
  Vector k_;
  double lambda_;
  std::optional<ProximalTerm> prior_;
};

double objective(const Matrix& P, const Matrix& C, const Vector& k, double lambda, double tau,
                 const Matrix* current = nullptr);
Matrix gradient(const Matrix& P, const Matrix& C, const Vector& k, double lambda, double tau,
                const Matrix* current = nullptr);

/// Euclidean projection of u onto {x >= 0, sum x = h} by sort and threshold.
Vector project_row(const Eigen::Ref<const Vector>& u, double h);
/// Projects every row n of P onto the simplex scaled by h_n, in place.
void project_rows(Matrix& P, const Vector& h);
/// Solves x_j = max(a_j (b_j - theta), 0) with sum x = h for slopes a_j > 0,
/// by the same sort-and-threshold recipe. All slopes 1 is project_row.
Vector project_row_scaled(const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Vector>& a, double h);

AssignmentMatrix init_uniform(const Vector& h, std::size_t M);
/// Each row uniform on the scaled simplex (normalized exponential spacings).
AssignmentMatrix init_random(const Vector& h, std::size_t M, std::uint64_t seed);

struct ScalingFactors {
  double lambda_scale = 0.0;
  double tau_scale = 0.0;
};

/// Mean over r uniform samples (init_random with seeds seed, seed+1, ...) of
/// f2/f1 and f3/f1, with f1 evaluated at each sample.
ScalingFactors scale_hyperparams(const Matrix& C, const Vector& h, const Vector& k,
                                 const Matrix* current, int r = 50, std::uint64_t seed = 0);

struct SolveOptions {
  double step = 0.0;
  int max_iters = 1000;
  bool early_stop = false;
  double early_stop_tol = 1e-12;
  int early_stop_window = 20;
  /// Prior entries weighted above this are applied by an exact proximal
  /// step after the gradient step instead of through the gradient, so a stiff
  /// lock does not force a tiny step. The step then only needs to respect
  /// the Lipschitz constant of the remaining terms.
  double implicit_weight_threshold = std::numeric_limits<double>::infinity();
  /// Called after each iteration with (iteration, objective).
  std::function<void(int, double)> progress;
};

struct SolveReport {
  AssignmentMatrix final;
  std::vector<double> objective_trace;
  double initial_objective = 0.0;
  ObjectiveTerms terms;
  int iterations = 0;
  double capacity_residual = 0.0;
  double step = 0.0;
  double lambda = 0.0;
  double tau = 0.0;
  std::string init_label;
};

/// Projected gradient descent from `init`; every iterate stays feasible.
SolveReport solve(const AssignmentObjective& objective, const AssignmentMatrix& init,
                  const SolveOptions& options, std::string init_label = {});

/// Convenience overload taking scaled hyperparameters directly.
SolveReport solve(const Matrix& C, const Vector& h, const Vector& k, const HyperParams& hyper,
                  const AssignmentMatrix& init, const Matrix* current = nullptr,
                  std::string init_label = {});

}  // namespace opart

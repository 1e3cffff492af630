#include "opart/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "opart/error.hpp"
#include "opart/rng.hpp"

namespace opart {

double AssignmentMatrix::row_residual() const {
  if (entries.rows() != capacities.size()) throw Error("capacity vector does not match rows");
  if (entries.rows() == 0) return 0.0;
  return (entries.rowwise().sum() - capacities).cwiseAbs().maxCoeff();
}

bool AssignmentMatrix::is_feasible(double tol) const {
  return entries.allFinite() && min_entry() >= -tol && row_residual() < tol;
}

StepMode parse_step_mode(const std::string& name) {
  if (name == "paper") return StepMode::paper;
  if (name == "theoretical") return StepMode::theoretical;
  if (name == "safe") return StepMode::safe;
  throw Error("unknown step mode '" + name + "' (expected paper, theoretical or safe)");
}

std::string to_string(StepMode mode) {
  switch (mode) {
    case StepMode::paper: return "paper";
    case StepMode::theoretical: return "theoretical";
    case StepMode::safe: return "safe";
  }
  return "paper";
}

double lipschitz_step(double lambda, double tau, std::size_t N, StepMode mode) {
  if (N == 0) throw Error("lipschitz_step: N must be at least 1");
  const double paper = 1.0 / (2.0 * static_cast<double>(N));
  const double L = lambda * static_cast<double>(N) + tau;
  if (mode == StepMode::paper || !(L > 0.0)) return paper;
  if (mode == StepMode::theoretical) return 1.0 / L;
  return std::min(paper, 1.0 / L);
}

ProximalTerm ProximalTerm::uniform(const Matrix& target, double tau) {
  return ProximalTerm{target, Matrix::Constant(target.rows(), target.cols(), tau)};
}

AssignmentObjective::AssignmentObjective(Matrix cost, Vector object_capacity, double lambda,
                                         std::optional<ProximalTerm> prior)
    : cost_(std::move(cost)), k_(std::move(object_capacity)), lambda_(lambda),
      prior_(std::move(prior)) {
  if (k_.size() != cost_.cols()) throw Error("object capacity length does not match columns");
  if (!(lambda_ >= 0.0)) throw Error("lambda must be nonnegative");
  if (prior_) {
    if (prior_->target.rows() != cost_.rows() || prior_->target.cols() != cost_.cols() ||
        prior_->weights.rows() != cost_.rows() || prior_->weights.cols() != cost_.cols()) {
      throw Error("prior assignment shape does not match cost matrix");
    }
    if (prior_->weights.size() && !(prior_->weights.minCoeff() >= 0.0)) {
      throw Error("prior weights must be nonnegative");
    }
  }
}

void AssignmentObjective::check_shape(const Matrix& P) const {
  if (P.rows() != cost_.rows() || P.cols() != cost_.cols()) {
    throw Error("assignment shape " + std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                " does not match cost " + std::to_string(cost_.rows()) + "x" +
                std::to_string(cost_.cols()));
  }
}

double AssignmentObjective::max_prior_weight() const {
  return prior_ && prior_->weights.size() ? prior_->weights.maxCoeff() : 0.0;
}

ObjectiveTerms AssignmentObjective::terms(const Matrix& P) const {
  check_shape(P);
  ObjectiveTerms t;
  t.linear = cost_.cwiseProduct(P).sum();
  t.capacity = (P.colwise().sum().transpose() - k_).squaredNorm();
  t.total = t.linear + 0.5 * lambda_ * t.capacity;
  if (prior_) {
    const Matrix diff = P - prior_->target;
    t.prior = diff.squaredNorm();
    t.total += 0.5 * prior_->weights.cwiseProduct(diff.cwiseProduct(diff)).sum();
  }
  return t;
}

double AssignmentObjective::value(const Matrix& P) const { return terms(P).total; }

Matrix AssignmentObjective::gradient(const Matrix& P) const {
  check_shape(P);
  Matrix g = cost_;
  // lambda * 1 (1^T P - k^T): the same correction on every row.
  const Eigen::RowVectorXd column_excess = P.colwise().sum() - k_.transpose();
  g.rowwise() += lambda_ * column_excess;
  if (prior_) g += prior_->weights.cwiseProduct(P - prior_->target);
  return g;
}

double AssignmentObjective::lipschitz() const {
  return lambda_ * static_cast<double>(cost_.rows()) + max_prior_weight();
}

namespace {

std::optional<ProximalTerm> uniform_prior(const Matrix* current, double tau) {
  if (!current) return std::nullopt;
  return ProximalTerm::uniform(*current, tau);
}

}  // namespace

double objective(const Matrix& P, const Matrix& C, const Vector& k, double lambda, double tau,
                 const Matrix* current) {
  if (!(tau >= 0.0)) throw Error("tau must be nonnegative");
  return AssignmentObjective(C, k, lambda, uniform_prior(current, tau)).value(P);
}

Matrix gradient(const Matrix& P, const Matrix& C, const Vector& k, double lambda, double tau,
                const Matrix* current) {
  if (!(tau >= 0.0)) throw Error("tau must be nonnegative");
  return AssignmentObjective(C, k, lambda, uniform_prior(current, tau)).gradient(P);
}

Vector project_row(const Eigen::Ref<const Vector>& u, double h) {
  if (u.size() == 0) throw Error("project_row: empty vector");
  if (!(h > 0.0)) throw Error("project_row: capacity must be positive");
  if (!u.allFinite()) throw Error("project_row: non-finite input");

  std::vector<double> sorted(u.data(), u.data() + u.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Largest K with (sum_{r<=K} u_r - h) / K < u_K; the condition holds on a
  // prefix of 1..M, so the last success is the answer.
  double cumulative = 0.0;
  double theta = sorted.front() - h;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - h) / static_cast<double>(k + 1);
    if (candidate < sorted[k]) theta = candidate;
  }
  return (u.array() - theta).cwiseMax(0.0).matrix();
}

Vector project_row_scaled(const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Vector>& a, double h) {
  if (b.size() == 0) throw Error("project_row_scaled: empty vector");
  if (a.size() != b.size()) throw Error("project_row_scaled: slope length does not match");
  if (!(h > 0.0)) throw Error("project_row_scaled: capacity must be positive");
  if (!b.allFinite() || !a.allFinite() || !(a.minCoeff() > 0.0)) {
    throw Error("project_row_scaled: slopes must be positive and inputs finite");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(b.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return b[x] > b[y]; });
  // sum_j a_j max(b_j - theta, 0) decreases in theta and is linear between
  // breakpoints; with the top K entries active, theta = (sum a b - h) / sum a.
  // As for the plain projection, the test b_K > theta_K holds on a prefix.
  double weighted = 0.0, slope = 0.0;
  double theta = b[order.front()] - h / a[order.front()];
  for (const auto j : order) {
    weighted += a[j] * b[j];
    slope += a[j];
    const double candidate = (weighted - h) / slope;
    if (candidate < b[j]) theta = candidate;
  }
  return (a.array() * (b.array() - theta)).cwiseMax(0.0).matrix();
}

void project_rows(Matrix& P, const Vector& h) {
  if (P.rows() != h.size()) throw Error("project_rows: capacity length does not match rows");
  for (Eigen::Index n = 0; n < P.rows(); ++n) {
    P.row(n) = project_row(P.row(n).transpose(), h[n]).transpose();
  }
}

AssignmentMatrix init_uniform(const Vector& h, std::size_t M) {
  if (M == 0) throw Error("init_uniform: M must be at least 1");
  AssignmentMatrix out{Matrix(h.size(), static_cast<Eigen::Index>(M)), h};
  for (Eigen::Index n = 0; n < h.size(); ++n) {
    out.entries.row(n).setConstant(h[n] / static_cast<double>(M));
  }
  return out;
}

AssignmentMatrix init_random(const Vector& h, std::size_t M, std::uint64_t seed) {
  if (M == 0) throw Error("init_random: M must be at least 1");
  Rng rng(seed);
  AssignmentMatrix out{Matrix(h.size(), static_cast<Eigen::Index>(M)), h};
  for (Eigen::Index n = 0; n < h.size(); ++n) {
    auto row = out.entries.row(n);
    for (Eigen::Index m = 0; m < row.size(); ++m) row[m] = rng.exponential();
    row *= h[n] / row.sum();
  }
  return out;
}

ScalingFactors scale_hyperparams(const Matrix& C, const Vector& h, const Vector& k,
                                 const Matrix* current, int r, std::uint64_t seed) {
  if (r < 1) throw Error("scale_hyperparams: r must be at least 1");
  const AssignmentObjective terms_only(C, k, 0.0,
                                       current ? std::optional(ProximalTerm::uniform(*current, 0.0))
                                               : std::nullopt);
  ScalingFactors s;
  for (int i = 0; i < r; ++i) {
    const auto sample = init_random(h, static_cast<std::size_t>(C.cols()),
                                    seed + static_cast<std::uint64_t>(i));
    const auto t = terms_only.terms(sample.entries);
    if (t.linear == 0.0) throw Error("degenerate scaling: f1 vanished on a sample");
    s.lambda_scale += t.capacity / t.linear;
    s.tau_scale += t.prior / t.linear;
  }
  s.lambda_scale /= r;
  s.tau_scale /= r;
  return s;
}

SolveReport solve(const AssignmentObjective& objective, const AssignmentMatrix& init,
                  const SolveOptions& options, std::string init_label) {
  if (!(options.step > 0.0)) throw Error("step size must be positive");
  if (options.max_iters < 1) throw Error("max_iters must be at least 1");
  if (init.entries.rows() != objective.cost().rows() ||
      init.entries.cols() != objective.cost().cols()) {
    throw Error("initial assignment shape does not match cost matrix");
  }
  if (!init.is_feasible(1e-9)) throw Error("infeasible initial assignment");

  SolveReport report;
  report.init_label = std::move(init_label);
  report.step = options.step;
  report.lambda = objective.lambda();
  report.tau = objective.max_prior_weight();
  report.initial_objective = objective.value(init.entries);
  report.objective_trace.reserve(static_cast<std::size_t>(options.max_iters));

  // Entries handled by the proximal step. For those, minimizing
  // |x - u|^2 / 2 + (step w / 2)(x - t)^2 over the row simplex gives
  // x = max(a (b - theta), 0) with a = 1 / (1 + step w) and b = u + step w t.
  std::vector<std::vector<Eigen::Index>> implicit(static_cast<std::size_t>(init.entries.rows()));
  bool any_implicit = false;
  if (const auto& prior = objective.prior()) {
    for (Eigen::Index n = 0; n < prior->weights.rows(); ++n) {
      for (Eigen::Index m = 0; m < prior->weights.cols(); ++m) {
        if (prior->weights(n, m) > options.implicit_weight_threshold) {
          implicit[static_cast<std::size_t>(n)].push_back(m);
          any_implicit = true;
        }
      }
    }
  }

  Matrix P = init.entries;
  const Vector& h = init.capacities;
  int flat_run = 0;
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    Matrix G = objective.gradient(P);
    if (any_implicit) {
      const auto& prior = *objective.prior();
      for (std::size_t n = 0; n < implicit.size(); ++n) {
        const auto r = static_cast<Eigen::Index>(n);
        for (const auto m : implicit[n]) G(r, m) -= prior.weights(r, m) * (P(r, m) - prior.target(r, m));
      }
    }
    P -= options.step * G;
    if (!P.allFinite()) {
      throw Error("non-finite iterate at iteration " + std::to_string(iter));
    }
    for (Eigen::Index n = 0; n < P.rows(); ++n) {
      const auto& cols = implicit[static_cast<std::size_t>(n)];
      if (cols.empty()) {
        P.row(n) = project_row(P.row(n).transpose(), h[n]).transpose();
        continue;
      }
      const auto& prior = *objective.prior();
      Vector b = P.row(n).transpose();
      Vector a = Vector::Ones(P.cols());
      for (const auto m : cols) {
        const double sw = options.step * prior.weights(n, m);
        a[m] = 1.0 / (1.0 + sw);
        b[m] += sw * prior.target(n, m);
      }
      P.row(n) = project_row_scaled(b, a, h[n]).transpose();
    }
    const double f = objective.value(P);
    if (!std::isfinite(f)) {
      throw Error("non-finite objective at iteration " + std::to_string(iter));
    }
    if (options.early_stop && !report.objective_trace.empty()) {
      const double delta = std::abs(f - report.objective_trace.back());
      flat_run = delta < options.early_stop_tol ? flat_run + 1 : 0;
    }
    report.objective_trace.push_back(f);
    report.iterations = iter;
    if (options.progress) options.progress(iter, f);
    if (options.early_stop && flat_run >= options.early_stop_window) break;
  }

  report.final = AssignmentMatrix{std::move(P), h};
  report.terms = objective.terms(report.final.entries);
  report.capacity_residual = std::sqrt(report.terms.capacity);
  return report;
}

SolveReport solve(const Matrix& C, const Vector& h, const Vector& k, const HyperParams& hyper,
                  const AssignmentMatrix& init, const Matrix* current, std::string init_label) {
  const double tau = current ? hyper.tau() : 0.0;
  const AssignmentObjective objective(C, k, hyper.lambda(), uniform_prior(current, tau));
  SolveOptions options;
  options.max_iters = hyper.max_iters;
  options.step = hyper.step > 0.0
                     ? hyper.step
                     : lipschitz_step(hyper.lambda(), tau, static_cast<std::size_t>(C.rows()),
                                      hyper.step_mode);
  if (init.capacities.size() != h.size() || init.capacities != h) {
    throw Error("initial assignment capacities differ from h");
  }
  return solve(objective, init, options, std::move(init_label));
}

}  // namespace opart

#include "opart/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "opart/error.hpp"
#include "opart/io_format.hpp"

namespace opart {

Matrix similarity(const SolutionFamily& family, double cap) {
  const auto r = static_cast<Eigen::Index>(family.matrices.size());
  if (r < 2) throw Error("similarity needs at least two matrices");
  if (!(cap > 0.0)) throw Error("similarity cap must be positive");
  for (const auto& P : family.matrices) {
    if (P.rows() != family.matrices.front().rows() || P.cols() != family.matrices.front().cols()) {
      throw Error("solution family matrices differ in shape");
    }
  }
  Matrix W = Matrix::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      const double l1 = (family.matrices[static_cast<std::size_t>(i)] -
                         family.matrices[static_cast<std::size_t>(j)])
                            .cwiseAbs()
                            .sum();
      const double w = l1 > 0.0 ? std::min(1.0 / l1, cap) : cap;
      W(i, j) = w;
      W(j, i) = w;
    }
  }
  return W;
}

Matrix spectral_embed(const Matrix& W, int dim) {
  const auto r = W.rows();
  if (W.cols() != r) throw Error("similarity matrix must be square");
  if (dim < 1 || dim >= r) throw Error("embedding dimension must lie in [1, r)");
  const Vector degree = W.rowwise().sum();
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!(degree[i] > 0.0)) throw Error("isolated point in similarity matrix at index " + std::to_string(i));
  }
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd normalized = inv_sqrt.asDiagonal() * W * inv_sqrt.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");

  // Eigenvalues ascend; take the last `dim` columns, largest first.
  Matrix coords(r, dim);
  for (int c = 0; c < dim; ++c) coords.col(c) = eig.eigenvectors().col(r - 1 - c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double norm = coords.row(i).norm();
    if (norm > 0.0) coords.row(i) /= norm;
  }
  for (int c = 0; c < dim; ++c) {
    Eigen::Index arg = 0;
    coords.col(c).cwiseAbs().maxCoeff(&arg);
    if (coords(arg, c) < 0.0) coords.col(c) *= -1.0;
  }
  return coords;
}

std::vector<int> kmeans(const Matrix& points, int k, int max_iters) {
  const auto n = points.rows();
  if (k < 1 || k > n) throw Error("kmeans: k must lie in [1, number of points]");
  std::vector<Eigen::Index> seeds{0};
  while (static_cast<int>(seeds.size()) < k) {
    Eigen::Index best = 0;
    double best_dist = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (auto s : seeds) nearest = std::min(nearest, (points.row(i) - points.row(s)).squaredNorm());
      if (nearest > best_dist) {
        best_dist = nearest;
        best = i;
      }
    }
    seeds.push_back(best);
  }
  Matrix centers(k, points.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = points.row(seeds[static_cast<std::size_t>(c)]);

  std::vector<int> label(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_dist) {
          best_dist = d;
          best = c;
        }
      }
      if (label[static_cast<std::size_t>(i)] != best) {
        label[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (label[static_cast<std::size_t>(i)] == c) {
          sum += points.row(i);
          ++count;
        }
      }
      if (count) centers.row(c) = sum / count;
    }
  }
  return label;
}

std::vector<SweepCell> sweep_grid(const Dataset& dataset, const SweepSpec& spec,
                                  const std::vector<OccupancyAssignment>& rounds,
                                  const std::vector<GroupSpec>& groups) {
  if (spec.betas.empty() || spec.lambda_bars.empty() || spec.tau_bars.empty()) {
    throw Error("sweep lists must be nonempty");
  }
  std::vector<SweepCell> cells;
  for (double beta : spec.betas) {
    for (double lambda_bar : spec.lambda_bars) {
      for (double tau_bar : spec.tau_bars) {
        SweepCell cell;
        cell.beta = beta;
        cell.lambda_bar = lambda_bar;
        cell.tau_bar = tau_bar;
        cells.push_back(std::move(cell));
      }
    }
  }

  // One problem per beta; the cost matrix depends on nothing else.
  std::map<double, Problem> problems;
  std::map<double, std::string> problem_errors;
  for (double beta : spec.betas) {
    if (problems.count(beta) || problem_errors.count(beta)) continue;
    try {
      CostParams params = spec.cost;
      params.beta = beta;
      problems.emplace(beta, build_problem(dataset, params, spec.occupancy_seed, spec.filling));
    } catch (const std::exception& e) {
      problem_errors[beta] = e.what();
    }
  }

  const auto collection = dataset.collection();
  auto evaluate = [&](SweepCell& cell) {
    const auto err = problem_errors.find(cell.beta);
    if (err != problem_errors.end()) {
      cell.error = err->second;
      return;
    }
    try {
      RunConfig config = spec.base;
      config.hyper.beta = cell.beta;
      config.hyper.lambda_bar = cell.lambda_bar;
      config.hyper.tau_bar = cell.tau_bar;
      cell.run = run_solve(problems.at(cell.beta), config);
      for (const auto& g : groups) {
        const ResolvedGroup group(g, dataset.schema);
        double total = 0.0;
        for (const auto& round : rounds) {
          total += group_expectations(dataset.users, round, cell.run.report.final.entries,
                                      collection, group)
                       .unfairness();
        }
        cell.unfairness.push_back(total / static_cast<double>(rounds.size()));
      }
      cell.valid = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));
  if (rounds.empty()) throw Error("sweep needs at least one fairness round");
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) evaluate(cells[i]);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return cells;
}

SolutionFamily family_from_sweep(const std::vector<SweepCell>& cells) {
  SolutionFamily family;
  for (const auto& c : cells) {
    if (!c.valid) continue;
    family.matrices.push_back(c.run.report.final.entries);
    family.labels.push_back({c.beta, c.lambda_bar, c.tau_bar});
  }
  return family;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     const std::vector<std::string>& group_labels) {
  std::vector<std::string> header{"beta", "lambda_bar", "tau_bar", "valid",
                                  "objective", "capacity_residual", "prior_distance"};
  for (const auto& g : group_labels) header.push_back("U_" + g);
  header.emplace_back("error");
  write_csv_row(out, header);
  for (const auto& c : cells) {
    std::vector<std::string> row{format_double(c.beta), format_double(c.lambda_bar),
                                 format_double(c.tau_bar), c.valid ? "1" : "0"};
    if (c.valid) {
      row.push_back(format_double(c.run.report.terms.total));
      row.push_back(format_double(c.run.report.capacity_residual));
      row.push_back(format_double(std::sqrt(c.run.report.terms.prior)));
      for (double u : c.unfairness) row.push_back(format_double(u));
    } else {
      row.insert(row.end(), 3 + group_labels.size(), "");
    }
    row.push_back(c.error);
    write_csv_row(out, row);
  }
}

void write_embedding_csv(std::ostream& out, const Matrix& coords, const SolutionFamily& family,
                         const std::vector<int>& clusters) {
  if (!clusters.empty() && clusters.size() != static_cast<std::size_t>(coords.rows())) {
    throw Error("one cluster label per embedded point expected");
  }
  std::vector<std::string> header{"index", "beta", "lambda_bar", "tau_bar"};
  for (Eigen::Index c = 0; c < coords.cols(); ++c) header.push_back("x" + std::to_string(c));
  if (!clusters.empty()) header.emplace_back("cluster");
  write_csv_row(out, header);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const auto& label = family.labels.at(static_cast<std::size_t>(i));
    std::vector<std::string> row{std::to_string(i), format_double(label[0]),
                                 format_double(label[1]), format_double(label[2])};
    for (Eigen::Index c = 0; c < coords.cols(); ++c) row.push_back(format_double(coords(i, c)));
    if (!clusters.empty()) row.push_back(std::to_string(clusters[static_cast<std::size_t>(i)]));
    write_csv_row(out, row);
  }
}

std::string embedding_plot_script(const std::string& csv_name) {
  return R"PY(#!/usr/bin/env python3
"""Scatter plot of the spectral embedding of swept optimal assignments."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, ")PY" +
         csv_name + R"PY(")
with open(path) as f:
    rows = list(csv.DictReader(f))

fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
for ax, key, title in ((axes[0], "tau_bar", "colored by tau_bar"),
                       (axes[1], "beta", "colored by beta")):
    values = sorted({float(r[key]) for r in rows})
    cmap = plt.get_cmap("viridis", max(len(values), 2))
    for i, v in enumerate(values):
        pts = [r for r in rows if float(r[key]) == v]
        ax.scatter([float(r["x0"]) for r in pts], [float(r["x1"]) for r in pts],
                   color=cmap(i), label="%s = %g" % (key, v), s=40)
    ax.set_title(title)
    ax.set_xlabel("x0")
    ax.set_ylabel("x1")
    ax.legend(fontsize=8)
fig.tight_layout()
out = os.path.splitext(path)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
)PY";
}

std::string sweep_plot_script(const std::string& csv_name) {
  return R"PY(#!/usr/bin/env python3
"""Grid of U scores against beta, one panel per (lambda_bar, tau_bar)."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, ")PY" +
         csv_name + R"PY(")
with open(path) as f:
    rows = [r for r in csv.DictReader(f) if r["valid"] == "1"]
groups = [k for k in rows[0].keys() if k.startswith("U_")] if rows else []
lams = sorted({float(r["lambda_bar"]) for r in rows})
taus = sorted({float(r["tau_bar"]) for r in rows})
fig, axes = plt.subplots(len(lams), len(taus), figsize=(3 * len(taus), 2.5 * len(lams)),
                         squeeze=False, sharey=True)
for i, lam in enumerate(lams):
    for j, tau in enumerate(taus):
        ax = axes[i][j]
        cell = sorted((r for r in rows if float(r["lambda_bar"]) == lam
                       and float(r["tau_bar"]) == tau), key=lambda r: float(r["beta"]))
        for g in groups:
            ax.plot([float(r["beta"]) for r in cell], [float(r[g]) for r in cell],
                    marker="o", label=g[2:])
        ax.axhline(0.0, color="gray", linestyle="--")
        ax.set_xscale("log")
        ax.set_title("lambda_bar=%g tau_bar=%g" % (lam, tau), fontsize=8)
axes[0][0].legend(fontsize=7)
fig.tight_layout()
out = os.path.splitext(path)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
)PY";
}

}  // namespace opart

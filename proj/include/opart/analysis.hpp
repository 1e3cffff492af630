#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opart/fairness.hpp"
#include "opart/matrix.hpp"
#include "opart/pipeline.hpp"

namespace opart {

/// Optimal assignments from a hyperparameter sweep; labels are (beta,
/// lambda_bar, tau_bar).
struct SolutionFamily {
  std::vector<Matrix> matrices;
  std::vector<std::array<double, 3>> labels;
};

/// W_ij = min(1 / ||P_i - P_j||_1, cap) off the diagonal, 0 on it.
Matrix similarity(const SolutionFamily& family, double cap = 1e12);

/// Symmetric-normalized spectral embedding: top `dim` eigenvectors of
/// D^{-1/2} W D^{-1/2}, rows scaled to unit length, each column signed so
/// its largest-magnitude entry is positive.
Matrix spectral_embed(const Matrix& W, int dim = 2);

/// Lloyd's k-means with farthest-point seeding from row 0. Deterministic.
std::vector<int> kmeans(const Matrix& points, int k, int max_iters = 100);

struct SweepCell {
  double beta = 0.0;
  double lambda_bar = 0.0;
  double tau_bar = 0.0;
  bool valid = false;
  std::string error;
  RunResult run;
  /// U averaged over rounds, one entry per group.
  std::vector<double> unfairness;
};

struct SweepSpec {
  std::vector<double> betas;
  std::vector<double> lambda_bars;
  std::vector<double> tau_bars;
  RunConfig base;
  CostParams cost;
  std::uint64_t occupancy_seed = 0;
  FillingOptions filling;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Solves the prior-regularized program for every (beta, lambda_bar,
/// tau_bar) and scores each solution by U per group over `rounds`. Cells that
/// fail are kept with valid = false.
std::vector<SweepCell> sweep_grid(const Dataset& dataset, const SweepSpec& spec,
                                  const std::vector<OccupancyAssignment>& rounds,
                                  const std::vector<GroupSpec>& groups);

SolutionFamily family_from_sweep(const std::vector<SweepCell>& cells);

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     const std::vector<std::string>& group_labels);
/// `clusters`, when nonempty, adds a cluster column (one label per row).
void write_embedding_csv(std::ostream& out, const Matrix& coords, const SolutionFamily& family,
                         const std::vector<int>& clusters = {});

/// Self-contained matplotlib script that plots the files written above.
std::string embedding_plot_script(const std::string& csv_name);
std::string sweep_plot_script(const std::string& csv_name);

}  // namespace opart

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "burstlab/spectral.hpp"

namespace burstlab {

/// Circular-convolution-plus-decimation forward operator on an n x n grid.
/// The kernel is stored full-grid: kernel(i,j) multiplies x((r-i) mod n,
/// (c-j) mod n). Dense materialization is capped at n <= 32.
class BccbOperator {
 public:
  static constexpr int kMaxDenseGrid = 32;

  BccbOperator(int grid, std::vector<double> kernel, int decimation = 1);

  /// Kernel placed on the wrapped grid from a small odd-sized stencil
  /// centered at offset (0,0).
  static BccbOperator from_stencil(int grid,
                                   const std::vector<std::vector<double>>& stencil,
                                   int decimation = 1);
  static BccbOperator identity(int grid, int decimation = 1);
  /// Periodized, normalized Gaussian blur of the given sigma (pixels).
  static BccbOperator gaussian(int grid, double sigma, int decimation = 1);
  /// Horizontal two-tap average [1,1]/2; DFT vanishes on the Nyquist column.
  static BccbOperator horizontal_average(int grid, int decimation = 1);

  int grid() const { return grid_; }
  int decimation() const { return decimation_; }
  int output_size() const { return grid_ / decimation_; }
  const std::vector<double>& kernel() const { return kernel_; }

  /// Centered Fourier coefficients of the kernel (the unnormalized DFT),
  /// i.e. the diagonal of the BCCB diagonalization.
  const Spectrum& spectrum() const { return spectrum_; }

  /// Circular convolution followed by stride-d decimation.
  ImagePlane apply_forward(const ImagePlane& x) const;

  /// Dense (n^2/d^2) x n^2 matrix of the operator.
  const Eigen::MatrixXd& dense() const;

 private:
  int grid_;
  int decimation_;
  std::vector<double> kernel_;
  Spectrum spectrum_;
  mutable Eigen::MatrixXd dense_;
  mutable bool dense_built_ = false;
};

/// Orthogonal projector onto the range of A^T (the observable subspace),
/// P_L = A^+ A, via full SVD with relative singular-value cutoff `tol`.
Eigen::MatrixXd range_projector(const BccbOperator& op, double tol = 1e-10);

/// P_H = I - A^+ A.
Eigen::MatrixXd null_projector(const BccbOperator& op, double tol = 1e-10);

/// Binary spectral gains of the null-space projector for pure-convolution
/// operators (d == 1): gain 1 where |Lambda| <= tol * max|Lambda|, else 0.
GainGrid fourier_null_projector(const BccbOperator& op, double tol = 1e-10);

/// How well a smooth mask approximates the operator's true null projector.
struct MaskFidelityReport {
  int grid = 0;
  int decimation = 0;
  struct BinComparison {
    int u = 0, v = 0;
    double lambda_magnitude = 0.0;
    double true_gain = 0.0;  // null projector gain at this bin (d == 1 only)
    double soft_gain = 0.0;
  };
  std::vector<BinComparison> bins;   // populated for d == 1
  double operator_norm_difference = 0.0;  // ||M_soft - P_H_dense||_2
  double strong_bin_leak_fraction = 0.0;  // observable bins with soft gain >= threshold
  double leak_threshold = 0.5;
  std::string to_json() const;
};

MaskFidelityReport mask_fidelity_report(const BccbOperator& op,
                                        const RadialMask& mask,
                                        double leak_threshold = 0.5,
                                        double tol = 1e-10);

}  // namespace burstlab

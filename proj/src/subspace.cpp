#include "burstlab/subspace.hpp"

#include <cmath>

#include <json.hpp>

namespace burstlab {

BccbOperator::BccbOperator(int grid, std::vector<double> kernel, int decimation)
    : grid_(grid), decimation_(decimation), kernel_(std::move(kernel)) {
  if (grid <= 0) throw DimensionError("BccbOperator: grid must be positive");
  if (decimation < 1 || grid % decimation != 0)
    throw ParamError("BccbOperator: decimation must divide the grid size");
  if (kernel_.size() != static_cast<std::size_t>(grid) * grid)
    throw ShapeError("BccbOperator: kernel must be n x n");

  // Lambda = unnormalized DFT of the kernel = sqrt(n^2) * unitary transform.
  ImagePlane k(grid, grid, 1);
  std::copy(kernel_.begin(), kernel_.end(), k.data().begin());
  spectrum_ = fft2(k, 0);
  const double scale = static_cast<double>(grid);
  for (auto& v : spectrum_.coef()) v *= scale;
}

BccbOperator BccbOperator::from_stencil(
    int grid, const std::vector<std::vector<double>>& stencil, int decimation) {
  const int rows = static_cast<int>(stencil.size());
  if (rows == 0 || rows % 2 == 0)
    throw ParamError("from_stencil: stencil must have odd dimensions");
  const int cols = static_cast<int>(stencil[0].size());
  if (cols % 2 == 0) throw ParamError("from_stencil: stencil must have odd dimensions");
  if (rows > grid || cols > grid)
    throw DimensionError("from_stencil: stencil larger than grid");

  std::vector<double> kernel(static_cast<std::size_t>(grid) * grid, 0.0);
  const int r0 = rows / 2, c0 = cols / 2;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < static_cast<int>(stencil[i].size()); ++j) {
      const int r = ((i - r0) % grid + grid) % grid;
      const int c = ((j - c0) % grid + grid) % grid;
      kernel[static_cast<std::size_t>(r) * grid + c] += stencil[i][j];
    }
  return BccbOperator(grid, std::move(kernel), decimation);
}

BccbOperator BccbOperator::identity(int grid, int decimation) {
  std::vector<double> kernel(static_cast<std::size_t>(grid) * grid, 0.0);
  kernel[0] = 1.0;
  return BccbOperator(grid, std::move(kernel), decimation);
}

BccbOperator BccbOperator::gaussian(int grid, double sigma, int decimation) {
  if (sigma <= 0.0) throw ParamError("gaussian: sigma must be > 0");
  std::vector<double> kernel(static_cast<std::size_t>(grid) * grid, 0.0);
  // Periodize: accumulate the infinite Gaussian onto the wrapped grid by
  // summing a few wraps (support 6 sigma is ample at desk scale).
  const int reach = std::max(1, static_cast<int>(std::ceil(6.0 * sigma)));
  double total = 0.0;
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc) {
      const double w = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      const int r = ((dr % grid) + grid) % grid;
      const int c = ((dc % grid) + grid) % grid;
      kernel[static_cast<std::size_t>(r) * grid + c] += w;
      total += w;
    }
  for (double& v : kernel) v /= total;
  return BccbOperator(grid, std::move(kernel), decimation);
}

BccbOperator BccbOperator::horizontal_average(int grid, int decimation) {
  std::vector<double> kernel(static_cast<std::size_t>(grid) * grid, 0.0);
  kernel[0] = 0.5;
  kernel[1] = 0.5;
  return BccbOperator(grid, std::move(kernel), decimation);
}

ImagePlane BccbOperator::apply_forward(const ImagePlane& x) const {
  if (x.height() != grid_ || x.width() != grid_ || x.channels() != 1)
    throw ShapeError("apply_forward: input must be a single-channel n x n grid");
  // Direct spatial circular convolution; the dense and Fourier paths serve
  // as the cross-checking routes.
  ImagePlane conv(grid_, grid_, 1);
  for (int r = 0; r < grid_; ++r)
    for (int c = 0; c < grid_; ++c) {
      double acc = 0.0;
      for (int i = 0; i < grid_; ++i) {
        const std::size_t krow = static_cast<std::size_t>(i) * grid_;
        const int sr = (r - i + grid_) % grid_;
        for (int j = 0; j < grid_; ++j) {
          const double k = kernel_[krow + j];
          if (k == 0.0) continue;
          const int sc = (c - j + grid_) % grid_;
          acc += k * x.at(sr, sc);
        }
      }
      conv.at(r, c) = acc;
    }

  const int out_n = output_size();
  ImagePlane out(out_n, out_n, 1);
  for (int r = 0; r < out_n; ++r)
    for (int c = 0; c < out_n; ++c)
      out.at(r, c) = conv.at(r * decimation_, c * decimation_);
  return out;
}

const Eigen::MatrixXd& BccbOperator::dense() const {
  if (dense_built_) return dense_;
  if (grid_ > kMaxDenseGrid)
    throw OracleScaleError("BccbOperator: dense path capped at n <= 32");
  const int n = grid_;
  const int out_n = output_size();
  dense_ = Eigen::MatrixXd::Zero(static_cast<long>(out_n) * out_n,
                                 static_cast<long>(n) * n);
  for (int oi = 0; oi < out_n; ++oi)
    for (int oj = 0; oj < out_n; ++oj) {
      const long row = static_cast<long>(oi) * out_n + oj;
      const int r = oi * decimation_;
      const int c = oj * decimation_;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const int ki = ((r - a) % n + n) % n;
          const int kj = ((c - b) % n + n) % n;
          dense_(row, static_cast<long>(a) * n + b) =
              kernel_[static_cast<std::size_t>(ki) * n + kj];
        }
    }
  dense_built_ = true;
  return dense_;
}

Eigen::MatrixXd range_projector(const BccbOperator& op, double tol) {
  const Eigen::MatrixXd& a = op.dense();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = (sv.size() > 0 ? sv(0) : 0.0) * tol;
  const Eigen::MatrixXd& v = svd.matrixV();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(a.cols(), a.cols());
  for (long k = 0; k < sv.size(); ++k)
    if (sv(k) > cutoff) p.noalias() += v.col(k) * v.col(k).transpose();
  return p;
}

Eigen::MatrixXd null_projector(const BccbOperator& op, double tol) {
  Eigen::MatrixXd p = range_projector(op, tol);
  return Eigen::MatrixXd::Identity(p.rows(), p.cols()) - p;
}

GainGrid fourier_null_projector(const BccbOperator& op, double tol) {
  if (op.decimation() != 1)
    throw ParamError(
        "fourier_null_projector: decimated operators are not diagonalized by "
        "the DFT; use the dense null_projector oracle instead");
  const Spectrum& lambda = op.spectrum();
  double max_mag = 0.0;
  for (const auto& v : lambda.coef()) max_mag = std::max(max_mag, std::abs(v));

  GainGrid gains(op.grid(), op.grid());
  const double cutoff = max_mag * tol;
  for (int r = 0; r < op.grid(); ++r)
    for (int c = 0; c < op.grid(); ++c)
      gains.at(r, c) = (std::abs(lambda.at(r, c)) > cutoff) ? 0.0 : 1.0;
  return gains;
}

MaskFidelityReport mask_fidelity_report(const BccbOperator& op,
                                        const RadialMask& mask,
                                        double leak_threshold, double tol) {
  const int n = op.grid();
  if (mask.height() != n || mask.width() != n)
    throw ShapeError("mask_fidelity_report: mask grid does not match operator");

  MaskFidelityReport report;
  report.grid = n;
  report.decimation = op.decimation();
  report.leak_threshold = leak_threshold;

  const Eigen::MatrixXd p_h = null_projector(op, tol);

  // Dense matrix of the soft-mask action, column by column.
  const long dim = static_cast<long>(n) * n;
  Eigen::MatrixXd m_soft(dim, dim);
  for (long col = 0; col < dim; ++col) {
    ImagePlane basis(n, n, 1);
    basis.data()[static_cast<std::size_t>(col)] = 1.0;
    ImagePlane projected = project(basis, mask, ProjectionBand::kHigh);
    for (long row = 0; row < dim; ++row)
      m_soft(row, col) = projected.data()[static_cast<std::size_t>(row)];
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m_soft - p_h);
  report.operator_norm_difference =
      svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;

  // Per-bin comparison and the fraction of likelihood-strong bins the soft
  // mask lets through. Lambda-based gains are only exact for d == 1.
  const Spectrum& lambda = op.spectrum();
  double max_mag = 0.0;
  for (const auto& v : lambda.coef()) max_mag = std::max(max_mag, std::abs(v));
  GainGrid true_gains;
  const bool have_true = (op.decimation() == 1);
  if (have_true) true_gains = fourier_null_projector(op, tol);

  long strong = 0, leaked = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double lm = std::abs(lambda.at(r, c));
      const double soft = mask.gains.at(r, c);
      if (have_true) {
        MaskFidelityReport::BinComparison bin;
        bin.u = centered_frequency(c, n);
        bin.v = centered_frequency(r, n);
        bin.lambda_magnitude = lm;
        bin.true_gain = true_gains.at(r, c);
        bin.soft_gain = soft;
        report.bins.push_back(bin);
      }
      if (lm > max_mag * tol) {
        ++strong;
        if (soft >= leak_threshold) ++leaked;
      }
    }
  report.strong_bin_leak_fraction =
      strong > 0 ? static_cast<double>(leaked) / static_cast<double>(strong) : 0.0;
  return report;
}

std::string MaskFidelityReport::to_json() const {
  nlohmann::json j;
  j["grid"] = grid;
  j["decimation"] = decimation;
  j["operator_norm_difference"] = operator_norm_difference;
  j["strong_bin_leak_fraction"] = strong_bin_leak_fraction;
  j["leak_threshold"] = leak_threshold;
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& b : bins)
    jb.push_back({{"u", b.u},
                  {"v", b.v},
                  {"lambda_magnitude", b.lambda_magnitude},
                  {"true_gain", b.true_gain},
                  {"soft_gain", b.soft_gain}});
  j["bins"] = jb;
  return j.dump(2);
}

}  // namespace burstlab

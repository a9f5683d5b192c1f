#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "burstlab/spectral.hpp"

namespace burstlab {

/// Variance-preserving timestep grid: signal[t]^2 + noise[t]^2 == 1.
/// Index 0 is the clean end (signal[0] == 1), index T the noisiest.
struct DiffusionSchedule {
  int total_steps = 0;                // T
  std::vector<double> signal;         // alpha_t = sqrt(alpha_bar_t), size T+1
  std::vector<double> noise;          // beta_t = sqrt(1 - alpha_bar_t)

  double alpha(int t) const;
  double beta(int t) const;
};

/// DDPM-style schedule from a linear beta ramp: alpha_bar_t = prod(1 - b_s).
DiffusionSchedule make_schedule(int total_steps, double beta_start = 1e-4,
                                double beta_end = 0.02);

/// Zero-mean-offsettable Gaussian with covariance diagonal in the Fourier
/// basis (shared across channels). Spectral variance 0 is a point mass.
struct StationaryGaussianPrior {
  ImagePlane mean;
  GainGrid spectral_variance;

  void validate() const;
  bool is_point_mass() const;
};

/// z_t = alpha_t * x + beta_t * eps.
ImagePlane noisify(const ImagePlane& x, int t, const ImagePlane& eps,
                   const DiffusionSchedule& sched);

/// x_hat = (z_T - beta_T * v0_hat) / alpha_T.
ImagePlane one_step_denoise(const ImagePlane& z_terminal,
                            const ImagePlane& v0_hat,
                            const DiffusionSchedule& sched);

/// Epsilon prediction of the noisy prior marginal N(a_t mu, a_t^2 S + b_t^2 I):
/// beta_t * (a_t^2 S + b_t^2 I)^-1 (z_t - a_t mu), per frequency bin.
ImagePlane prior_eps(const StationaryGaussianPrior& prior, const ImagePlane& z_t,
                     int t, const DiffusionSchedule& sched);

/// Exact point-mass generator score: (z_t - alpha_t * x_hat) / beta_t.
ImagePlane generator_eps(const ImagePlane& x_hat, const ImagePlane& z_t, int t,
                         const DiffusionSchedule& sched);

/// Single Monte-Carlo sample of the score-distillation gradient:
/// omega * alpha_t * (prior_eps - generator_eps) at z_t = noisify(x_hat, t, eps).
/// Descending this direction increases the prior log-likelihood of x_hat.
ImagePlane vsd_gradient(const ImagePlane& x_hat,
                        const StationaryGaussianPrior& prior, int t,
                        const ImagePlane& eps, const DiffusionSchedule& sched,
                        double omega);

enum class OmegaRule { kConstantOne, kAdaptive };

/// Exact expectation of vsd_gradient over eps and uniform t in
/// [t_min, t_max], computed per frequency bin. Constant-omega only.
ImagePlane closed_form_vsd_gradient(const ImagePlane& x_hat,
                                    const StationaryGaussianPrior& prior,
                                    const DiffusionSchedule& sched, int t_min,
                                    int t_max,
                                    OmegaRule rule = OmegaRule::kConstantOne);

/// High-pass projection of the VSD sample: project(vsd_gradient, mask, high).
ImagePlane hf_vsd_update(const ImagePlane& x_hat,
                         const StationaryGaussianPrior& prior,
                         const RadialMask& mask, int t, const ImagePlane& eps,
                         const DiffusionSchedule& sched, double omega);

/// Adaptive weight: 1 / mean((x_hat - eps_pred)^2), guarded against
/// vanishing denominators.
double compute_vsd_weight(const ImagePlane& x_hat, const ImagePlane& eps_pred);

enum class DistillMode { kDataOnly, kNaiveVsd, kHfVsd };
enum class DistillInit { kTarget, kZeros };

struct DistillConfig {
  double lambda = 1.0;
  int t_min = 20;
  int t_max = 980;
  RadialMask mask;
  int steps = 2000;
  double lr = 0.05;
  DistillMode mode = DistillMode::kHfVsd;
  std::uint64_t seed = 0;
  OmegaRule omega_rule = OmegaRule::kConstantOne;
  DistillInit init = DistillInit::kTarget;
  std::optional<ImagePlane> reference;  // ground truth for the low-band trace

  void validate(const DiffusionSchedule& sched) const;
};

struct DistillTraceRow {
  int iter = 0;
  double data_loss = 0.0;        // mean squared error to the target
  double reg_norm = 0.0;         // RMS of the applied regularizer gradient
  double lowband_err = 0.0;      // RMS of P_L(x_hat - reference)
  double highband_energy = 0.0;  // RMS of P_H(x_hat)
};

struct DistillState {
  ImagePlane x_hat;
  int iteration = 0;
  std::vector<DistillTraceRow> trace;
};

/// Thrown when the data loss exceeds the divergence bound; carries the
/// state so the trace can be inspected.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& what, DistillState state_in)
      : NumericError(what), state(std::move(state_in)) {}
  DistillState state;
};

using DistillObserver = std::function<void(int iter, const ImagePlane& x_hat)>;

/// Gradient descent on x_hat minimizing MSE-to-target plus lambda times the
/// selected score-distillation term; t is drawn uniformly from
/// [t_min, t_max] each iteration. Deterministic given the config seed.
DistillState run_distillation(const ImagePlane& target_lowband,
                              const StationaryGaussianPrior& prior,
                              const DistillConfig& config,
                              const DistillObserver& observer = {});

}  // namespace burstlab

// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Learned rounding: each weight picks its lower or upper grid neighbour,
// with the choice relaxed to a rectified sigmoid h(V) and optimized against
// the layer's reconstruction error plus a regularizer that pushes h to 0/1.
//
// Weights are [rows, fan-in] matrices with one outer scale per row. The
// inputs enter only through the Gram matrix G = X X^T and the column count.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfq/formats.hpp"
#include "mfq/recipe.hpp"

namespace mfq {

/// Loss assigned to a round-to-nearest-sized reconstruction error per
/// weight. With the default lambda = 0.01 the regularizer then settles
/// about 99.5% of h on random int3 layers.
inline constexpr double kRoundingLossUnit = 1e-4;

inline constexpr double kStretchHigh = 1.1;  // zeta
inline constexpr double kStretchLow = -0.1;  // gamma

/// clip(sigmoid(v) * (zeta - gamma) + gamma, 0, 1)
double rectified_sigmoid(double v) noexcept;
/// d h / d v; zero where the clip is active.
double rectified_sigmoid_grad(double v) noexcept;
/// V such that h(V) = target, for target in [0, 1).
double rectified_sigmoid_inverse(double target) noexcept;

/// 1 - |2h - 1|^beta summed over h.
double rounding_regularizer(const Eigen::MatrixXd& h, double beta);

/// Each weight as lower neighbour + h * step, clipped, in units of the
/// outer scale. For minifloats the inner scale is frozen at the value it
/// takes for the original weight.
struct RoundingGrid {
  Eigen::MatrixXd lower;  // grid units
  Eigen::MatrixXd step;   // grid units
  Eigen::MatrixXd frac;   // initial h: position between the neighbours
  std::vector<double> row_scale;
  double clip_lo = 0.0;
  double clip_hi = 0.0;

  /// Real-valued weights for a given h.
  Eigen::MatrixXd weights(const Eigen::MatrixXd& h) const;
};

RoundingGrid make_rounding_grid(const Eigen::MatrixXd& w, const std::vector<double>& row_scale,
                                const NumericFormat& format);

/// soft_quant for a single weight, in real units.
double soft_quant_int(double w, double s, const IntFormat& format, double h);
double soft_quant_fp(double w, double s, const MinifloatFormat& format, double h);

/// ||W X - W_hat X||_F^2 / N, from the Gram matrix.
double reconstruction_error(const Eigen::MatrixXd& w, const Eigen::MatrixXd& w_hat, const Eigen::MatrixXd& gram,
                            double columns);

/// Loss and dLoss/dV for the relaxed problem. The reconstruction term is
/// multiplied by `loss_scale`.
class RoundingObjective {
 public:
  RoundingObjective(const Eigen::MatrixXd& w, const Eigen::MatrixXd& gram, double columns, RoundingGrid grid,
                    double loss_scale = 1.0);

  double value(const Eigen::MatrixXd& v, double beta, double lambda) const;
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& v, double beta, double lambda) const;
  const RoundingGrid& grid() const noexcept { return grid_; }

 private:
  Eigen::MatrixXd w_;
  Eigen::MatrixXd gram_;
  double columns_;
  RoundingGrid grid_;
  double loss_scale_;
};

struct RoundingResult {
  Eigen::MatrixXd weights;  // hardened, real units
  double error = 0.0;
  double nearest_error = 0.0;
  /// Share of h within 1e-3 of 0 or 1 before hardening.
  double settled_fraction = 0.0;
  bool fell_back = false;
  bool diverged = false;
};

/// Adam on V with the annealing schedule of `params`. The reconstruction
/// term is expressed relative to the round-to-nearest error per weight
/// (see kRoundingLossUnit), so lambda weighs the same against it for any
/// weight or activation scale.
/// Returns round-to-nearest whenever the learned result reconstructs worse
/// or the loss turns NaN.
RoundingResult learn_rounding(const Eigen::MatrixXd& w, const Eigen::MatrixXd& gram, double columns,
                              const std::vector<double>& row_scale, const NumericFormat& format,
                              const LearnedRoundingParams& params);

/// Round-to-nearest with per-row scales.
Eigen::MatrixXd round_nearest(const Eigen::MatrixXd& w, const std::vector<double>& row_scale,
                              const NumericFormat& format);

}  // namespace mfq

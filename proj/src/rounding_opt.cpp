// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/rounding_opt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfq/quantizers.hpp"

namespace mfq {

namespace {

double sigmoid(double v) noexcept { return 1.0 / (1.0 + std::exp(-v)); }

Eigen::MatrixXd h_of(const Eigen::MatrixXd& v) { return v.unaryExpr([](double x) { return rectified_sigmoid(x); }); }

void check_rows(const Eigen::MatrixXd& w, const std::vector<double>& row_scale) {
  if (static_cast<size_t>(w.rows()) != row_scale.size()) {
    throw std::invalid_argument("one outer scale per weight row is required");
  }
}

}  // namespace

double rectified_sigmoid(double v) noexcept {
  return std::clamp(sigmoid(v) * (kStretchHigh - kStretchLow) + kStretchLow, 0.0, 1.0);
}

double rectified_sigmoid_grad(double v) noexcept {
  const double sg = sigmoid(v);
  const double raw = sg * (kStretchHigh - kStretchLow) + kStretchLow;
  if (raw <= 0.0 || raw >= 1.0) {
    return 0.0;
  }
  return (kStretchHigh - kStretchLow) * sg * (1.0 - sg);
}

double rectified_sigmoid_inverse(double target) noexcept {
  const double sg = (target - kStretchLow) / (kStretchHigh - kStretchLow);
  return std::log(sg / (1.0 - sg));
}

double rounding_regularizer(const Eigen::MatrixXd& h, double beta) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    acc += 1.0 - std::pow(std::fabs(2.0 * h.data()[i] - 1.0), beta);
  }
  return acc;
}

Eigen::MatrixXd RoundingGrid::weights(const Eigen::MatrixXd& h) const {
  Eigen::MatrixXd out(lower.rows(), lower.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double s = row_scale[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out(r, c) = s * std::clamp(lower(r, c) + step(r, c) * h(r, c), clip_lo, clip_hi);
    }
  }
  return out;
}

RoundingGrid make_rounding_grid(const Eigen::MatrixXd& w, const std::vector<double>& row_scale,
                                const NumericFormat& format) {
  check_rows(w, row_scale);
  RoundingGrid g;
  g.row_scale = row_scale;
  g.lower.resize(w.rows(), w.cols());
  g.step.resize(w.rows(), w.cols());
  g.frac.resize(w.rows(), w.cols());
  const auto* fp = std::get_if<MinifloatFormat>(&format);
  if (fp) {
    g.clip_lo = fp->q_min();
    g.clip_hi = fp->q_max();
  } else {
    const auto& i = std::get<IntFormat>(format);
    g.clip_lo = static_cast<double>(i.q_min());
    g.clip_hi = static_cast<double>(i.q_max());
  }
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    const double s = row_scale[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const double x = w(r, c) / s;
      double ss = 1.0;
      if (fp && x != 0.0) {
        ss = std::ldexp(1.0, fp_scale_exponent(x, *fp));
      }
      const double fl = std::floor(x / ss);
      g.lower(r, c) = ss * fl;
      g.step(r, c) = ss;
      g.frac(r, c) = x / ss - fl;
    }
  }
  return g;
}

double soft_quant_int(double w, double s, const IntFormat& format, double h) {
  const double code = std::floor(w / s) + h;
  return s * std::clamp(code, static_cast<double>(format.q_min()), static_cast<double>(format.q_max()));
}

double soft_quant_fp(double w, double s, const MinifloatFormat& format, double h) {
  const double x = w / s;
  const double ss = x == 0.0 ? 1.0 : std::ldexp(1.0, fp_scale_exponent(x, format));
  return s * std::clamp(ss * (std::floor(x / ss) + h), format.q_min(), format.q_max());
}

double reconstruction_error(const Eigen::MatrixXd& w, const Eigen::MatrixXd& w_hat, const Eigen::MatrixXd& gram,
                            double columns) {
  const Eigen::MatrixXd d = w - w_hat;
  return (d * gram).cwiseProduct(d).sum() / columns;
}

RoundingObjective::RoundingObjective(const Eigen::MatrixXd& w, const Eigen::MatrixXd& gram, double columns,
                                     RoundingGrid grid, double loss_scale)
    : w_(w), gram_(gram), columns_(columns), grid_(std::move(grid)), loss_scale_(loss_scale) {
  if (gram.rows() != w.cols() || gram.cols() != w.cols()) {
    throw std::invalid_argument("Gram matrix does not match the weight fan-in");
  }
  if (!(columns > 0.0)) {
    throw std::invalid_argument("learned rounding needs at least one input column");
  }
}

double RoundingObjective::value(const Eigen::MatrixXd& v, double beta, double lambda) const {
  const Eigen::MatrixXd h = h_of(v);
  double loss = loss_scale_ * reconstruction_error(w_, grid_.weights(h), gram_, columns_);
  if (lambda != 0.0) {
    loss += lambda * rounding_regularizer(h, beta);
  }
  return loss;
}

Eigen::MatrixXd RoundingObjective::gradient(const Eigen::MatrixXd& v, double beta, double lambda) const {
  const Eigen::MatrixXd h = h_of(v);
  const Eigen::MatrixXd d_what = (2.0 * loss_scale_ / columns_) * (grid_.weights(h) - w_) * gram_;
  Eigen::MatrixXd g(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double s = grid_.row_scale[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      const double hv = h(r, c);
      const double pos = grid_.lower(r, c) + grid_.step(r, c) * hv;
      double dh = 0.0;
      if (pos > grid_.clip_lo && pos < grid_.clip_hi) {
        dh = d_what(r, c) * s * grid_.step(r, c);
      }
      if (lambda != 0.0) {
        const double u = 2.0 * hv - 1.0;
        const double sign = u > 0.0 ? 1.0 : u < 0.0 ? -1.0 : 0.0;
        dh += lambda * (-beta * std::pow(std::fabs(u), beta - 1.0) * sign * 2.0);
      }
      g(r, c) = dh * rectified_sigmoid_grad(v(r, c));
    }
  }
  return g;
}

Eigen::MatrixXd round_nearest(const Eigen::MatrixXd& w, const std::vector<double>& row_scale,
                              const NumericFormat& format) {
  check_rows(w, row_scale);
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      out(r, c) = fake_quantize(w(r, c), row_scale[static_cast<size_t>(r)], format);
    }
  }
  return out;
}

RoundingResult learn_rounding(const Eigen::MatrixXd& w, const Eigen::MatrixXd& gram, double columns,
                              const std::vector<double>& row_scale, const NumericFormat& format,
                              const LearnedRoundingParams& p) {
  RoundingResult result;
  const Eigen::MatrixXd nearest = round_nearest(w, row_scale, format);
  result.nearest_error = reconstruction_error(w, nearest, gram, columns);
  if (!(result.nearest_error > 0.0)) {
    // Nothing to gain over an exact (or input-blind) round-to-nearest.
    result.weights = nearest;
    result.error = result.nearest_error;
    result.settled_fraction = 1.0;
    return result;
  }
  const double loss_scale = kRoundingLossUnit * static_cast<double>(w.size()) / result.nearest_error;
  RoundingObjective obj(w, gram, columns, make_rounding_grid(w, row_scale, format), loss_scale);

  Eigen::MatrixXd v = obj.grid().frac.unaryExpr([](double f) { return rectified_sigmoid_inverse(f); });
  Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  const int steps = std::max(p.steps, 0);
  const int warmup = static_cast<int>(p.warmup_frac * steps);
  const int anneal = std::max(steps - warmup - 1, 1);
  double beta = p.beta_start;
  for (int t = 0; t < steps; ++t) {
    double lambda = 0.0;
    if (t >= warmup) {
      beta = p.beta_start + (p.beta_end - p.beta_start) * static_cast<double>(t - warmup) / anneal;
      lambda = p.lambda;
    }
    const Eigen::MatrixXd g = obj.gradient(v, beta, lambda);
    if (!g.allFinite()) {
      result.diverged = true;
      break;
    }
    m1 = b1 * m1 + (1.0 - b1) * g;
    m2 = b2 * m2 + (1.0 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, t + 1);
    const double c2 = 1.0 - std::pow(b2, t + 1);
    v.array() -= p.lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
  }

  const Eigen::MatrixXd h = h_of(v);
  size_t settled = 0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double x = h.data()[i];
    settled += (x <= 1e-3 || x >= 1.0 - 1e-3) ? 1 : 0;
  }
  result.settled_fraction = h.size() ? static_cast<double>(settled) / static_cast<double>(h.size()) : 1.0;

  Eigen::MatrixXd hard = h.unaryExpr([](double x) { return x >= 0.5 ? 1.0 : 0.0; });
  Eigen::MatrixXd learned = obj.grid().weights(hard);
  for (Eigen::Index r = 0; r < learned.rows(); ++r) {
    const double s = row_scale[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < learned.cols(); ++c) {
      // A frozen inner scale can in principle step off the grid; snap back.
      const double x = learned(r, c) / s;
      if (grid_value(x, format) != x) {
        learned(r, c) = fake_quantize(learned(r, c), s, format);
      }
    }
  }
  result.error = reconstruction_error(w, learned, gram, columns);
  if (result.diverged || !std::isfinite(result.error) || result.error > result.nearest_error) {
    result.weights = nearest;
    result.error = result.nearest_error;
    result.fell_back = true;
  } else {
    result.weights = std::move(learned);
  }
  return result;
}

}  // namespace mfq

// Copyright 2026 The calibkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Gauss-Markov adjustment of the extrinsic parameters.
//
// Two observation types enter the weighted least-squares problem:
//   * point-to-plane distances r_k = ((R p_k + t) - q_k)^T n_k, weight 1/sigma_d^2,
//     with sigma_d the MAD-based robust scale of the distances;
//   * direct observations of the parameters v_i = prior_i - x_i, weight
//     1/sigma_i^2, which carry information from previous sites.
// Parameters whose estimate_mask is false are removed from the unknown
// vector and keep their prior value. The a posteriori covariance is
// sigma0^2 (A^T P A)^-1, expanded to 6x6 with zero rows/cols for fixed
// parameters.

#ifndef CALIBKIT_ADJUST_HPP
#define CALIBKIT_ADJUST_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "calibkit/core/transform.hpp"
#include "calibkit/core/types.hpp"

namespace calibkit {

struct Correspondence {
  std::size_t ref_index = 0;
  std::size_t mov_index = 0;
  Vec3 q = Vec3::Zero();  // reference point
  Vec3 n = Vec3::UnitZ();  // reference normal
  Vec3 p = Vec3::Zero();  // movable point, movable-sensor frame
  double signed_distance = 0.0;
};

inline constexpr double kMadToSigma = 1.4826;
inline constexpr double kSigmaFloor = 1e-6;

inline double point_to_plane_residual(const ExtrinsicParams& params, const Vec3& p, const Vec3& q,
                                      const Vec3& n) {
  return ((rotation_of(params) * p + params.translation()) - q).dot(n);
}

namespace detail {

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

/// dR/d(alpha_x), dR/d(alpha_y), dR/d(alpha_z) for R = Rz Ry Rx.
struct RotationDerivatives {
  Mat3 r;
  std::array<Mat3, 3> d;

  explicit RotationDerivatives(const ExtrinsicParams& params) {
    const Mat3 rx = rot_x(params.alpha_x);
    const Mat3 ry = rot_y(params.alpha_y);
    const Mat3 rz = rot_z(params.alpha_z);
    r = rz * ry * rx;
    d[0] = r * skew(Vec3::UnitX());
    d[1] = rz * ry * skew(Vec3::UnitY()) * rx;
    d[2] = rz * skew(Vec3::UnitZ()) * ry * rx;
  }

  Vec6 jacobian(const Vec3& p, const Vec3& n) const {
    Vec6 j;
    j << n.dot(d[0] * p), n.dot(d[1] * p), n.dot(d[2] * p), n.x(), n.y(), n.z();
    return j;
  }
};

}  // namespace detail

/// Analytic partials of the point-to-plane residual with respect to
/// (alpha_x, alpha_y, alpha_z, t_x, t_y, t_z). q does not enter the
/// derivative; it is accepted to mirror the residual's signature.
inline Vec6 jacobian_point_to_plane(const ExtrinsicParams& params, const Vec3& p,
                                    [[maybe_unused]] const Vec3& q, const Vec3& n) {
  return detail::RotationDerivatives(params).jacobian(p, n);
}

inline double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// sigma_d = 1.4826 * median(|d_i - median(d)|), floored at 1e-6 m.
inline double robust_sigma(std::span<const double> distances) {
  if (distances.empty()) {
    throw CalibError(ErrorCode::kNoData, "robust_sigma: no distances");
  }
  const double med = median_of({distances.begin(), distances.end()});
  std::vector<double> dev;
  dev.reserve(distances.size());
  for (double d : distances) {
    dev.push_back(std::abs(d - med));
  }
  const double sigma = kMadToSigma * median_of(std::move(dev));
  return sigma > 0.0 ? sigma : kSigmaFloor;
}

struct ResidualBundle {
  std::vector<Correspondence> correspondences;
  ParamPrior prior;
  double sigma_d = kSigmaFloor;
};

struct GaussNewtonOptions {
  std::size_t max_iterations = 20;
  double delta_angle = 1e-5;        // rad
  double delta_translation = 1e-4;  // m
  double max_condition = 1e10;
  double vanishing_sigma0_squared = 1e-12;
};

/// Weighted SSR of the point-to-plane rows only.
inline double weighted_point_to_plane_ssr(std::span<const Correspondence> corr, double sigma_d,
                                          const ExtrinsicParams& params) {
  const Mat3 r = rotation_of(params);
  const Vec3 t = params.translation();
  double s = 0.0;
  for (const Correspondence& c : corr) {
    const double res = ((r * c.p + t) - c.q).dot(c.n);
    s += res * res;
  }
  return s / (sigma_d * sigma_d);
}

/// Weighted SSR of both observation types, as minimized by the adjustment.
inline double weighted_ssr(const ResidualBundle& bundle, const ExtrinsicParams& params) {
  double s = weighted_point_to_plane_ssr(bundle.correspondences, bundle.sigma_d, params);
  const Vec6 x = params.to_vector();
  const Vec6 x0 = bundle.prior.values.to_vector();
  for (std::size_t i = 0; i < 6; ++i) {
    const double sig = bundle.prior.sigmas[i];
    if (!bundle.prior.estimate_mask[i] || !std::isfinite(sig)) {
      continue;
    }
    const auto ii = static_cast<Eigen::Index>(i);
    double v = x0[ii] - x[ii];
    if (is_angle_index(i)) {
      v = normalize_angle(v);
    }
    s += v * v / (sig * sig);
  }
  return s;
}

namespace detail {

inline std::string describe_direction(const std::array<double, 6>& dir) {
  std::string out;
  char buf[48];
  for (std::size_t i = 0; i < 6; ++i) {
    if (std::abs(dir[i]) < 0.05) {
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%s%+.3f*%s", out.empty() ? "" : " ", dir[i], kParamNames[i]);
    out += buf;
  }
  return out.empty() ? "(none)" : out;
}

struct NormalSystem {
  Eigen::MatrixXd n;
  Eigen::VectorXd b;
};

}  // namespace detail

/// Iterated (Gauss-Newton) solution of the weighted least-squares problem,
/// linearized first at `linearization_point`. Fixed parameters are taken
/// from the prior regardless of the linearization point.
///
/// Throws kUnderDetermined when there are fewer observations than unknowns
/// and RankDeficiencyError when the normal matrix of the estimated
/// parameters has a condition number above options.max_condition.
inline AdjustmentResult solve_gauss_markov(const ResidualBundle& bundle,
                                           const ExtrinsicParams& linearization_point,
                                           const GaussNewtonOptions& options = {}) {
  const ParamPrior& prior = bundle.prior;
  prior.validate();
  if (!(bundle.sigma_d > 0.0)) {
    throw CalibError(ErrorCode::kInvalidArgument, "solve_gauss_markov: sigma_d must be positive");
  }

  std::vector<std::size_t> est;
  std::vector<std::size_t> prior_rows;
  for (std::size_t i = 0; i < 6; ++i) {
    if (prior.estimate_mask[i]) {
      est.push_back(i);
      if (std::isfinite(prior.sigmas[i])) {
        prior_rows.push_back(i);
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(est.size());
  const auto& corr = bundle.correspondences;
  const long rows = static_cast<long>(corr.size() + prior_rows.size());
  const long redundancy = rows - static_cast<long>(m);
  if (redundancy < 0) {
    throw CalibError(ErrorCode::kUnderDetermined,
                     "solve_gauss_markov: " + std::to_string(rows) + " observations for " +
                         std::to_string(m) + " unknowns");
  }

  const Vec6 prior_vec = prior.values.to_vector();
  Vec6 x = linearization_point.to_vector();
  for (std::size_t i = 0; i < 6; ++i) {
    if (!prior.estimate_mask[i]) {
      x[static_cast<Eigen::Index>(i)] = prior_vec[static_cast<Eigen::Index>(i)];
    }
  }

  const double w_corr = 1.0 / (bundle.sigma_d * bundle.sigma_d);

  auto build = [&](const Vec6& at) {
    detail::NormalSystem sys{Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd::Zero(m)};
    const ExtrinsicParams params = ExtrinsicParams::from_vector(at);
    const detail::RotationDerivatives rd(params);
    const Vec3 t = params.translation();
    Eigen::VectorXd j(m);
    for (const Correspondence& c : corr) {
      const Vec6 full = rd.jacobian(c.p, c.n);
      for (Eigen::Index k = 0; k < m; ++k) {
        j[k] = full[static_cast<Eigen::Index>(est[static_cast<std::size_t>(k)])];
      }
      const double r = ((rd.r * c.p + t) - c.q).dot(c.n);
      sys.n.noalias() += w_corr * j * j.transpose();
      sys.b.noalias() -= w_corr * r * j;
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      const std::size_t i = est[static_cast<std::size_t>(k)];
      if (!std::isfinite(prior.sigmas[i])) {
        continue;
      }
      const auto ii = static_cast<Eigen::Index>(i);
      double v = prior_vec[ii] - at[ii];
      if (is_angle_index(i)) {
        v = normalize_angle(v);
      }
      const double w = 1.0 / (prior.sigmas[i] * prior.sigmas[i]);
      // dv/dx = -1
      sys.n(k, k) += w;
      sys.b[k] += w * v;
    }
    return sys;
  };

  auto check_rank = [&](const Eigen::MatrixXd& n) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n);
    const double lmin = es.eigenvalues()[0];
    const double lmax = es.eigenvalues()[m - 1];
    const double cond = lmin > 0.0 ? lmax / lmin : kInf;
    if (cond > options.max_condition) {
      std::array<double, 6> dir{};
      Eigen::Index arg = 0;
      es.eigenvectors().col(0).cwiseAbs().maxCoeff(&arg);
      const double sign = es.eigenvectors()(arg, 0) < 0.0 ? -1.0 : 1.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        dir[est[static_cast<std::size_t>(k)]] = sign * es.eigenvectors()(k, 0);
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3g", cond);
      throw RankDeficiencyError("rank-deficient normal matrix (condition number " +
                                    std::string(buf) + "); unobservable combination: " +
                                    detail::describe_direction(dir),
                                dir, cond);
    }
  };

  AdjustmentResult result;
  result.num_correspondences = corr.size();
  result.redundancy = redundancy;

  if (m == 0) {
    result.params = ExtrinsicParams::from_vector(x);
    result.converged = true;
  } else if (corr.empty()) {
    // Only parameter observations: the minimum is the prior itself.
    for (std::size_t i : est) {
      x[static_cast<Eigen::Index>(i)] = prior_vec[static_cast<Eigen::Index>(i)];
    }
    result.params = prior.values;
    result.converged = true;
  } else {
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
      const detail::NormalSystem sys = build(x);
      check_rank(sys.n);
      const Eigen::VectorXd dx = sys.n.ldlt().solve(sys.b);
      double max_da = 0.0, max_dt = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t i = est[static_cast<std::size_t>(k)];
        const auto ii = static_cast<Eigen::Index>(i);
        x[ii] += dx[k];
        if (is_angle_index(i)) {
          x[ii] = normalize_angle(x[ii]);
          max_da = std::max(max_da, std::abs(dx[k]));
        } else {
          max_dt = std::max(max_dt, std::abs(dx[k]));
        }
      }
      result.num_iterations = it;
      if (max_da < options.delta_angle && max_dt < options.delta_translation) {
        result.converged = true;
        break;
      }
    }
    result.params = ExtrinsicParams::from_vector(x);
    // from_vector re-normalizes; fixed parameters must stay bit-identical
    Vec6 out = result.params.to_vector();
    for (std::size_t i = 0; i < 6; ++i) {
      if (!prior.estimate_mask[i]) {
        out[static_cast<Eigen::Index>(i)] = prior_vec[static_cast<Eigen::Index>(i)];
      }
    }
    result.params = {out[0], out[1], out[2], out[3], out[4], out[5]};
  }

  // point-to-plane residual statistics at the solution
  if (!corr.empty()) {
    const Mat3 r = rotation_of(result.params);
    const Vec3 t = result.params.translation();
    double sum = 0.0, sum2 = 0.0;
    for (const Correspondence& c : corr) {
      const double res = ((r * c.p + t) - c.q).dot(c.n);
      sum += res;
      sum2 += res * res;
    }
    const double nn = static_cast<double>(corr.size());
    result.residual_mean = sum / nn;
    result.residual_std = std::sqrt(std::max(0.0, sum2 / nn - result.residual_mean * result.residual_mean));
  }

  if (m > 0) {
    const double wssr = weighted_ssr(bundle, result.params);
    double s0 = redundancy > 0 ? wssr / static_cast<double>(redundancy) : 1.0;
    if (!(s0 > options.vanishing_sigma0_squared)) {
      s0 = 1.0;
    }
    result.sigma0_squared = s0;
    const detail::NormalSystem sys = build(result.params.to_vector());
    check_rank(sys.n);
    const Eigen::MatrixXd inv =
        sys.n.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        result.covariance(static_cast<Eigen::Index>(est[static_cast<std::size_t>(a)]),
                          static_cast<Eigen::Index>(est[static_cast<std::size_t>(b)])) =
            s0 * 0.5 * (inv(a, b) + inv(b, a));
      }
    }
  }
  return result;
}

}  // namespace calibkit

#endif  // CALIBKIT_ADJUST_HPP

#include "xcal/refine.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/SVD>

#include "xcal/kernels.h"
#include "xcal/lines.h"

namespace xcal {

namespace {

void require_normalized(const Line2D& line) {
  if (std::abs(line.w0 * line.w0 + line.w1 * line.w1 - 1.0) > 1e-9) {
    throw GeometryError("line coefficients are not normalized");
  }
}

}  // namespace

double point_line_residual(const Line2D& line, const VerticalLine3D& candidate,
                           double sample_height, const Rigid3& T,
                           const CameraIntrinsics& K) {
  require_normalized(line);
  const Projection p = project_point(K, T, candidate.point_at(sample_height));
  return line.eval(p.pixel);
}

std::vector<LineMatch> match_lines(const std::vector<VerticalLine3D>& candidates,
                                   const std::vector<Segment2D>& segments,
                                   const Rigid3& T0, const CameraIntrinsics& K,
                                   const MatchConfig& config, int pose_id) {
  std::vector<Line2D> lines(segments.size());
  std::vector<char> usable(segments.size(), 0);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].length() > 1e-9) {
      lines[s] = segment_to_line(segments[s]);
      usable[s] = 1;
    }
  }

  struct Option {
    double score;
    int cand;
    int seg;
    double residual;
  };
  std::vector<Option> options;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const VerticalLine3D& cand = candidates[c];
    if (!in_fov(cand, K, T0, config.fov_margin)) continue;
    Vec2 dir;
    try {
      dir = vertical_direction_in_image(K, T0, cand);
    } catch (const GeometryError&) {
      continue;
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
      if (!usable[s] || segment_angle_to(segments[s], dir) > config.angle_tol) {
        continue;
      }
      double r_lo, r_hi;
      try {
        r_lo = point_line_residual(lines[s], cand, cand.y_min, T0, K);
        r_hi = point_line_residual(lines[s], cand, cand.y_max, T0, K);
      } catch (const BehindCameraError&) {
        continue;
      }
      if (std::abs(r_lo) > config.dist_tol || std::abs(r_hi) > config.dist_tol) {
        continue;
      }
      options.push_back({0.5 * (std::abs(r_lo) + std::abs(r_hi)),
                         static_cast<int>(c), static_cast<int>(s),
                         0.5 * (r_lo + r_hi)});
    }
  }
  std::sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
    return std::tie(a.score, a.cand, a.seg) < std::tie(b.score, b.cand, b.seg);
  });

  std::vector<char> cand_used(candidates.size(), 0), seg_used(segments.size(), 0);
  std::vector<LineMatch> matches;
  for (const Option& o : options) {
    if (cand_used[o.cand] || seg_used[o.seg]) continue;
    cand_used[o.cand] = seg_used[o.seg] = 1;
    matches.push_back({candidates[o.cand], lines[o.seg], o.residual, pose_id,
                       o.cand, o.seg});
  }
  return matches;
}

double huber_weight(double residual, double M) {
  const double a = std::abs(residual);
  return a <= M ? 1.0 : M / a;
}

double huber_loss(double residual, double M) {
  const double a = std::abs(residual);
  return a <= M ? 0.5 * a * a : M * a - 0.5 * M * M;
}

ResidualRow frozen_depth_row(const Line2D& line, const Vec3& point,
                             const Quat& R, double depth,
                             const CameraIntrinsics& K) {
  // r = w^T K R^-1 (p - t) / depth = g . (p - t) / depth, g = R K^T w.
  const Vec3 kw(K.fx * line.w0, K.fy * line.w1,
                K.cx * line.w0 + K.cy * line.w1 + line.w2);
  const Vec3 g = R.rotate(kw);
  return {-g / depth, g.dot(point) / depth};
}

namespace {

struct Sample {
  const LineMatch* match;
  Vec3 point;
};

struct Linearization {
  std::vector<ResidualRow> rows;
  std::vector<double> residuals;
};

Linearization linearize(const std::vector<Sample>& samples, const Quat& R,
                        const Vec3& t, const CameraIntrinsics& K) {
  Linearization lin;
  lin.rows.reserve(samples.size());
  lin.residuals.reserve(samples.size());
  const Quat Rinv = R.conjugate();
  for (const Sample& s : samples) {
    const double depth = Rinv.rotate(s.point - t).z();
    if (depth <= 1e-9) {
      throw BehindCameraError("refine_translation: sample behind the camera");
    }
    const ResidualRow row = frozen_depth_row(s.match->line, s.point, R, depth, K);
    lin.residuals.push_back(row.a.dot(t) + row.b);
    lin.rows.push_back(row);
  }
  return lin;
}

std::vector<double> row_weights(const std::vector<double>& residuals,
                                const RefineConfig& config) {
  std::vector<double> w(residuals.size(), 1.0);
  if (config.penalty_mode == PenaltyMode::kHuber) {
    kernels::huber_weights(residuals, config.huber_M, w);
  }
  return w;
}

double objective(const std::vector<double>& residuals, const RefineConfig& config) {
  double sum = 0.0;
  for (double r : residuals) {
    sum += config.penalty_mode == PenaltyMode::kHuber ? huber_loss(r, config.huber_M)
                                                      : 0.5 * r * r;
  }
  return sum;
}

}  // namespace

RefineResult refine_translation(const std::vector<LineMatch>& matches,
                                const Quat& R, const Vec3& t0,
                                const CameraIntrinsics& K,
                                const RefineConfig& config) {
  if (matches.size() < 3) {
    throw GeometryError("refine_translation: need at least 3 line matches, got " +
                        std::to_string(matches.size()));
  }
  if (!(config.huber_M > 0.0) || config.max_iterations < 1) {
    throw Error("refine_translation: invalid configuration");
  }
  std::vector<Sample> samples;
  samples.reserve(2 * matches.size());
  for (const LineMatch& m : matches) {
    require_normalized(m.line);
    samples.push_back({&m, m.candidate.point_at(m.candidate.y_min)});
    samples.push_back({&m, m.candidate.point_at(m.candidate.y_max)});
  }

  // Horizontal subspace of the lidar frame: t = t_k + B * delta.
  Eigen::Matrix<double, 3, 2> B;
  B << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;

  RefineResult result;
  Vec3 t = t0;
  Linearization lin = linearize(samples, R, t, K);
  double f = objective(lin.residuals, config);
  result.objective_history.push_back(f);
  for (int it = 0; it < config.max_iterations; ++it) {
    const std::vector<double> w = row_weights(lin.residuals, config);

    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd J(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sw = std::sqrt(w[i]);
      J.row(i) = sw * (lin.rows[i].a.transpose() * B);
      rhs(i) = -sw * lin.residuals[i];
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU |
                                                       Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(1) <= 1e-9 * s(0)) {
      throw GeometryError(
          "refine_translation: matches do not constrain both horizontal "
          "translation components (need lines with two distinct image "
          "normals)");
    }
    Vec3 step = B * svd.solve(rhs);
    // The frozen-depth step ignores how depths move with t and can overshoot
    // the perspective objective by a hair; halve it until f does not rise.
    Linearization next;
    double f_next = f;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, step *= 0.5) {
      try {
        next = linearize(samples, R, t + step, K);
        f_next = objective(next.residuals, config);
      } catch (const BehindCameraError&) {
        continue;
      }
      if (f_next <= f) {
        accepted = true;
        break;
      }
    }
    result.iterations = it + 1;
    if (!accepted) {
      result.converged = true;
      break;
    }
    t += step;
    lin = std::move(next);
    f = f_next;
    result.objective_history.push_back(f);
    if (step.norm() < config.step_tolerance) {
      result.converged = true;
      break;
    }
  }

  const Linearization& fin = lin;
  const std::vector<double> w = row_weights(fin.residuals, config);
  double wsum = 0.0, wr2 = 0.0;
  int inliers = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    wsum += w[i];
    wr2 += w[i] * fin.residuals[i] * fin.residuals[i];
    if (w[i] >= 0.5) ++inliers;
  }
  result.translation = t;
  result.final_weighted_rms = wsum > 0.0 ? std::sqrt(wr2 / wsum) : 0.0;
  result.inlier_fraction = static_cast<double>(inliers) / static_cast<double>(w.size());
  return result;
}

TranslationError error_ratio(const Vec3& t_est, const Vec3& t_gt) {
  const double n = t_gt.norm();
  if (!(n > 0.0)) {
    throw Error("error_ratio: ground-truth translation has zero norm");
  }
  const double e = (t_est - t_gt).norm();
  return {e, e / n};
}

}  // namespace xcal

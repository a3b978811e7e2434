#include "ageus/geometry.hpp"

#include <Eigen/Dense>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <numbers>

namespace ageus {
namespace {

constexpr double kPi = std::numbers::pi;

// Geometric parameters from conic Ax^2 + Bxy + Cy^2 + Dx + Ey + F = 0,
// working in (x, y) = (col, row).
EllipseParams conic_to_params(const Eigen::Matrix<double, 6, 1>& k) {
  const double A = k(0), B = k(1), C = k(2), D = k(3), E = k(4), F = k(5);
  const double disc = B * B - 4.0 * A * C;
  if (!(disc < 0.0)) throw std::runtime_error("degenerate conic");

  const double xc = (2.0 * C * D - B * E) / disc;
  const double yc = (2.0 * A * E - B * D) / disc;
  const double F0 = A * xc * xc + B * xc * yc + C * yc * yc + D * xc + E * yc + F;

  // eigen-decomposition of [[A, B/2], [B/2, C]]
  const double tr = A + C;
  const double det_root = std::sqrt((A - C) * (A - C) + B * B);
  const double l1 = 0.5 * (tr - det_root);  // smaller -> major axis
  const double l2 = 0.5 * (tr + det_root);
  if (!(l1 * F0 < 0.0) || !(l2 * F0 < 0.0)) throw std::runtime_error("degenerate conic");

  EllipseParams e;
  e.center = {yc, xc};
  e.semi_major = std::sqrt(-F0 / l1);
  e.semi_minor = std::sqrt(-F0 / l2);

  // major-axis direction: eigenvector of l1
  double vx, vy;
  if (std::abs(B) > 1e-300) {
    vx = B / 2.0;
    vy = l1 - A;
  } else if (A <= C) {
    vx = 1.0;
    vy = 0.0;
  } else {
    vx = 0.0;
    vy = 1.0;
  }
  double theta = std::atan2(vy, vx);
  theta = std::fmod(theta, kPi);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta -= kPi;
  e.rotation = theta;
  return e;
}

}  // namespace

std::vector<PointRC> extract_contour(const SegmentationMask& mask) {
  cv::Mat1b bin(mask.rows(), mask.cols());
  int fg = 0;
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) {
      bin(r, c) = mask.pixels(r, c) > 0.5 ? 1 : 0;
      fg += bin(r, c);
    }
  if (fg == 0) throw std::runtime_error("no structure found");

  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(bin, labels, stats, centroids, 8, CV_32S);
  int best = -1, best_area = 0;
  for (int i = 1; i < n; ++i) {
    const int area = stats.at<int>(i, cv::CC_STAT_AREA);
    if (area > best_area) {
      best_area = area;
      best = i;
    }
  }
  if (best < 0) throw std::runtime_error("no structure found");
  if (best_area < 10) throw std::runtime_error("structure too small");

  cv::Mat1b comp(mask.rows(), mask.cols(), uchar(0));
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (labels.at<int>(r, c) == best) comp(r, c) = 255;

  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(comp, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_NONE);
  if (contours.empty()) throw std::runtime_error("no structure found");
  const auto& longest =
      *std::max_element(contours.begin(), contours.end(),
                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
  if (longest.size() < 6) throw std::runtime_error("structure too small");

  std::vector<PointRC> poly;
  poly.reserve(longest.size());
  for (const auto& p : longest) poly.push_back({static_cast<double>(p.y), static_cast<double>(p.x)});
  return poly;
}

EllipseParams fit_ellipse(const std::vector<PointRC>& points) {
  const size_t n = points.size();
  if (n < 6) throw std::runtime_error("degenerate conic");

  // normalize for conditioning: center at centroid, scale by RMS radius
  double mr = 0.0, mc = 0.0;
  for (const auto& p : points) {
    mr += p.row;
    mc += p.col;
  }
  mr /= n;
  mc /= n;
  double scale = 0.0;
  for (const auto& p : points)
    scale += (p.row - mr) * (p.row - mr) + (p.col - mc) * (p.col - mc);
  scale = std::sqrt(scale / n);
  if (scale <= 0.0) throw std::runtime_error("degenerate conic");

  Eigen::MatrixXd D1(n, 3), D2(n, 3);
  for (size_t i = 0; i < n; ++i) {
    const double x = (points[i].col - mc) / scale;
    const double y = (points[i].row - mr) / scale;
    D1(i, 0) = x * x;
    D1(i, 1) = x * y;
    D1(i, 2) = y * y;
    D2(i, 0) = x;
    D2(i, 1) = y;
    D2(i, 2) = 1.0;
  }

  const Eigen::Matrix3d S1 = D1.transpose() * D1;
  const Eigen::Matrix3d S2 = D1.transpose() * D2;
  const Eigen::Matrix3d S3 = D2.transpose() * D2;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(S3);
  if (!lu.isInvertible()) throw std::runtime_error("degenerate conic");
  const Eigen::Matrix3d T = -lu.solve(S2.transpose());
  const Eigen::Matrix3d M0 = S1 + S2 * T;

  Eigen::Matrix3d M;  // C1^-1 * M0 with C1 = [[0,0,2],[0,-1,0],[2,0,0]]
  M.row(0) = M0.row(2) / 2.0;
  M.row(1) = -M0.row(1);
  M.row(2) = M0.row(0) / 2.0;

  Eigen::EigenSolver<Eigen::Matrix3d> es(M);
  int pick = -1;
  double best_cond = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(es.eigenvalues()(i).imag()) > 1e-9) continue;
    Eigen::Vector3d v = es.eigenvectors().col(i).real();
    const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (cond > best_cond) {
      best_cond = cond;
      pick = i;
    }
  }
  if (pick < 0) throw std::runtime_error("degenerate conic");

  Eigen::Vector3d a1 = es.eigenvectors().col(pick).real();
  Eigen::Vector3d a2 = T * a1;
  Eigen::Matrix<double, 6, 1> kn;  // conic in normalized coords
  kn << a1(0), a1(1), a1(2), a2(0), a2(1), a2(2);
  kn.normalize();

  double rss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double v = D1(i, 0) * kn(0) + D1(i, 1) * kn(1) + D1(i, 2) * kn(2) + D2(i, 0) * kn(3) +
                     D2(i, 1) * kn(4) + kn(5);
    rss += v * v;
  }

  EllipseParams e = conic_to_params(kn);
  e.center = {e.center.row * scale + mr, e.center.col * scale + mc};
  e.semi_major *= scale;
  e.semi_minor *= scale;
  e.residual = std::sqrt(rss / n);
  return e;
}

double ellipse_perimeter(double a, double b) {
  if (a < b) std::swap(a, b);
  if (!(a > 0.0)) throw std::invalid_argument("nonpositive semi-axis");
  const double h = ((a - b) / (a + b)) * ((a - b) / (a + b));
  return kPi * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
}

double ellipse_perimeter(const EllipseParams& e) {
  return ellipse_perimeter(e.semi_major, e.semi_minor);
}

namespace {

// Fit in isotropic physical coordinates (mm); anisotropic pixel space has no
// single px->cm conversion for a perimeter.
EllipseParams fit_in_mm(const std::vector<PointRC>& contour_px, const SpacingMm& s) {
  std::vector<PointRC> mm;
  mm.reserve(contour_px.size());
  for (const auto& p : contour_px)
    mm.push_back({p.row * s.row_mm_per_px, p.col * s.col_mm_per_px});
  return fit_ellipse(mm);
}

}  // namespace

HeadBiometrics head_biometrics(const SegmentationMask& mask, const SpacingMm& spacing) {
  const auto contour = extract_contour(mask);
  HeadBiometrics out;
  out.ellipse = fit_ellipse(contour);
  const EllipseParams mm = fit_in_mm(contour, spacing);
  out.hc_cm = ellipse_perimeter(mm) / 10.0;
  out.bpd_cm = 2.0 * mm.semi_minor / 10.0;
  return out;
}

AbdomenBiometrics abdomen_biometrics(const SegmentationMask& mask, const SpacingMm& spacing) {
  const auto contour = extract_contour(mask);
  AbdomenBiometrics out;
  out.ellipse = fit_ellipse(contour);
  out.ac_cm = ellipse_perimeter(fit_in_mm(contour, spacing)) / 10.0;
  return out;
}

double px_to_cm(double length_px, const SpacingMm& spacing,
                const std::optional<PointRC>& direction) {
  if (spacing.row_mm_per_px <= 0.0 || spacing.col_mm_per_px <= 0.0)
    throw std::invalid_argument("nonpositive spacing");
  if (spacing.isotropic() && !direction) return length_px * spacing.row_mm_per_px / 10.0;
  if (!direction)
    throw std::invalid_argument("anisotropic spacing needs a direction for a straight-line measure");
  const double dr = direction->row, dc = direction->col;
  const double norm = std::hypot(dr, dc);
  if (norm <= 0.0) throw std::invalid_argument("zero direction vector");
  const double metric = std::hypot(dr * spacing.row_mm_per_px, dc * spacing.col_mm_per_px);
  return length_px * metric / norm / 10.0;
}

}  // namespace ageus

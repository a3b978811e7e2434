#include "ageus/synth.hpp"

#include "ageus/dataset.hpp"
#include "ageus/femur.hpp"
#include "ageus/ga.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace ageus {

void PhantomSpec::validate() const {
  if (image_size < 64) throw std::invalid_argument("phantom image_size too small");
  const bool ranges_ok = head_a_px_min > 0 && head_a_px_max >= head_a_px_min &&
                         abd_a_px_min > 0 && abd_a_px_max >= abd_a_px_min &&
                         abd_aspect_min >= 1.0 && abd_aspect_max >= abd_aspect_min &&
                         femur_len_px_min > 0 && femur_len_px_max >= femur_len_px_min &&
                         femur_thickness_px > 0;
  if (!ranges_ok) throw std::invalid_argument("phantom ranges must be positive");
  if (abd_ring_contrast >= head_ring_contrast)
    throw std::invalid_argument("abdomen contrast must be below head contrast");
}

namespace {

double lerp(double lo, double hi, double t) { return lo + (hi - lo) * t; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Perimeter-to-minor-diameter ratio of an ellipse with aspect k = a/b;
// strictly increasing in k, pi at k = 1.
double perimeter_ratio(double k) { return ellipse_perimeter(k, 1.0) / 2.0; }

// Invert perimeter_ratio by bisection on [1, 8].
double aspect_for_ratio(double ratio) {
  double lo = 1.0, hi = 8.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (perimeter_ratio(mid) < ratio ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void apply_speckle(Grid* img, double sigma, std::mt19937_64& rng) {
  for (int r = 0; r < img->rows; ++r)
    for (int c = 0; c < img->cols; ++c) {
      const double u = uniform(rng, 0.0, 1.0);
      const double rayleigh = sigma * std::sqrt(-2.0 * std::log1p(-u));
      (*img)(r, c) = std::clamp((*img)(r, c) * (0.5 + rayleigh), 0.0, 1.0);
    }
}

// Normalized elliptic radius of a pixel: 1 on the boundary, < 1 inside.
double elliptic_radius(const EllipseParams& e, double row, double col) {
  const double dx = col - e.center.col;
  const double dy = row - e.center.row;
  const double ct = std::cos(e.rotation), st = std::sin(e.rotation);
  const double xp = dx * ct + dy * st;
  const double yp = -dx * st + dy * ct;
  return std::hypot(xp / e.semi_major, yp / e.semi_minor);
}

EllipseParams place_ellipse(std::mt19937_64& rng, int size, double a, double k) {
  EllipseParams e;
  e.semi_major = a;
  e.semi_minor = a / k;
  e.rotation = uniform(rng, 0.0, M_PI);
  const double margin = a + 6.0;
  e.center.row = uniform(rng, margin, size - margin);
  e.center.col = uniform(rng, margin, size - margin);
  return e;
}

struct EllipsePlane {
  Grid image;
  Grid mask;
};

EllipsePlane render_ellipse(const PhantomSpec& spec, const EllipseParams& e, double ring_contrast,
                            int n_blobs, std::mt19937_64& rng) {
  const int size = spec.image_size;
  Grid img(size, size, spec.background_level);
  Grid mask = Grid::zeros(size, size);

  struct Blob {
    double row, col, radius, amp;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < n_blobs; ++i) {
    const double q = uniform(rng, 0.1, 0.7);
    const double phi = uniform(rng, 0.0, 2.0 * M_PI);
    const double ct = std::cos(e.rotation), st = std::sin(e.rotation);
    const double xp = q * e.semi_major * std::cos(phi);
    const double yp = q * e.semi_minor * std::sin(phi);
    blobs.push_back({e.center.row + xp * st + yp * ct, e.center.col + xp * ct - yp * st,
                     uniform(rng, 4.0, 10.0) * size / 256.0, uniform(rng, -0.15, 0.18)});
  }

  const double ring_halfwidth = 2.5 * size / 256.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double q = elliptic_radius(e, r, c);
      double v = img(r, c);
      if (q <= 1.0) {
        mask(r, c) = 1.0;
        v = spec.interior_level;
        for (const Blob& b : blobs) {
          const double d2 = (r - b.row) * (r - b.row) + (c - b.col) * (c - b.col);
          v += b.amp * std::exp(-d2 / (2.0 * b.radius * b.radius));
        }
      }
      // bright boundary ring, width measured along the minor axis
      const double band = (q - 1.0) * e.semi_minor / ring_halfwidth;
      v += ring_contrast * std::exp(-band * band);
      img(r, c) = std::clamp(v, 0.0, 1.0);
    }
  apply_speckle(&img, spec.speckle_sigma, rng);
  return {img, mask};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

HeadPhantom gen_head(const PhantomSpec& spec, std::mt19937_64& rng, std::optional<double> scale) {
  spec.validate();
  const double t = scale ? *scale : uniform(rng, 0.05, 0.95);
  const double px_scale = spec.image_size / 256.0;

  const double hc_cm = lerp(kHcRange.min_cm, kHcRange.max_cm, t);
  const double bpd_cm = lerp(kBpdRange.min_cm, kBpdRange.max_cm, t);
  // aspect from the HC/BPD ratio, clamped away from the circular limit
  const double ratio = std::clamp(hc_cm / bpd_cm, perimeter_ratio(1.06), perimeter_ratio(1.6));
  const double k = aspect_for_ratio(ratio);

  const double a = uniform(rng, spec.head_a_px_min, spec.head_a_px_max) * px_scale;
  EllipseParams e = place_ellipse(rng, spec.image_size, a, k);
  const double spacing = hc_cm * 10.0 / ellipse_perimeter(e);

  auto plane = render_ellipse(spec, e, spec.head_ring_contrast, 2, rng);
  HeadPhantom out;
  out.image = {plane.image, {spacing, spacing}, Plane::Head, ""};
  out.mask = {plane.mask, Structure::Head};
  out.truth = e;
  return out;
}

AbdomenPhantom gen_abdomen(const PhantomSpec& spec, std::mt19937_64& rng,
                           std::optional<double> scale) {
  spec.validate();
  const double t = scale ? *scale : uniform(rng, 0.05, 0.95);
  const double px_scale = spec.image_size / 256.0;

  const double ac_cm = lerp(kAcRange.min_cm, kAcRange.max_cm, t);
  const double k = uniform(rng, spec.abd_aspect_min, spec.abd_aspect_max);
  const double a = uniform(rng, spec.abd_a_px_min, spec.abd_a_px_max) * px_scale;
  EllipseParams e = place_ellipse(rng, spec.image_size, a, k);
  const double spacing = ac_cm * 10.0 / ellipse_perimeter(e);

  auto plane = render_ellipse(spec, e, spec.abd_ring_contrast, 5, rng);
  AbdomenPhantom out;
  out.image = {plane.image, {spacing, spacing}, Plane::Abdomen, ""};
  out.mask = {plane.mask, Structure::Abdomen};
  out.truth = e;
  return out;
}

FemurPhantom gen_femur(const PhantomSpec& spec, std::mt19937_64& rng, std::optional<double> scale) {
  spec.validate();
  const double t = scale ? *scale : uniform(rng, 0.05, 0.95);
  const int size = spec.image_size;
  const double px_scale = size / 256.0;

  const double fl_cm = lerp(kFlRange.min_cm, kFlRange.max_cm, t);
  const double len = uniform(rng, spec.femur_len_px_min, spec.femur_len_px_max) * px_scale;
  const double spacing = fl_cm * 10.0 / len;

  const double phi = uniform(rng, 0.0, M_PI);
  const double margin = len / 2.0 + 8.0;
  const double cr = uniform(rng, margin, size - margin);
  const double cc = uniform(rng, margin, size - margin);
  FemurAnnotation ann;
  ann.p1 = {cr - len / 2.0 * std::sin(phi), cc - len / 2.0 * std::cos(phi)};
  ann.p2 = {cr + len / 2.0 * std::sin(phi), cc + len / 2.0 * std::cos(phi)};

  Grid img(size, size, spec.background_level);
  const double half_th = spec.femur_thickness_px * px_scale / 2.0;
  const double dr = ann.p2.row - ann.p1.row, dc = ann.p2.col - ann.p1.col;
  const double seg_len2 = dr * dr + dc * dc;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      // distance to the capsule: projection clamped to the segment
      const double u =
          std::clamp(((r - ann.p1.row) * dr + (c - ann.p1.col) * dc) / seg_len2, 0.0, 1.0);
      const double d = std::hypot(r - (ann.p1.row + u * dr), c - (ann.p1.col + u * dc));
      const double band = std::max(0.0, d - half_th) / (1.5 * px_scale);
      img(r, c) = std::clamp(img(r, c) + 0.85 * std::exp(-band * band), 0.0, 1.0);
    }
  apply_speckle(&img, spec.speckle_sigma, rng);

  FemurPhantom out;
  out.image = {img, {spacing, spacing}, Plane::Femur, ""};
  out.annotation = ann;
  return out;
}

fs::path gen_dataset(const PhantomSpec& spec, int n_studies, const fs::path& out_dir) {
  spec.validate();
  if (n_studies < 1) throw std::invalid_argument("n_studies must be positive");
  fs::create_directories(out_dir);

  std::ofstream manifest(out_dir / "manifest.csv");
  manifest << "study_id,plane,row_mm_per_px,col_mm_per_px,"
              "femur_p1_row,femur_p1_col,femur_p2_row,femur_p2_col\n";
  std::ofstream truth(out_dir / "truth.csv");
  truth << "study_id,hc_cm,bpd_cm,ac_cm,fl_cm,ga_weeks,warnings\n";

  for (int i = 0; i < n_studies; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04d", i);
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(i) * 2654435761ull +
                        1469598103934665603ull);
    const double t = uniform(rng, 0.05, 0.95);

    const HeadPhantom head = gen_head(spec, rng, t);
    const AbdomenPhantom abd = gen_abdomen(spec, rng, t);
    const FemurPhantom fem = gen_femur(spec, rng, t);

    const fs::path dir = out_dir / id;
    fs::create_directories(dir);
    write_grayscale_png8(dir / "head.png", head.image.pixels);
    write_grayscale_png8(dir / "head_mask.png", head.mask.pixels);
    write_grayscale_png8(dir / "abdomen.png", abd.image.pixels);
    write_grayscale_png8(dir / "abdomen_mask.png", abd.mask.pixels);
    write_grayscale_png8(dir / "femur.png", fem.image.pixels);

    auto row = [&](Plane plane, const SpacingMm& sp, const std::string& tail) {
      manifest << id << ',' << plane_name(plane) << ',' << fmt(sp.row_mm_per_px) << ','
               << fmt(sp.col_mm_per_px) << ',' << tail << "\n";
    };
    row(Plane::Head, head.image.spacing_mm, ",,,");
    row(Plane::Abdomen, abd.image.spacing_mm, ",,,");
    row(Plane::Femur, fem.image.spacing_mm,
        fmt(fem.annotation.p1.row) + "," + fmt(fem.annotation.p1.col) + "," +
            fmt(fem.annotation.p2.row) + "," + fmt(fem.annotation.p2.col));

    // reference biometrics measured from the generated ground truth so the
    // oracle pipeline path reproduces them bit-for-bit
    const HeadBiometrics hb = head_biometrics(head.mask, head.image.spacing_mm);
    const AbdomenBiometrics ab = abdomen_biometrics(abd.mask, abd.image.spacing_mm);
    const double fl = femur_length(fem.annotation, fem.image.spacing_mm);
    const double ga = hadlock_ga(hb.hc_cm, hb.bpd_cm, ab.ac_cm, fl);
    truth << id << ',' << fmt(hb.hc_cm) << ',' << fmt(hb.bpd_cm) << ',' << fmt(ab.ac_cm) << ','
          << fmt(fl) << ',' << fmt(ga) << ",\n";
  }
  return out_dir / "manifest.csv";
}

}  // namespace ageus

#include "ageus/femur.hpp"

#include "ageus/metrics.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <queue>

namespace ageus {
namespace {

void renormalize(Grid& g) {
  double lo, hi;
  cv::minMaxLoc(g, &lo, &hi);
  if (hi <= lo) return;  // constant map stays as-is
  g = (g - lo) / (hi - lo);
}

struct Pixel {
  double value;
  int row, col;
  int label;
  bool operator>(const Pixel& o) const {
    if (value != o.value) return value > o.value;
    if (row != o.row) return row > o.row;
    return col > o.col;
  }
};

// Marker-based watershed: priority flood of the scalar field from labeled
// seeds, 4-connected. Returns a full label image (labels >= 1).
cv::Mat1i watershed_flood(const Grid& map, const cv::Mat1i& markers) {
  cv::Mat1i labels = markers.clone();
  std::priority_queue<Pixel, std::vector<Pixel>, std::greater<>> heap;
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c)
      if (markers(r, c) > 0) heap.push({map(r, c), r, c, markers(r, c)});

  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  while (!heap.empty()) {
    const Pixel p = heap.top();
    heap.pop();
    for (int k = 0; k < 4; ++k) {
      const int r = p.row + dr[k], c = p.col + dc[k];
      if (r < 0 || c < 0 || r >= map.rows || c >= map.cols) continue;
      if (labels(r, c) != 0) continue;
      labels(r, c) = p.label;
      heap.push({map(r, c), r, c, p.label});
    }
  }
  return labels;
}

PointRC argmin_in_region(const Grid& map, const cv::Mat1i& labels, int label) {
  double best = std::numeric_limits<double>::infinity();
  int br = -1, bc = -1;
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      if (labels(r, c) != label) continue;
      if (map(r, c) < best) {
        best = map(r, c);
        br = r;
        bc = c;
      }
    }
  return {static_cast<double>(br), static_cast<double>(bc)};
}

cv::Mat kernel_disk(int radius) {
  const int k = 2 * radius + 1;
  return cv::getStructuringElement(cv::MORPH_ELLIPSE, cv::Size(k, k));
}

// Low-value region at percentile q, after binary opening.
cv::Mat1i threshold_components(const Grid& map, double q, int opening_radius, int* count) {
  std::vector<double> vals;
  vals.reserve(map.rows * map.cols);
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) vals.push_back(map(r, c));
  const double thr = percentile(vals, q);

  cv::Mat1b bin(map.rows, map.cols);
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) bin(r, c) = map(r, c) <= thr ? 255 : 0;
  cv::morphologyEx(bin, bin, cv::MORPH_OPEN, kernel_disk(opening_radius));

  cv::Mat1i labels;
  *count = cv::connectedComponents(bin, labels, 8, CV_32S) - 1;
  return labels;
}

// Two lowest 8-neighborhood local minima at least min_sep apart (Chebyshev).
std::vector<PointRC> lowest_local_minima(const Grid& map, int min_sep) {
  std::vector<Pixel> minima;
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) {
      bool is_min = true;
      for (int dr = -1; dr <= 1 && is_min; ++dr)
        for (int dc = -1; dc <= 1 && is_min; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= map.rows || cc >= map.cols) continue;
          if (map(rr, cc) < map(r, c)) is_min = false;
        }
      if (is_min) minima.push_back({map(r, c), r, c, 0});
    }
  std::sort(minima.begin(), minima.end(), [](const Pixel& a, const Pixel& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  std::vector<PointRC> picked;
  for (const auto& m : minima) {
    bool ok = true;
    for (const auto& p : picked)
      if (std::max(std::abs(m.row - p.row), std::abs(m.col - p.col)) < min_sep) ok = false;
    if (ok) picked.push_back({static_cast<double>(m.row), static_cast<double>(m.col)});
    if (picked.size() == 2) break;
  }
  return picked;
}

}  // namespace

DistanceMap make_distance_map(const FemurAnnotation& ann, int rows, int cols) {
  const int r1 = static_cast<int>(std::lround(ann.p1.row));
  const int c1 = static_cast<int>(std::lround(ann.p1.col));
  const int r2 = static_cast<int>(std::lround(ann.p2.row));
  const int c2 = static_cast<int>(std::lround(ann.p2.col));
  if (ann.p1.row == ann.p2.row && ann.p1.col == ann.p2.col)
    throw std::runtime_error("degenerate femur annotation");
  auto inside = [&](double r, double c) { return r >= 0 && c >= 0 && r <= rows - 1 && c <= cols - 1; };
  if (!inside(ann.p1.row, ann.p1.col) || !inside(ann.p2.row, ann.p2.col))
    throw std::invalid_argument("femur endpoint out of bounds");

  DistanceMap map;
  map.values = Grid(rows, cols);
  double mx = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double d1 = std::hypot(r - ann.p1.row, c - ann.p1.col);
      const double d2 = std::hypot(r - ann.p2.row, c - ann.p2.col);
      const double d = std::min(d1, d2);
      map.values(r, c) = d;
      mx = std::max(mx, d);
    }
  map.values(r1, c1) = 0.0;
  map.values(r2, c2) = 0.0;
  if (mx > 0.0) map.values /= mx;
  return map;
}

DistanceMap postprocess_map(const DistanceMap& map, const FemurPostprocessParams& params) {
  DistanceMap out;
  const int ksize = 2 * static_cast<int>(std::ceil(3.0 * params.sigma_px)) + 1;
  cv::GaussianBlur(map.values, out.values, cv::Size(ksize, ksize), params.sigma_px,
                   params.sigma_px, cv::BORDER_REPLICATE);
  // opening of the inverted map == closing of the map
  cv::morphologyEx(out.values, out.values, cv::MORPH_CLOSE,
                   kernel_disk(params.opening_radius_px));
  renormalize(out.values);
  return out;
}

EndpointPair locate_endpoints(const DistanceMap& map, const FemurPostprocessParams& params) {
  const Grid& v = map.values;
  // percentile sweep: start value, then outward in steps
  std::vector<double> qs{params.start_percentile};
  for (double step = params.percentile_step;; step += params.percentile_step) {
    const double down = params.start_percentile - step;
    const double up = params.start_percentile + step;
    bool any = false;
    if (down >= params.min_percentile) {
      qs.push_back(down);
      any = true;
    }
    if (up <= params.max_percentile) {
      qs.push_back(up);
      any = true;
    }
    if (!any) break;
  }

  cv::Mat1i best_labels;
  int best_count = -1;
  for (double q : qs) {
    int count = 0;
    cv::Mat1i labels = threshold_components(v, q, params.opening_radius_px, &count);
    if (count == 2) {
      best_labels = labels;
      best_count = 2;
      break;
    }
    if (count >= 1 &&
        (best_count < 0 || std::abs(count - 2) < std::abs(best_count - 2) ||
         (std::abs(count - 2) == std::abs(best_count - 2) && count > best_count))) {
      best_labels = labels;
      best_count = count;
    }
  }
  if (best_count < 1) throw std::runtime_error("endpoints not separable");

  cv::Mat1i regions;
  if (best_count == 2) {
    regions = best_labels;
  } else if (best_count > 2) {
    // merge: flood from all components, keep the two basins with the lowest minima
    const cv::Mat1i basins = watershed_flood(v, best_labels);
    std::vector<double> basin_min(best_count + 1, std::numeric_limits<double>::infinity());
    for (int r = 0; r < v.rows; ++r)
      for (int c = 0; c < v.cols; ++c)
        basin_min[basins(r, c)] = std::min(basin_min[basins(r, c)], v(r, c));
    std::vector<int> order;
    for (int i = 1; i <= best_count; ++i) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return basin_min[a] < basin_min[b]; });
    regions = cv::Mat1i(v.rows, v.cols, 0);
    for (int r = 0; r < v.rows; ++r)
      for (int c = 0; c < v.cols; ++c) {
        if (basins(r, c) == order[0]) regions(r, c) = 1;
        if (basins(r, c) == order[1]) regions(r, c) = 2;
      }
  } else {
    // split: seed a watershed with the two lowest local minima
    const auto seeds = lowest_local_minima(v, 3);
    if (seeds.size() < 2) throw std::runtime_error("endpoints not separable");
    cv::Mat1i markers(v.rows, v.cols, 0);
    markers(static_cast<int>(seeds[0].row), static_cast<int>(seeds[0].col)) = 1;
    markers(static_cast<int>(seeds[1].row), static_cast<int>(seeds[1].col)) = 2;
    regions = watershed_flood(v, markers);
  }

  EndpointPair pair;
  pair.p1 = argmin_in_region(v, regions, 1);
  pair.p2 = argmin_in_region(v, regions, 2);
  if (pair.p1.row < 0 || pair.p2.row < 0) throw std::runtime_error("endpoints not separable");
  // leftmost-topmost endpoint first
  if (pair.p2.col < pair.p1.col || (pair.p2.col == pair.p1.col && pair.p2.row < pair.p1.row))
    std::swap(pair.p1, pair.p2);
  return pair;
}

double femur_length(const EndpointPair& pair, const SpacingMm& spacing) {
  const double dr = (pair.p1.row - pair.p2.row) * spacing.row_mm_per_px;
  const double dc = (pair.p1.col - pair.p2.col) * spacing.col_mm_per_px;
  return std::hypot(dr, dc) / 10.0;
}

double femur_length(const FemurAnnotation& ann, const SpacingMm& spacing) {
  return femur_length(EndpointPair{ann.p1, ann.p2}, spacing);
}

}  // namespace ageus

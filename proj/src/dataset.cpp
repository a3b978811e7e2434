#include "ageus/dataset.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace ageus {
namespace {

struct ManifestRow {
  SpacingMm spacing;
  std::optional<FemurAnnotation> annotation;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// manifest keyed by (study_id, plane name)
std::map<std::pair<std::string, std::string>, ManifestRow> read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open manifest: " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty manifest: " + file.string());
  std::map<std::pair<std::string, std::string>, ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = split_csv_line(line);
    if (f.size() < 4) throw std::runtime_error("malformed manifest row: " + line);
    f.resize(8);
    ManifestRow row;
    row.spacing.row_mm_per_px = std::stod(f[2]);
    row.spacing.col_mm_per_px = std::stod(f[3]);
    if (row.spacing.row_mm_per_px <= 0.0 || row.spacing.col_mm_per_px <= 0.0)
      throw std::runtime_error("nonpositive spacing for study '" + f[0] + "' plane '" + f[1] +
                               "' in manifest");
    if (!f[4].empty() || !f[5].empty() || !f[6].empty() || !f[7].empty()) {
      if (f[4].empty() || f[5].empty() || f[6].empty() || f[7].empty())
        throw std::runtime_error("incomplete femur annotation for study '" + f[0] + "'");
      FemurAnnotation ann;
      ann.p1 = {std::stod(f[4]), std::stod(f[5])};
      ann.p2 = {std::stod(f[6]), std::stod(f[7])};
      row.annotation = ann;
    }
    rows[{f[0], f[1]}] = row;
  }
  return rows;
}

Grid binarize_mask(const Grid& raw) {
  double mx = 0.0;
  cv::minMaxLoc(raw, nullptr, &mx);
  Grid out(raw.rows, raw.cols);
  const double thr = mx > 0.0 ? 0.5 * mx : 0.5;
  for (int r = 0; r < raw.rows; ++r)
    for (int c = 0; c < raw.cols; ++c) out(r, c) = raw(r, c) >= thr ? 1.0 : 0.0;
  return out;
}

}  // namespace

Grid read_grayscale_png(const fs::path& file) {
  cv::Mat m = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw std::runtime_error("cannot read image: " + file.string());
  if (m.channels() != 1) {
    cv::Mat g;
    cv::cvtColor(m, g, cv::COLOR_BGR2GRAY);
    m = g;
  }
  Grid out;
  m.convertTo(out, CV_64F);
  return out;
}

void write_grayscale_png8(const fs::path& file, const Grid& img01) {
  cv::Mat1b u8(img01.rows, img01.cols);
  for (int r = 0; r < img01.rows; ++r)
    for (int c = 0; c < img01.cols; ++c)
      u8(r, c) = cv::saturate_cast<uchar>(std::lround(img01(r, c) * 255.0));
  if (!cv::imwrite(file.string(), u8)) throw std::runtime_error("cannot write " + file.string());
}

void write_grayscale_png16(const fs::path& file, const Grid& img01) {
  cv::Mat1w u16(img01.rows, img01.cols);
  for (int r = 0; r < img01.rows; ++r)
    for (int c = 0; c < img01.cols; ++c)
      u16(r, c) = cv::saturate_cast<ushort>(std::lround(img01(r, c) * 65535.0));
  if (!cv::imwrite(file.string(), u16)) throw std::runtime_error("cannot write " + file.string());
}

std::vector<StudyRecord> load_study_dir(const fs::path& root) {
  return load_study_dir(root, nullptr);
}

std::vector<StudyRecord> load_study_dir(const fs::path& root,
                                        std::map<std::string, std::string>* study_errors) {
  if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root.string());
  auto manifest = read_manifest(root / "manifest.csv");

  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());

  std::vector<StudyRecord> records;
  for (const auto& id : ids) {
    const fs::path dir = root / id;
    StudyRecord rec;
    rec.study_id = id;
    try {

    auto load_plane = [&](Plane plane) -> std::optional<UltrasoundImage> {
      const fs::path file = dir / (std::string(plane_name(plane)) + ".png");
      if (!fs::exists(file)) return std::nullopt;
      auto it = manifest.find({id, plane_name(plane)});
      if (it == manifest.end())
        throw std::runtime_error("no manifest row for image " + file.string());
      UltrasoundImage img;
      img.pixels = read_grayscale_png(file);
      img.spacing_mm = it->second.spacing;
      img.plane_tag = plane;
      img.study_id = id;
      return img;
    };

    rec.head_image = load_plane(Plane::Head);
    rec.abdomen_image = load_plane(Plane::Abdomen);
    rec.femur_image = load_plane(Plane::Femur);

    auto load_mask = [&](const char* name, Structure s,
                         const std::optional<UltrasoundImage>& img) -> std::optional<SegmentationMask> {
      const fs::path file = dir / (std::string(name) + "_mask.png");
      if (!fs::exists(file)) return std::nullopt;
      if (!img)
        throw std::runtime_error("mask without image: " + file.string());
      SegmentationMask mask;
      mask.pixels = binarize_mask(read_grayscale_png(file));
      mask.structure = s;
      if (mask.pixels.rows != img->rows() || mask.pixels.cols != img->cols())
        throw std::runtime_error("mask/image shape mismatch: " + file.string());
      return mask;
    };

    rec.head_mask = load_mask("head", Structure::Head, rec.head_image);
    rec.abdomen_mask = load_mask("abdomen", Structure::Abdomen, rec.abdomen_image);

    if (rec.femur_image) {
      auto it = manifest.find({id, "femur"});
      if (it != manifest.end() && it->second.annotation) {
        const auto& ann = *it->second.annotation;
        auto inside = [&](const PointRC& p) {
          return p.row >= 0 && p.col >= 0 && p.row <= rec.femur_image->rows() - 1 &&
                 p.col <= rec.femur_image->cols() - 1;
        };
        if (!inside(ann.p1) || !inside(ann.p2))
          throw std::runtime_error("femur annotation out of bounds for study '" + id + "'");
        rec.femur_annotation = ann;
      }
    }

    if (!rec.head_image && !rec.abdomen_image && !rec.femur_image) continue;
    records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      if (!study_errors) throw;
      (*study_errors)[id] = e.what();
    }
  }
  return records;
}

}  // namespace ageus

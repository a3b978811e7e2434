#include "ageus/pipeline.hpp"

#include "ageus/geometry.hpp"
#include "ageus/losses.hpp"
#include "ageus/preprocess.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace ageus {

namespace {

Tensor single_batch(const Grid& img) {
  Tensor x(1, 1, img.rows, img.cols);
  std::copy(img.begin(), img.end(), x.v.begin());
  return x;
}

// Nearest-neighbor resize of a model-space mask back to the original grid.
SegmentationMask mask_to_original(const Grid& model_mask, int rows, int cols,
                                  Structure structure) {
  Grid out(rows, cols);
  cv::resize(model_mask, out, {cols, rows}, 0.0, 0.0, cv::INTER_NEAREST);
  return {out, structure};
}

std::optional<double> seg_measurement(const UltrasoundImage& image,
                                      const std::optional<SegmentationMask>& truth_mask,
                                      SharedUNet* seg, const EstimateOptions& options,
                                      StudyEstimate* est, const char* label,
                                      double* second_out = nullptr) {
  try {
    SegmentationMask mask;
    const Structure structure =
        image.plane_tag == Plane::Head ? Structure::Head : Structure::Abdomen;
    if (options.oracle) {
      if (!truth_mask) throw std::runtime_error("no ground-truth mask");
      mask = *truth_mask;
    } else {
      if (!seg) throw std::runtime_error("no segmentation model");
      const auto res = resize_to_model(normalize_intensity(image), std::nullopt,
                                       options.seg_image_size);
      const auto out = seg->forward(single_batch(res.image.pixels));
      const Grid model_mask = logits_to_mask(
          structure == Structure::Head ? out.head_logits : out.abd_logits, 0);
      mask = mask_to_original(model_mask, image.rows(), image.cols(), structure);
    }
    if (structure == Structure::Head) {
      const HeadBiometrics hb = head_biometrics(mask, image.spacing_mm);
      if (second_out) *second_out = hb.bpd_cm;
      return hb.hc_cm;
    }
    return abdomen_biometrics(mask, image.spacing_mm).ac_cm;
  } catch (const std::exception& e) {
    est->warnings.push_back(std::string(label) + ": " + e.what());
    return std::nullopt;
  }
}

std::optional<double> femur_measurement(const UltrasoundImage& image,
                                        const std::optional<FemurAnnotation>& truth,
                                        FemurUNet* femur, const EstimateOptions& options,
                                        StudyEstimate* est) {
  try {
    if (options.oracle) {
      if (!truth) throw std::runtime_error("no ground-truth annotation");
      return femur_length(*truth, image.spacing_mm);
    }
    if (!femur) throw std::runtime_error("no femur model");
    const auto res = resize_to_model(normalize_intensity(image), std::nullopt,
                                     options.femur_image_size);
    const Tensor pred = femur->infer(single_batch(res.image.pixels));
    DistanceMap map;
    map.values = Grid(pred.h, pred.w);
    std::copy(pred.v.begin(), pred.v.end(), map.values.begin());
    const EndpointPair pair = locate_endpoints(postprocess_map(map, options.femur_params),
                                               options.femur_params);
    const EndpointPair orig{to_original_space(pair.p1, res.scale_row, res.scale_col),
                            to_original_space(pair.p2, res.scale_row, res.scale_col)};
    return femur_length(orig, image.spacing_mm);
  } catch (const std::exception& e) {
    est->warnings.push_back(std::string("fl: ") + e.what());
    return std::nullopt;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Minimal CSV line splitter with double-quote support.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::map<std::string, double> collect(const std::vector<StudyEstimate>& rows,
                                      std::optional<double> StudyEstimate::*ga,
                                      std::optional<double> BiometricSet::*field) {
  std::map<std::string, double> out;
  for (const auto& r : rows) {
    const std::optional<double>& v = ga ? r.*ga : r.biometrics.*field;
    if (v) out[r.study_id] = *v;
  }
  return out;
}

}  // namespace

StudyEstimate estimate_study(const StudyRecord& record, SharedUNet* seg, FemurUNet* femur,
                             const EstimateOptions& options) {
  StudyEstimate est;
  est.study_id = record.study_id;
  if (!record.head_image || !record.abdomen_image || !record.femur_image) {
    const char* missing = !record.head_image ? "head" : !record.abdomen_image ? "abdomen" : "femur";
    est.error = std::string("missing ") + missing + " plane";
    return est;
  }

  double bpd = std::numeric_limits<double>::quiet_NaN();
  est.biometrics.hc_cm =
      seg_measurement(*record.head_image, record.head_mask, seg, options, &est, "hc", &bpd);
  if (est.biometrics.hc_cm) est.biometrics.bpd_cm = bpd;
  est.biometrics.ac_cm =
      seg_measurement(*record.abdomen_image, record.abdomen_mask, seg, options, &est, "ac");
  est.biometrics.fl_cm =
      femur_measurement(*record.femur_image, record.femur_annotation, femur, options, &est);

  for (const auto& w : validate_biometrics(est.biometrics))
    if (w.find("missing") == std::string::npos) est.warnings.push_back(w);

  try {
    est.ga_weeks = hadlock_ga(est.biometrics).ga_weeks;
  } catch (const std::exception& e) {
    est.warnings.push_back(std::string("ga: ") + e.what());
  }
  return est;
}

std::vector<StudyEstimate> estimate_dataset(const std::vector<StudyRecord>& records,
                                            SharedUNet* seg, FemurUNet* femur,
                                            const EstimateOptions& options) {
  std::vector<StudyEstimate> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(estimate_study(rec, seg, femur, options));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.study_id < b.study_id; });
  return out;
}

void write_report(const fs::path& file, const std::vector<StudyEstimate>& rows) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot open report for writing: " + file.string());
  os << "study_id,hc_cm,bpd_cm,ac_cm,fl_cm,ga_weeks,warnings\n";
  for (const auto& r : rows) {
    std::string notes;
    if (r.error) notes = "error: " + *r.error;
    for (const auto& w : r.warnings) {
      if (!notes.empty()) notes += "; ";
      notes += w;
    }
    os << r.study_id << ',' << fmt_opt(r.biometrics.hc_cm) << ',' << fmt_opt(r.biometrics.bpd_cm)
       << ',' << fmt_opt(r.biometrics.ac_cm) << ',' << fmt_opt(r.biometrics.fl_cm) << ','
       << fmt_opt(r.ga_weeks) << ',' << csv_quote(notes) << "\n";
  }
}

std::vector<StudyEstimate> read_report(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open report: " + file.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty report: " + file.string());
  std::vector<StudyEstimate> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 6) throw std::runtime_error("malformed report row: " + line);
    StudyEstimate r;
    r.study_id = f[0];
    auto opt = [&](int i) -> std::optional<double> {
      if (i >= static_cast<int>(f.size()) || f[i].empty()) return std::nullopt;
      return std::stod(f[i]);
    };
    r.biometrics.hc_cm = opt(1);
    r.biometrics.bpd_cm = opt(2);
    r.biometrics.ac_cm = opt(3);
    r.biometrics.fl_cm = opt(4);
    r.ga_weeks = opt(5);
    if (f.size() > 6 && !f[6].empty()) {
      if (f[6].rfind("error: ", 0) == 0)
        r.error = f[6].substr(7);
      else
        r.warnings.push_back(f[6]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MeasureEvaluation> evaluate_reports(const std::vector<StudyEstimate>& pred,
                                                const std::vector<StudyEstimate>& truth) {
  struct Field {
    const char* name;
    std::optional<double> StudyEstimate::*ga;
    std::optional<double> BiometricSet::*member;
  };
  const Field fields[] = {
      {"hc_cm", nullptr, &BiometricSet::hc_cm},  {"bpd_cm", nullptr, &BiometricSet::bpd_cm},
      {"ac_cm", nullptr, &BiometricSet::ac_cm},  {"fl_cm", nullptr, &BiometricSet::fl_cm},
      {"ga_weeks", &StudyEstimate::ga_weeks, nullptr},
  };

  std::vector<MeasureEvaluation> out;
  for (const Field& field : fields) {
    const auto p = collect(pred, field.ga, field.member);
    const auto t = collect(truth, field.ga, field.member);
    std::vector<double> pv, tv, abs_err;
    for (const auto& [id, tval] : t) {
      const auto it = p.find(id);
      if (it == p.end()) continue;
      pv.push_back(it->second);
      tv.push_back(tval);
      abs_err.push_back(std::abs(it->second - tval));
    }
    MeasureEvaluation ev;
    ev.name = field.name;
    ev.n = static_cast<int>(pv.size());
    if (ev.n > 0) {
      ev.errors = error_report(pv, tv);
      ev.abs_error_summary = summarize(abs_err, Orientation::LowerBetter);
    }
    out.push_back(ev);
  }
  return out;
}

TestResult compare_reports(const std::vector<StudyEstimate>& pred_a,
                           const std::vector<StudyEstimate>& pred_b,
                           const std::vector<StudyEstimate>& truth) {
  const auto a = collect(pred_a, &StudyEstimate::ga_weeks, nullptr);
  const auto b = collect(pred_b, &StudyEstimate::ga_weeks, nullptr);
  const auto t = collect(truth, &StudyEstimate::ga_weeks, nullptr);
  std::vector<double> ea, eb;
  for (const auto& [id, tval] : t) {
    const auto ia = a.find(id), ib = b.find(id);
    if (ia == a.end() || ib == b.end()) continue;
    ea.push_back(std::abs(ia->second - tval));
    eb.push_back(std::abs(ib->second - tval));
  }
  return wilcoxon_signed_rank(ea, eb);
}

std::string format_evaluation(const std::vector<MeasureEvaluation>& rows) {
  std::ostringstream os;
  os << "measure,n,mae,mse,rmse,mape,abs_err_median,abs_err_iqr_low,abs_err_iqr_high,"
        "abs_err_worst5\n";
  os << std::setprecision(9);
  for (const auto& r : rows) {
    os << r.name << ',' << r.n << ',' << r.errors.mae << ',' << r.errors.mse << ','
       << r.errors.rmse << ',' << r.errors.mape << ',' << r.abs_error_summary.median << ','
       << r.abs_error_summary.iqr_low << ',' << r.abs_error_summary.iqr_high << ','
       << r.abs_error_summary.worst5 << "\n";
  }
  return os.str();
}

}  // namespace ageus

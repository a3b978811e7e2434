#pragma once

#include "ageus/femur.hpp"
#include "ageus/ga.hpp"
#include "ageus/metrics.hpp"
#include "ageus/stats.hpp"
#include "ageus/types.hpp"
#include "ageus/unet.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ageus {

struct EstimateOptions {
  bool oracle = false;       // compute from ground-truth masks/annotations
  int seg_image_size = 256;  // model input resolutions (from the checkpoints)
  int femur_image_size = 256;
  FemurPostprocessParams femur_params;
};

// One report row: absent biometrics stay empty in the CSV; hard per-study
// failures land in `error` and become an error row.
struct StudyEstimate {
  std::string study_id;
  BiometricSet biometrics;
  std::optional<double> ga_weeks;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
};

// Full per-study pipeline: segment head/abdomen, fit ellipses, regress the
// femur distance map, locate endpoints, apply the gestational-age equation.
// Never throws for data-level failures. Models may be null in oracle mode.
StudyEstimate estimate_study(const StudyRecord& record, SharedUNet* seg, FemurUNet* femur,
                             const EstimateOptions& options);

std::vector<StudyEstimate> estimate_dataset(const std::vector<StudyRecord>& records,
                                            SharedUNet* seg, FemurUNet* femur,
                                            const EstimateOptions& options);

// Report CSV: study_id,hc_cm,bpd_cm,ac_cm,fl_cm,ga_weeks,warnings
void write_report(const std::filesystem::path& file, const std::vector<StudyEstimate>& rows);
std::vector<StudyEstimate> read_report(const std::filesystem::path& file);

struct MeasureEvaluation {
  std::string name;
  int n = 0;
  ErrorReport errors;
  MetricSummary abs_error_summary;  // median/IQR/5%-worst of |pred - truth|
};

// Joins predictions to truth by study_id; rows whose value is missing on
// either side are skipped for that measure.
std::vector<MeasureEvaluation> evaluate_reports(const std::vector<StudyEstimate>& pred,
                                                const std::vector<StudyEstimate>& truth);

// Wilcoxon signed-rank comparison of two prediction files' absolute GA
// errors against a shared truth file.
TestResult compare_reports(const std::vector<StudyEstimate>& pred_a,
                           const std::vector<StudyEstimate>& pred_b,
                           const std::vector<StudyEstimate>& truth);

std::string format_evaluation(const std::vector<MeasureEvaluation>& rows);

}  // namespace ageus

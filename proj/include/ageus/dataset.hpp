#pragma once

#include "ageus/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ageus {

// Loads a dataset directory:
//   <root>/<study_id>/{head,abdomen,femur}.png      8- or 16-bit grayscale
//   <root>/<study_id>/{head,abdomen}_mask.png
//   <root>/manifest.csv with header
//     study_id,plane,row_mm_per_px,col_mm_per_px,
//     femur_p1_row,femur_p1_col,femur_p2_row,femur_p2_col
// Records come back sorted by study_id. Masks are binarized at half the
// file maximum so 8-bit {0,255} masks load as {0,1}.
std::vector<StudyRecord> load_study_dir(const std::filesystem::path& root);

// Lenient variant for batch workflows: studies that fail to load (corrupt
// image, bad annotation, ...) are reported in `study_errors` instead of
// aborting the whole load. Manifest-level problems still throw.
std::vector<StudyRecord> load_study_dir(const std::filesystem::path& root,
                                        std::map<std::string, std::string>* study_errors);

// PNG helpers shared with the synthetic generator and the CLI.
Grid read_grayscale_png(const std::filesystem::path& file);
void write_grayscale_png8(const std::filesystem::path& file, const Grid& img01);
void write_grayscale_png16(const std::filesystem::path& file, const Grid& img01);

}  // namespace ageus

#pragma once

#include <string>

#include "json.hpp"
#include "periscat/config.hpp"
#include "periscat/io.hpp"

namespace periscat {

/// Output file names inside ExperimentConfig::output.directory.
inline constexpr const char* kDataFileName = "data.txt";
inline constexpr const char* kNoisyDataFileName = "data_noisy.txt";

/// Solves every source, writes the data file (data_path, or data.txt in
/// the output directory when empty) and forward.json. Returns the summary.
nlohmann::json run_forward(const ExperimentConfig& cfg, const std::string& data_path = "");

/// Applies the configured noise to a data file; writes data_noisy.txt
/// (or out_path) and noise.json.
nlohmann::json run_noise(const ExperimentConfig& cfg, const std::string& data_path, const std::string& out_path = "");

/// Evaluates the configured functional(s) on the data file and writes
/// image_<kind>.vtk / .csv and image.json.
nlohmann::json run_image(const ExperimentConfig& cfg, const std::string& data_path);

/// New and OSM functionals on one grid: peak-normalized fields
/// (compare_<kind>.vtk / .csv), both maxima and the Jaccard overlap of each
/// isovalue mask with the rasterized scatterer, in compare.json.
nlohmann::json run_compare(const ExperimentConfig& cfg, const std::string& data_path);

/// Loads a data file and checks it against the config: wave parameters
/// must match (DataFormatError) and every configured mode must be present
/// (ModeMismatchError).
DataFile load_matching_data(const ExperimentConfig& cfg, const std::string& data_path);

/// Summary block shared by image and compare.
nlohmann::json field_summary(const ImagingResult& field, double iso_fraction);

}  // namespace periscat

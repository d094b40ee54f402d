#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qscan/detect.hpp"
#include "qscan/io.hpp"
#include "qscan/null_model.hpp"
#include "qscan/scores.hpp"
#include "qscan/threshold.hpp"

namespace qscan {

// End-to-end orchestration shared by the CLI and the integration tests.
struct PipelineConfig {
  std::string geno_path;
  std::string geno_format = "tsv";  // "tsv" or "vcf"
  std::string pheno_path;
  std::string pheno_col;
  std::vector<std::string> covar_cols;
  Family family = Family::gaussian;
  double maf_max = 0.05;
  double mac_min = 3.0;
  ScanConfig scan;
  ThresholdConfig threshold;
  std::string out_prefix;
  bool emit_windows = false;
  std::string scores_in;   // optional ScoreSet cache to load instead of geno+pheno
  std::string scores_out;  // optional ScoreSet cache to save after building
};

struct PipelineResult {
  ScanReport report;            // scan command only
  ThresholdResult threshold;
  int64_t n_samples = 0;
  int64_t n_variants_input = 0;
  int64_t n_variants_scanned = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;  // files written
};

// scan: loads data, fits, scores, calibrates h, scans, detects; writes
// <prefix>.regions.tsv, <prefix>.report.json and optionally
// <prefix>.windows.tsv.gz.
PipelineResult run_scan_pipeline(const PipelineConfig& cfg);

// threshold: same inputs, stops after calibration; writes
// <prefix>.threshold.json and <prefix>.qmax.txt.
PipelineResult run_threshold_pipeline(const PipelineConfig& cfg);

}  // namespace qscan

#include "qscan/pipeline.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <optional>
#include <utility>

#include "json.hpp"
#include "qscan/gzio.hpp"

namespace qscan {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_stat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  const size_t wrote = std::fwrite(content.data(), 1, content.size(), f);
  if (wrote != content.size() || std::fclose(f) != 0) {
    throw IoError("writing " + path + ": " + std::strerror(errno));
  }
}

struct LoadedData {
  ScoreSet scores;
  std::optional<FilterResult> filt;
  std::optional<NullModel> model;
  int64_t n_variants_input = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;
};

LoadedData load_inputs(const PipelineConfig& cfg) {
  LoadedData d;
  if (!cfg.scores_in.empty()) {
    d.scores = load_score_set(cfg.scores_in);
    if (d.scores.cov.bandwidth() < cfg.scan.l_max - 1) {
      throw ConfigError("cached scores hold a bandwidth of " +
                        std::to_string(d.scores.cov.bandwidth()) + ", too narrow for l_max " +
                        std::to_string(cfg.scan.l_max));
    }
    d.n_variants_input = d.scores.size();
    return d;
  }

  if (cfg.geno_path.empty() || cfg.pheno_path.empty() || cfg.pheno_col.empty()) {
    throw ConfigError("need a genotype file, a phenotype file and a phenotype column");
  }
  ParsedGenotypes parsed;
  if (cfg.geno_format == "tsv" || cfg.geno_format == "dosage") {
    parsed = parse_dosage_tsv(cfg.geno_path);
  } else if (cfg.geno_format == "vcf") {
    parsed = parse_vcf_subset(cfg.geno_path);
  } else {
    throw ConfigError("unknown genotype format '" + cfg.geno_format +
                      "' (expected tsv or vcf)");
  }
  d.warnings = parsed.counters.warnings;
  if (parsed.counters.skipped_multiallelic > 0) {
    d.warnings.push_back(std::to_string(parsed.counters.skipped_multiallelic) +
                         " multiallelic records skipped");
  }
  if (parsed.counters.skipped_symbolic > 0) {
    d.warnings.push_back(std::to_string(parsed.counters.skipped_symbolic) +
                         " non-SNV records skipped");
  }

  const PhenoCovar pc = parse_pheno_covar(cfg.pheno_path, cfg.pheno_col, cfg.covar_cols,
                                          parsed.geno.sample_ids, cfg.family);
  for (const std::string& w : pc.warnings) d.warnings.push_back(w);
  DatasetBundle bundle = align_dataset(parsed.geno, pc);

  d.model = fit_null_model(bundle.pheno, bundle.covar);
  d.n_variants_input = bundle.geno.n_variants();
  d.filt = filter_variants(bundle.geno, cfg.maf_max, cfg.mac_min);
  d.scores = make_score_set(d.filt->geno, *d.model, cfg.scan.l_max - 1);
  if (d.scores.dropped_zero_variance > 0) {
    d.warnings.push_back(std::to_string(d.scores.dropped_zero_variance) +
                         " variants dropped for zero post-adjustment variance");
  }
  if (!cfg.scores_out.empty()) {
    save_score_set(d.scores, cfg.scores_out);
    d.outputs.push_back(cfg.scores_out);
  }
  return d;
}

ThresholdResult calibrate(const PipelineConfig& cfg, const LoadedData& d) {
  const GenotypeMatrix* geno = d.filt ? &d.filt->geno : nullptr;
  const NullModel* model = d.model ? &*d.model : nullptr;
  return mc_threshold(d.scores, geno, model, cfg.scan, cfg.threshold);
}

ordered_json threshold_block(const PipelineConfig& cfg, const ThresholdResult& thr) {
  ordered_json j;
  j["h"] = thr.h;
  j["alpha"] = thr.alpha;
  j["n_reps"] = thr.n_reps;
  j["mode"] = mc_mode_name(thr.mode);
  j["seed"] = cfg.threshold.seed;
  j["bound_upper"] = thr.bound_upper;
  j["rate_sqrt_2_log_p"] = thr.rate;
  j["notes"] = thr.notes;
  return j;
}

ordered_json dataset_block(const PipelineConfig& cfg, const LoadedData& d,
                           const PipelineResult& res) {
  ordered_json j;
  if (!cfg.scores_in.empty()) {
    j["scores_in"] = cfg.scores_in;
  } else {
    j["genotypes"] = cfg.geno_path;
    j["format"] = cfg.geno_format;
    j["phenotypes"] = cfg.pheno_path;
    j["phenotype_column"] = cfg.pheno_col;
    j["covariate_columns"] = cfg.covar_cols;
    j["maf_max"] = cfg.maf_max;
    j["mac_min"] = cfg.mac_min;
  }
  j["n_samples"] = res.n_samples;
  j["n_variants_input"] = res.n_variants_input;
  j["n_variants_scanned"] = res.n_variants_scanned;
  if (d.model) {
    ordered_json m;
    m["family"] = family_name(d.model->family);
    m["dispersion"] = d.model->dispersion;
    m["irls_iterations"] = d.model->irls_iterations;
    j["null_model"] = m;
  }
  return j;
}

}  // namespace

PipelineResult run_threshold_pipeline(const PipelineConfig& cfg) {
  cfg.threshold.validate();
  LoadedData d = load_inputs(cfg);
  cfg.scan.validate(d.scores.size());

  PipelineResult res;
  res.threshold = calibrate(cfg, d);
  res.n_samples = d.scores.n_samples;
  res.n_variants_input = d.n_variants_input;
  res.n_variants_scanned = d.scores.size();
  res.warnings = d.warnings;
  res.outputs = d.outputs;

  ordered_json j;
  j["command"] = "threshold";
  j["method"] = method_name(cfg.scan.method);
  j["l_min"] = cfg.scan.l_min;
  j["l_max"] = cfg.scan.l_max;
  j["dataset"] = dataset_block(cfg, d, res);
  j["threshold"] = threshold_block(cfg, res.threshold);
  j["warnings"] = res.warnings;
  const std::string json_path = cfg.out_prefix + ".threshold.json";
  write_text_file(json_path, j.dump(2) + "\n");
  res.outputs.push_back(json_path);

  std::string qmax;
  char buf[40];
  for (const double v : res.threshold.max_samples) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    qmax += buf;
  }
  const std::string qmax_path = cfg.out_prefix + ".qmax.txt";
  write_text_file(qmax_path, qmax);
  res.outputs.push_back(qmax_path);
  return res;
}

PipelineResult run_scan_pipeline(const PipelineConfig& cfg) {
  cfg.threshold.validate();
  LoadedData d = load_inputs(cfg);
  cfg.scan.validate(d.scores.size());

  PipelineResult res;
  res.threshold = calibrate(cfg, d);
  res.report = scan_and_detect(d.scores, cfg.scan, res.threshold.h, cfg.threshold.threads);
  res.n_samples = d.scores.n_samples;
  res.n_variants_input = d.n_variants_input;
  res.n_variants_scanned = d.scores.size();
  res.warnings = d.warnings;
  res.outputs = d.outputs;

  std::string tsv =
      "rank\tchrom\tstart_bp\tend_bp\tstart_idx\tend_idx\tn_variants\tstat\tmethod\tthreshold\n";
  for (const DetectedRegion& r : res.report.regions) {
    tsv += std::to_string(r.rank);
    tsv += '\t';
    tsv += d.scores.chrom_names[r.chrom_id];
    tsv += '\t';
    tsv += std::to_string(r.start_bp);
    tsv += '\t';
    tsv += std::to_string(r.end_bp);
    tsv += '\t';
    tsv += std::to_string(r.start);
    tsv += '\t';
    tsv += std::to_string(r.end);
    tsv += '\t';
    tsv += std::to_string(r.length());
    tsv += '\t';
    tsv += format_stat(r.stat);
    tsv += '\t';
    tsv += method_name(cfg.scan.method);
    tsv += '\t';
    tsv += format_stat(res.threshold.h);
    tsv += '\n';
  }
  const std::string tsv_path = cfg.out_prefix + ".regions.tsv";
  write_text_file(tsv_path, tsv);
  res.outputs.push_back(tsv_path);

  ordered_json j;
  j["command"] = "scan";
  j["method"] = method_name(cfg.scan.method);
  j["l_min"] = cfg.scan.l_min;
  j["l_max"] = cfg.scan.l_max;
  j["dataset"] = dataset_block(cfg, d, res);
  j["threshold"] = threshold_block(cfg, res.threshold);
  ordered_json scan_j;
  scan_j["n_windows"] = res.report.n_windows;
  scan_j["n_skipped"] = res.report.n_skipped;
  scan_j["n_candidates"] = res.report.n_candidates;
  scan_j["n_regions"] = static_cast<int64_t>(res.report.regions.size());
  j["scan"] = scan_j;
  ordered_json regions = ordered_json::array();
  for (const DetectedRegion& r : res.report.regions) {
    ordered_json rj;
    rj["rank"] = r.rank;
    rj["chrom"] = d.scores.chrom_names[r.chrom_id];
    rj["start_bp"] = r.start_bp;
    rj["end_bp"] = r.end_bp;
    rj["start_idx"] = r.start;
    rj["end_idx"] = r.end;
    rj["n_variants"] = r.length();
    rj["stat"] = r.stat;
    regions.push_back(rj);
  }
  j["regions"] = regions;
  j["warnings"] = res.warnings;
  const std::string json_path = cfg.out_prefix + ".report.json";
  write_text_file(json_path, j.dump(2) + "\n");
  res.outputs.push_back(json_path);

  if (cfg.emit_windows) {
    const std::string win_path = cfg.out_prefix + ".windows.tsv.gz";
    GzWriter gz(win_path);
    gz.write("chrom\tstart_idx\tend_idx\tstart_bp\tend_bp\tstat\n");
    std::string line;
    scan_stream(d.scores, cfg.scan, [&](const WindowStat& w) {
      line = d.scores.chrom_names[d.scores.chrom_id[w.start]];
      line += '\t';
      line += std::to_string(w.start);
      line += '\t';
      line += std::to_string(w.end);
      line += '\t';
      line += std::to_string(d.scores.pos[w.start]);
      line += '\t';
      line += std::to_string(d.scores.pos[w.end]);
      line += '\t';
      line += format_stat(w.stat);
      line += '\n';
      gz.write(line);
    });
    gz.close();
    res.outputs.push_back(win_path);
  }
  return res;
}

}  // namespace qscan

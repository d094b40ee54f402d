#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qscan/experiments.hpp"
#include "qscan/io.hpp"
#include "qscan/pipeline.hpp"

namespace {

using namespace qscan;

Family parse_family(const std::string& s) {
  if (s == "gaussian") return Family::gaussian;
  if (s == "binomial") return Family::binomial;
  throw ConfigError("unknown family '" + s + "' (expected gaussian or binomial)");
}

Method parse_method(const std::string& s) {
  if (s == "qscan") return Method::qscan;
  if (s == "mscan") return Method::mscan;
  throw ConfigError("unknown method '" + s + "' (expected qscan or mscan)");
}

McMode parse_mode(const std::string& s) {
  if (s == "genotype_projection") return McMode::genotype_projection;
  if (s == "banded_cholesky") return McMode::banded_cholesky;
  throw ConfigError("unknown mc mode '" + s +
                    "' (expected genotype_projection or banded_cholesky)");
}

// Typed view over a parsed key=value config; every key must be consumed.
class ConfigReader {
public:
  explicit ConfigReader(const std::string& path) : path_(path), kv_(parse_config_file(path)) {}

  template <class Fn>
  void take(const std::string& key, Fn&& fn) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return;
    try {
      fn(it->second);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(path_ + ": key '" + key + "': " + e.what());
    }
    kv_.erase(it);
  }

  void take_i64(const std::string& key, int64_t& out) {
    take(key, [&](const std::string& v) { out = std::stoll(v); });
  }
  void take_int(const std::string& key, int& out) {
    take(key, [&](const std::string& v) { out = std::stoi(v); });
  }
  void take_u64(const std::string& key, uint64_t& out) {
    take(key, [&](const std::string& v) { out = std::stoull(v); });
  }
  void take_real(const std::string& key, double& out) {
    take(key, [&](const std::string& v) { out = std::stod(v); });
  }

  void finish() const {
    if (kv_.empty()) return;
    std::string keys;
    for (const auto& [k, v] : kv_) {
      if (!keys.empty()) keys += ", ";
      keys += k;
    }
    throw ConfigError(path_ + ": unknown keys: " + keys);
  }

private:
  std::string path_;
  std::map<std::string, std::string> kv_;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t c = s.find(',', start);
    out.push_back(s.substr(start, c - start));
    if (c == std::string::npos) return out;
    start = c + 1;
  }
}

ExperimentConfig read_experiment_config(ConfigReader& cfg) {
  ExperimentConfig e;
  cfg.take_i64("n", e.n);
  cfg.take_i64("p", e.p);
  cfg.take_i64("replicates", e.replicates);
  cfg.take_i64("mc_reps", e.mc_reps);
  cfg.take("alphas", [&](const std::string& v) {
    e.alphas.clear();
    for (const std::string& a : split_commas(v)) e.alphas.push_back(std::stod(a));
  });
  cfg.take_i64("l_min", e.l_min);
  cfg.take_i64("l_max", e.l_max);
  cfg.take("family", [&](const std::string& v) { e.family = parse_family(v); });
  cfg.take_real("ld_rho", e.ld.ld_rho);
  cfg.take_i64("ld_block_len", e.ld.block_len);
  cfg.take_real("maf_min", e.ld.maf_min);
  cfg.take("maf_max", [&](const std::string& v) {
    e.maf_max = std::stod(v);
    e.ld.maf_max = e.maf_max;
  });
  cfg.take_i64("n_haplotypes", e.ld.n_haplotypes);
  cfg.take_real("mac_min", e.mac_min);
  cfg.take("mode", [&](const std::string& v) { e.mode = parse_mode(v); });
  cfg.take_u64("seed", e.seed);
  cfg.take_int("threads", e.threads);
  cfg.take("methods", [&](const std::string& v) {
    e.methods.clear();
    for (const std::string& m : split_commas(v)) e.methods.push_back(parse_method(m));
  });
  cfg.take_real("logit_intercept", e.logit_intercept);
  cfg.take_i64("population_multiplier", e.population_multiplier);
  return e;
}

void write_file(const std::string& path, const std::string& content) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  const size_t wrote = std::fwrite(content.data(), 1, content.size(), f);
  if (wrote != content.size() || std::fclose(f) != 0) throw IoError("writing " + path);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct CommonScanArgs {
  PipelineConfig pipe;
  std::string family = "gaussian";
  std::string method = "qscan";
  std::string mode = "genotype_projection";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--geno", pipe.geno_path, "genotype file (dosage TSV or VCF, .gz ok)");
    cmd->add_option("--format", pipe.geno_format, "genotype format: tsv or vcf")
        ->default_str("tsv");
    cmd->add_option("--pheno", pipe.pheno_path, "phenotype/covariate TSV");
    cmd->add_option("--pheno-col", pipe.pheno_col, "phenotype column name");
    cmd->add_option("--covar-cols", pipe.covar_cols, "covariate column names (repeatable)");
    cmd->add_option("--family", family, "gaussian or binomial")->default_str("gaussian");
    cmd->add_option("--maf-max", pipe.maf_max, "keep variants with 0 < MAF <= this")
        ->default_val(0.05);
    cmd->add_option("--mac-min", pipe.mac_min, "minimum minor allele count")->default_val(3.0);
    cmd->add_option("--lmin", pipe.scan.l_min, "smallest window, variants")->default_val(40);
    cmd->add_option("--lmax", pipe.scan.l_max, "largest window, variants")->default_val(200);
    cmd->add_option("--method", method, "qscan or mscan")->default_str("qscan");
    cmd->add_option("--alpha", pipe.threshold.alpha, "family-wise error target")
        ->default_val(0.05);
    cmd->add_option("--mc-reps", pipe.threshold.n_reps, "Monte Carlo threshold replicates")
        ->default_val(2000);
    cmd->add_option("--mc-mode", mode, "genotype_projection or banded_cholesky")
        ->default_str("genotype_projection");
    cmd->add_option("--seed", pipe.threshold.seed, "random seed")->default_val(1);
    cmd->add_option("--threads", pipe.threshold.threads, "worker threads (0 = hardware)")
        ->default_val(1);
    cmd->add_option("--scores-in", pipe.scores_in, "load a saved score set instead of raw data");
    cmd->add_option("--scores-out", pipe.scores_out, "save the score set for reuse");
    cmd->add_option("--out-prefix", pipe.out_prefix, "output path prefix")->required();
  }

  void resolve() {
    pipe.family = parse_family(family);
    pipe.scan.method = parse_method(method);
    pipe.threshold.mode = parse_mode(mode);
  }
};

void print_outputs(const PipelineResult& res) {
  for (const std::string& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const std::string& o : res.outputs) std::printf("wrote %s\n", o.c_str());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"scan statistics for signal region detection in sequence association studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qscan 1.0.0");

  CommonScanArgs scan_args;
  CLI::App* scan_cmd =
      app.add_subcommand("scan", "calibrate a threshold, scan, and report detected regions");
  scan_args.add_to(scan_cmd);
  scan_cmd->add_flag("--emit-windows", scan_args.pipe.emit_windows,
                     "also write every window statistic (gzipped TSV)");

  CommonScanArgs thr_args;
  CLI::App* thr_cmd =
      app.add_subcommand("threshold", "calibrate the Monte Carlo threshold and stop");
  thr_args.add_to(thr_cmd);

  std::string fwer_config, fwer_out;
  CLI::App* fwer_cmd =
      app.add_subcommand("simulate-fwer", "null-model family-wise error calibration study");
  fwer_cmd->add_option("--config", fwer_config, "key=value experiment configuration")->required();
  fwer_cmd->add_option("--out-prefix", fwer_out, "output path prefix")->required();

  std::string power_config, power_out;
  CLI::App* power_cmd =
      app.add_subcommand("simulate-power", "planted-signal detection power study");
  power_cmd->add_option("--config", power_config, "key=value experiment configuration")
      ->required();
  power_cmd->add_option("--out-prefix", power_out, "output path prefix")->required();

  double bound_p = 0.0, bound_alpha = 0.05;
  int64_t bound_lmin = 40, bound_lmax = 200;
  CLI::App* bound_cmd =
      app.add_subcommand("bound", "closed-form threshold bound and growth rate");
  bound_cmd->add_option("--p", bound_p, "number of variants")->required();
  bound_cmd->add_option("--lmin", bound_lmin, "smallest window")->default_val(40);
  bound_cmd->add_option("--lmax", bound_lmax, "largest window")->default_val(200);
  bound_cmd->add_option("--alpha", bound_alpha, "family-wise error target")->default_val(0.05);

  CLI11_PARSE(app, argc, argv);

  if (scan_cmd->parsed()) {
    scan_args.resolve();
    print_outputs(run_scan_pipeline(scan_args.pipe));
    return 0;
  }
  if (thr_cmd->parsed()) {
    thr_args.resolve();
    print_outputs(run_threshold_pipeline(thr_args.pipe));
    return 0;
  }
  if (fwer_cmd->parsed()) {
    ConfigReader cfg(fwer_config);
    const ExperimentConfig e = read_experiment_config(cfg);
    cfg.finish();
    const FwerResult res = fwer_experiment(e);
    std::string tsv = "method\talpha\treplicates\trejections\tfwer\ttarget_lo\ttarget_hi\n";
    for (const FwerCell& c : res.cells) {
      tsv += method_name(c.method);
      tsv += '\t';
      tsv += fmt(c.alpha);
      tsv += '\t';
      tsv += std::to_string(c.replicates);
      tsv += '\t';
      tsv += std::to_string(c.rejections);
      tsv += '\t';
      tsv += fmt(c.fwer);
      tsv += '\t';
      tsv += fmt(c.target_lo);
      tsv += '\t';
      tsv += fmt(c.target_hi);
      tsv += '\n';
    }
    write_file(fwer_out + ".fwer.tsv", tsv);
    std::printf("wrote %s.fwer.tsv\n", fwer_out.c_str());
    return 0;
  }
  if (power_cmd->parsed()) {
    ConfigReader cfg(power_config);
    PowerConfig pc;
    pc.base = read_experiment_config(cfg);
    cfg.take_real("alpha", pc.alpha);
    cfg.take_real("condition_target", pc.condition_target);
    cfg.take_int("n_regions", pc.signal.n_regions);
    cfg.take_i64("region_len_min", pc.signal.region_len_min);
    cfg.take_i64("region_len_max", pc.signal.region_len_max);
    cfg.take_i64("min_gap", pc.signal.min_gap);
    cfg.take_real("xi", pc.signal.xi);
    cfg.take_real("effect_c", pc.signal.effect_c);
    cfg.take_real("sign_mix", pc.signal.sign_mix);
    cfg.finish();
    const PowerResult res = power_experiment(pc);

    std::string tsv = "method\tdetection_rate\tse_detection\tjaccard\tse_jaccard\treplicates\n";
    for (const PowerRow& r : res.rows) {
      tsv += method_name(r.method);
      tsv += '\t';
      tsv += fmt(r.detection_rate);
      tsv += '\t';
      tsv += fmt(r.se_detection);
      tsv += '\t';
      tsv += fmt(r.jaccard);
      tsv += '\t';
      tsv += fmt(r.se_jaccard);
      tsv += '\t';
      tsv += std::to_string(r.replicates);
      tsv += '\n';
    }
    write_file(power_out + ".power.tsv", tsv);

    std::string cmp = "metric\tqscan_mean\tmscan_mean\tpaired_p_q_gt_m\n";
    const auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (const double x : v) s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    cmp += "detection_rate\t" + fmt(mean(res.detection_q)) + '\t' + fmt(mean(res.detection_m)) +
           '\t' + fmt(paired_one_sided_pvalue(res.detection_q, res.detection_m)) + '\n';
    cmp += "jaccard\t" + fmt(mean(res.jaccard_q)) + '\t' + fmt(mean(res.jaccard_m)) + '\t' +
           fmt(paired_one_sided_pvalue(res.jaccard_q, res.jaccard_m)) + '\n';
    write_file(power_out + ".power.compare.tsv", cmp);

    if (pc.condition_target > 0.0) {
      std::string cond;
      for (const double v : res.condition_ratio) {
        cond += fmt(v);
        cond += '\n';
      }
      write_file(power_out + ".power.condition.txt", cond);
      std::printf("wrote %s.power.condition.txt\n", power_out.c_str());
    }
    std::printf("wrote %s.power.tsv\n", power_out.c_str());
    std::printf("wrote %s.power.compare.tsv\n", power_out.c_str());
    return 0;
  }
  if (bound_cmd->parsed()) {
    std::printf("bound\t%.10g\n", theoretical_bound(bound_p, bound_lmin, bound_lmax, bound_alpha));
    std::printf("rate\t%.10g\n", asymptotic_rate(bound_p));
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const qscan::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.error_class().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 2;
  }
}

// SPDX-FileCopyrightText: © 2026 The lgroup Authors
//
// SPDX-License-Identifier: Apache-2.0

// lgroup: batch runner for the encode, allocation, SpMV and training
// experiments. Exit codes: 0 success, 1 config error, 2 verification failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "lgroup/bench.hpp"
#include "lgroup/report.hpp"

namespace fs = std::filesystem;
using namespace lgroup;

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kVerifyFailure = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "lgroup-out";
  std::string format = "csv";
};

void add_shape_options(CLI::App& sub, bench::ExperimentConfig& c) {
  sub.add_option("--rows", c.m, "Layer input dimension M")->capture_default_str();
  sub.add_option("--cols", c.n, "Layer output dimension N")->capture_default_str();
  sub.add_option("--groups", c.g_list, "Group numbers G")->delimiter(',')->capture_default_str();
  sub.add_option("--seeds", c.seeds, "Seeds per cell (seed, seed+1, ...)")->capture_default_str();
}

void add_cycle_options(CLI::App& sub, bench::ExperimentConfig& c) {
  sub.add_option("--comparators", c.cycle.comparators)->capture_default_str();
  sub.add_option("--compare-cycles", c.cycle.compare_cycles)->capture_default_str();
  sub.add_option("--srm-write-bits", c.cycle.srm_write_bits)->capture_default_str();
  sub.add_option("--hit-cycles", c.cycle.hit_cycles)->capture_default_str();
  sub.add_option("--fetch-width", c.cycle.fetch_width)->capture_default_str();
}

void add_core_options(CLI::App& sub, bench::ExperimentConfig& c) {
  const std::map<std::string, vpu::Precision> precisions{{"fp32", vpu::Precision::kFp32},
                                                         {"fp16", vpu::Precision::kFp16Storage}};
  sub.add_option("--cores", c.c_list, "Core counts C")->delimiter(',')->capture_default_str();
  sub.add_option("--vpu-count", c.core.vpu_count)->capture_default_str();
  sub.add_option("--wave-floor", c.core.wave_floor_cycles)->capture_default_str();
  sub.add_option("--precision", c.core.precision, "fp32 or fp16")
      ->transform(CLI::CheckedTransformer(precisions, CLI::ignore_case));
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << body;
}

std::string render(const report::Report& r, const std::string& format) {
  std::ostringstream s;
  if (format == "json")
    report::write_json(s, r);
  else
    report::write_csv(s, r);
  return s.str();
}

void emit(const Globals& g, const std::string& name, const report::Report& r) {
  const fs::path dir(g.out);
  fs::create_directories(dir);
  write_file(dir / (name + ".csv"), render(r, "csv"));
  write_file(dir / (name + ".json"), render(r, "json"));
  std::cout << render(r, g.format);
}

int run_report(const std::vector<std::string>& files, const std::string& format) {
  bool ok = true;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    const auto parsed = report::read_csv(in);
    for (const auto& e : parsed.errors) std::cerr << path << ": " << e << '\n';
    ok = ok && parsed.errors.empty();

    std::map<std::string, std::vector<double>> by_metric;
    for (const auto& row : parsed.report.rows()) by_metric[row.metric].push_back(row.value);
    for (const auto& [metric, values] : by_metric) {
      double lo = values.front(), hi = values.front(), sum = 0;
      for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      const double mean = sum / static_cast<double>(values.size());
      if (format == "json")
        summary.push_back({{"file", path}, {"experiment", parsed.report.experiment()}, {"metric", metric},
                           {"rows", values.size()}, {"min", lo}, {"mean", mean}, {"max", hi}});
      else
        std::cout << fmt::format("{},{},{},{},{},{},{}\n", path, parsed.report.experiment(), metric, values.size(),
                                 report::format_value(lo), report::format_value(mean), report::format_value(hi));
    }
  }
  if (format == "json") std::cout << summary.dump(2) << '\n';
  return ok ? kOk : kVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lgroup: learnable weight grouping and sparse encoding experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file; [subcommand] sections hold subcommand options");

  Globals g;
  app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Format printed to stdout")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto enc_cfg = bench::defaults_for(bench::Bench::kEncode);
  auto* enc = app.add_subcommand("encode-bench", "OSEL vs baseline cycles and memory footprint per G");
  add_shape_options(*enc, enc_cfg);
  add_cycle_options(*enc, enc_cfg);
  enc->add_option("--weight-bits", enc_cfg.weight_bits)->capture_default_str();

  auto alloc_cfg = bench::defaults_for(bench::Bench::kAlloc);
  auto* alo = app.add_subcommand("alloc-bench", "Row-based vs threshold workload deviation");
  add_shape_options(*alo, alloc_cfg);
  alo->add_option("--cores", alloc_cfg.c_list, "Core counts C")->delimiter(',')->capture_default_str();
  alo->add_option("--trials", alloc_cfg.trials, "Random trials per (G, C)")->capture_default_str();

  auto spmv_cfg = bench::defaults_for(bench::Bench::kSpmv);
  auto* spm = app.add_subcommand("spmv-verify", "Simulated SpMV against the dense masked reference");
  add_shape_options(*spm, spmv_cfg);
  add_cycle_options(*spm, spmv_cfg);
  add_core_options(*spm, spmv_cfg);

  auto train_cfg = bench::defaults_for(bench::Bench::kTrain);
  auto* trn = app.add_subcommand("train", "Masked REINFORCE on the toy predator-prey task");
  trn->add_option("--groups", train_cfg.g_list, "Group numbers G")->delimiter(',')->capture_default_str();
  trn->add_option("--seeds", train_cfg.seeds)->capture_default_str();
  trn->add_option("--iterations", train_cfg.iterations)->capture_default_str();
  trn->add_option("--batch", train_cfg.batch)->capture_default_str();
  trn->add_option("--agents", train_cfg.agents)->capture_default_str();
  trn->add_option("--hidden", train_cfg.hidden)->capture_default_str();

  std::vector<std::string> report_files;
  auto* rep = app.add_subcommand("report", "Validate report CSVs and print per-metric summaries");
  rep->add_option("files", report_files, "Report CSV files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigFailure;
  }

  try {
    if (*enc) {
      enc_cfg.seed = g.seed;
      const auto res = bench::run_encode_bench(enc_cfg);
      emit(g, "encode-bench", res.report);
      for (const auto& [name, body] : res.srm_dumps) write_file(fs::path(g.out) / name, body);
    } else if (*alo) {
      alloc_cfg.seed = g.seed;
      emit(g, "alloc-bench", bench::run_alloc_bench(alloc_cfg));
    } else if (*spm) {
      spmv_cfg.seed = g.seed;
      const auto res = bench::run_spmv_verify(spmv_cfg);
      emit(g, "spmv-verify", res.report);
      std::cerr << fmt::format("spmv-verify: {} passed, {} failed, worst relative error {:.3g}\n", res.passed,
                               res.failed, res.worst_error);
      if (res.failed) return kVerifyFailure;
    } else if (*trn) {
      train_cfg.seed = g.seed;
      const auto res = bench::run_train(train_cfg);
      emit(g, "train", res.report);
      for (const auto& [name, tl] : res.timelines) {
        std::ostringstream s;
        train::write_timeline_csv(s, tl);
        write_file(fs::path(g.out) / name, s.str());
      }
    } else if (*rep) {
      return run_report(report_files, g.format);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kConfigFailure;
  }
  return kOk;
}

#pragma once

#include <iosfwd>
#include <vector>

#include "longfair/config.hpp"

namespace longfair {

// Pipeline stages behind the CLI subcommands. Each returns a process exit
// code: 0 only when every requested piece of work succeeded. Log lines go to
// `log`; data lands in cfg.output_dir via atomic writes.

int cmd_generate(const RunConfig& cfg, bool dry_run, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::vector<double> eps_list,
              std::ostream& log);
int cmd_sensitivity(const RunConfig& cfg, std::ostream& log);

// Output file names inside cfg.output_dir.
namespace outfile {
inline constexpr const char* kPanel = "panel.jsonl";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kTrace = "trace.jsonl";
inline constexpr const char* kConvergence = "convergence.csv";
inline constexpr const char* kTables = "tables.csv";
inline constexpr const char* kSweep = "sweep.csv";
inline constexpr const char* kSweepSummary = "sweep_summary.csv";
inline constexpr const char* kSensitivity = "sensitivity.json";
std::string model(const std::string& algorithm);   // model_<alg>.json
std::string report(const std::string& algorithm);  // report_<alg>.json
}  // namespace outfile

}  // namespace longfair

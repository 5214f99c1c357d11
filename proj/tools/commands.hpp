#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "avdn/dataset.hpp"
#include "avdn/metrics.hpp"
#include "avdn/training.hpp"

namespace avdn::cli {

struct CommandResult {
    int exit_code = 0;
    std::string summary;
    std::optional<std::filesystem::path> report_path;
};

struct GenerateOptions {
    std::uint64_t seed = 0;
    std::size_t count = 100;
    std::filesystem::path out;
    std::optional<std::array<double, 3>> split;  // writes <stem>.{train,val,test}.jsonl next to out
    GeneratorConfig generator;
};

struct TrainOptions {
    ModelKind kind = ModelKind::transformer;
    std::filesystem::path data;
    std::optional<std::filesystem::path> val;
    std::filesystem::path out_dir;
    TrainConfig config;
    std::int64_t log_every = 100;
};

struct EvalOptions {
    std::vector<std::filesystem::path> checkpoints;  // one for eval, ≥ 2 for fuse
    std::optional<std::filesystem::path> manifest;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<int> max_steps;
    unsigned threads = 0;
};

struct ScoreOptions {
    std::filesystem::path data;
    std::vector<std::filesystem::path> predictions;
    std::vector<std::string> labels;
    std::optional<std::filesystem::path> json_out;
    MetricConfig metrics;
};

struct ReportOptions {
    std::vector<std::filesystem::path> checkpoints;
    std::filesystem::path data;
    std::optional<std::filesystem::path> json_out;
    MetricConfig metrics;
};

// Each command writes its human-readable output to `out`; errors propagate
// as exceptions and are mapped to exit codes by run().
CommandResult cmd_generate(const GenerateOptions& opt, std::ostream& out);
CommandResult cmd_train(const TrainOptions& opt, std::ostream& out);
CommandResult cmd_eval(const EvalOptions& opt, std::ostream& out);
CommandResult cmd_fuse(const EvalOptions& opt, std::ostream& out);
CommandResult cmd_score(const ScoreOptions& opt, std::ostream& out);
CommandResult cmd_report(const ReportOptions& opt, std::ostream& out);

// Checkpoint file name for an iteration mark: "<kind>-<iteration>.ckpt".
std::string checkpoint_file_name(ModelKind kind, std::int64_t iteration);

// Parses argv and dispatches. Returns the process exit code: 0 on success,
// 1 on a runtime failure, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace avdn::cli

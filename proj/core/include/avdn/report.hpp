#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avdn/metrics.hpp"

namespace avdn {

// One row of a results table.
struct ScoreRow {
    std::string label;
    std::optional<std::int64_t> iteration;
    std::optional<double> train_loss;
    std::optional<double> val_loss;
    MetricReport metrics;
};

// Columns Method, SPL, SR, GP; two decimals.
std::string format_table(std::span<const ScoreRow> rows);

// Full-precision JSON with per-episode results; parse_report inverts it.
std::string report_to_json(std::span<const ScoreRow> rows);
std::vector<ScoreRow> parse_report(const std::string& text);

}  // namespace avdn

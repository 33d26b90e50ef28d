#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cretok/evaluation.hpp"

namespace cretok::eval {

struct LogRow {
  std::int64_t step = 0;
  double lr = 0;
  double loss = 0;
  double mean_cos = 0;
};

/// Parses a `step,lr,loss,mean_cos` training log.
std::vector<LogRow> read_train_log(const std::filesystem::path& path);
std::vector<LogRow> parse_train_log(std::string_view text, std::string_view source = "train_log");

struct TrainingCurve {
  std::string label;
  std::optional<double> theta;
  std::vector<LogRow> rows;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line chart. Series longer than `max_points` are reduced
/// by bucket means so large logs stay small.
std::string line_chart_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                           std::span<const Series> series, std::size_t max_points = 1000);

struct ReportInputs {
  std::vector<Aggregate> scores;
  std::vector<RankingRecord> rankings;
  std::vector<TrainingCurve> curves;
};

struct ReportOutput {
  std::vector<std::filesystem::path> files;  // relative to the report directory
  std::vector<std::string> notices;
};

/// convergence.svg for every curve, plus theta_ablation.svg/.csv when at
/// least two curves carry a theta.
ReportOutput emit_training_plots(std::span<const TrainingCurve> curves, const std::filesystem::path& out_dir);

/// Writes into `out_dir`:
///   table1_alignment_preference.csv  metric rows x method columns
///   table2_judge.csv                 method rows x judge criteria
///   table3_user_study.csv            average rank per method
///   table_c1_per_pair.csv            per-pair average ranks
///   convergence.svg                  loss and mean cosine over steps
///   theta_ablation.svg/.csv          mean cosine per threshold
///   report.md                        index, notices, std convention
/// Tables and plots whose inputs are absent are skipped with a notice.
ReportOutput emit_report(const ReportInputs& inputs, const std::filesystem::path& out_dir);

}  // namespace cretok::eval

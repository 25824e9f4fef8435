#pragma once

#include "obsid/config.hpp"
#include "obsid/loop.hpp"
#include "obsid/protocol.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace obsid {

constexpr int kRunLogSchemaVersion = 1;

Json header_record(const RunConfig& config, const CovarianceSummary& prior);
Json iteration_record(const IterationOutput& it, const std::optional<ParameterVector>& g_true);
Json footer_record(const LoopResult& result);

struct RunLog {
  std::optional<Json> header;
  std::vector<Json> iterations;
  std::optional<Json> footer;
};

/// Reads a run.jsonl file. Blank lines are skipped; an empty file yields an
/// empty log.
RunLog read_run_log(const std::filesystem::path& path);
RunLog read_run_log(std::istream& in);

struct SummaryRow {
  int j = 0;
  double duration = 0.0;
  double lambda_maj = 0.0;
  double compression = 0.0;
  std::optional<double> abs_error;
};

/// summary.csv rows, derived from the log records alone.
std::vector<SummaryRow> summary_from_log(const RunLog& log);

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_population_csv(std::ostream& os, const Population& population, const std::vector<std::string>& labels);
void write_pulses_csv(std::ostream& os, const std::vector<IterationOutput>& iterations);

Json vector_to_json(const Eigen::VectorXd& v);
Json matrix_to_json(const Matrix& m);
ParameterVector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

}  // namespace obsid

#include "obsid/run_log.hpp"

#include "obsid/csv.hpp"
#include "obsid/error.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace obsid {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json matrix_to_json(const Matrix& m) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back(vector_to_json(m.row(i).transpose()));
  return arr;
}

ParameterVector vector_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::io_error, "expected a numeric array");
  ParameterVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::io_error, "expected a numeric matrix");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vector_from_json(j[i]).transpose();
  return m;
}

namespace {

Json summary_json(const CovarianceSummary& s) {
  return {{"mean", vector_to_json(s.mean)},
          {"covariance", matrix_to_json(s.covariance)},
          {"lambda_maj", s.major_eigenvalue},
          {"major_eigenvector", vector_to_json(s.major_eigenvector)},
          {"degenerate", s.degenerate}};
}

}  // namespace

Json header_record(const RunConfig& config, const CovarianceSummary& prior) {
  return {{"type", "header"},
          {"schema_version", kRunLogSchemaVersion},
          {"seed", config.seed},
          {"labels", config.model.parameter_labels},
          {"config", config_to_json(config)},
          {"prior", summary_json(prior)}};
}

Json iteration_record(const IterationOutput& it, const std::optional<ParameterVector>& g_true) {
  Json j = {{"type", "iteration"},
            {"j", it.j},
            {"seed", it.seed},
            {"family", it.pulse.family_tag},
            {"variables", it.pulse.choice.variables},
            {"cost", it.pulse.cost},
            {"evaluations", it.pulse.evaluations_used},
            {"pulse", waveform_to_json(it.pulse.choice.rendered)},
            {"T", it.pulse.choice.rendered.duration()},
            {"duration_hint", it.duration_hint},
            {"window", {it.window.min, it.window.max}},
            {"omega_estimate", it.omega_estimate},
            {"measurement",
             {{"m", it.measurement.m},
              {"sigma", it.measurement.sigma},
              {"shots", it.measurement.shots},
              {"wall_time", it.measurement.wall_time},
              {"backend", it.measurement.backend_tag}}},
            {"sigma_used", it.sigma_used},
            {"sigma_inflated", it.sigma_inflated},
            {"presampled", it.presampled},
            {"retained", it.retained},
            {"posterior", summary_json(it.posterior)},
            {"compression", it.compression},
            {"duration_ratio", it.duration_ratio},
            {"stalled", it.stalled}};
  if (g_true) j["abs_error"] = (it.posterior.mean - *g_true).norm();
  return j;
}

Json footer_record(const LoopResult& result) {
  Json j = {{"type", "footer"}, {"termination", to_string(result.reason)}, {"iterations", result.iterations.size()}};
  if (result.error_code) {
    j["error_code"] = std::string(to_string(*result.error_code));
    j["error"] = result.error_message;
  }
  return j;
}

RunLog read_run_log(std::istream& in) {
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail(ErrorCode::io_error, "run log line " + std::to_string(lineno) + " is not JSON: " + e.what());
    }
    const std::string type = rec.value("type", "");
    if (type == "header") {
      if (rec.value("schema_version", 0) != kRunLogSchemaVersion) {
        fail(ErrorCode::io_error, "unsupported run log schema_version");
      }
      log.header = std::move(rec);
    } else if (type == "iteration") {
      if (!log.header) fail(ErrorCode::io_error, "iteration record before header");
      log.iterations.push_back(std::move(rec));
    } else if (type == "footer") {
      log.footer = std::move(rec);
    } else {
      fail(ErrorCode::io_error, "run log line " + std::to_string(lineno) + " has unknown type '" + type + "'");
    }
  }
  return log;
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read run log " + path.string());
  return read_run_log(in);
}

std::vector<SummaryRow> summary_from_log(const RunLog& log) {
  std::vector<SummaryRow> rows;
  if (!log.header) return rows;
  const Json& header = *log.header;
  std::optional<ParameterVector> g_true;
  const Json& backend = header["config"]["backend"];
  if (backend.value("kind", "") == "simulated") g_true = vector_from_json(backend["g_true"]);

  const auto& prior = header["prior"];
  double previous = summarize(vector_from_json(prior["mean"]), matrix_from_json(prior["covariance"])).major_eigenvalue;
  for (const auto& rec : log.iterations) {
    SummaryRow row;
    row.j = rec["j"].get<int>();
    row.duration = waveform_from_json(rec["pulse"]).duration();
    const ParameterVector mean = vector_from_json(rec["posterior"]["mean"]);
    row.lambda_maj = summarize(mean, matrix_from_json(rec["posterior"]["covariance"])).major_eigenvalue;
    row.compression = row.lambda_maj / previous;
    previous = row.lambda_maj;
    if (g_true) row.abs_error = (mean - *g_true).norm();
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "j,T,lambda_maj,compression,abs_error\n";
  for (const auto& r : rows) {
    os << r.j << ',' << format_double(r.duration) << ',' << format_double(r.lambda_maj) << ','
       << format_double(r.compression) << ',' << (r.abs_error ? format_double(*r.abs_error) : "") << '\n';
  }
}

void write_population_csv(std::ostream& os, const Population& population, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
  os << '\n';
  for (std::size_t s = 0; s < population.size(); ++s) {
    const auto g = population.sample(s);
    for (Eigen::Index i = 0; i < g.size(); ++i) os << (i ? "," : "") << format_double(g[i]);
    os << '\n';
  }
}

void write_pulses_csv(std::ostream& os, const std::vector<IterationOutput>& iterations) {
  os << "j,family,channel,segment,start_s,duration_s,re,im\n";
  for (const auto& it : iterations) {
    const auto& pulse = it.pulse.choice.rendered;
    for (std::size_t c = 0; c < pulse.channels.size(); ++c) {
      double start = 0.0;
      for (std::size_t k = 0; k < pulse.channels[c].size(); ++k) {
        const auto& seg = pulse.channels[c][k];
        os << it.j << ',' << it.pulse.family_tag << ',' << c << ',' << k << ',' << format_double(start) << ','
           << format_double(seg.duration) << ',' << format_double(seg.value.real()) << ','
           << format_double(seg.value.imag()) << '\n';
        start += seg.duration;
      }
    }
  }
}

}  // namespace obsid

#include "obsid/commands.hpp"

#include "obsid/backends.hpp"
#include "obsid/csv.hpp"
#include "obsid/error.hpp"
#include "obsid/fisher.hpp"
#include "obsid/run_log.hpp"

#include <fstream>
#include <memory>
#include <ostream>

namespace obsid {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::io_error, "cannot write " + path.string());
  return os;
}

std::unique_ptr<ExperimentBackend> make_backend(const RunConfig& cfg, std::ostream& err) {
  if (cfg.backend.kind == BackendConfig::Kind::simulated) {
    return std::make_unique<SimulatedBackend>(TrueSystem{cfg.backend.g_true, cfg.backend.shots, cfg.backend.seed},
                                              cfg.model);
  }
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(cfg.backend.timeout_s * 1000.0));
  return std::make_unique<RemoteBackend>(cfg.backend.endpoint, cfg.backend.shots, timeout,
                                         [&err](const std::string& msg) { err << "warning: " << msg << '\n'; });
}

// Serves the logged measurements back in order.
class ReplayBackend : public ExperimentBackend {
 public:
  explicit ReplayBackend(const std::vector<Json>& records) : records_(records) {}

  MeasurementRecord measure(const ControlWaveform& pulse) override {
    if (next_ >= records_.size()) fail(ErrorCode::replay_mismatch, "loop requested more measurements than logged");
    const Json& rec = records_[next_++];
    if (waveform_from_json(rec["pulse"]) != pulse) fail(ErrorCode::replay_mismatch, "pulse differs from the log");
    const Json& m = rec["measurement"];
    MeasurementRecord out;
    out.pulse = pulse;
    out.m = m["m"].get<double>();
    out.sigma = m["sigma"].get<double>();
    out.shots = m["shots"].get<int>();
    out.backend_tag = "replay";
    return out;
  }
  std::string tag() const override { return "replay"; }

 private:
  const std::vector<Json>& records_;
  std::size_t next_ = 0;
};

std::string first_difference(const IterationOutput& it, const Json& rec) {
  const Json& post = rec["posterior"];
  if (it.sigma_used != rec["sigma_used"].get<double>()) return "sigma_used";
  if (it.retained != rec["retained"].get<std::size_t>()) return "retained sample count";
  if (it.posterior.mean != vector_from_json(post["mean"])) return "posterior mean";
  if (it.posterior.covariance != matrix_from_json(post["covariance"])) return "posterior covariance";
  if (it.posterior.major_eigenvalue != post["lambda_maj"].get<double>()) return "lambda_maj";
  return {};
}

}  // namespace

int execute_run(const RunConfig& config, std::ostream& out, std::ostream& err, LoopResult* result_out) {
  std::filesystem::create_directories(config.output_dir);
  const auto& dir = config.output_dir;
  auto backend = make_backend(config, err);
  const GaussianDensity prior = config.prior();
  const auto truth = backend->truth();

  auto log = open_output(dir / "run.jsonl");
  log << header_record(config, summarize(prior.mean(), prior.covariance())).dump() << '\n' << std::flush;

  LoopHooks hooks;
  int trace_index = 0;
  hooks.on_iteration = [&](const IterationOutput& it) {
    log << iteration_record(it, truth).dump() << '\n' << std::flush;
    err << "j=" << it.j << " family=" << it.pulse.family_tag << " T=" << format_double(it.pulse.choice.rendered.duration())
        << " m=" << format_double(it.measurement.m) << " lambda_maj=" << format_double(it.posterior.major_eigenvalue)
        << " compression=" << format_double(it.compression) << (it.stalled ? " stalled" : "") << '\n';
    if (config.write_optimizer_traces && !it.pulse.traces.empty()) {
      auto trace = open_output(dir / ("optimizer_trace_" + std::to_string(++trace_index) + ".csv"));
      write_optimizer_trace_csv(trace, it.pulse);
    }
  };

  LoopResult result = run_loop(config.model, prior, *backend, config.loop, config.seed, hooks);
  log << footer_record(result).dump() << '\n';
  log.close();

  {
    auto summary = open_output(dir / "summary.csv");
    write_summary_csv(summary, summary_from_log(read_run_log(dir / "run.jsonl")));
  }
  {
    auto pop = open_output(dir / "posterior_final.csv");
    write_population_csv(pop, result.iterations.empty() ? Population(Matrix(prior.dimension(), 0))
                                                        : result.iterations.back().posterior_population,
                         config.model.parameter_labels);
  }
  {
    auto pulses = open_output(dir / "pulses.csv");
    write_pulses_csv(pulses, result.iterations);
  }

  const int iterations = static_cast<int>(result.iterations.size());
  const double lambda = iterations == 0 ? summarize(prior.mean(), prior.covariance()).major_eigenvalue
                                        : result.iterations.back().posterior.major_eigenvalue;
  out << "termination: " << to_string(result.reason) << " after " << iterations << " iteration"
      << (iterations == 1 ? "" : "s") << ", lambda_maj=" << format_double(lambda) << '\n';
  if (result.reason == Termination::error) err << "error: " << result.error_message << '\n';

  const Termination reason = result.reason;
  if (result_out) *result_out = std::move(result);
  switch (reason) {
    case Termination::target_met:
    case Termination::max_iterations: return exit_ok;
    case Termination::stalled: return exit_stalled;
    case Termination::error: return exit_error;
  }
  return exit_error;
}

int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
            const RunOverrides& overrides) {
  try {
    RunConfig cfg = load_config(config_path);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    return execute_run(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

int cmd_fi_scan(const std::filesystem::path& config_path, double t_min, double t_max, int points,
                const std::optional<std::filesystem::path>& output, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    if (!(t_min > 0.0)) fail(ErrorCode::invalid_argument, "T_min must be positive");
    if (!(t_max >= t_min)) fail(ErrorCode::invalid_argument, "T_max must be >= T_min");
    if (points < 1) fail(ErrorCode::invalid_argument, "points must be >= 1");
    ParameterVector g = cfg.prior_mean;
    if (cfg.fi_scan.g) g = *cfg.fi_scan.g;
    else if (cfg.backend.kind == BackendConfig::Kind::simulated) g = cfg.backend.g_true;

    std::vector<double> durations(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      durations[static_cast<std::size_t>(i)] =
          points == 1 ? t_min : t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    const auto scan = fi_scan(cfg.model, g, durations, cfg.fi_scan.family);
    const auto path = output ? *output : cfg.output_dir / "fi_scan.csv";
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto os = open_output(path);
    write_fi_scan_csv(os, scan);
    out << "wrote " << scan.size() << " rows to " << path.string() << '\n';
    return exit_ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

int cmd_replay(const std::filesystem::path& run_log_path, std::ostream& out, std::ostream& err) {
  try {
    const RunLog log = read_run_log(run_log_path);
    if (!log.header || log.iterations.empty()) {
      out << "replay: nothing to replay\n";
      return exit_ok;
    }
    RunConfig cfg = parse_config((*log.header)["config"]);
    cfg.seed = (*log.header)["seed"].get<std::uint64_t>();
    const auto& prior_json = (*log.header)["prior"];
    const GaussianDensity prior(vector_from_json(prior_json["mean"]), matrix_from_json(prior_json["covariance"]));
    cfg.loop.max_iterations = static_cast<int>(log.iterations.size());

    ReplayBackend backend(log.iterations);
    LoopHooks hooks;
    hooks.pulse_override = [&](int j) -> std::optional<OptimizedPulse> {
      const Json& rec = log.iterations.at(static_cast<std::size_t>(j - 1));
      OptimizedPulse p;
      p.family_tag = rec["family"].get<std::string>();
      p.cost = rec["cost"].get<double>();
      p.choice.variables = rec["variables"].get<std::vector<double>>();
      p.choice.rendered = waveform_from_json(rec["pulse"]);
      return p;
    };
    int mismatch_at = 0;
    std::string mismatch_what;
    hooks.on_iteration = [&](const IterationOutput& it) {
      const Json& rec = log.iterations.at(static_cast<std::size_t>(it.j - 1));
      if (const auto diff = first_difference(it, rec); !diff.empty()) {
        mismatch_at = it.j;
        mismatch_what = diff;
        fail(ErrorCode::replay_mismatch, diff + " differs from the log");
      }
    };

    const LoopResult result = run_loop(cfg.model, prior, backend, cfg.loop, cfg.seed, hooks);
    if (mismatch_at > 0) {
      err << "replay mismatch at iteration " << mismatch_at << ": " << mismatch_what << " differs from the log\n";
      return exit_replay_mismatch;
    }
    if (result.reason == Termination::error) {
      err << "replay mismatch at iteration " << result.iterations.size() + 1 << ": " << result.error_message << '\n';
      return exit_replay_mismatch;
    }
    if (result.iterations.size() != log.iterations.size()) {
      err << "replay mismatch at iteration " << result.iterations.size() + 1 << ": loop terminated early ("
          << to_string(result.reason) << ")\n";
      return exit_replay_mismatch;
    }
    out << "replay: " << result.iterations.size() << " iterations reproduced bit for bit\n";
    return exit_ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

int cmd_validate_config(const std::filesystem::path& config_path, bool emit, std::ostream& out, std::ostream& err) {
  try {
    const Json tree = load_config_tree(config_path);
    const auto issues = config_issues(tree);
    if (!issues.empty()) {
      err << config_path.string() << ": " << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << '\n';
      for (const auto& i : issues) err << "  " << i << '\n';
      return exit_error;
    }
    const RunConfig cfg = parse_config(tree);
    if (emit) out << emit_config(cfg);
    else out << config_path.string() << ": ok\n";
    return exit_ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

}  // namespace obsid

#include "obsid/config.hpp"

#include "obsid/csv.hpp"
#include "obsid/error.hpp"
#include "obsid/rng.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace obsid {

namespace {

// ---------------------------------------------------------------- YAML <-> JSON

Json scalar_to_json(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text.empty() || text == "~" || text == "null" || text == "Null" || text == "NULL") return nullptr;
  if (text == "true" || text == "True" || text == "TRUE") return true;
  if (text == "false" || text == "False" || text == "FALSE") return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  if (std::int64_t i = 0; true) {
    const auto [ptr, ec] = std::from_chars(first, last, i);
    if (ec == std::errc() && ptr == last) return i;
  }
  if (std::uint64_t u = 0; true) {
    const auto [ptr, ec] = std::from_chars(first, last, u);
    if (ec == std::errc() && ptr == last) return u;
  }
  if (double d = 0.0; true) {
    const auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec == std::errc() && ptr == last) return d;
  }
  if (text == ".inf" || text == "+.inf") return std::numeric_limits<double>::infinity();
  if (text == "-.inf") return -std::numeric_limits<double>::infinity();
  return text;
}

Json node_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null: return nullptr;
    case YAML::NodeType::Scalar: return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      for (const auto& item : node) arr.push_back(node_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (obj.contains(key)) fail(ErrorCode::config_error, "duplicate key '" + key + "'");
        obj[key] = node_to_json(kv.second);
      }
      return obj;
    }
  }
  return nullptr;
}

bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

void emit_json(YAML::Emitter& out, const Json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      out << YAML::Key << k << YAML::Value;
      emit_json(out, v);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    const bool flow = std::all_of(j.begin(), j.end(), is_scalar);
    if (flow) out << YAML::Flow;
    out << YAML::BeginSeq;
    for (const auto& v : j) emit_json(out, v);
    out << YAML::EndSeq;
  } else if (j.is_null()) {
    out << YAML::Null;
  } else if (j.is_boolean()) {
    out << (j.get<bool>() ? "true" : "false");
  } else if (j.is_number_integer()) {
    out << j.dump();
  } else if (j.is_number_float()) {
    const double d = j.get<double>();
    std::string s = std::isinf(d) ? (d > 0 ? ".inf" : "-.inf") : format_double(d);
    // keep floats recognisable as floats on re-read
    if (std::isfinite(d) && s.find_first_of(".eE") == std::string::npos) s += ".0";
    out << s;
  } else {
    const std::string s = j.get<std::string>();
    const bool ambiguous = s.empty() || !scalar_to_json(YAML::Node(s)).is_string();
    if (ambiguous) out << YAML::DoubleQuoted;
    out << s;
  }
}

// ---------------------------------------------------------------- tree reader

class Reader {
 public:
  std::vector<std::string> issues;

  void issue(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

  const Json* section(const Json& parent, const std::string& key, const std::string& path, bool required) {
    if (!parent.contains(key) || parent[key].is_null()) {
      if (required) issue(join(path, key), "required section is missing");
      return nullptr;
    }
    if (!parent[key].is_object()) {
      issue(join(path, key), "must be a mapping");
      return nullptr;
    }
    return &parent[key];
  }

  void known_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        issue(join(path, k), "unknown key");
      }
    }
  }

  bool number(const Json& obj, const char* key, const std::string& path, double& out, bool required = false) {
    if (!present(obj, key, path, required)) return false;
    if (!obj[key].is_number()) {
      issue(join(path, key), "must be a number");
      return false;
    }
    out = obj[key].get<double>();
    return true;
  }

  bool integer(const Json& obj, const char* key, const std::string& path, long long& out, bool required = false) {
    if (!present(obj, key, path, required)) return false;
    if (!obj[key].is_number_integer()) {
      issue(join(path, key), "must be an integer");
      return false;
    }
    out = obj[key].get<long long>();
    return true;
  }

  bool unsigned_integer(const Json& obj, const char* key, const std::string& path, std::uint64_t& out) {
    if (!present(obj, key, path, false)) return false;
    const auto& v = obj[key];
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      issue(join(path, key), "must be a non-negative integer");
      return false;
    }
    out = v.get<std::uint64_t>();
    return true;
  }

  bool boolean(const Json& obj, const char* key, const std::string& path, bool& out) {
    if (!present(obj, key, path, false)) return false;
    if (!obj[key].is_boolean()) {
      issue(join(path, key), "must be true or false");
      return false;
    }
    out = obj[key].get<bool>();
    return true;
  }

  bool string(const Json& obj, const char* key, const std::string& path, std::string& out, bool required = false) {
    if (!present(obj, key, path, required)) return false;
    if (!obj[key].is_string()) {
      issue(join(path, key), "must be a string");
      return false;
    }
    out = obj[key].get<std::string>();
    return true;
  }

  bool vector(const Json& obj, const char* key, const std::string& path, std::vector<double>& out,
              bool required = false) {
    if (!present(obj, key, path, required)) return false;
    const auto& v = obj[key];
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number(); })) {
      issue(join(path, key), "must be a list of numbers");
      return false;
    }
    out.clear();
    for (const auto& x : v) out.push_back(x.get<double>());
    if (!std::all_of(out.begin(), out.end(), [](double x) { return std::isfinite(x); })) {
      issue(join(path, key), "entries must be finite");
      return false;
    }
    return true;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  bool present(const Json& obj, const char* key, const std::string& path, bool required) {
    if (obj.contains(key) && !obj[key].is_null()) return true;
    if (required) issue(join(path, key), "required key is missing");
    return false;
  }
};

template <class Fn>
void guarded(Reader& r, const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    r.issue(path, e.what());
  }
}

ParameterVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json vector_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json matrix_json(const Matrix& m) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back(vector_json(m.row(i).transpose()));
  return arr;
}

PulseFamily read_family(Reader& r, const Json& node, const std::string& path, const ModelSpec& model) {
  PulseFamily f;
  if (!node.is_object()) {
    r.issue(path, "must be a mapping");
    return f;
  }
  r.known_keys(node, path, {"family", "segments", "duration_cap", "ramsey_width_fraction"});
  std::string kind;
  if (r.string(node, "family", path, kind, true)) guarded(r, Reader::join(path, "family"), [&] { f.kind = pulse_kind_from_string(kind); });
  long long segments = 0;
  if (r.integer(node, "segments", path, segments)) f.segments = static_cast<int>(segments);
  else if (f.kind == PulseKind::pwc_amplitude || f.kind == PulseKind::phase_only) f.segments = 10;
  else if (f.kind == PulseKind::bang_bang) f.segments = 3;
  if (segments < 0 || segments > 100000) r.issue(Reader::join(path, "segments"), "out of range");
  r.number(node, "duration_cap", path, f.duration_cap);
  r.number(node, "ramsey_width_fraction", path, f.ramsey_width_fraction);
  f.channel_count = (f.kind == PulseKind::ramsey || f.kind == PulseKind::bang_bang)
                        ? 1
                        : static_cast<int>(model.channel_count());
  if ((f.kind == PulseKind::ramsey || f.kind == PulseKind::bang_bang) && model.channel_count() != 1) {
    r.issue(path, to_string(f.kind) + " is only available for single-channel models");
  } else {
    guarded(r, path, [&] { f.validate(); });
  }
  return f;
}

Json family_json(const PulseFamily& f) {
  Json j = {{"family", to_string(f.kind)}};
  if (f.kind != PulseKind::rabi && f.kind != PulseKind::ramsey) j["segments"] = f.segments;
  j["duration_cap"] = f.duration_cap;
  if (f.kind == PulseKind::ramsey) j["ramsey_width_fraction"] = f.ramsey_width_fraction;
  return j;
}

RunConfig read_config(const Json& tree, Reader& r) {
  RunConfig cfg;
  if (!tree.is_object()) {
    r.issue("<root>", "config must be a mapping");
    return cfg;
  }
  r.known_keys(tree, "", {"seed", "output", "model", "prior", "backend", "pulses", "cost", "optimizer", "loop", "fi_scan"});
  r.unsigned_integer(tree, "seed", "", cfg.seed);

  if (const Json* out = r.section(tree, "output", "", false)) {
    r.known_keys(*out, "output", {"dir", "optimizer_traces"});
    std::string dir;
    if (r.string(*out, "dir", "output", dir)) cfg.output_dir = dir;
    r.boolean(*out, "optimizer_traces", "output", cfg.write_optimizer_traces);
  }

  // model
  if (const Json* m = r.section(tree, "model", "", true)) {
    r.known_keys(*m, "model", {"family", "labels"});
    std::string fam;
    if (r.string(*m, "family", "model", fam, true)) {
      guarded(r, "model.family", [&] { cfg.model = ModelSpec::for_family(model_family_from_string(fam)); });
    }
    if (m->contains("labels")) {
      const auto& labels = (*m)["labels"];
      if (!labels.is_array() || !std::all_of(labels.begin(), labels.end(), [](const Json& x) { return x.is_string(); })) {
        r.issue("model.labels", "must be a list of strings");
      } else if (labels.size() != cfg.model.parameter_count()) {
        r.issue("model.labels", "expected " + std::to_string(cfg.model.parameter_count()) + " labels");
      } else {
        cfg.model.parameter_labels = labels.get<std::vector<std::string>>();
      }
    }
  }
  const std::size_t p = cfg.model.parameter_count();
  auto check_len = [&](const std::string& path, std::size_t n) {
    if (n != p) r.issue(path, "expected " + std::to_string(p) + " entries, got " + std::to_string(n));
    return n == p;
  };

  // prior
  if (const Json* pr = r.section(tree, "prior", "", true)) {
    r.known_keys(*pr, "prior", {"mean", "std", "covariance"});
    std::vector<double> mean, sd;
    if (r.vector(*pr, "mean", "prior", mean, true) && check_len("prior.mean", mean.size())) {
      cfg.prior_mean = to_vector(mean);
    }
    const bool has_std = pr->contains("std");
    const bool has_cov = pr->contains("covariance");
    if (has_std == has_cov) {
      r.issue("prior", "give exactly one of std or covariance");
    } else if (has_std) {
      if (r.vector(*pr, "std", "prior", sd) && check_len("prior.std", sd.size())) {
        if (std::any_of(sd.begin(), sd.end(), [](double x) { return !(x > 0.0); })) {
          r.issue("prior.std", "entries must be positive");
        } else {
          cfg.prior_covariance = to_vector(sd).array().square().matrix().asDiagonal();
        }
      }
    } else {
      const auto& c = (*pr)["covariance"];
      bool ok = c.is_array() && c.size() == p;
      for (std::size_t i = 0; ok && i < p; ++i) {
        ok = c[i].is_array() && c[i].size() == p &&
             std::all_of(c[i].begin(), c[i].end(), [](const Json& x) { return x.is_number(); });
      }
      if (!ok) {
        r.issue("prior.covariance", "must be a " + std::to_string(p) + "x" + std::to_string(p) + " numeric matrix");
      } else {
        cfg.prior_covariance.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t k = 0; k < p; ++k) {
            cfg.prior_covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = c[i][k].get<double>();
          }
        }
      }
    }
    if (cfg.prior_mean.size() == static_cast<Eigen::Index>(p) && cfg.prior_covariance.rows() == static_cast<Eigen::Index>(p)) {
      guarded(r, "prior", [&] { (void)cfg.prior(); });
    }
  }

  // backend
  if (const Json* b = r.section(tree, "backend", "", true)) {
    std::string kind;
    r.string(*b, "kind", "backend", kind, true);
    long long shots = cfg.backend.shots;
    if (kind == "simulated") {
      r.known_keys(*b, "backend", {"kind", "g_true", "shots", "seed"});
      cfg.backend.kind = BackendConfig::Kind::simulated;
      std::vector<double> g;
      if (r.vector(*b, "g_true", "backend", g, true) && check_len("backend.g_true", g.size())) {
        cfg.backend.g_true = to_vector(g);
      }
      cfg.backend.seed = derive_seed(cfg.seed, {tag(Stream::simulator)});
      r.unsigned_integer(*b, "seed", "backend", cfg.backend.seed);
    } else if (kind == "remote") {
      r.known_keys(*b, "backend", {"kind", "endpoint", "shots", "timeout_s"});
      cfg.backend.kind = BackendConfig::Kind::remote;
      cfg.backend.shots = 100;
      shots = 100;
      if (r.string(*b, "endpoint", "backend", cfg.backend.endpoint, true) &&
          cfg.backend.endpoint.rfind("tcp://", 0) != 0 && cfg.backend.endpoint.rfind("exec:", 0) != 0) {
        r.issue("backend.endpoint", "must start with tcp:// or exec:");
      }
      if (r.number(*b, "timeout_s", "backend", cfg.backend.timeout_s) && !(cfg.backend.timeout_s > 0.0)) {
        r.issue("backend.timeout_s", "must be positive");
      }
    } else if (!kind.empty()) {
      r.issue("backend.kind", "must be 'simulated' or 'remote'");
    }
    if (r.integer(*b, "shots", "backend", shots) && shots < 1) r.issue("backend.shots", "must be >= 1");
    cfg.backend.shots = static_cast<int>(std::clamp<long long>(shots, 1, 1LL << 30));
  }

  // pulses
  if (!tree.contains("pulses")) {
    r.issue("pulses", "required list of pulse families is missing");
  } else if (!tree["pulses"].is_array() || tree["pulses"].empty()) {
    r.issue("pulses", "must be a non-empty list");
  } else {
    for (std::size_t i = 0; i < tree["pulses"].size(); ++i) {
      cfg.loop.families.push_back(read_family(r, tree["pulses"][i], "pulses[" + std::to_string(i) + "]", cfg.model));
    }
  }

  // cost
  cfg.loop.cost.planned_shots = cfg.backend.shots;
  if (const Json* c = r.section(tree, "cost", "", false)) {
    r.known_keys(*c, "cost", {"kind", "grid_size", "a_diagonal", "alpha", "beta", "planned_shots", "sigma_hat",
                              "likelihood_variance_convention"});
    std::string s;
    if (r.string(*c, "kind", "cost", s)) guarded(r, "cost.kind", [&] { cfg.loop.cost_kind = cost_kind_from_string(s); });
    long long n = 0;
    if (r.integer(*c, "grid_size", "cost", n)) {
      if (n < 2 || n > 100000) r.issue("cost.grid_size", "must lie in [2, 100000]");
      cfg.loop.cost.grid_size = static_cast<int>(std::clamp<long long>(n, 2, 100000));
    }
    std::vector<double> a;
    if (r.vector(*c, "a_diagonal", "cost", a) && check_len("cost.a_diagonal", a.size())) {
      if (std::any_of(a.begin(), a.end(), [](double x) { return x < 0.0; })) r.issue("cost.a_diagonal", "entries must be >= 0");
      cfg.loop.cost.a_diagonal = a;
    }
    r.number(*c, "alpha", "cost", cfg.loop.cost.alpha);
    if (r.number(*c, "beta", "cost", cfg.loop.cost.beta) && cfg.loop.cost.beta < 0.0) r.issue("cost.beta", "must be >= 0");
    if (r.integer(*c, "planned_shots", "cost", n)) {
      if (n < 1) r.issue("cost.planned_shots", "must be >= 1");
      cfg.loop.cost.planned_shots = static_cast<int>(std::clamp<long long>(n, 1, 1LL << 30));
    }
    if (r.number(*c, "sigma_hat", "cost", cfg.loop.cost.sigma_hat) && cfg.loop.cost.sigma_hat < 0.0) {
      r.issue("cost.sigma_hat", "must be >= 0 (0 derives it from planned_shots)");
    }
    if (r.string(*c, "likelihood_variance_convention", "cost", s)) {
      guarded(r, "cost.likelihood_variance_convention",
              [&] { cfg.loop.cost.convention = likelihood_convention_from_string(s); });
    }
  }
  if (cfg.loop.cost.a_diagonal.empty()) cfg.loop.cost.a_diagonal.assign(p, 1.0);

  // optimizer
  if (const Json* o = r.section(tree, "optimizer", "", false)) {
    r.known_keys(*o, "optimizer", {"restarts", "budget", "method", "jitter"});
    long long n = 0;
    if (r.integer(*o, "restarts", "optimizer", n)) {
      if (n < 1 || n > 10000) r.issue("optimizer.restarts", "must lie in [1, 10000]");
      cfg.loop.optimizer.restarts = static_cast<int>(std::clamp<long long>(n, 1, 10000));
    }
    if (r.integer(*o, "budget", "optimizer", n)) {
      if (n < 50 || n > 10000000) r.issue("optimizer.budget", "must lie in [50, 1e7]");
      cfg.loop.optimizer.budget = static_cast<int>(std::clamp<long long>(n, 50, 10000000));
    }
    std::string s;
    if (r.string(*o, "method", "optimizer", s)) {
      guarded(r, "optimizer.method", [&] { cfg.loop.optimizer.method = search_method_from_string(s); });
    }
    if (r.number(*o, "jitter", "optimizer", cfg.loop.optimizer.jitter) &&
        !(cfg.loop.optimizer.jitter >= 0.0 && cfg.loop.optimizer.jitter < 1.0)) {
      r.issue("optimizer.jitter", "must lie in [0, 1)");
    }
  }

  // loop
  if (const Json* l = r.section(tree, "loop", "", false)) {
    r.known_keys(*l, "loop", {"max_iterations", "target_major_uncertainty", "population_size", "stall_window",
                              "stall_ratio", "stop_on_stall"});
    long long n = 0;
    if (r.integer(*l, "max_iterations", "loop", n)) {
      if (n < 1 || n > 100000) r.issue("loop.max_iterations", "must lie in [1, 100000]");
      cfg.loop.max_iterations = static_cast<int>(std::clamp<long long>(n, 1, 100000));
    }
    if (r.number(*l, "target_major_uncertainty", "loop", cfg.loop.target_major_uncertainty) &&
        !(cfg.loop.target_major_uncertainty >= 0.0)) {
      r.issue("loop.target_major_uncertainty", "must be >= 0");
    }
    if (r.integer(*l, "population_size", "loop", n)) {
      if (n < 100 || n > 100000000) r.issue("loop.population_size", "must lie in [100, 1e8]");
      cfg.loop.population_size = static_cast<std::size_t>(std::clamp<long long>(n, 100, 100000000));
    }
    if (r.integer(*l, "stall_window", "loop", n)) {
      if (n < 1 || n > 1000) r.issue("loop.stall_window", "must lie in [1, 1000]");
      cfg.loop.stall_window = static_cast<int>(std::clamp<long long>(n, 1, 1000));
    }
    if (r.number(*l, "stall_ratio", "loop", cfg.loop.stall_ratio) &&
        !(cfg.loop.stall_ratio > 0.0 && cfg.loop.stall_ratio <= 1.0)) {
      r.issue("loop.stall_ratio", "must lie in (0, 1]");
    }
    r.boolean(*l, "stop_on_stall", "loop", cfg.loop.stop_on_stall);
  }

  // fi_scan
  cfg.fi_scan.family.channel_count = static_cast<int>(cfg.model.channel_count());
  if (const Json* f = r.section(tree, "fi_scan", "", false)) {
    r.known_keys(*f, "fi_scan", {"g", "family", "segments"});
    std::vector<double> g;
    if (r.vector(*f, "g", "fi_scan", g) && check_len("fi_scan.g", g.size())) cfg.fi_scan.g = to_vector(g);
    Json fam = Json::object();
    if (f->contains("family")) fam["family"] = (*f)["family"];
    else fam["family"] = "rabi";
    if (f->contains("segments")) fam["segments"] = (*f)["segments"];
    cfg.fi_scan.family = read_family(r, fam, "fi_scan", cfg.model);
  }
  return cfg;
}

}  // namespace

std::vector<std::string> config_issues(const Json& tree) {
  Reader r;
  read_config(tree, r);
  return r.issues;
}

RunConfig parse_config(const Json& tree) {
  Reader r;
  RunConfig cfg = read_config(tree, r);
  if (!r.issues.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(r.issues.size()) + " issue" +
                      (r.issues.size() == 1 ? "" : "s") + "):";
    for (const auto& i : r.issues) msg += "\n  " + i;
    fail(ErrorCode::config_error, msg);
  }
  return cfg;
}

Json config_to_json(const RunConfig& cfg) {
  Json j = Json::object();
  j["seed"] = cfg.seed;
  j["output"] = {{"dir", cfg.output_dir.string()}, {"optimizer_traces", cfg.write_optimizer_traces}};
  j["model"] = {{"family", to_string(cfg.model.family)}, {"labels", cfg.model.parameter_labels}};

  Json prior = {{"mean", vector_json(cfg.prior_mean)}};
  const Matrix diag = cfg.prior_covariance.diagonal().asDiagonal();
  if (cfg.prior_covariance == diag) {
    prior["std"] = vector_json(cfg.prior_covariance.diagonal().cwiseSqrt());
    // sqrt then square must reproduce the variances exactly, otherwise keep the matrix
    const Eigen::VectorXd sd = cfg.prior_covariance.diagonal().cwiseSqrt();
    if (sd.array().square().matrix() != cfg.prior_covariance.diagonal()) {
      prior.erase("std");
      prior["covariance"] = matrix_json(cfg.prior_covariance);
    }
  } else {
    prior["covariance"] = matrix_json(cfg.prior_covariance);
  }
  j["prior"] = prior;

  if (cfg.backend.kind == BackendConfig::Kind::simulated) {
    j["backend"] = {{"kind", "simulated"}, {"g_true", vector_json(cfg.backend.g_true)}, {"shots", cfg.backend.shots},
                    {"seed", cfg.backend.seed}};
  } else {
    j["backend"] = {{"kind", "remote"}, {"endpoint", cfg.backend.endpoint}, {"shots", cfg.backend.shots},
                    {"timeout_s", cfg.backend.timeout_s}};
  }

  Json pulses = Json::array();
  for (const auto& f : cfg.loop.families) pulses.push_back(family_json(f));
  j["pulses"] = pulses;

  const auto& c = cfg.loop.cost;
  j["cost"] = {{"kind", to_string(cfg.loop.cost_kind)},
               {"grid_size", c.grid_size},
               {"a_diagonal", c.a_diagonal},
               {"alpha", c.alpha},
               {"beta", c.beta},
               {"planned_shots", c.planned_shots},
               {"sigma_hat", c.sigma_hat},
               {"likelihood_variance_convention", to_string(c.convention)}};
  const auto& o = cfg.loop.optimizer;
  j["optimizer"] = {{"restarts", o.restarts}, {"budget", o.budget}, {"method", to_string(o.method)}, {"jitter", o.jitter}};
  const auto& l = cfg.loop;
  j["loop"] = {{"max_iterations", l.max_iterations},
               {"target_major_uncertainty", l.target_major_uncertainty},
               {"population_size", l.population_size},
               {"stall_window", l.stall_window},
               {"stall_ratio", l.stall_ratio},
               {"stop_on_stall", l.stop_on_stall}};
  Json scan = {{"family", to_string(cfg.fi_scan.family.kind)}};
  if (cfg.fi_scan.family.kind != PulseKind::rabi && cfg.fi_scan.family.kind != PulseKind::ramsey) {
    scan["segments"] = cfg.fi_scan.family.segments;
  }
  if (cfg.fi_scan.g) scan["g"] = vector_json(*cfg.fi_scan.g);
  j["fi_scan"] = scan;
  return j;
}

Json yaml_to_json(const std::string& text) {
  try {
    const YAML::Node root = YAML::Load(text);
    return node_to_json(root);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::config_error, std::string("YAML parse error: ") + e.what());
  }
}

std::string json_to_yaml(const Json& tree) {
  YAML::Emitter out;
  out.SetIndent(2);
  emit_json(out, tree);
  return std::string(out.c_str()) + "\n";
}

Json load_config_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return yaml_to_json(ss.str());
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(load_config_tree(path)); }

std::string emit_config(const RunConfig& config) { return json_to_yaml(config_to_json(config)); }

}  // namespace obsid

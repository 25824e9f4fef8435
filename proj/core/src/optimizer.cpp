#include "obsid/optimizer.hpp"

#include "obsid/csv.hpp"
#include "obsid/error.hpp"
#include "obsid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace obsid {

std::string to_string(SearchMethod method) {
  switch (method) {
    case SearchMethod::automatic: return "auto";
    case SearchMethod::nelder_mead: return "nelder_mead";
    case SearchMethod::differential_evolution: return "differential_evolution";
  }
  return "unknown";
}

SearchMethod search_method_from_string(const std::string& name) {
  if (name == "auto") return SearchMethod::automatic;
  if (name == "nelder_mead") return SearchMethod::nelder_mead;
  if (name == "differential_evolution") return SearchMethod::differential_evolution;
  fail(ErrorCode::invalid_argument, "unknown optimizer method '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (restarts < 1) fail(ErrorCode::invalid_argument, "optimizer restarts must be >= 1");
  if (budget < 50) fail(ErrorCode::invalid_argument, "optimizer budget must be >= 50");
  if (!(jitter >= 0.0 && jitter < 1.0)) fail(ErrorCode::invalid_argument, "optimizer jitter must lie in [0, 1)");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Maps the free (non-degenerate) coordinates onto the unit cube.
class UnitBox {
 public:
  UnitBox(std::span<const Bounds> bounds, std::span<const double> x0) : bounds_(bounds.begin(), bounds.end()),
                                                                        base_(x0.begin(), x0.end()) {
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      if (bounds_[i].upper > bounds_[i].lower) free_.push_back(i);
      base_[i] = std::clamp(base_[i], bounds_[i].lower, bounds_[i].upper);
    }
  }

  std::size_t dims() const { return free_.size(); }
  /// The starting point clamped into the box, evaluated as is so the search
  /// can never report worse than its seed.
  const std::vector<double>& anchor() const { return base_; }

  std::vector<double> to_unit(std::span<const double> x) const {
    std::vector<double> u(free_.size());
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const auto& b = bounds_[free_[k]];
      u[k] = std::clamp((x[free_[k]] - b.lower) / (b.upper - b.lower), 0.0, 1.0);
    }
    return u;
  }

  std::vector<double> from_unit(std::span<const double> u) const {
    std::vector<double> x = base_;
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const auto& b = bounds_[free_[k]];
      const double uk = std::clamp(u[k], 0.0, 1.0);
      x[free_[k]] = std::clamp(b.lower + uk * (b.upper - b.lower), b.lower, b.upper);
    }
    return x;
  }

 private:
  std::vector<Bounds> bounds_;
  std::vector<double> base_;
  std::vector<std::size_t> free_;
};

struct Counted {
  const Objective& f;
  const UnitBox& box;
  int budget;
  SearchResult& result;

  bool exhausted() const { return result.evaluations >= budget; }

  double operator()(const std::vector<double>& u) { return exact(box.from_unit(u)); }

  double exact(const std::vector<double>& x) {
    double v = f(x);
    if (!std::isfinite(v)) v = kInf;
    ++result.evaluations;
    if (result.best_trace.empty() || v < result.value) {
      result.value = v;
      result.x = x;
    }
    result.best_trace.push_back(result.value);
    return v;
  }
};

SearchResult start(std::span<const double> x0, const UnitBox& box) {
  SearchResult r;
  r.x = box.from_unit(box.to_unit(x0));
  r.value = kInf;
  return r;
}

}  // namespace

SearchResult nelder_mead(const Objective& f, std::span<const double> x0, std::span<const Bounds> bounds, int budget) {
  const UnitBox box(bounds, x0);
  SearchResult result = start(x0, box);
  Counted eval{f, box, budget, result};
  const std::size_t n = box.dims();
  if (n == 0 || budget < 1) {
    eval.exact(box.anchor());
    return result;
  }

  const double nd = static_cast<double>(n);
  const double alpha = 1.0, gamma = 1.0 + 2.0 / nd, rho = 0.75 - 1.0 / (2.0 * nd), shrink = 1.0 - 1.0 / nd;
  constexpr double kStep = 0.1;

  std::vector<std::vector<double>> simplex(n + 1, box.to_unit(x0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = simplex[i + 1];
    v[i] = v[i] + kStep <= 1.0 ? v[i] + kStep : v[i] - kStep;
  }
  std::vector<double> values(n + 1, kInf);
  values[0] = eval.exact(box.anchor());
  for (std::size_t i = 1; i <= n && !eval.exhausted(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto clamp_unit = [](std::vector<double>& v) {
    for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  };

  while (!eval.exhausted()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double extent = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) extent = std::max(extent, std::abs(simplex[i][k] - simplex[best][k]));
    }
    const double spread = values[worst] - values[best];
    if (extent < 1e-7 && (spread <= 1e-12 * (std::abs(values[best]) + 1e-12) || !std::isfinite(spread))) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / nd;
    }
    for (std::size_t k = 0; k < n; ++k) trial[k] = centroid[k] + alpha * (centroid[k] - simplex[worst][k]);
    clamp_unit(trial);
    const double fr = eval(trial);

    if (fr < values[best]) {
      if (eval.exhausted()) {
        simplex[worst] = trial;
        values[worst] = fr;
        break;
      }
      for (std::size_t k = 0; k < n; ++k) trial2[k] = centroid[k] + gamma * (trial[k] - centroid[k]);
      clamp_unit(trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[worst] = trial2;
        values[worst] = fe;
      } else {
        simplex[worst] = trial;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = trial;
      values[worst] = fr;
      continue;
    }
    if (eval.exhausted()) break;
    const bool outside = fr < values[worst];
    for (std::size_t k = 0; k < n; ++k) {
      trial2[k] = outside ? centroid[k] + rho * (trial[k] - centroid[k])
                          : centroid[k] + rho * (simplex[worst][k] - centroid[k]);
    }
    clamp_unit(trial2);
    const double fc = eval(trial2);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = trial2;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n && !eval.exhausted(); ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + shrink * (simplex[i][k] - simplex[best][k]);
      values[i] = eval(simplex[i]);
    }
  }
  return result;
}

SearchResult differential_evolution(const Objective& f, std::span<const double> x0, std::span<const Bounds> bounds,
                                    int budget, Rng& rng) {
  const UnitBox box(bounds, x0);
  SearchResult result = start(x0, box);
  Counted eval{f, box, budget, result};
  const std::size_t n = box.dims();
  if (n == 0 || budget < 1) {
    eval.exact(box.anchor());
    return result;
  }
  constexpr double kWeight = 0.6, kCrossover = 0.9;
  const int np = std::clamp(static_cast<int>(n) + 10, 8, std::max(8, budget / 6));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_dim(0, n - 1);

  std::vector<std::vector<double>> pop(static_cast<std::size_t>(np), std::vector<double>(n));
  std::vector<double> values(static_cast<std::size_t>(np), kInf);
  pop[0] = box.to_unit(x0);
  for (std::size_t i = 1; i < pop.size(); ++i) {
    for (auto& v : pop[i]) v = uniform(rng);
  }
  values[0] = eval.exact(box.anchor());
  for (std::size_t i = 1; i < pop.size() && !eval.exhausted(); ++i) values[i] = eval(pop[i]);

  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::vector<double> trial(n);
  while (!eval.exhausted()) {
    for (std::size_t i = 0; i < pop.size() && !eval.exhausted(); ++i) {
      std::size_t a, b, c;
      do a = pick(rng); while (a == i);
      do b = pick(rng); while (b == i || b == a);
      do c = pick(rng); while (c == i || c == a || c == b);
      const std::size_t forced = pick_dim(rng);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == forced || uniform(rng) < kCrossover) {
          double v = pop[a][k] + kWeight * (pop[b][k] - pop[c][k]);
          if (v < 0.0) v = uniform(rng) * pop[i][k];
          if (v > 1.0) v = pop[i][k] + uniform(rng) * (1.0 - pop[i][k]);
          trial[k] = v;
        } else {
          trial[k] = pop[i][k];
        }
      }
      const double ft = eval(trial);
      if (ft <= values[i]) {
        pop[i] = trial;
        values[i] = ft;
      }
    }
  }
  return result;
}

DurationWindow duration_window(double previous_duration, double duration_cap) {
  if (!(previous_duration > 0.0)) fail(ErrorCode::invalid_argument, "previous duration must be positive");
  const double upper = std::min(duration_cap, 2.0 * previous_duration);
  return {std::min(previous_duration / 4.0, upper), upper};
}

namespace {

std::vector<double> seed_variables(const PulseFamily& family, const std::vector<Bounds>& bounds, double hint,
                                   DurationWindow window, int restart, double jitter, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double t_max = std::min(window.max, family.duration_cap);
  double duration = hint;
  if (restart > 0) duration *= 1.0 + jitter * (2.0 * uniform(rng) - 1.0);
  duration = std::clamp(duration, std::min(window.min, t_max), t_max);

  std::vector<double> x = family.canonical_variables(duration);
  if (restart == 0) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], bounds[i].lower, bounds[i].upper);
    return x;
  }
  const int t_index = family.duration_index();
  if (family.kind == PulseKind::bang_bang) {
    const std::size_t durations = 2 * static_cast<std::size_t>(family.segments) - 1;
    double total = 0.0;
    for (std::size_t i = 0; i < durations; ++i) total += (x[i] = 0.2 + 0.8 * uniform(rng));
    for (std::size_t i = 0; i < durations; ++i) x[i] = std::min(bounds[i].upper, x[i] * duration / total);
    for (std::size_t i = durations; i < x.size(); ++i) {
      x[i] = bounds[i].lower + uniform(rng) * (bounds[i].upper - bounds[i].lower);
    }
    return x;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(i) == t_index) continue;
    x[i] = bounds[i].lower + uniform(rng) * (bounds[i].upper - bounds[i].lower);
  }
  return x;
}

}  // namespace

OptimizedPulse optimize_pulse(std::span<const PulseFamily> families, const PulseCost& cost,
                              const OptimizerConfig& config, DurationWindow window, double duration_hint,
                              double omega_estimate) {
  config.validate();
  if (families.empty()) fail(ErrorCode::invalid_argument, "at least one pulse family is required");
  if (!(window.max > 0.0) || window.min > window.max) fail(ErrorCode::invalid_argument, "invalid duration window");

  struct Job {
    std::size_t family;
    int restart;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < families.size(); ++f) {
    families[f].validate();
    for (int r = 0; r < config.restarts; ++r) jobs.push_back({f, r});
  }

  std::vector<SearchResult> results(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const auto& family = families[jobs[j].family];
          const auto bounds = family.bounds(window);
          Rng rng = make_rng(config.seed, {jobs[j].family, static_cast<std::uint64_t>(jobs[j].restart)});
          const auto x0 = seed_variables(family, bounds, duration_hint, window, jobs[j].restart, config.jitter, rng);
          std::string last_error;
          Objective objective = [&](std::span<const double> x) {
            try {
              return cost(render(family, x, omega_estimate));
            } catch (const std::exception& e) {
              last_error = e.what();
              return kInf;
            }
          };
          const bool use_de = config.method == SearchMethod::differential_evolution ||
                              (config.method == SearchMethod::automatic && family.variable_count() >= 10);
          results[j] = use_de ? differential_evolution(objective, x0, bounds, config.budget, rng)
                              : nelder_mead(objective, x0, bounds, config.budget);
          if (!std::isfinite(results[j].value)) failures[j] = last_error.empty() ? "non-finite cost" : last_error;
        }
      },
      1);

  OptimizedPulse out;
  out.cost = kInf;
  std::size_t best = jobs.size();
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& family = families[jobs[j].family];
    out.evaluations_used += results[j].evaluations;
    out.traces.push_back({family.tag(), jobs[j].restart, results[j].best_trace, results[j].value, failures[j]});
    if (results[j].value < out.cost) {
      out.cost = results[j].value;
      best = j;
    }
  }
  if (best == jobs.size()) {
    std::string message = "every restart failed:";
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      message += " [" + families[jobs[j].family].tag() + "#" + std::to_string(jobs[j].restart) + ": " + failures[j] + "]";
    }
    fail(ErrorCode::optimizer_failure, message);
  }
  const auto& family = families[jobs[best].family];
  out.family_tag = family.tag();
  out.choice.family = family;
  out.choice.variables = results[best].x;
  out.choice.rendered = render(family, out.choice.variables, omega_estimate);
  return out;
}

void write_optimizer_trace_csv(std::ostream& os, const OptimizedPulse& result) {
  os << "family,restart,evaluation,best_cost\n";
  for (const auto& t : result.traces) {
    for (std::size_t e = 0; e < t.best_trace.size(); ++e) {
      os << t.family_tag << ',' << t.restart << ',' << (e + 1) << ',' << format_double(t.best_trace[e]) << '\n';
    }
  }
}

}  // namespace obsid

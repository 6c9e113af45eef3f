#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hol/analytics.hpp"
#include "hol/config.hpp"
#include "hol/routing.hpp"
#include "hol/simulation.hpp"

namespace hol {

/// One sweep point. Simulation and routing columns are filled only when the
/// experiment asks for them.
struct ResultRow {
  std::string swept_param;
  double value = 0.0;
  ModelKind model = ModelKind::single_lane;
  double p_t = 0.0;
  double rho = 0.0;
  double W_analytic = 0.0;
  bool stable = true;
  std::optional<double> W_sim_mean;
  std::optional<double> W_sim_stderr;
  std::optional<double> queue_len_mean;
  bool saturated = false;
  std::optional<ModeComparison> routes;

  bool operator==(const ResultRow&) const = default;
};

struct SimAggregate {
  double mean_wait = 0.0;
  double stderr_wait = 0.0;
  double mean_queue_len = 0.0;
  bool saturated = false;
  std::vector<SimStats> runs;
};

/// Mean over seeds; standard error across seeds, or the single run's
/// batch-means error when only one seed is given.
inline SimAggregate aggregate(std::vector<SimStats> runs) {
  SimAggregate agg;
  const auto n = static_cast<double>(runs.size());
  for (const SimStats& s : runs) {
    agg.mean_wait += s.mean_wait / n;
    agg.mean_queue_len += s.mean_queue_len / n;
    agg.saturated = agg.saturated || s.saturated;
  }
  if (runs.size() == 1) {
    agg.stderr_wait = runs.front().wait_stderr;
  } else if (runs.size() > 1) {
    double ss = 0.0;
    for (const SimStats& s : runs) ss += (s.mean_wait - agg.mean_wait) * (s.mean_wait - agg.mean_wait);
    agg.stderr_wait = std::sqrt(ss / (n - 1.0) / n);
  }
  agg.runs = std::move(runs);
  return agg;
}

/// Runs jobs on a small thread pool; results keep job order.
template <typename Result, typename Job>
std::vector<Result> run_ordered(std::size_t count, Job&& job) {
  std::vector<Result> results(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) results[i] = job(i);
  };
  if (workers == 1) {
    work();
    return results;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return results;
}

inline SimConfig sim_config(const IntersectionSpec& spec, const ExperimentSpec& exp, std::uint64_t seed) {
  SimConfig cfg;
  cfg.spec = spec;
  cfg.horizon = exp.horizon;
  cfg.warmup = exp.warmup;
  cfg.seed = seed;
  return cfg;
}

/// Simulates one intersection over every seed of the experiment.
inline SimAggregate simulate_seeds(const IntersectionSpec& spec, const ExperimentSpec& exp) {
  return aggregate(run_ordered<SimStats>(exp.seeds.size(), [&](std::size_t i) {
    return simulate(sim_config(spec, exp, exp.seeds[i]));
  }));
}

/// Rescales the class rates to a new total, keeping the class split
/// (an all-zero split becomes an even one).
inline ArrivalSpec with_total_rate(const ArrivalSpec& base, double total) {
  ArrivalSpec out = base;
  const double current = base.total();
  for (double& r : out.rates) {
    r = current > 0.0 ? r * (total / current) : total / static_cast<double>(out.rates.size());
  }
  return out;
}

inline ResultRow analytic_row(const IntersectionSpec& spec, std::string param, double value) {
  const WaitingTimeReport report = waiting_time(spec);
  ResultRow row;
  row.swept_param = std::move(param);
  row.value = value;
  row.model = spec.model;
  row.p_t = spec.comm.p_t;
  row.rho = report.rho;
  row.W_analytic = report.W;
  row.stable = report.stable;
  return row;
}

inline void attach(ResultRow& row, const SimAggregate& agg) {
  row.W_sim_mean = agg.mean_wait;
  row.W_sim_stderr = agg.stderr_wait;
  row.queue_len_mean = agg.mean_queue_len;
  row.saturated = agg.saturated;
}

namespace detail {

struct SweepPoint {
  IntersectionSpec spec;  // intersection being reported on
  std::optional<TransportNetwork> network;
  std::string param;
  double value = 0.0;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentSpec& exp) {
  const SweepSpec& sweep = *exp.sweep;
  std::vector<SweepPoint> points;
  if (exp.network) {
    const TransportNetwork& net = *exp.network;
    for (double v : sweep.values()) {
      std::vector<NodeSpec> nodes = net.nodes();
      IntersectionSpec* target = nullptr;
      for (NodeSpec& n : nodes) {
        if (n.id == sweep.node) target = &*n.intersection;
      }
      if (sweep.axis == SweepAxis::p_t) {
        target->comm.p_t = v;
      } else {
        target->arrivals = with_total_rate(target->arrivals, v);
      }
      IntersectionSpec reported = *target;
      points.push_back({reported, TransportNetwork(std::move(nodes), net.edges(), net.default_speed()),
                        to_string(sweep.axis), v});
    }
    return points;
  }
  const IntersectionSpec& base = *exp.intersection;
  std::vector<double> series = sweep.p_t_series;
  if (series.empty()) series.push_back(base.comm.p_t);
  for (double p_t : series) {
    for (double v : sweep.values()) {
      IntersectionSpec spec = base;
      spec.comm.p_t = p_t;
      if (sweep.axis == SweepAxis::total_rate) {
        spec.arrivals = with_total_rate(spec.arrivals, v);
      } else {
        spec.comm.p_t = v;
      }
      points.push_back({spec, std::nullopt, to_string(sweep.axis), v});
    }
  }
  return points;
}

}  // namespace detail

/// Evaluates every sweep point in order (p_t series outermost). Each row's
/// analytic W comes straight from the analytics; simulations, when enabled,
/// run every seed at every point. Unstable points still produce rows.
inline std::vector<ResultRow> run_sweep(const ExperimentSpec& exp) {
  validate(exp);
  if (exp.kind != ExperimentKind::sweep) throw Error(ErrorKind::invalid_argument, "run_sweep needs a sweep experiment");
  const std::vector<detail::SweepPoint> points = detail::sweep_points(exp);

  std::vector<ResultRow> rows;
  for (const auto& point : points) {
    ResultRow row = analytic_row(point.spec, point.param, point.value);
    if (point.network) row.routes = compare_modes(*point.network, exp.route_from, exp.route_to);
    rows.push_back(std::move(row));
  }
  if (exp.simulate) {
    const std::size_t seeds = exp.seeds.size();
    std::vector<SimStats> runs = run_ordered<SimStats>(points.size() * seeds, [&](std::size_t job) {
      return simulate(sim_config(points[job / seeds].spec, exp, exp.seeds[job % seeds]));
    });
    for (std::size_t p = 0; p < points.size(); ++p) {
      std::vector<SimStats> mine(runs.begin() + static_cast<std::ptrdiff_t>(p * seeds),
                                 runs.begin() + static_cast<std::ptrdiff_t>((p + 1) * seeds));
      attach(rows[p], aggregate(std::move(mine)));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// 17 significant digits, '.' decimal separator, "inf" for infinities.
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string text(buf);
  std::replace(text.begin(), text.end(), ',', '.');  // guard against a non-C locale
  return text;
}

inline Json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

inline Json optional_json(const std::optional<double>& v) { return v ? number_json(*v) : Json(nullptr); }

inline std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& id : path) out += (out.empty() ? "" : ">") + id;
  return out;
}

inline Json route_json(const RouteResult& r) {
  Json legs = Json::array();
  for (const RouteLeg& leg : r.legs) {
    legs.push_back({{"from", leg.from}, {"to", leg.to}, {"wait", number_json(leg.wait)},
                    {"travel", number_json(leg.travel)}});
  }
  return Json{{"mode", to_string(r.mode)},
              {"reachable", r.reachable},
              {"path", r.path},
              {"total_delay", number_json(r.total_delay)},
              {"legs", legs}};
}

inline Json comparison_json(const ModeComparison& cmp) {
  return Json{{"aware", route_json(cmp.aware)},
              {"baseline", route_json(cmp.baseline)},
              {"baseline_true_delay", number_json(cmp.baseline_true_delay)},
              {"gap", optional_json(cmp.gap)}};
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> columns{"swept_param", "value",       "model",          "p_t",
                                                "rho",         "W_analytic",  "W_sim_mean",     "W_sim_stderr",
                                                "queue_len_mean", "stable",   "saturated"};
  return columns;
}

inline const std::vector<std::string>& route_columns() {
  static const std::vector<std::string> columns{"aware_path",     "aware_delay",         "baseline_path",
                                                "baseline_delay", "baseline_true_delay", "gap"};
  return columns;
}

inline std::string csv_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

/// CSV: header plus one line per row. Routing columns are appended when any
/// row carries routes. JSON: array of objects with the same field names.
inline std::string emit_results(const std::vector<ResultRow>& rows, OutputFormat format) {
  if (rows.empty()) throw Error(ErrorKind::invalid_argument, "no result rows to emit");
  const bool with_routes = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.routes.has_value(); });

  if (format == OutputFormat::json) {
    Json out = Json::array();
    for (const ResultRow& r : rows) {
      Json obj{{"swept_param", r.swept_param},
               {"value", number_json(r.value)},
               {"model", to_string(r.model)},
               {"p_t", number_json(r.p_t)},
               {"rho", number_json(r.rho)},
               {"W_analytic", number_json(r.W_analytic)},
               {"W_sim_mean", optional_json(r.W_sim_mean)},
               {"W_sim_stderr", optional_json(r.W_sim_stderr)},
               {"queue_len_mean", optional_json(r.queue_len_mean)},
               {"stable", r.stable},
               {"saturated", r.saturated}};
      if (r.routes) obj["routes"] = comparison_json(*r.routes);
      out.push_back(std::move(obj));
    }
    return out.dump(2) + "\n";
  }

  std::string text;
  auto header = sweep_columns();
  if (with_routes) header.insert(header.end(), route_columns().begin(), route_columns().end());
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += "\n";
  for (const ResultRow& r : rows) {
    std::vector<std::string> cells{r.swept_param,
                                   format_number(r.value),
                                   to_string(r.model),
                                   format_number(r.p_t),
                                   format_number(r.rho),
                                   format_number(r.W_analytic),
                                   csv_optional(r.W_sim_mean),
                                   csv_optional(r.W_sim_stderr),
                                   csv_optional(r.queue_len_mean),
                                   r.stable ? "true" : "false",
                                   r.saturated ? "true" : "false"};
    if (with_routes) {
      if (r.routes) {
        const ModeComparison& c = *r.routes;
        cells.insert(cells.end(), {join_path(c.aware.path), format_number(c.aware.total_delay),
                                   join_path(c.baseline.path), format_number(c.baseline.total_delay),
                                   format_number(c.baseline_true_delay), csv_optional(c.gap)});
      } else {
        cells.insert(cells.end(), route_columns().size(), "");
      }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) text += (i ? "," : "") + cells[i];
    text += "\n";
  }
  return text;
}

/// Route results for the `route` command: one record per mode, plus the gap
/// when both modes ran.
inline std::string emit_routes(const std::vector<RouteResult>& routes, const std::optional<ModeComparison>& cmp,
                               OutputFormat format) {
  if (routes.empty()) throw Error(ErrorKind::invalid_argument, "no routes to emit");
  if (format == OutputFormat::json) {
    if (cmp) return comparison_json(*cmp).dump(2) + "\n";
    Json out = Json::array();
    for (const RouteResult& r : routes) out.push_back(route_json(r));
    return out.dump(2) + "\n";
  }
  std::string text = "mode,reachable,path,total_delay,true_delay,gap\n";
  for (const RouteResult& r : routes) {
    double true_delay = r.total_delay;
    if (cmp && r.mode == RoutingMode::baseline) true_delay = cmp->baseline_true_delay;
    text += std::string(to_string(r.mode)) + "," + (r.reachable ? "true" : "false") + "," + join_path(r.path) + "," +
            format_number(r.total_delay) + "," + format_number(true_delay) + "," +
            (cmp ? csv_optional(cmp->gap) : "") + "\n";
  }
  return text;
}

/// Throws io-failure when `path` cannot be written.
inline void write_output(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_failure, "cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::io_failure, "failed writing " + path);
}

}  // namespace hol

// holctl: analyze, simulate, route, and sweep intersection experiments.
//
// Exit codes: 0 success, 2 config error, 3 io error.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hol/hol.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;

struct Options {
  std::string config;
  std::string output;
  std::string format;
  std::string seeds;
  std::uint64_t horizon = 0;
  std::string mode;
};

/// "1,2,5" or "1..10" or a mix ("1..3,7").
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoull(item));
      } else {
        const std::uint64_t lo = std::stoull(item.substr(0, dots));
        const std::uint64_t hi = std::stoull(item.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("range");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::exception&) {
      throw hol::Error(hol::ErrorKind::schema_violation, "--seed: cannot parse '" + item + "'");
    }
  }
  if (seeds.empty()) throw hol::Error(hol::ErrorKind::schema_violation, "--seed: empty seed list");
  return seeds;
}

hol::ExperimentSpec load_experiment(const Options& opt, hol::ExperimentKind kind) {
  hol::ConfigDocument doc = hol::load_config(opt.config);
  hol::ExperimentSpec spec;
  if (auto* net = std::get_if<hol::TransportNetwork>(&doc)) {
    spec.kind = kind;
    spec.network = std::move(*net);
  } else {
    spec = std::get<hol::ExperimentSpec>(std::move(doc));
  }
  spec.kind = kind;
  if (!opt.seeds.empty()) spec.seeds = parse_seed_list(opt.seeds);
  if (opt.horizon) spec.horizon = opt.horizon;
  if (!opt.output.empty()) spec.output_path = opt.output;
  if (!opt.format.empty()) spec.format = opt.format == "json" ? hol::OutputFormat::json : hol::OutputFormat::csv;
  if (opt.mode == "aware") spec.mode = hol::ModeSelection::aware;
  if (opt.mode == "baseline") spec.mode = hol::ModeSelection::baseline;
  if (opt.mode == "both") spec.mode = hol::ModeSelection::both;
  if (kind == hol::ExperimentKind::simulate) spec.simulate = true;
  hol::validate(spec);
  return spec;
}

void deliver(const hol::ExperimentSpec& spec, const std::string& text) {
  if (spec.output_path.empty() || spec.output_path == "-") {
    std::cout << text;
  } else {
    hol::write_output(spec.output_path, text);
  }
}

int run(hol::ExperimentKind kind, const Options& opt) {
  const hol::ExperimentSpec spec = load_experiment(opt, kind);
  switch (kind) {
    case hol::ExperimentKind::analyze: {
      const auto& is = *spec.intersection;
      deliver(spec, hol::emit_results({hol::analytic_row(is, "total_rate", is.arrivals.total())}, spec.format));
      break;
    }
    case hol::ExperimentKind::simulate: {
      const auto& is = *spec.intersection;
      hol::ResultRow row = hol::analytic_row(is, "total_rate", is.arrivals.total());
      const hol::SimAggregate agg = hol::simulate_seeds(is, spec);
      hol::attach(row, agg);
      if (agg.saturated) std::cerr << "warning: queue saturated; simulated means are not steady-state\n";
      deliver(spec, hol::emit_results({row}, spec.format));
      break;
    }
    case hol::ExperimentKind::route: {
      const auto& net = *spec.network;
      if (spec.mode == hol::ModeSelection::both) {
        const hol::ModeComparison cmp = hol::compare_modes(net, spec.route_from, spec.route_to);
        deliver(spec, hol::emit_routes({cmp.aware, cmp.baseline}, cmp, spec.format));
      } else {
        const auto mode = spec.mode == hol::ModeSelection::aware ? hol::RoutingMode::aware : hol::RoutingMode::baseline;
        deliver(spec, hol::emit_routes({hol::shortest_delay_route(net, spec.route_from, spec.route_to, mode)},
                                       std::nullopt, spec.format));
      }
      break;
    }
    case hol::ExperimentKind::sweep: {
      const std::vector<hol::ResultRow> rows = hol::run_sweep(spec);
      for (const auto& r : rows) {
        if (r.saturated) {
          std::cerr << "warning: " << r.swept_param << "=" << r.value << " saturated\n";
        }
      }
      deliver(spec, hol::emit_results(rows, spec.format));
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Head-of-line blocking toolkit: intersection waiting times, simulation, and shortest-delay routing"};
  app.require_subcommand(1);

  Options opt;
  struct Command {
    const char* name;
    const char* help;
    hol::ExperimentKind kind;
  };
  const Command commands[] = {
      {"analyze", "Closed-form waiting time of the configured intersection", hol::ExperimentKind::analyze},
      {"simulate", "Simulate the configured intersection across seeds", hol::ExperimentKind::simulate},
      {"route", "Shortest-delay route through the configured network", hol::ExperimentKind::route},
      {"sweep", "Run the configured parameter sweep", hol::ExperimentKind::sweep},
  };
  hol::ExperimentKind chosen = hol::ExperimentKind::analyze;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "Experiment or network document (YAML or JSON)")->required();
    sub->add_option("--output", opt.output, "Write results here instead of stdout");
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", opt.seeds, "Seed list, e.g. 1,2,3 or 1..10");
    sub->add_option("--horizon", opt.horizon, "Simulation horizon in slots");
    sub->add_option("--mode", opt.mode, "Routing mode")->check(CLI::IsMember({"aware", "baseline", "both"}));
    sub->callback([&chosen, kind = c.kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    return run(chosen, opt);
  } catch (const hol::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == hol::ErrorKind::io_failure ? kIoError : kConfigError;
  }
}

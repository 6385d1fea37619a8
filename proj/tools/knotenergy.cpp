// knotenergy: conformal knot energy experiments on sampled space curves.
//
// Subcommands: energy, invariance, minimize, crossings, convergence, bounds.
// JSON for single reports, CSV for tables; stdout by default, --out to file.
// Exit codes: 0 ok, 2 bad input, 3 geometry guard tripped, 4 descent barrier.

#include "knot/curve.hpp"
#include "knot/descent.hpp"
#include "knot/energy.hpp"
#include "knot/moebius.hpp"
#include "knot/serialize.hpp"
#include "knot/topology.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using knot::Index;
using knot::json;
using Curve = knot::ParamCurve<double>;
using Sampled = knot::SampledCurve<double>;

struct CurveInput {
  std::string builtin;
  std::string file;
  int n = 0;  // 0: keep native sampling (512 for analytic curves)
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json doc;
  in >> doc;
  return doc;
}

Sampled resolve_curve(const CurveInput& input) {
  if (input.builtin.empty() == input.file.empty())
    throw std::invalid_argument("give exactly one of --builtin or --curve");
  int n = input.n;
  if (!input.builtin.empty()) {
    Curve curve;
    if (input.builtin == "circle")
      curve = knot::make_circle<double>();
    else if (input.builtin == "ellipse")
      curve = knot::make_ellipse<double>(2.0, 1.0);
    else if (input.builtin == "trefoil")
      curve = knot::make_torus_knot<double>(2, 3, 2.0, 1.0);
    else if (input.builtin == "figure-eight" || input.builtin == "figure8")
      curve = knot::make_figure_eight<double>();
    else
      throw std::invalid_argument("unknown builtin curve: " + input.builtin +
                                  " (have circle, ellipse, trefoil, figure-eight)");
    return knot::sample(curve, n > 0 ? n : 512);
  }
  auto loaded = knot::curve_from_json<double>(read_json_file(input.file));
  if (std::holds_alternative<Curve>(loaded))
    return knot::sample(std::get<Curve>(loaded), n > 0 ? n : 512);
  Sampled samples = std::get<Sampled>(loaded);
  if (n > 0 && n != samples.size()) samples = knot::resample_arclength(samples, n);
  return samples;
}

void add_curve_options(CLI::App* cmd, CurveInput& input) {
  cmd->add_option("--builtin", input.builtin,
                  "builtin curve: circle, ellipse, trefoil, figure-eight");
  cmd->add_option("--curve", input.file, "curve JSON file (fourier or samples kind)");
  cmd->add_option("--n", input.n, "sample count (default 512, native for sample files)");
}

void write_output(const std::string& out_path, const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload;
    if (!payload.empty() && payload.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write file: " + out_path);
  out << payload;
}

json dump_report(json report, const knot::RunManifest& manifest) {
  report["manifest"] = knot::to_json(manifest);
  return report;
}

// CSV outputs carry the manifest as a trailing comment; with --out a sibling
// .manifest.json is written as well.
void write_csv_output(const std::string& out_path, std::string csv,
                      const knot::RunManifest& manifest) {
  csv += "# manifest " + knot::to_json(manifest).dump() + "\n";
  write_output(out_path, csv);
  if (!out_path.empty()) {
    std::ofstream side(out_path + ".manifest.json");
    side << knot::to_json(manifest).dump(2) << '\n';
  }
}

// Config files mirror long flag names ("n", "epsilon", "max-iters", ...).
// Values land as pre-parse defaults, so explicit flags keep precedence.
void apply_config_file(CLI::App* cmd, int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
  }
  if (path.empty()) return;
  json cfg = read_json_file(path);
  if (!cfg.is_object()) throw std::invalid_argument("config file must be a JSON object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + it.key());
    } catch (const CLI::OptionNotFound&) {
      throw std::invalid_argument("config key does not match any flag: " + it.key());
    }
    std::string value;
    if (it.value().is_string()) {
      value = it.value().get<std::string>();
    } else if (it.value().is_array()) {
      std::ostringstream joined;
      for (std::size_t k = 0; k < it.value().size(); ++k)
        joined << (k ? "," : "") << it.value()[k].dump();
      value = joined.str();
    } else {
      value = it.value().dump();
    }
    opt->default_val(value);
  }
}

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("bad ") + what + " entry: " + item);
    }
  }
  if (values.empty()) throw std::invalid_argument(std::string("empty ") + what + " list");
  return values;
}

std::string describe_map(const knot::MoebiusMap<double>& map) {
  if (map.primitives.empty()) return "identity";
  std::ostringstream out;
  out.precision(6);
  bool first = true;
  for (const auto& prim : map.primitives) {
    if (!first) out << ' ';
    first = false;
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, knot::Inversion<double>>) {
            out << "inversion(center " << p.center.x() << ' ' << p.center.y() << ' '
                << p.center.z() << "; radius " << p.radius << ')';
          } else if constexpr (std::is_same_v<P, knot::Translation<double>>) {
            out << "translation(" << p.offset.x() << ' ' << p.offset.y() << ' '
                << p.offset.z() << ')';
          } else if constexpr (std::is_same_v<P, knot::Rotation<double>>) {
            out << "rotation";
          } else {
            out << "scale(" << p.factor << ')';
          }
        },
        prim);
  }
  return out.str();
}

int cmd_energy(const CurveInput& input, double epsilon, const std::string& diag_mode,
               int threads, const std::string& out_path, knot::RunManifest manifest,
               const Timer& timer) {
  Sampled samples = resolve_curve(input);
  knot::QuadratureConfig<double> config;
  config.epsilon = epsilon;
  config.threads = threads;
  config.diagonal_mode = diag_mode == "exclude_adjacent" ? knot::DiagonalMode::exclude_adjacent
                                                         : knot::DiagonalMode::limit;
  auto report = knot::energy(samples, config);
  manifest.duration_seconds = timer.seconds();
  write_output(out_path, dump_report(knot::to_json(report), manifest).dump(2));
  return 0;
}

int cmd_invariance(const CurveInput& input, int trials, unsigned long seed, int threads,
                   const std::string& out_path, knot::RunManifest manifest,
                   const Timer& timer) {
  Sampled samples = resolve_curve(input);
  knot::QuadratureConfig<double> config;
  config.threads = threads;
  double base_energy = knot::energy(samples, config).energy;

  std::mt19937_64 rng(seed);
  std::ostringstream csv;
  csv.precision(17);
  csv << "trial,map,energy_before,energy_after,rel_error\n";
  double worst = 0;

  auto run_trial = [&](int trial, const knot::MoebiusMap<double>& map) {
    Sampled image = knot::apply_to_curve(map, samples);
    double mapped = knot::energy(image, config).energy;
    double rel = std::abs(mapped - base_energy) / std::abs(base_energy);
    worst = std::max(worst, rel);
    csv << trial << ',' << describe_map(map) << ',' << base_energy << ',' << mapped
        << ',' << rel << '\n';
  };

  run_trial(0, knot::MoebiusMap<double>::identity());
  for (int t = 1; t <= trials; ++t) {
    for (int attempt = 0;; ++attempt) {
      auto map = knot::random_bounded_inversion(samples, rng);
      try {
        run_trial(t, map);
        break;
      } catch (const knot::geometry_error& err) {
        std::cerr << "trial " << t << ": pole proximity, redrawing (" << err.what()
                  << ")\n";
        if (attempt > 100) throw;
      }
    }
  }
  csv << "summary,max_rel_error,,," << worst << '\n';
  manifest.duration_seconds = timer.seconds();
  write_csv_output(out_path, csv.str(), manifest);
  return 0;
}

int cmd_minimize(const CurveInput& input, knot::DescentConfig<double> config,
                 const std::string& out_path, knot::RunManifest manifest,
                 const Timer& timer) {
  if (input.n > 0) config.n = input.n;
  CurveInput start_input = input;
  start_input.n = std::max(512, 2 * static_cast<int>(config.n));  // dense start
  Sampled start = resolve_curve(start_input);
  auto trace = knot::minimize(start, config);

  std::string csv = knot::trace_csv(trace.records);
  std::ostringstream tail;
  tail.precision(17);
  tail << "# termination " << trace.termination << '\n';
  tail << "# final_energy " << trace.final_energy << '\n';
  tail << "# measured_energy " << trace.measured_energy << " at n " << trace.measured_n
       << '\n';
  json final_curve =
      knot::to_json<double>(trace.final_curve.points, trace.final_curve.closed);
  manifest.duration_seconds = timer.seconds();
  if (out_path.empty()) {
    csv += tail.str();
    csv += "# final_curve " + final_curve.dump() + "\n";
    write_csv_output(out_path, csv, manifest);
  } else {
    csv += tail.str();
    write_csv_output(out_path, csv, manifest);
    std::ofstream side(out_path + ".final.json");
    side << dump_report({{"curve", final_curve}}, manifest).dump(2) << '\n';
  }
  if (trace.termination == "barrier") {
    std::cerr << "descent aborted on the self-avoidance barrier\n";
    return 4;
  }
  return 0;
}

int cmd_crossings(const CurveInput& input, int directions, unsigned long seed,
                  const std::string& mode, int threads, const std::string& out_path,
                  knot::RunManifest manifest, const Timer& timer) {
  Sampled samples = resolve_curve(input);
  auto dir_mode = mode == "random" ? knot::DirectionMode::random
                                   : knot::DirectionMode::low_discrepancy;
  auto crossings = knot::crossing_stats(samples, directions, seed, dir_mode);
  knot::QuadratureConfig<double> config;
  config.threads = threads;
  double energy = knot::energy(samples, config).energy;
  auto bound = knot::check_energy_crossing_bound(energy, crossings);
  if (!bound.bound_satisfied)
    std::cerr << "warning: 2*pi*min_count + 4 exceeds the measured energy; "
                 "energy underestimate or crossing overcount\n";
  json report{{"crossings", knot::to_json(crossings)}, {"bound", knot::to_json(bound)}};
  manifest.duration_seconds = timer.seconds();
  write_output(out_path, dump_report(report, manifest).dump(2));
  return 0;
}

int cmd_convergence(const CurveInput& input, const std::string& n_list,
                    const std::string& epsilon_list, int threads,
                    const std::string& out_path, knot::RunManifest manifest,
                    const Timer& timer) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "kind,param,n,energy,chord_term,regularization_term,closed_form,error_estimate\n";

  if (!n_list.empty()) {
    for (double n_value : parse_number_list(n_list, "--n-list")) {
      int n = static_cast<int>(n_value);
      CurveInput item = input;
      item.n = n;
      auto report = knot::energy(resolve_curve(item), {0, 0.0, knot::DiagonalMode::limit,
                                                       threads});
      csv << "n," << n << ',' << n << ',' << report.energy << ',' << report.chord_term
          << ',' << report.regularization_term << ",," << report.error_estimate << '\n';
    }
  }
  if (!epsilon_list.empty()) {
    CurveInput item = input;
    if (item.n <= 0) item.n = 512;
    Sampled samples = resolve_curve(item);
    for (double eps : parse_number_list(epsilon_list, "--epsilon-list")) {
      auto report = knot::truncated_energy(samples, eps, threads);
      // closed form for the subtracted arc term at this epsilon: 2l/eps - 4
      double closed_form = -knot::regularization_closed_form(samples.total_length, eps);
      csv << "epsilon," << eps << ',' << samples.size() << ',' << report.energy << ','
          << report.chord_term << ',' << report.regularization_term << ',' << closed_form
          << ',' << report.error_estimate << '\n';
    }
  }
  manifest.duration_seconds = timer.seconds();
  write_csv_output(out_path, csv.str(), manifest);
  return 0;
}

int cmd_bounds(double m_value, bool m_given, int knots, bool knots_given,
               const std::string& out_path, knot::RunManifest manifest,
               const Timer& timer) {
  if (!m_given && !knots_given)
    throw std::invalid_argument("give --m (energy level) and/or --knots (crossing count)");
  json report;
  if (knots_given) {
    auto [lower, upper] = knot::knot_count_bounds<double>(knots);
    report["knot_count_bounds"] = {{"n", knots}, {"lower", lower}, {"upper", upper}};
  }
  if (m_given) {
    auto bound = knot::energy_knot_count_bound(m_value);
    report["energy_knot_count_bound"] = {
        {"M", m_value},
        {"value", bound.value},
        {"below_minimum", bound.below_minimum},
        {"prefactor", 2 * std::pow(24.0, -4 / (2 * knot::pi<double>()))},
        {"base", std::pow(24.0, 1 / (2 * knot::pi<double>()))}};
  }
  manifest.duration_seconds = timer.seconds();
  write_output(out_path, dump_report(report, manifest).dump(2));
  return 0;
}

int run(int argc, char** argv) {
  Timer timer;
  CLI::App app{"conformal knot energy toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);

  CurveInput input;
  std::string out_path, config_path;
  int threads = 0;
  unsigned long seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "output file (default stdout)");
    cmd->add_option("--config", config_path, "JSON config file mirroring the flags");
    cmd->add_option("--threads", threads,
                    "worker threads (0: KNOTENERGY_THREADS or hardware)");
  };

  // energy
  double epsilon = 0;
  std::string diag_mode = "limit";
  auto* energy_cmd = app.add_subcommand("energy", "pairwise energy of a closed curve");
  add_curve_options(energy_cmd, input);
  energy_cmd->add_option("--epsilon", epsilon, "arc-length truncation (0: full energy)");
  energy_cmd->add_option("--diagonal-mode", diag_mode, "limit or exclude_adjacent")
      ->check(CLI::IsMember({"limit", "exclude_adjacent"}));
  add_common(energy_cmd);

  // invariance
  int trials = 20;
  auto* invariance_cmd =
      app.add_subcommand("invariance", "energy drift under random sphere inversions");
  add_curve_options(invariance_cmd, input);
  invariance_cmd->add_option("--trials", trials, "number of random inversions");
  invariance_cmd->add_option("--seed", seed, "RNG seed");
  add_common(invariance_cmd);

  // minimize
  knot::DescentConfig<double> descent_config;
  auto* minimize_cmd = app.add_subcommand("minimize", "gradient descent on the energy");
  add_curve_options(minimize_cmd, input);
  minimize_cmd->add_option("--max-iters", descent_config.max_iters, "iteration cap");
  minimize_cmd->add_option("--step-init", descent_config.step_init,
                           "initial step (0: scaled automatically)");
  minimize_cmd->add_option("--grad-tol", descent_config.grad_tol,
                           "gradient stop, relative to E/l");
  minimize_cmd->add_option("--resample-every", descent_config.resample_every,
                           "arc-length resampling cadence");
  minimize_cmd->add_option("--min-separation", descent_config.min_separation,
                           "chord/arc barrier ratio");
  add_common(minimize_cmd);

  // crossings
  int directions = 200;
  std::string dir_mode = "lowdiscrepancy";
  auto* crossings_cmd =
      app.add_subcommand("crossings", "projection crossing counts and energy bounds");
  add_curve_options(crossings_cmd, input);
  crossings_cmd->add_option("--directions", directions, "projection directions (>= 50)");
  crossings_cmd->add_option("--seed", seed, "RNG seed for random mode");
  crossings_cmd->add_option("--mode", dir_mode, "lowdiscrepancy or random")
      ->check(CLI::IsMember({"lowdiscrepancy", "random"}));
  add_common(crossings_cmd);

  // convergence
  std::string n_list, epsilon_list;
  auto* convergence_cmd =
      app.add_subcommand("convergence", "energy tables over N and epsilon sweeps");
  add_curve_options(convergence_cmd, input);
  convergence_cmd->add_option("--n-list", n_list, "comma-separated sample counts");
  convergence_cmd->add_option("--epsilon-list", epsilon_list,
                              "comma-separated truncation epsilons");
  add_common(convergence_cmd);

  // bounds
  double m_value = 0;
  int knots = 0;
  auto* bounds_cmd =
      app.add_subcommand("bounds", "knot count bounds from energy or crossing number");
  auto* m_opt = bounds_cmd->add_option("--m", m_value, "energy level M");
  auto* knots_opt = bounds_cmd->add_option("--knots", knots, "crossing number n");
  add_common(bounds_cmd);

  // the config file mirrors flags of the invoked subcommand only
  std::string sub_name;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (!arg.empty() && arg[0] != '-') {
      sub_name = arg;
      break;
    }
  }
  for (auto* cmd : {energy_cmd, invariance_cmd, minimize_cmd, crossings_cmd,
                    convergence_cmd, bounds_cmd})
    if (cmd->get_name() == sub_name) apply_config_file(cmd, argc, argv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* active = app.get_subcommands().front();
  knot::RunManifest manifest;
  manifest.subcommand = active->get_name();
  manifest.seed = seed;
  if (!input.file.empty()) manifest.inputs.push_back(input.file);
  if (!config_path.empty()) manifest.inputs.push_back(config_path);
  if (!out_path.empty()) manifest.outputs.push_back(out_path);
  json resolved;
  for (const auto* opt : active->get_options()) {
    if (opt->get_name().rfind("--", 0) == 0 && (opt->count() || !opt->get_default_str().empty()))
      resolved[opt->get_name().substr(2)] =
          opt->count() ? opt->results().front() : opt->get_default_str();
  }
  manifest.config = resolved;

  if (active == energy_cmd)
    return cmd_energy(input, epsilon, diag_mode, threads, out_path, manifest, timer);
  if (active == invariance_cmd)
    return cmd_invariance(input, trials, seed, threads, out_path, manifest, timer);
  if (active == minimize_cmd) {
    descent_config.threads = threads;
    return cmd_minimize(input, descent_config, out_path, manifest, timer);
  }
  if (active == crossings_cmd)
    return cmd_crossings(input, directions, seed, dir_mode, threads, out_path, manifest,
                         timer);
  if (active == convergence_cmd)
    return cmd_convergence(input, n_list, epsilon_list, threads, out_path, manifest,
                           timer);
  return cmd_bounds(m_value, m_opt->count() > 0, knots, knots_opt->count() > 0, out_path,
                    manifest, timer);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const knot::geometry_error& err) {
    std::cerr << "geometry guard: " << err.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "input error: " << err.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "input error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
}

#include "dprsim/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dprsim/report.hpp"

namespace dprsim {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioArgs {
  std::string config;
  std::string golden;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& a) {
  cmd->add_option("--config", a.config, "Scenario JSON file, or the name of a golden scenario");
  cmd->add_option("--golden", a.golden, "Golden scenario name");
  cmd->add_option("--out", a.out, "Output directory (default $DPRSIM_OUT/<label>, DPRSIM_OUT defaults to dprsim-out)");
  cmd->add_option("--seed", a.seed, "Override the scenario seed");
}

struct Loaded {
  ScenarioConfig cfg;
  std::string label;
};

Loaded load(const ScenarioArgs& a) {
  if (!a.config.empty() && !a.golden.empty()) throw UsageError("give either --config or --golden, not both");
  Loaded l;
  if (!a.golden.empty()) {
    l.cfg = golden_config(a.golden);
    l.label = a.golden;
  } else if (a.config.empty()) {
    throw UsageError("a scenario is required (--config PATH or --golden NAME)");
  } else if (fs::exists(a.config)) {
    l.cfg = load_config_file(a.config);
    l.label = fs::path(a.config).stem().string();
  } else if (find_golden(a.config)) {
    l.cfg = golden_config(a.config);
    l.label = a.config;
  } else {
    throw UsageError("no such file or golden scenario: " + a.config);
  }
  if (a.seed) l.cfg.seed = *a.seed;
  return l;
}

fs::path output_dir(const std::string& requested, const std::string& label) {
  if (!requested.empty()) return requested;
  const char* root = std::getenv("DPRSIM_OUT");
  return fs::path(root && *root ? root : "dprsim-out") / label;
}

std::string show(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << *v;
  return os.str();
}

void print_summary(std::ostream& out, const MetricsSummary& m, const fs::path& dir) {
  out << "protocol: " << to_string(m.protocol) << "\n"
      << "sifted key: alice " << m.alice_key_length << " bits, bob " << m.bob_key_length << " bits\n"
      << "qber: " << m.qber << "\n";
  if (m.protocol == Protocol::cow) out << "visibility: " << show(m.visibility) << "\n";
  if (m.attack) {
    out << "attack: " << *m.attack << "\n"
        << "capture_fraction: " << show(m.capture_fraction) << "\n"
        << "induced_qber: " << show(m.induced_qber) << "\n";
    if (m.bob_record_matches_eve_readings)
      out << "bob record matches eve readings: " << (*m.bob_record_matches_eve_readings ? "yes" : "no") << "\n";
    if (m.feasibility) out << "blinding feasible: " << (m.feasibility->ok() ? "yes" : "no") << "\n";
  }
  out << "alarms: watchdog " << (m.alarms.watchdog ? "ON" : "off") << ", photocurrent monitor "
      << (m.alarms.photocurrent_monitor ? "ON" : "off") << "\n";
  if (!dir.empty()) out << "outputs: " << dir.string() << "\n";
}

int execute(const ScenarioArgs& a, bool require_attack, std::ostream& out) {
  const auto l = load(a);
  if (require_attack && l.cfg.attack.type == AttackType::none)
    throw UsageError("scenario '" + l.label + "' has no attack; use 'run' instead");
  const auto rec = run_scenario(l.cfg);
  const auto dir = output_dir(a.out, l.label);
  emit_outputs(rec, dir);
  print_summary(out, compute_metrics(rec), dir);
  return rec.alarms.any() ? kExitAlarm : kExitOk;
}

int do_sweep(const ScenarioArgs& a, const std::string& param, const std::vector<double>& values, unsigned jobs,
             std::ostream& out) {
  const auto l = load(a);
  const auto runs = sweep(l.cfg, param, values, jobs);
  const auto dir = output_dir(a.out, l.label + "-sweep");
  fs::create_directories(dir);
  std::string table = "index,value,seed,qber,capture_fraction,feasible,alarm\n";
  bool alarm = false;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto m = compute_metrics(runs[i]);
    emit_outputs(runs[i], dir / ("run-" + std::to_string(i)));
    std::ostringstream row;
    row << i << ',' << values[i] << ',' << runs[i].config.seed << ',' << m.qber << ','
        << show(m.capture_fraction) << ',' << (m.feasibility ? (m.feasibility->ok() ? "1" : "0") : "n/a") << ','
        << (m.alarms.any() ? 1 : 0) << '\n';
    table += row.str();
    alarm = alarm || m.alarms.any();
  }
  std::ofstream(dir / "sweep.csv") << table;
  out << table;
  return alarm ? kExitAlarm : kExitOk;
}

int do_report(const std::string& in, std::ostream& out, std::ostream& err) {
  const fs::path dir(in);
  if (!fs::exists(dir / "record.json")) throw UsageError("no record.json in " + dir.string());
  const auto rec = record_from_json(Json::parse(read_text_file(dir / "record.json")));
  auto metrics = compute_metrics(rec);
  if (fs::exists(dir / "events.csv"))
    metrics = metrics_from_events(rec, parse_events_csv(read_text_file(dir / "events.csv")));
  out << to_json(metrics).dump(2) << "\n";
  if (fs::exists(dir / "metrics.json")) {
    const auto stored = metrics_from_json(Json::parse(read_text_file(dir / "metrics.json")));
    if (!(stored == metrics)) {
      err << "warning: recomputed metrics differ from " << (dir / "metrics.json").string() << "\n";
      return kExitRuntime;
    }
  }
  return kExitOk;
}

int do_goldens(const std::string& run, const std::string& out_root, std::ostream& out) {
  if (run.empty()) {
    for (const auto& g : golden_scenarios())
      out << g.name << "  " << golden_digest(g.name) << "  " << g.description << "\n";
    return kExitOk;
  }
  std::vector<std::string> names;
  if (run == "all") {
    for (const auto& g : golden_scenarios()) names.push_back(g.name);
  } else {
    if (!find_golden(run)) throw UsageError("unknown golden scenario: " + run);
    names.push_back(run);
  }
  bool alarm = false;
  for (const auto& name : names) {
    const auto rec = run_scenario(golden_config(name));
    const auto dir = out_root.empty() ? output_dir("", name) : fs::path(out_root) / name;
    emit_outputs(rec, dir);
    out << "== " << name << "\n";
    print_summary(out, compute_metrics(rec), dir);
    alarm = alarm || rec.alarms.any();
  }
  return alarm ? kExitAlarm : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulator for attacks on DPS and COW quantum key distribution links", "dprsim"};
  app.require_subcommand(1);

  ScenarioArgs run_args;
  auto* run = app.add_subcommand("run", "Run a scenario and write its outputs");
  add_scenario_options(run, run_args);

  ScenarioArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Run a scenario that includes an attack");
  add_scenario_options(attack, attack_args);

  ScenarioArgs sweep_args;
  std::string param;
  std::vector<double> values;
  unsigned jobs = 1;
  auto* sw = app.add_subcommand("sweep", "Run a scenario once per value of one numeric parameter");
  add_scenario_options(sw, sweep_args);
  sw->add_option("--param", param, "JSON pointer of the parameter, e.g. /cow/t_B")->required();
  sw->add_option("--values", values, "Comma-separated values")->delimiter(',');
  sw->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  std::string in;
  auto* report = app.add_subcommand("report", "Recompute metrics from a stored run directory");
  report->add_option("--in", in, "Directory written by run/attack")->required();

  std::string golden_run;
  std::string golden_out;
  auto* goldens = app.add_subcommand("goldens", "List the golden scenarios with their config digests, or run them");
  goldens->add_option("--run", golden_run, "Golden name, or 'all'");
  goldens->add_option("--out", golden_out, "Output root for --run");

  std::vector<std::string> argv_store{"dprsim"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  if (!args.empty() && !args.front().empty() && args.front().front() != '-' &&
      !app.get_subcommand_no_throw(args.front())) {
    err << "error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
    return kExitUsage;
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*run) return execute(run_args, false, out);
    if (*attack) return execute(attack_args, true, out);
    if (*sw) return do_sweep(sweep_args, param, values, jobs, out);
    if (*report) return do_report(in, out, err);
    if (*goldens) return do_goldens(golden_run, golden_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace dprsim

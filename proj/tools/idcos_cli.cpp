// idcos: batch front-end for convergence tables, stability maps and
// reaction-diffusion runs.
//
//   idcos convergence [config.ini] [--scheme strang --nt 40,80 ...]
//   idcos stability   [config.ini] [...]
//   idcos simulate    [config.ini] [...]
//   idcos run config.ini            (kind taken from [run] kind)
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idcos/experiments.hpp"

namespace ex = idcos::experiments;

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;  // dotted key -> raw value
  std::vector<std::string> sets;              // --set key=value
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("config", o.config, "INI config file")->check(CLI::ExistingFile);
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--problem", "run.problem"},         {"--name", "run.name"},
      {"--out", "run.out"},                 {"--scheme", "method.scheme"},
      {"--corrections", "method.corrections"}, {"--M", "method.M"},
      {"--nt", "method.nt"},                {"--nt-mode", "method.nt_mode"},
      {"--residual-mode", "method.residual_mode"}, {"--grid", "space.grid"},
      {"--order-space", "space.order"},     {"--end", "time.end"},
      {"--dt", "time.dt"},                  {"--snapshots", "time.snapshots"},
  };
  for (const auto& [flag, key] : flags)
    sub->add_option_function<std::string>(
        flag, [&o, key = key](const std::string& v) { o.values[key] = v; }, "sets " + key);
  sub->add_option("--set", o.sets, "any option as section.key=value")->take_all();
}

ex::RunConfig build(const Overrides& o, std::optional<ex::Kind> kind) {
  ex::RunConfig c;
  if (!o.config.empty()) c = ex::load_config(o.config);
  if (kind) c.kind = *kind;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw idcos::UsageError("--set expects section.key=value, got '" + s + "'");
    ex::set_option(c, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : o.values) ex::set_option(c, k, v);
  return c;
}

void summarize(const ex::RunConfig& c) {
  std::cout << ex::to_string(c.kind) << " '" << c.label() << "' -> " << c.out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IDC operator-splitting experiments"};
  app.require_subcommand(1);
  Overrides conv, stab, sim, run;
  add_common(app.add_subcommand("convergence", "temporal convergence table"), conv);
  add_common(app.add_subcommand("stability", "amplification-factor maps"), stab);
  add_common(app.add_subcommand("simulate", "reaction-diffusion run with snapshots"), sim);
  auto* run_cmd = app.add_subcommand("run", "run the kind named in the config file");
  add_common(run_cmd, run);
  run_cmd->get_option("config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ex::RunConfig c;
    if (app.got_subcommand("convergence")) c = build(conv, ex::Kind::Convergence);
    else if (app.got_subcommand("stability")) c = build(stab, ex::Kind::Stability);
    else if (app.got_subcommand("simulate")) c = build(sim, ex::Kind::Simulate);
    else c = build(run, std::nullopt);

    summarize(c);
    switch (c.kind) {
      case ex::Kind::Convergence: {
        auto rep = ex::run_convergence(c);
        for (const auto& line : rep.log) std::cerr << line << "\n";
        std::cout << rep.csv();
        break;
      }
      case ex::Kind::Stability: {
        auto rep = ex::run_stability(c);
        for (const auto& p : rep.panels)
          std::cout << "c_s=" << p.spec.corrections << " M=" << p.spec.M << " real threshold "
                    << (p.real_threshold ? ex::fmt(*p.real_threshold) : "none") << "\n";
        break;
      }
      case ex::Kind::Simulate: {
        auto rep = ex::run_simulation(c);
        for (const auto& s : rep.snapshots) {
          std::cout << "t=" << ex::fmt(s.t);
          for (std::size_t k = 0; k < s.min.size(); ++k)
            std::cout << " [" << ex::fmt(s.min[k]) << ", " << ex::fmt(s.max[k]) << "]";
          std::cout << "\n";
        }
        break;
      }
    }
  } catch (const idcos::UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

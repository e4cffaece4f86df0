#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "config.hpp"
#include "jumpkit/errors.hpp"

namespace jumpkit::cli {

namespace {

void report(std::ostream& err, const Json& body) { err << Json{{"error", body}}.dump() << '\n'; }

}  // namespace

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Velocity jump processes: Hamiltonians, HJ solvers, kinetic limits, sampling",
               "jumpkit"};
  app.require_subcommand(1);
  GlobalOptions options;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string config_path;

  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override the sampling seed");
    sub->add_option("--threads", threads, "Worker threads, 0 for all cores")
        ->check(CLI::Range(0, 4096));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report(err, {{"type", "usage"}, {"message", e.what()}});
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  options.out = out_dir;
  options.seed = seed;
  options.threads = threads;
  try {
    const CommandResult result = run_command(command, load_config(config_path), options);
    for (const auto& file : result.files) out << file.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    Json body{{"type", "config"}, {"field", e.field()}, {"message", e.what()}};
    if (e.line()) body["line"] = *e.line();
    report(err, body);
    return kExitConfig;
  } catch (const Error& e) {
    const bool config_like =
        e.code() == ErrorCode::InvalidMeasure || e.code() == ErrorCode::InvalidArgument ||
        e.code() == ErrorCode::Io;
    report(err, {{"type", config_like ? "config" : "numerical"},
                 {"code", std::string(to_string(e.code()))},
                 {"message", e.what()}});
    return config_like ? kExitConfig : kExitNumerical;
  }
}

}  // namespace jumpkit::cli

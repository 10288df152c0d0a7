#include <json.hpp>

#include "cli/common.hpp"
#include "gazeforge/cli.hpp"
#include "gazeforge/error.hpp"

namespace gazeforge {

const char* tool_version() { return GAZEFORGE_VERSION; }

namespace {

void print_error(std::ostream& err, std::string_view code, const std::string& message,
                 const std::vector<std::string>& fields) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}, {"fields", fields}};
  err << j.dump() << '\n';
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-oriented saliency generation, multitask losses and evaluation", "gazeforge"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  cli::Registry reg;
  cli::register_gen(app, reg);
  cli::register_eval(app, reg);
  cli::register_train(app, reg);
  cli::register_blocks(app, reg);

  const auto previous = set_warning_sink([&err](std::string_view m) { err << "warning: " << m << '\n'; });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(std::move(sink)); }
  } restore{previous};

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, to_string(ErrorCode::usage), e.what(), {});
    return 2;
  }

  const cli::Context ctx{args, out, err};
  try {
    for (const auto& [sub, action] : reg.actions()) {
      if (sub->parsed()) {
        action(ctx);
        return 0;
      }
    }
    throw Error(ErrorCode::usage, "no subcommand selected");
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.what(), e.details());
    return e.code() == ErrorCode::usage || e.code() == ErrorCode::validation ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what(), {});
    return 1;
  }
}

}  // namespace gazeforge

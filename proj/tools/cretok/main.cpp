#include <iostream>

#include "common.hpp"
#include "cretok/error.hpp"
#include "cretok/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cretok: learn a universal creative token, render with it, and evaluate the results"};
  app.set_version_flag("--version", cretok::version());
  app.require_subcommand(1);
  std::function<int()> action;
  cretok::cli::add_train(app, action);
  cretok::cli::add_generate(app, action);
  cretok::cli::add_evaluate(app, action);
  cretok::cli::add_judge(app, action);
  cretok::cli::add_report(app, action);
  cretok::cli::add_study(app, action);
  cretok::cli::add_dataset(app, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return cretok::cli::kUsageError;
  }

  try {
    return action ? action() : cretok::cli::kUsageError;
  } catch (const cretok::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cretok::cli::kUsageError;
  } catch (const cretok::Error& e) {
    std::cerr << "error [" << cretok::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

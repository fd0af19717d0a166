#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "biopsim/config.hpp"
#include "biopsim/teleop/service.hpp"

using namespace biopsim;

int main(int argc, char** argv) {
  CLI::App app{"Serve a live simulation session over the v1 teleop protocol"};
  std::string scenario_path;
  std::string bind = "127.0.0.1:8765";
  double timescale = 1.0;
  bool paused = false;
  app.add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--bind", bind, "host:port to listen on");
  app.add_option("--timescale", timescale, "Simulated seconds per wall second (0 = unpaced)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--paused", paused, "Start with the simulation paused");
  CLI11_PARSE(app, argc, argv);

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    teleop::ServiceOptions options;
    std::tie(options.host, options.port) = teleop::parse_bind_address(bind);
    options.timescale = timescale;
    options.start_paused = paused;
    teleop::TeleopService service(load_scenario(scenario_path), options);
    service.start();
    std::cout << "serving on " << options.host << ":" << service.port() << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
    service.wait();
    return 0;
  } catch (const teleop::StartupError& e) {
    std::cerr << "serve: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "serve: " << e.what() << '\n';
    return 2;
  }
}

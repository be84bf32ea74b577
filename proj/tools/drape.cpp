#include <csignal>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "drape/demo.hpp"
#include "drape/error.hpp"
#include "drape/log.hpp"
#include "drape/project.hpp"
#include "drape/server.hpp"

using namespace drape;

namespace {

struct ParamFlags {
  std::optional<double> h, delta, k_stretch, k_shear, k_bend, offset;
  std::optional<int> adapt_every, steps_per_transition;

  void add_to(CLI::App* app) {
    app->add_option("--h", h, "time step (s)");
    app->add_option("--delta", delta, "stretch threshold");
    app->add_option("--adapt-every", adapt_every, "simulation steps per adaptation pass");
    app->add_option("--steps-per-transition", steps_per_transition,
                    "interpolated poses between consecutive poses");
    app->add_option("--k-stretch", k_stretch, "stretch stiffness");
    app->add_option("--k-shear", k_shear, "shear stiffness");
    app->add_option("--k-bend", k_bend, "bend stiffness");
    app->add_option("--offset", offset,
                    "comfort offset (m); replaces the distance of every offset command, or adds "
                    "one after the first region command");
  }

  void apply(Project& project) const {
    auto& p = project.params;
    if (h) p.h = *h;
    if (delta) p.delta = *delta;
    if (adapt_every) p.adapt_every = *adapt_every;
    if (steps_per_transition) p.steps_per_transition = *steps_per_transition;
    if (k_stretch) p.k_stretch = *k_stretch;
    if (k_shear) p.k_shear = *k_shear;
    if (k_bend) p.k_bend = *k_bend;
    if (!offset) return;
    bool found = false;
    for (auto& record : project.commands)
      if (record.at("tool") == "offset") {
        record["distance"] = *offset;
        found = true;
      }
    if (found) return;
    for (auto it = project.commands.begin(); it != project.commands.end(); ++it)
      if (it->at("tool") == "region") {
        project.commands.insert(it + 1, {{"tool", "offset"}, {"distance", *offset}});
        return;
      }
    throw Error(ErrorCode::invalid_argument, "--offset needs a project with a region command");
  }
};

int run_batch_command(const std::string& project_path, const std::string& out_dir,
                      const ParamFlags& flags) {
  Project project = project_load(project_path);
  flags.apply(project);
  const auto observer = [](const GarmentState&, const AdaptReport& r) {
    log::info("pass {} pose ({}, {}, {:.3f}) max stretch {:.4f} clipped {}", r.pass, r.pose.a,
              r.pose.b, r.pose.t, r.max_stretch_before, r.clipped);
    return true;
  };
  const auto result = run_batch(project, project_path, out_dir, observer);
  for (const auto& file : result.files) std::printf("%s\n", file.c_str());
  if (!result.converged) {
    std::fprintf(stderr, "adaptation budget exhausted before convergence\n");
    return 2;
  }
  return 0;
}

int run_serve_command(const std::string& project_path, const ServerOptions& options,
                      const ParamFlags& flags) {
  Project project = project_load(project_path);
  flags.apply(project);
  PoseSet poses = load_project_poses(project, project_path);

  // Signals are taken synchronously in this thread; the server threads
  // inherit the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Server server(std::move(project), std::move(poses), options);
  const auto port = server.start();
  std::printf("listening on %s:%u\n", options.address.c_str(), port);
  std::fflush(stdout);
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Garment design engine: batch adaptation, design service and demo project"};
  app.set_help_flag("--help", "print this help and exit");  // -h is the time step
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log every adaptation pass");

  ParamFlags flags;
  std::string project_path, out_dir = "out";
  auto* batch = app.add_subcommand("batch", "replay a project, adapt and export");
  batch->add_option("project", project_path, "project file")->required()->check(CLI::ExistingFile);
  batch->add_option("-o,--out", out_dir, "output directory");
  flags.add_to(batch);

  ServerOptions options;
  auto* serve = app.add_subcommand("serve", "serve a project over HTTP and WebSocket");
  serve->add_option("project", project_path, "project file")->required()->check(CLI::ExistingFile);
  serve->add_option("--address", options.address, "bind address");
  serve->add_option("--port", options.port, "port (0 picks a free one)");
  flags.add_to(serve);

  std::string demo_dir;
  double target_edge = 0.02;
  auto* demo = app.add_subcommand("demo", "write the sleeve-on-bent-arm demo project");
  demo->add_option("dir", demo_dir, "output directory")->required();
  demo->add_option("--target-edge", target_edge, "garment edge length (m)");

  CLI11_PARSE(app, argc, argv);
  log::set_level(verbose ? log::Level::info : log::Level::warn);

  try {
    if (*batch) return run_batch_command(project_path, out_dir, flags);
    if (*serve) return run_serve_command(project_path, options, flags);
    if (*demo) {
      std::printf("%s\n", write_demo(demo_dir, target_edge).c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <memory>
#include <string>

#include "drape/pose.hpp"
#include "drape/project.hpp"

namespace drape {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
};

// HTTP and WebSocket front end of one Engine.
//
//   GET  /poses                      names, counts, active pose, schedule
//   GET  /poses/interpolate?a=&b=&t= f32 vertex positions of the blended body
//   POST /poses/active               {"index": i}
//   POST /tool/<name>                a command record without its "tool" field
//   POST /sim/start|pause|reset
//   POST /adapt/run
//   GET  /sim/frame[?format=binary]  latest FrameSnapshot
//   GET  /project, POST /project     command log, parameters and schedule
//   WS   /events                     JSON records, each frame followed by a
//                                    binary GFRM payload
//
// A single worker thread owns the engine and runs requests in arrival order;
// the network runs on its own thread. Errors come back as
// {"error": {"code": ..., "message": ...}} with a 4xx status.
class Server {
 public:
  Server(Project project, PoseSet poses, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts serving; returns the bound port.
  unsigned short start();
  void stop();
  // Blocks until stop() is called.
  void wait();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace drape

#include "drape/server.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "drape/error.hpp"
#include "drape/log.hpp"

namespace drape {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

namespace {

struct Reply {
  http::status status = http::status::ok;
  std::string body;
  std::string content_type = "application/json";
};

Reply json_reply(const json& doc, http::status status = http::status::ok) {
  return {status, doc.dump(), "application/json"};
}

Reply error_reply(http::status status, const std::string& code, const std::string& message) {
  return json_reply({{"error", {{"code", code}, {"message", message}}}}, status);
}

http::status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::schema:
      return http::status::bad_request;
    case ErrorCode::io:
    case ErrorCode::solver_failure:
      return http::status::internal_server_error;
    default:
      return http::status::unprocessable_entity;
  }
}

// Runs `fn`, turning exceptions into structured error replies.
Reply guarded(const std::function<Reply()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return error_reply(http::status::bad_request, "schema", e.what());
  } catch (const std::exception& e) {
    return error_reply(http::status::internal_server_error, "internal", e.what());
  }
}

std::map<std::string, std::string> parse_query(std::string_view query) {
  std::map<std::string, std::string> out;
  while (!query.empty()) {
    const auto amp = query.find('&');
    const auto pair = query.substr(0, amp);
    const auto eq = pair.find('=');
    if (eq == std::string_view::npos)
      out[std::string(pair)] = "";
    else
      out[std::string(pair.substr(0, eq))] = std::string(pair.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return out;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::schema, "request body is not valid JSON");
  if (!doc.is_object()) throw Error(ErrorCode::schema, "request body must be a JSON object");
  return doc;
}

struct Message {
  std::string data;
  bool binary = false;
};
using MessageGroup = std::vector<std::shared_ptr<const Message>>;

}  // namespace

class WsSession;

struct Server::Impl {
  Impl(Project project, PoseSet poses, ServerOptions options);

  // Network thread.
  void route(http::request<http::string_body> req, std::function<void(Reply)> done);
  void add_subscriber(const std::shared_ptr<WsSession>& session);
  void send_latest(const std::shared_ptr<WsSession>& session, int since);
  Reply interpolate(const std::map<std::string, std::string>& query);

  // Worker thread.
  void post(std::function<void()> task);
  void worker_loop();
  void sim_pass();
  void publish(const GarmentState& garment, const ScheduleEntry& pose,
               const std::optional<AdaptReport>& report);
  void broadcast(MessageGroup group);
  Reply run_tool(const std::string& name, const json& body);
  Reply run_adapt();
  Reply sim_reset();
  Reply load_project(const json& body);
  Reply current_project() const;
  void reset_sim_state();

  ServerOptions options;
  std::string manifest;
  ExportSettings exports;
  PoseSet poses;  // immutable copy for GET /poses and interpolation

  std::unique_ptr<Engine> engine;
  std::unique_ptr<PoseAnimator> animator;
  std::optional<Body> sim_body;
  int sim_entry = 0;
  int sim_body_entry = -1;
  int frame_counter = 0;

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<std::function<void()>> tasks;
  bool stopping = false;
  std::atomic<bool> sim_running{false};
  std::atomic<int> active_pose{0};
  std::thread worker;

  std::mutex frame_mutex;
  std::shared_ptr<const FrameSnapshot> latest;
  MessageGroup latest_messages;

  std::map<std::pair<int, int>, std::unique_ptr<PoseInterpolator>> interpolators;
  std::vector<std::weak_ptr<WsSession>> subscribers;

  net::io_context ioc{1};
  std::optional<tcp::acceptor> acceptor;
  std::thread io_thread;

  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopped = false;
  bool finished = false;
  bool started = false;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Server::Impl& impl) : ws_(std::move(socket)), impl_(impl) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->impl_.add_subscriber(self);
      self->deliver({std::make_shared<Message>(
          Message{json{{"type", "hello"}, {"poses", self->impl_.poses.size()}}.dump(), false})});
      self->impl_.send_latest(self, -1);
      self->do_read();
    });
  }

  // Network thread only. Groups are dropped whole when the client lags.
  void deliver(const MessageGroup& group) {
    if (queue_.size() >= 64) return;
    const bool idle = queue_.empty();
    for (const auto& m : group) queue_.push_back(m);
    if (idle && !queue_.empty()) do_write();
  }

 private:
  void do_write() {
    const auto& m = queue_.front();
    ws_.binary(m->binary);
    ws_.async_write(net::buffer(m->data),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return;
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->do_write();
                    });
  }

  // Clients may send {"since": pass} after reconnecting to receive the
  // latest frame if it is newer.
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      const json doc = json::parse(text, nullptr, false);
      if (doc.is_object() && doc.contains("since") && doc["since"].is_number_integer())
        self->impl_.send_latest(self, doc["since"].get<int>());
      self->do_read();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const Message>> queue_;
  Server::Impl& impl_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Server::Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

  void run() { do_read(); }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(64u << 20);
    stream_.expires_after(std::chrono::seconds(300));
    http::async_read(stream_, buffer_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    auto req = parser_->release();
    keep_alive_ = req.keep_alive();
    version_ = req.version();
    if (websocket::is_upgrade(req)) {
      const std::string target(req.target());
      if (target.substr(0, target.find('?')) == "/events") {
        std::make_shared<WsSession>(stream_.release_socket(), impl_)->run(std::move(req));
        return;
      }
    }
    stream_.expires_never();
    impl_.route(std::move(req), [self = shared_from_this()](Reply reply) {
      net::post(self->stream_.get_executor(),
                [self, reply = std::move(reply)]() mutable { self->send(std::move(reply)); });
    });
  }

  void send(Reply reply) {
    auto res = std::make_shared<http::response<http::string_body>>(reply.status, version_);
    res->set(http::field::server, "drape");
    res->set(http::field::content_type, reply.content_type);
    res->keep_alive(keep_alive_);
    res->body() = std::move(reply.body);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!res->keep_alive()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->do_read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  Server::Impl& impl_;
  bool keep_alive_ = false;
  unsigned version_ = 11;
};

Server::Impl::Impl(Project project, PoseSet pose_set, ServerOptions opts)
    : options(std::move(opts)),
      manifest(project.manifest),
      exports(project.exports),
      poses(pose_set) {
  engine = std::make_unique<Engine>(replay(project, pose_set));
  active_pose = engine->session().active_pose;
  reset_sim_state();
}

void Server::Impl::reset_sim_state() {
  animator = std::make_unique<PoseAnimator>(engine->session().poses);
  sim_body.reset();
  sim_body_entry = -1;
  sim_entry = 0;
}

void Server::Impl::post(std::function<void()> task) {
  {
    std::lock_guard lock(queue_mutex);
    tasks.push_back(std::move(task));
  }
  queue_cv.notify_one();
}

void Server::Impl::worker_loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(queue_mutex);
      queue_cv.wait(lock, [&] { return stopping || !tasks.empty() || sim_running; });
      if (stopping) return;
      if (!tasks.empty()) {
        task = std::move(tasks.front());
        tasks.pop_front();
      }
    }
    if (task) {
      task();
    } else {
      try {
        sim_pass();
      } catch (const std::exception& e) {
        sim_running = false;
        log::error("simulation paused: {}", e.what());
        broadcast({std::make_shared<Message>(
            Message{json{{"type", "error"}, {"message", e.what()}}.dump(), false})});
      }
    }
  }
}

// One pass of plain simulation: adapt_every steps on the current schedule
// entry, advancing one entry per pass and holding the last one.
void Server::Impl::sim_pass() {
  auto& session = engine->session();
  if (!session.garment) {
    sim_running = false;
    return;
  }
  const PoseSchedule schedule = make_schedule(session.poses, engine->schedule());
  const int last = static_cast<int>(schedule.entries.size()) - 1;
  sim_entry = std::min(sim_entry, last);
  const ScheduleEntry entry = schedule.entries[sim_entry];
  if (!sim_body || sim_body_entry != sim_entry) {
    sim_body = make_body(animator->evaluate(entry), engine->params().sdf_resolution);
    sim_body_entry = sim_entry;
  }
  for (int s = 0; s < engine->params().adapt_every; ++s)
    step(*session.garment, *sim_body, engine->params());
  if (sim_entry < last) ++sim_entry;
  publish(*session.garment, entry, std::nullopt);
}

void Server::Impl::publish(const GarmentState& garment, const ScheduleEntry& pose,
                           const std::optional<AdaptReport>& report) {
  auto frame = std::make_shared<FrameSnapshot>(make_snapshot(garment, ++frame_counter, pose));
  frame->report = report;
  const Eigen::VectorXd principal = principal_stretch(garment);
  json meta = {{"type", "frame"},
               {"pass", frame->pass},
               {"pose", {{"a", pose.a}, {"b", pose.b}, {"t", pose.t}}},
               {"vertices", garment.num_vertices()},
               {"faces", garment.num_faces()},
               {"max_stretch", principal.size() > 0 ? principal.maxCoeff() : 1.0}};
  if (report) meta["report"] = report_to_json(*report);
  MessageGroup group;
  if (report) {
    json record = report_to_json(*report);
    record["type"] = "report";
    group.push_back(std::make_shared<Message>(Message{record.dump(), false}));
  }
  group.push_back(std::make_shared<Message>(Message{meta.dump(), false}));
  group.push_back(std::make_shared<Message>(Message{snapshot_to_binary(*frame), true}));
  {
    std::lock_guard lock(frame_mutex);
    latest = frame;
    latest_messages = group;
  }
  broadcast(std::move(group));
}

void Server::Impl::broadcast(MessageGroup group) {
  net::post(ioc, [this, group = std::move(group)] {
    std::erase_if(subscribers, [](const auto& w) { return w.expired(); });
    for (const auto& w : subscribers)
      if (auto s = w.lock()) s->deliver(group);
  });
}

void Server::Impl::add_subscriber(const std::shared_ptr<WsSession>& session) {
  subscribers.push_back(session);
}

void Server::Impl::send_latest(const std::shared_ptr<WsSession>& session, int since) {
  MessageGroup group;
  {
    std::lock_guard lock(frame_mutex);
    if (!latest || latest->pass <= since) return;
    group = latest_messages;
  }
  session->deliver(group);
}

Reply Server::Impl::interpolate(const std::map<std::string, std::string>& query) {
  for (const char* key : {"a", "b", "t"})
    if (!query.count(key))
      throw Error(ErrorCode::schema, std::string("missing query parameter ") + key);
  const int a = std::stoi(query.at("a"));
  const int b = std::stoi(query.at("b"));
  const double t = std::stod(query.at("t"));
  if (a < 0 || b < 0 || a >= poses.size() || b >= poses.size())
    throw Error(ErrorCode::invalid_argument, "pose index out of range");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::invalid_argument, "t must lie in [0, 1]");
  auto& slot = interpolators[{a, b}];
  if (!slot) slot = std::make_unique<PoseInterpolator>(poses.poses[a], poses.poses[b]);
  const TriangleMesh mesh = slot->at(t);
  Reply reply;
  reply.content_type = "application/octet-stream";
  reply.body.reserve(static_cast<std::size_t>(mesh.num_vertices()) * 12);
  for (int i = 0; i < mesh.num_vertices(); ++i)
    for (int k = 0; k < 3; ++k) {
      const float value = static_cast<float>(mesh.V(i, k));
      char bytes[4];
      std::memcpy(bytes, &value, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 4);
      reply.body.append(bytes, 4);
    }
  return reply;
}

Reply Server::Impl::run_tool(const std::string& name, const json& body) {
  json record = body;
  if (record.contains("tool") && record["tool"] != name)
    throw Error(ErrorCode::schema, "tool field does not match the endpoint");
  record["tool"] = name;
  const auto result = engine->apply(record);
  json doc = {{"command", static_cast<int>(engine->log().size()) - 1}, {"result", result}};
  const auto& session = engine->session();
  if (session.garment) {
    publish(*session.garment, ScheduleEntry{session.active_pose, session.active_pose, 0.0},
            std::nullopt);
    std::lock_guard lock(frame_mutex);
    doc["frame"] = snapshot_to_json(*latest);
  }
  return json_reply(doc);
}

Reply Server::Impl::run_adapt() {
  const auto observer = [this](const GarmentState& garment, const AdaptReport& report) {
    publish(garment, report.pose, report);
    std::lock_guard lock(queue_mutex);
    return !stopping;
  };
  json result = engine->apply({{"tool", "adapt"}}, observer);
  // The garment now rests on the last schedule entry.
  const auto schedule = make_schedule(engine->session().poses, engine->schedule());
  sim_entry = static_cast<int>(schedule.entries.size()) - 1;
  sim_body.reset();
  result["command"] = static_cast<int>(engine->log().size()) - 1;
  return json_reply(result);
}

Reply Server::Impl::sim_reset() {
  auto& g = engine->session().require_garment();
  g.sim = g.rest;
  g.velocities.setZero(g.num_vertices(), 3);
  sim_entry = 0;
  sim_body.reset();
  sim_running = false;
  publish(g, ScheduleEntry{}, std::nullopt);
  return json_reply({{"running", false}, {"pass", frame_counter}});
}

Reply Server::Impl::load_project(const json& body) {
  Project project = project_from_json(body);
  if (!project.manifest.empty() && project.manifest != manifest)
    return error_reply(http::status::conflict, "manifest",
                       "the server has " + manifest + " loaded, not " + project.manifest);
  project.manifest = manifest;
  auto next = std::make_unique<Engine>(replay(project, poses));
  engine = std::move(next);
  exports = project.exports;
  active_pose = engine->session().active_pose;
  sim_running = false;
  reset_sim_state();
  if (engine->session().garment)
    publish(*engine->session().garment, ScheduleEntry{}, std::nullopt);
  return json_reply({{"commands", static_cast<int>(engine->log().size())}});
}

Reply Server::Impl::current_project() const {
  Project p;
  p.manifest = manifest;
  p.commands = engine->log();
  p.params = engine->params();
  p.schedule = engine->schedule();
  p.exports = exports;
  return json_reply(project_to_json(p));
}

void Server::Impl::route(http::request<http::string_body> req, std::function<void(Reply)> done) {
  const std::string target(req.target());
  const auto question = target.find('?');
  const std::string path = target.substr(0, question);
  const auto query =
      parse_query(question == std::string::npos ? std::string_view{}
                                                 : std::string_view(target).substr(question + 1));
  const auto method = req.method();
  const bool get = method == http::verb::get;
  const bool post_method = method == http::verb::post;

  // Worker-thread handlers; the body is parsed there too so malformed JSON
  // still yields a structured reply.
  auto on_worker = [this, done, body = req.body()](std::function<Reply(const json&)> fn) {
    post([done, body, fn = std::move(fn)] {
      done(guarded([&] { return fn(parse_body(body)); }));
    });
  };
  auto method_not_allowed = [&] {
    done(error_reply(http::status::method_not_allowed, "method",
                     std::string(req.method_string()) + " not allowed on " + path));
  };

  if (path == "/poses") {
    if (!get) return method_not_allowed();
    json names = poses.names;
    return done(json_reply({{"names", names},
                            {"count", poses.size()},
                            {"vertices", poses.poses.front().num_vertices()},
                            {"faces", poses.poses.front().num_faces()},
                            {"active", active_pose.load()},
                            {"steps_per_transition", poses.steps_per_transition}}));
  }
  if (path == "/poses/interpolate") {
    if (!get) return method_not_allowed();
    return done(guarded([&] { return interpolate(query); }));
  }
  if (path == "/poses/active") {
    if (!post_method) return method_not_allowed();
    return on_worker([this](const json& body) {
      if (!body.contains("index")) throw Error(ErrorCode::schema, "expected {\"index\": i}");
      engine->apply({{"tool", "pose"}, {"index", body.at("index")}});
      active_pose = engine->session().active_pose;
      return json_reply({{"active", active_pose.load()}});
    });
  }
  if (path.rfind("/tool/", 0) == 0) {
    if (!post_method) return method_not_allowed();
    const std::string name = path.substr(6);
    static const std::vector<std::string> tools = {"boundary", "region", "extend", "paint",
                                                   "offset",   "pin",    "unpin",  "seam"};
    if (std::find(tools.begin(), tools.end(), name) == tools.end())
      return done(error_reply(http::status::not_found, "not_found", "unknown tool " + name));
    return on_worker([this, name](const json& body) { return run_tool(name, body); });
  }
  if (path == "/sim/start" || path == "/sim/pause") {
    if (!post_method) return method_not_allowed();
    const bool run = path == "/sim/start";
    return on_worker([this, run](const json&) {
      if (run) engine->session().require_garment();
      sim_running = run;
      return json_reply({{"running", run}});
    });
  }
  if (path == "/sim/reset") {
    if (!post_method) return method_not_allowed();
    return on_worker([this](const json&) { return sim_reset(); });
  }
  if (path == "/adapt/run") {
    if (!post_method) return method_not_allowed();
    return on_worker([this](const json&) { return run_adapt(); });
  }
  if (path == "/sim/frame") {
    if (!get) return method_not_allowed();
    std::shared_ptr<const FrameSnapshot> frame;
    {
      std::lock_guard lock(frame_mutex);
      frame = latest;
    }
    if (!frame) return done(error_reply(http::status::not_found, "no_frame", "no frame yet"));
    const auto format = query.count("format") ? query.at("format") : "json";
    if (format == "binary")
      return done(Reply{http::status::ok, snapshot_to_binary(*frame), "application/octet-stream"});
    return done(json_reply(snapshot_to_json(*frame)));
  }
  if (path == "/project") {
    if (get) return on_worker([this](const json&) { return current_project(); });
    if (post_method) return on_worker([this](const json& body) { return load_project(body); });
    return method_not_allowed();
  }
  done(error_reply(http::status::not_found, "not_found", "no route for " + path));
}

Server::Server(Project project, PoseSet poses, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(project), std::move(poses), std::move(options))) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  auto& m = *impl_;
  if (m.started) throw Error(ErrorCode::invalid_argument, "server already started");
  const auto address = net::ip::make_address(m.options.address);
  m.acceptor.emplace(m.ioc);
  const tcp::endpoint endpoint(address, m.options.port);
  m.acceptor->open(endpoint.protocol());
  m.acceptor->set_option(net::socket_base::reuse_address(true));
  m.acceptor->bind(endpoint);
  m.acceptor->listen();
  const auto port = m.acceptor->local_endpoint().port();

  auto accept = std::make_shared<std::function<void()>>();
  *accept = [&m, weak = std::weak_ptr<std::function<void()>>(accept)] {
    m.acceptor->async_accept([&m, weak](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), m)->run();
      if (auto next = weak.lock()) (*next)();
    });
  };
  (*accept)();
  m.started = true;
  m.worker = std::thread([&m] { m.worker_loop(); });
  m.io_thread = std::thread([&m, accept] { m.ioc.run(); });
  log::info("serving on {}:{}", m.options.address, port);
  return port;
}

void Server::stop() {
  auto& m = *impl_;
  {
    std::lock_guard lock(m.stop_mutex);
    if (m.stopped) return;
    m.stopped = true;
  }
  {
    std::lock_guard lock(m.queue_mutex);
    m.stopping = true;
  }
  m.queue_cv.notify_all();
  if (m.worker.joinable()) m.worker.join();
  m.ioc.stop();
  if (m.io_thread.joinable()) m.io_thread.join();
  {
    std::lock_guard lock(m.stop_mutex);
    m.finished = true;
  }
  m.stop_cv.notify_all();
}

void Server::wait() {
  auto& m = *impl_;
  std::unique_lock lock(m.stop_mutex);
  m.stop_cv.wait(lock, [&] { return m.finished; });
}

}  // namespace drape

#include <chrono>
#include <cstring>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>

#include "drape/server.hpp"
#include "drape/shapes.hpp"

using namespace drape;
using nlohmann::json;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr int kAround = 16;

std::vector<int> ring(int j) { return {j * kAround, j * kAround + 5, j * kAround + 10}; }

struct Response {
  unsigned status = 0;
  std::string body;
  json doc() const { return json::parse(body); }
};

Response request(unsigned short port, http::verb verb, const std::string& target,
                 const std::string& body = {}) {
  net::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  req.set(http::field::content_type, "application/json");
  req.body() = body;
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response_parser<http::string_body> parser;
  parser.body_limit(256 * 1024 * 1024);
  http::read(stream, buffer, parser);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {parser.get().result_int(), parser.get().body()};
}

Response get(unsigned short port, const std::string& target) {
  return request(port, http::verb::get, target);
}
Response post(unsigned short port, const std::string& target, const json& body = json::object()) {
  return request(port, http::verb::post, target, body.dump());
}

struct Events {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};

  explicit Events(unsigned short port) {
    tcp::resolver resolver(ioc);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/events");
  }
  // Returns the message text and whether it was binary.
  std::pair<std::string, bool> read() {
    beast::flat_buffer buffer;
    ws.read(buffer);
    return {beast::buffers_to_string(buffer.data()), ws.got_binary()};
  }
};

Project server_project() {
  Project p;
  p.manifest = "poses.json";
  p.params.sdf_resolution = 32;
  p.params.settle_budget = 10;
  p.schedule = {0};
  return p;
}

}  // namespace

TEST_CASE("design service") {
  const auto arm = shapes::capped_tube(0.045, 0.6, kAround, 20);
  PoseSet poses = validate_pose_set({arm, arm}, {"straight", "copy"});
  Server server(server_project(), poses, ServerOptions{"127.0.0.1", 0});
  const unsigned short port = server.start();
  REQUIRE(port != 0);

  const auto listed = get(port, "/poses");
  CHECK(listed.status == 200);
  CHECK(listed.doc().at("names") == json{"straight", "copy"});
  CHECK(listed.doc().at("count") == 2);

  const auto no_frame = get(port, "/sim/frame");
  CHECK(no_frame.status == 404);
  CHECK(no_frame.doc().at("error").contains("code"));

  const auto body = get(port, "/poses/interpolate?a=0&b=1&t=0.5");
  CHECK(body.status == 200);
  CHECK(body.body.size() == static_cast<std::size_t>(arm.num_vertices()) * 12);
  float x0 = 0;
  std::memcpy(&x0, body.body.data(), 4);
  CHECK(x0 == doctest::Approx(arm.V(0, 0)).epsilon(1e-5));
  CHECK(get(port, "/poses/interpolate?a=0&b=5&t=0.5").status == 422);
  CHECK(get(port, "/poses/interpolate?a=0").status == 400);

  const auto b0 = post(port, "/tool/boundary", {{"vertices", ring(5)}});
  REQUIRE(b0.status == 200);
  CHECK(b0.doc().at("result").at("boundary") == 0);
  const auto b1 = post(port, "/tool/boundary", {{"vertices", ring(15)}});
  CHECK(b1.doc().at("result").at("boundary") == 1);

  // Errors come back structured.
  CHECK(post(port, "/tool/lasso").status == 404);
  const auto bad = post(port, "/tool/boundary", {{"vertices", {1, 2}}});
  CHECK(bad.status == 422);
  CHECK(bad.doc().at("error").at("code") == "invalid_argument");
  CHECK(request(port, http::verb::post, "/tool/boundary", "{not json").status == 400);
  CHECK(request(port, http::verb::delete_, "/poses").status == 405);
  CHECK(get(port, "/nowhere").status == 404);

  const auto region = post(port, "/tool/region", {{"seed", 2 * 10 * kAround}, {"target_edge", 0.03}});
  REQUIRE(region.status == 200);
  CHECK(region.doc().contains("frame"));
  CHECK(post(port, "/tool/pin", {{"boundary_loop", 0}}).status == 200);
  CHECK(post(port, "/poses/active", {{"index", 1}}).doc().at("active") == 1);
  CHECK(get(port, "/poses").doc().at("active") == 1);
  CHECK(post(port, "/poses/active", {{"index", 0}}).status == 200);

  Events events(port);
  const auto hello = json::parse(events.read().first);
  CHECK(hello.at("type") == "hello");
  const auto first = json::parse(events.read().first);
  CHECK(first.at("type") == "frame");
  const auto [payload, binary] = events.read();
  CHECK(binary);
  CHECK(payload.substr(0, 4) == "GFRM");

  const auto adapt = post(port, "/adapt/run");
  REQUIRE(adapt.status == 200);
  CHECK(adapt.doc().contains("converged"));
  const auto frame = get(port, "/sim/frame");
  REQUIRE(frame.status == 200);
  const int last = frame.doc().at("pass");
  CHECK(last > first.at("pass").get<int>());

  SUBCASE("frames stream with increasing pass numbers") {
    int previous = first.at("pass");
    int reports = 0;
    while (previous < last) {
      auto [text, is_binary] = events.read();
      if (is_binary) continue;
      const auto msg = json::parse(text);
      if (msg.at("type") == "report") ++reports;
      if (msg.at("type") != "frame") continue;
      CHECK(msg.at("pass").get<int>() > previous);
      previous = msg.at("pass");
    }
    CHECK(reports > 0);
  }
  SUBCASE("simulation runs and pauses") {
    CHECK(post(port, "/sim/start").doc().at("running") == true);
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    CHECK(post(port, "/sim/pause").doc().at("running") == false);
    const int paused = get(port, "/sim/frame").doc().at("pass");
    CHECK(paused > last);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    CHECK(get(port, "/sim/frame").doc().at("pass") == paused);
    const auto reset = post(port, "/sim/reset");
    CHECK(reset.status == 200);
    const auto binary_frame = get(port, "/sim/frame?format=binary");
    CHECK(binary_frame.body.substr(0, 4) == "GFRM");
  }
  SUBCASE("headless replay matches the interactive session") {
    const auto shown = frame.doc();
    const Engine headless = replay(project_from_json(get(port, "/project").doc()), poses);
    const auto& rest = headless.session().garment->rest;
    REQUIRE(shown.at("rest").size() == static_cast<std::size_t>(rest.num_vertices()));
    double worst = 0.0;
    for (int v = 0; v < rest.num_vertices(); ++v)
      for (int k = 0; k < 3; ++k)
        worst = std::max(worst, std::abs(shown["rest"][v][k].get<double>() - rest.V(v, k)));
    CHECK(worst == 0.0);
    REQUIRE(shown.contains("report"));
    CHECK(shown["report"]["max_stretch_before"].get<double>() ==
          headless.reports().back().max_stretch_before);
  }
  SUBCASE("project round trip") {
    const auto doc = get(port, "/project").doc();
    CHECK(doc.at("commands").size() == 7);  // pose switches are logged too
    CHECK(post(port, "/project", doc).doc().at("commands") == 7);
    auto other = doc;
    other["manifest"] = "elsewhere.json";
    CHECK(post(port, "/project", other).status == 409);
    auto broken = doc;
    broken["version"] = 99;
    CHECK(post(port, "/project", broken).status == 400);
  }

  server.stop();
  server.stop();
}

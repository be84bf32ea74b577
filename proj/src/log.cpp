#include "drape/log.hpp"
#include "drape/error.hpp"

#include <iostream>
#include <mutex>

namespace drape {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_mesh: return "invalid_mesh";
    case ErrorCode::no_path: return "no_path";
    case ErrorCode::degenerate_triangle: return "degenerate_triangle";
    case ErrorCode::orientation: return "orientation";
    case ErrorCode::ambiguous_seed: return "ambiguous_seed";
    case ErrorCode::open_mesh: return "open_mesh";
    case ErrorCode::pose_mismatch: return "pose_mismatch";
    case ErrorCode::self_intersection: return "self_intersection";
    case ErrorCode::solver_failure: return "solver_failure";
    case ErrorCode::io: return "io";
    case ErrorCode::schema: return "schema";
  }
  return "unknown";
}

namespace log {
namespace {

std::mutex g_mutex;
Level g_level = Level::warn;

void default_sink(Level level, std::string_view message) {
  static constexpr const char* names[] = {"debug", "info", "warn", "error"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

Sink& sink() {
  static Sink s = default_sink;
  return s;
}

}  // namespace

Sink set_sink(Sink s) {
  std::lock_guard lock(g_mutex);
  Sink previous = std::move(sink());
  sink() = s ? std::move(s) : Sink(default_sink);
  return previous;
}

void set_level(Level level) {
  std::lock_guard lock(g_mutex);
  g_level = level;
}

void write(Level level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (level < g_level && sink().target<void (*)(Level, std::string_view)>())
    return;
  sink()(level, message);
}

ScopedCapture::ScopedCapture() {
  previous_ = set_sink([this](Level level, std::string_view message) {
    if (level >= Level::warn) ++warnings_;
    text_.append(message);
    text_.push_back('\n');
  });
}

ScopedCapture::~ScopedCapture() { set_sink(std::move(previous_)); }

}  // namespace log
}  // namespace drape

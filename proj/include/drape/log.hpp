#pragma once

#include <functional>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace drape::log {

enum class Level { debug, info, warn, error };

using Sink = std::function<void(Level, std::string_view)>;

// Replaces the process-wide sink and returns the previous one. The default
// sink writes warnings and errors to stderr.
Sink set_sink(Sink sink);
void set_level(Level level);
void write(Level level, std::string_view message);

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::info, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::warn, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::error, fmt::format(f, std::forward<Args>(args)...));
}

// Captures warnings for the lifetime of the object; used by tests and by the
// batch runner to collect diagnostics.
class ScopedCapture {
 public:
  ScopedCapture();
  ~ScopedCapture();
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

  const std::string& text() const { return text_; }
  int warnings() const { return warnings_; }
  bool contains(std::string_view needle) const {
    return text_.find(needle) != std::string::npos;
  }

 private:
  Sink previous_;
  std::string text_;
  int warnings_ = 0;
};

}  // namespace drape::log

#pragma once

// Line-delimited JSON records on stderr: {time, level, module, message}.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <string>

#include "json.hpp"

namespace ltsgat::log {

enum class Level : int { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline std::atomic<int>& threshold() {
  static std::atomic<int> level{static_cast<int>(Level::Info)};
  return level;
}

inline void set_level(Level l) { threshold() = static_cast<int>(l); }

inline const char* level_name(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "info";
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

inline void write(Level l, const std::string& module, const std::string& message,
                  const nlohmann::json& fields = nlohmann::json::object()) {
  if (static_cast<int>(l) < threshold()) return;
  nlohmann::json j = {{"time", timestamp()}, {"level", level_name(l)}, {"module", module}, {"message", message}};
  for (const auto& [key, value] : fields.items()) j[key] = value;
  static std::mutex mu;
  const std::string line = j.dump() + "\n";
  std::lock_guard lock(mu);
  std::fputs(line.c_str(), stderr);
}

inline void debug(const std::string& m, const std::string& msg, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::Debug, m, msg, f);
}
inline void info(const std::string& m, const std::string& msg, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::Info, m, msg, f);
}
inline void warn(const std::string& m, const std::string& msg, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::Warn, m, msg, f);
}
inline void error(const std::string& m, const std::string& msg, const nlohmann::json& f = nlohmann::json::object()) {
  write(Level::Error, m, msg, f);
}

}  // namespace ltsgat::log

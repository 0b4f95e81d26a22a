#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace miracle::logging {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kQuiet = 4 };

// Threshold comes from MIRACLE_LOG (debug|info|warn|error|quiet), default info.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("MIRACLE_LOG");
    if (env == nullptr) return Level::kInfo;
    const std::string v(env);
    if (v == "debug") return Level::kDebug;
    if (v == "warn") return Level::kWarn;
    if (v == "error") return Level::kError;
    if (v == "quiet") return Level::kQuiet;
    return Level::kInfo;
  }();
  return level;
}

inline void emit(Level level, const std::string& tag, const std::string& msg) {
  if (level < threshold()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void debug(const std::string& msg) { emit(Level::kDebug, "debug", msg); }
inline void info(const std::string& msg) { emit(Level::kInfo, "info", msg); }
inline void warn(const std::string& msg) { emit(Level::kWarn, "warn", msg); }
inline void error(const std::string& msg) { emit(Level::kError, "error", msg); }

}  // namespace miracle::logging

#include "sika/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>

namespace sika::log {

namespace {

std::shared_ptr<spdlog::logger>& instance() {
  static std::shared_ptr<spdlog::logger> logger;
  return logger;
}

std::mutex& init_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

void init(std::string_view fallback) {
  std::lock_guard lock(init_mutex());
  auto& logger = instance();
  if (!logger) {
    logger = spdlog::stderr_color_mt("sika");
    logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  }
  const char* env = std::getenv("SIKA_LOG");
  const std::string level = env != nullptr ? std::string(env) : std::string(fallback);
  logger->set_level(spdlog::level::from_str(level));
}

spdlog::logger& get() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (!instance()) init();
  });
  return *instance();
}

}  // namespace sika::log

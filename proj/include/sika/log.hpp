#pragma once

#include <spdlog/spdlog.h>

#include <string_view>

namespace sika::log {

/// stderr logger shared by the library and the CLI. Level comes from
/// SIKA_LOG (error, info, debug); `fallback` applies when it is unset.
spdlog::logger& get();
void init(std::string_view fallback = "warn");

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  get().debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  get().info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  get().warn(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void error(fmt::format_string<Args...> fmt, Args&&... args) {
  get().error(fmt, std::forward<Args>(args)...);
}

}  // namespace sika::log

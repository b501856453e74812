#include "log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace gridcascade::log {

void init_from_env() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("gridcascade");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("GRIDCASCADE_LOG");
    spdlog::set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
  });
}

}  // namespace gridcascade::log

#pragma once

#include <spdlog/spdlog.h>

namespace gridcascade::log {

// Reads GRIDCASCADE_LOG (trace, debug, info, warn, error, off) once; defaults to warn.
void init_from_env();

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::trace;
using spdlog::warn;

}  // namespace gridcascade::log

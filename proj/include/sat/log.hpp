#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace sat {

// Library-wide logger ("sat", stderr by default). Tests and the service swap
// in their own sinks.
std::shared_ptr<spdlog::logger> logger();
void set_logger(std::shared_ptr<spdlog::logger> lg);

}  // namespace sat

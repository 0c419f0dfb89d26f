#include "sat/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <mutex>

namespace sat {
namespace {

std::mutex& logger_mutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<spdlog::logger>& logger_slot() {
  static std::shared_ptr<spdlog::logger> lg = [] {
    auto l = std::make_shared<spdlog::logger>(
        "sat", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return lg;
}

}  // namespace

std::shared_ptr<spdlog::logger> logger() {
  std::lock_guard lock(logger_mutex());
  return logger_slot();
}

void set_logger(std::shared_ptr<spdlog::logger> lg) {
  std::lock_guard lock(logger_mutex());
  logger_slot() = std::move(lg);
}

}  // namespace sat

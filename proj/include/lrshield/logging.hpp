#pragma once

#include <sstream>
#include <string>

namespace lrshield {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Global log level.  Initialised once from the LRSHIELD_LOG environment
// variable ("error", "warn", "info", "debug"; default "warn").
LogLevel log_level();
void set_log_level(LogLevel level);

void log_message(LogLevel level, const std::string& msg);

namespace detail {
template <typename... Args>
std::string format_parts(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}
} // namespace detail

template <typename... Args>
void log_error(Args&&... args) {
    log_message(LogLevel::Error, detail::format_parts(std::forward<Args>(args)...));
}
template <typename... Args>
void log_warn(Args&&... args) {
    if (log_level() >= LogLevel::Warn)
        log_message(LogLevel::Warn, detail::format_parts(std::forward<Args>(args)...));
}
template <typename... Args>
void log_info(Args&&... args) {
    if (log_level() >= LogLevel::Info)
        log_message(LogLevel::Info, detail::format_parts(std::forward<Args>(args)...));
}
template <typename... Args>
void log_debug(Args&&... args) {
    if (log_level() >= LogLevel::Debug)
        log_message(LogLevel::Debug, detail::format_parts(std::forward<Args>(args)...));
}

} // namespace lrshield

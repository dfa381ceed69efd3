#include "lrshield/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace lrshield {

namespace {

LogLevel parse_level_env() {
    const char* env = std::getenv("LRSHIELD_LOG");
    if (!env) return LogLevel::Warn;
    std::string v(env);
    for (auto& ch : v) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (v == "error") return LogLevel::Error;
    if (v == "warn" || v == "warning") return LogLevel::Warn;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

LogLevel g_level = parse_level_env();
std::mutex g_mutex;

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "?";
}

} // namespace

LogLevel log_level() { return g_level; }

void set_log_level(LogLevel level) { g_level = level; }

void log_message(LogLevel level, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[lrshield:%s] %s\n", level_tag(level), msg.c_str());
}

} // namespace lrshield

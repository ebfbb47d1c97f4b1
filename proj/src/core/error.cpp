#include "core/error.hpp"

#include <iostream>
#include <mutex>

namespace bbgp {
namespace {

std::mutex sink_mutex;
LogSink& sink_slot() {
    static LogSink sink;
    return sink;
}

}  // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(sink_mutex);
    sink_slot() = std::move(sink);
}

void log(LogLevel level, std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (auto& sink = sink_slot()) {
        sink(level, message);
        return;
    }
    if (level == LogLevel::Warning) std::cerr << "bbgp warning: " << message << '\n';
}

}  // namespace bbgp

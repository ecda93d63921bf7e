#include "wavelab/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace wavelab {

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler() {
    static WarningHandler h = [](const std::string& message) {
        std::cerr << "wavelab warning: " << message << '\n';
    };
    return h;
}

}  // namespace

void set_warning_handler(WarningHandler h) {
    std::lock_guard lock(handler_mutex());
    handler() = std::move(h);
}

void warn(const std::string& message) {
    std::lock_guard lock(handler_mutex());
    if (handler()) handler()(message);
}

}  // namespace wavelab

#include "spdecouple/parallel.hpp"

#include <cstdlib>
#include <string>

#include "spdecouple/errors.hpp"

namespace spdecouple {

std::size_t resolve_threads(std::size_t requested) {
    if (const char* env = std::getenv("HARNESS_THREADS"); env != nullptr && *env != '\0') {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(env, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != std::string(env).size() || v == 0) {
            throw ConfigError("HARNESS_THREADS must be a positive integer");
        }
        return v;
    }
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace spdecouple

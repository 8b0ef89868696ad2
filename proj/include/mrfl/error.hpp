#pragma once

#include <stdexcept>
#include <string>

namespace mrfl {

/// Library error carrying a stable machine-readable code (e.g. "no_edges",
/// "state_space_too_large") next to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw Error("invalid_argument", message);
}

}  // namespace mrfl

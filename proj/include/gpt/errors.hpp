// errors.hpp
// Error taxonomy shared across the toolkit. The CLI maps these onto
// process exit codes (config -> 2, data -> 3, numerical -> 4).

#pragma once

#include <stdexcept>
#include <string>

namespace gpt {

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace gpt

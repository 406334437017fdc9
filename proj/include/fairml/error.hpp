#pragma once

#include <stdexcept>
#include <string>

namespace fairml {

// All reportable conditions (bad input, empty group, divergence, ...) are
// thrown as Error; the pipeline tags them with the stage they came from.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fairml

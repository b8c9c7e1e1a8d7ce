#pragma once

#include <stdexcept>
#include <string>

namespace berkson {

// Invalid user-facing configuration. The message names the offending field.
class config_error : public std::invalid_argument {
public:
    config_error(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Failure of a numerical routine (non-convergent quadrature, empty window, ...).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace berkson

#pragma once

#include <stdexcept>
#include <string>

namespace alloclab {

/// Raised when an operation receives arguments outside its documented domain.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a formula or check is requested in a regime where it does not apply
/// (e.g. an off-critical bound evaluated at the critical appetite).
class NotApplicable : public std::domain_error {
public:
    explicit NotApplicable(const std::string& what) : std::domain_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidInput(msg);
}

inline void require_applicable(bool ok, const std::string& msg) {
    if (!ok) throw NotApplicable(msg);
}

}  // namespace detail
}  // namespace alloclab

#pragma once

#include <stdexcept>
#include <string>

namespace rfi {

/// Raised when an argument violates an operation's precondition.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is requested on a space that cannot support it
/// (e.g. reflections outside a vector space).
class UnsupportedError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

} // namespace detail
} // namespace rfi

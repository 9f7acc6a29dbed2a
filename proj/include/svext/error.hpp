#pragma once

#include <stdexcept>
#include <string>

namespace svext {

/// Raised on contract violations: invalid configs, diverging moments,
/// empty exceedance sets. The message is the user-facing diagnosis.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

}  // namespace svext

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace pomarl {

// Contract violations (bad shapes, invalid arguments) throw; they are
// programming errors at call sites, not recoverable runtime conditions.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Configuration / input errors carry a message naming the offending key.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
[[noreturn]] inline void contract_fail(const char* expr, const char* file, int line,
                                       const std::string& msg) {
  std::ostringstream os;
  os << file << ":" << line << ": contract violated: " << expr;
  if (!msg.empty()) os << " (" << msg << ")";
  throw ContractError(os.str());
}
}  // namespace detail

}  // namespace pomarl

#define POMARL_CHECK(expr)                                                    \
  do {                                                                        \
    if (!(expr)) ::pomarl::detail::contract_fail(#expr, __FILE__, __LINE__, {}); \
  } while (0)

#define POMARL_CHECK_MSG(expr, msg)                                           \
  do {                                                                        \
    if (!(expr)) ::pomarl::detail::contract_fail(#expr, __FILE__, __LINE__, (msg)); \
  } while (0)

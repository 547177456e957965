#pragma once

#include <atomic>
#include <cstdint>

namespace macf::net {

// Counts outbound HTTP attempts to embedding/chat providers. The no-network
// acceptance criterion asserts this stays at zero under the deterministic
// provider and scripted policy.
inline std::atomic<std::uint64_t>& provider_request_count() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

}  // namespace macf::net

#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "artarena/config.hpp"
#include "artarena/error.hpp"

namespace artarena {

/// Engine-side view of a generation/proximity worker. Image handles are
/// opaque strings chosen by the worker. Implementations throw BackendError for
/// retryable failures and ContractViolation for malformed answers.
/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  /// k images for the prompt. Sample i is derived from (seed, i) by the worker.
  virtual std::vector<std::string> generate(const std::string& prompt, int k, std::uint64_t seed) = 0;

  virtual double proximity(const std::string& image, const std::string& reference_id, const std::string& metric) = 0;
};

/// Runs fn, retrying BackendError up to policy.retries times with exponential
/// backoff. Other errors propagate on the first throw.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, const std::string& what, Fn&& fn) -> decltype(fn()) {
  double backoff = policy.backoff_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (attempt >= policy.retries) throw;
      spdlog::warn("{}: attempt {} failed ({}), retrying", what, attempt + 1, e.what());
      if (backoff > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff));
      backoff *= 2;
    }
  }
}

}  // namespace artarena

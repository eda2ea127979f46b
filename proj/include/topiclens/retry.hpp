#ifndef TOPICLENS_RETRY_HPP
#define TOPICLENS_RETRY_HPP

#include "common.hpp"

#include <chrono>
#include <functional>
#include <string>
#include <thread>

namespace topiclens {

/**
 * Bounded retry with exponential backoff. Only TransientError is retried; everything
 * else (including AuthError) propagates on the first failure.
 */
struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_delay{250};
    double multiplier = 2.0;

    /** Overridable for tests, which do not want to sleep. */
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

struct RetryStats {
    int attempts = 0;
    int retries = 0;
};

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn, const std::string& what, RetryStats* stats = nullptr) {
    auto delay = policy.initial_delay;
    int attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1;; ++attempt) {
        if (stats) {
            stats->attempts = attempt;
            stats->retries = attempt - 1;
        }
        try {
            return fn();
        } catch (const TransientError& e) {
            if (attempt >= attempts) {
                throw TransientError(what + ": giving up after " + std::to_string(attempt) + " attempt(s): " + e.what());
            }
            warn(what + ": attempt " + std::to_string(attempt) + " failed (" + e.what() + "), retrying");
            if (policy.sleep) {
                policy.sleep(delay);
            }
            delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * policy.multiplier));
        }
    }
}

} // namespace topiclens

#endif

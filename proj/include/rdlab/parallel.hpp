// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "rdlab/error.hpp"

namespace rdlab {

/// Error raised inside the work for one replicate.
class ReplicateError : public Error {
  public:
    ReplicateError(std::size_t replicate, const std::string& what)
        : Error("replicate " + std::to_string(replicate) + ": " + what), replicate_(replicate) {}
    std::size_t replicate() const noexcept { return replicate_; }

  private:
    std::size_t replicate_;
};

inline unsigned default_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

/// Evaluates fn(i) for i in [0, n) on `workers` threads and returns the
/// results in index order. Work items share nothing, so the output does not
/// depend on the worker count. If any item throws, the failure with the
/// lowest index is rethrown as a ReplicateError.
template <class F>
auto map_replicates(std::size_t n, unsigned workers, F&& fn) {
    using T = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto drain = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (w <= 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(w);
        for (unsigned t = 0; t < w; ++t) pool.emplace_back(drain);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const ReplicateError&) {
            throw;
        } catch (const std::exception& e) {
            throw ReplicateError(i, e.what());
        }
    }
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace rdlab

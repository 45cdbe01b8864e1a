// Copyright 2026 The symemit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace symemit {

constexpr const char *workers_env = "SYMEMIT_WORKERS";

/// Worker count from SYMEMIT_WORKERS, else the hardware concurrency.
inline int worker_count(int requested = 0) {
    if (requested > 0) {
        return requested;
    }
    if (const char *env = std::getenv(workers_env)) {
        int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items write to
/// their own slots, so results never depend on scheduling. The first
/// exception thrown by any item is rethrown here.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn &&fn) {
    if (n == 0) {
        return;
    }
    auto threads = static_cast<std::size_t>(workers < 1 ? 1 : workers);
    if (threads > n) {
        threads = n;
    }
    if (threads == 1) {
        for (std::size_t i = 0; i < n; i++) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; w++) {
        pool.emplace_back(body);
    }
    for (auto &t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace symemit

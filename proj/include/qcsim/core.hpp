// Copyright 2026 The qcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QCSIM_CORE_HPP
#define QCSIM_CORE_HPP

#include <complex>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qcsim {

using cx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Hard cap on the total Hilbert-space dimension of any composite space.
inline constexpr int kDimCap = 4096;

// ---------------------------------------------------------------------------
// Error taxonomy. Everything thrown by the library derives from Error so
// callers can catch one type at the harness boundary.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidDimension : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct TruncationError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ConvergenceError : Error {
  using Error::Error;
};
struct StepFailure : Error {
  using Error::Error;
};
struct StabilityError : Error {
  using Error::Error;
};
struct QuadratureError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Worker pool. QCSIM_THREADS caps the number of workers; unset falls back to
// the hardware count. Tasks receive disjoint index ranges, so results do not
// depend on the worker count.
// ---------------------------------------------------------------------------

class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool(configured_threads());
    return pool;
  }

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(begin, end) over a partition of [0, n). The calling thread takes
  // the first chunk; serial when the pool is size 1 or we are already inside
  // a pooled task (no nested parallelism).
  void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const int nw = size();
    if (nw == 1 || in_worker_ || n < 2) {
      fn(0, n);
      return;
    }
    const int chunks = static_cast<int>(std::min<std::int64_t>(nw, n));
    const std::int64_t base = n / chunks, rem = n % chunks;
    {
      std::unique_lock<std::mutex> lk(mu_);
      pending_ = chunks - 1;
      task_ = &fn;
      std::int64_t lo = base + (rem > 0 ? 1 : 0);
      for (int c = 1; c < chunks; ++c) {
        const std::int64_t len = base + (c < rem ? 1 : 0);
        jobs_.push_back({lo, lo + len});
        lo += len;
      }
      cv_.notify_all();
    }
    fn(0, base + (rem > 0 ? 1 : 0));
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    task_ = nullptr;
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
      cv_.notify_all();
    }
    for (auto& t : workers_) t.join();
  }

 private:
  static int configured_threads() {
    if (const char* env = std::getenv("QCSIM_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }

  explicit ThreadPool(int nthreads) {
    for (int i = 0; i + 1 < nthreads; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  void worker_loop() {
    in_worker_ = true;
    for (;;) {
      std::pair<std::int64_t, std::int64_t> job;
      const std::function<void(std::int64_t, std::int64_t)>* task = nullptr;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stop_ || !jobs_.empty(); });
        if (stop_ && jobs_.empty()) return;
        job = jobs_.back();
        jobs_.pop_back();
        task = task_;
      }
      (*task)(job.first, job.second);
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  std::vector<std::pair<std::int64_t, std::int64_t>> jobs_;
  const std::function<void(std::int64_t, std::int64_t)>* task_ = nullptr;
  int pending_ = 0;
  bool stop_ = false;
  static thread_local bool in_worker_;
};

inline thread_local bool ThreadPool::in_worker_ = false;

inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  ThreadPool::instance().parallel_for(n, fn);
}

// Fixed-width float formatting used everywhere a number reaches a file, so
// that identical runs serialize to identical bytes.
inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace qcsim

#endif  // QCSIM_CORE_HPP

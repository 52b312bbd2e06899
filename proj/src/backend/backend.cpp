/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "octrans/backend/backend.hpp"

#include <stdexcept>

namespace octrans::backend {

struct Backend::Pool {
  explicit Pool(int workers) {
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back([this, w] { worker_loop(w); });
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(m);
      stop = true;
      ++generation;
    }
    cv_work.notify_all();
    for (auto& t : threads) t.join();
  }

  void worker_loop(int id) {
    std::uint64_t seen = 0;
    while (true) {
      {
        std::unique_lock<std::mutex> lock(m);
        cv_work.wait(lock, [&] { return stop || generation != seen; });
        if (stop) return;
        seen = generation;
      }
      while (true) {
        Index chunk = next.fetch_add(1, std::memory_order_relaxed);
        if (chunk >= n_chunks) break;
        bool r = false;
        try {
          r = (*job)(chunk, id);
        } catch (...) {
          r = false;
        }
        if (!r) ok.store(false, std::memory_order_relaxed);
      }
      if (active.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lock(m);
        cv_done.notify_all();
      }
    }
  }

  bool run(Index chunks, const std::function<bool(Index, int)>& fn) {
    std::unique_lock<std::mutex> lock(m);
    job = &fn;
    n_chunks = chunks;
    next.store(0, std::memory_order_relaxed);
    ok.store(true, std::memory_order_relaxed);
    active.store(static_cast<int>(threads.size()), std::memory_order_relaxed);
    ++generation;
    cv_work.notify_all();
    cv_done.wait(lock, [&] { return active.load(std::memory_order_acquire) == 0; });
    job = nullptr;
    return ok.load(std::memory_order_relaxed);
  }

  std::mutex m;
  std::condition_variable cv_work, cv_done;
  std::vector<std::thread> threads;
  const std::function<bool(Index, int)>* job = nullptr;
  Index n_chunks = 0;
  std::atomic<Index> next{0};
  std::atomic<int> active{0};
  std::atomic<bool> ok{true};
  std::uint64_t generation = 0;
  bool stop = false;
};

Backend::Backend(Kind kind, int workers) : kind_(kind) {
  if (kind == Kind::accelerator)
    throw std::runtime_error("accelerator backend is an extension point and is not implemented");
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  workers_ = kind == Kind::serial ? 1 : workers;
  if (kind == Kind::parallel) pool_ = std::make_unique<Pool>(workers_);
}

Backend::~Backend() = default;

bool Backend::par_for(Index count, const std::function<bool(Index, Index, int)>& fn) const {
  if (count <= 0) return true;
  const Index chunks = (count + kChunkSize - 1) / kChunkSize;
  auto chunk_fn = [&](Index chunk, int scratch) {
    Index lo = chunk * kChunkSize;
    Index hi = std::min(count, lo + kChunkSize);
    return fn(lo, hi, scratch);
  };
  if (kind_ == Kind::serial) {
    bool ok = true;
    for (Index c = 0; c < chunks; ++c) ok &= chunk_fn(c, 0);
    return ok;
  }
  return pool_->run(chunks, chunk_fn);
}

bool Backend::par_reduce(Index count, const std::function<bool(Index, Index, int, double&)>& fn,
                         double& out) const {
  out = 0.0;
  if (count <= 0) return true;
  const Index chunks = (count + kChunkSize - 1) / kChunkSize;
  std::vector<double> partials(static_cast<size_t>(chunks), 0.0);
  bool ok = par_for(count, [&](Index lo, Index hi, int scratch) {
    return fn(lo, hi, scratch, partials[static_cast<size_t>(lo / kChunkSize)]);
  });
  // fixed combine order: chunk 0, 1, 2, ... irrespective of scheduling
  double sum = 0.0;
  for (double p : partials) sum += p;
  out = sum;
  return ok;
}

Backend::Kind Backend::parse_kind(const std::string& name) {
  if (name == "serial") return Kind::serial;
  if (name == "parallel") return Kind::parallel;
  if (name == "accelerator") return Kind::accelerator;
  throw std::invalid_argument("unknown backend '" + name + "' (expected serial|parallel)");
}

}  // namespace octrans::backend

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

#ifndef OCTRANS_BACKEND_BACKEND_HPP_
#define OCTRANS_BACKEND_BACKEND_HPP_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "octrans/kernel/graph.hpp"

namespace octrans::backend {

using kernel::Index;

/** Evaluation backend: maps chunked work over a worker pool (or inline).
 *
 * Work is split into fixed chunks of kChunkSize indices regardless of worker
 * count, and reductions combine per-chunk partial sums in chunk order, so
 * results are bitwise reproducible for any worker count and any scheduling.
 *
 * par_for/par_reduce are blocking; the pool is reused across calls. Callers
 * provide one scratch slot per worker and must not mutate shared inputs
 * during a call.
 */
class Backend {
 public:
  enum class Kind { serial, parallel, accelerator };
  static constexpr Index kChunkSize = 512;

  explicit Backend(Kind kind, int workers = 0);
  ~Backend();
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  Kind kind() const { return kind_; }
  int workers() const { return workers_; }

  /// Number of scratch slots callers must provision (>= 1).
  int scratch_slots() const { return kind_ == Kind::serial ? 1 : workers_; }

  /** Runs fn(chunk_lo, chunk_hi, scratch_id) over [0, count) in chunks.
   * Returns false if any invocation returned false or threw.
   */
  bool par_for(Index count, const std::function<bool(Index, Index, int)>& fn) const;

  /** Deterministic sum: fn(chunk_lo, chunk_hi, scratch_id, partial) accumulates
   * the chunk in index order; partials combine in chunk order. Returns false
   * on any failure.
   */
  bool par_reduce(Index count, const std::function<bool(Index, Index, int, double&)>& fn,
                  double& out) const;

  static Kind parse_kind(const std::string& name);

 private:
  struct Pool;
  Kind kind_;
  int workers_;
  std::unique_ptr<Pool> pool_;
};

}  // namespace octrans::backend

#endif  // OCTRANS_BACKEND_BACKEND_HPP_

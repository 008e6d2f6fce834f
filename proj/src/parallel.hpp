// SPDX-License-Identifier: Apache-2.0
//
// Deterministic chunked parallel loop over path indices.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace mgbound::detail {

inline unsigned resolve_workers(unsigned w) {
  if (w != 0) return w;
  const unsigned h = std::thread::hardware_concurrency();
  return h != 0 ? h : 1;
}

// Runs make_worker()(acc, path_index) over all paths, chunk by chunk, and
// merges the chunk accumulators in chunk-index order.
template <class Acc, class MakeAcc, class MakeWorker>
Acc run_chunks(std::uint64_t paths, std::uint64_t chunk, unsigned workers, MakeAcc make_acc, MakeWorker make_worker) {
  const std::uint64_t nchunks = (paths + chunk - 1) / chunk;
  std::vector<std::optional<Acc>> results(nchunks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;

  auto work = [&] {
    try {
      auto body = make_worker();
      for (;;) {
        const std::uint64_t c = next.fetch_add(1);
        if (c >= nchunks) break;
        Acc a = make_acc();
        const std::uint64_t begin = c * chunk;
        const std::uint64_t end = std::min(paths, begin + chunk);
        for (std::uint64_t p = begin; p < end; ++p) body(a, p);
        results[c].emplace(std::move(a));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(err_mu);
      if (!err) err = std::current_exception();
      next.store(nchunks);
    }
  };

  const std::uint64_t nworkers = std::min<std::uint64_t>(resolve_workers(workers), nchunks);
  if (nworkers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (std::uint64_t i = 0; i < nworkers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);

  Acc total = make_acc();
  for (auto& r : results) total.merge(*r);
  return total;
}

}  // namespace mgbound::detail

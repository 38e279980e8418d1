#pragma once

#include <cstddef>
#include <cstdint>
#include <thread>
#include <vector>

namespace fzoo {

// Deterministic chunked map-reduce. Samples are split into fixed-size chunks
// regardless of worker count; each chunk's accumulator lives in its own slot
// and the slots are combined in chunk order, so results are bitwise
// independent of how many threads ran.
//
// Acc must be default-constructible; accumulate(acc, sample_index) folds one
// sample, combine(total, acc) folds chunks in ascending order.
template <typename Acc, typename AccumulateFn, typename CombineFn>
Acc chunked_reduce(std::int64_t samples, std::size_t workers,
                   AccumulateFn accumulate, CombineFn combine) {
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t n_chunks = samples <= 0 ? 0 : (samples + kChunk - 1) / kChunk;
  std::vector<Acc> slots(static_cast<std::size_t>(n_chunks));

  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(samples, begin + kChunk);
    Acc acc{};
    for (std::int64_t s = begin; s < end; ++s) accumulate(acc, s);
    slots[static_cast<std::size_t>(c)] = acc;
  };

  if (workers <= 1 || n_chunks <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    const std::size_t used = std::min<std::size_t>(workers,
                                                   static_cast<std::size_t>(n_chunks));
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (std::size_t w = 0; w < used; ++w) {
      pool.emplace_back([&, w] {
        for (std::int64_t c = static_cast<std::int64_t>(w); c < n_chunks;
             c += static_cast<std::int64_t>(used)) {
          run_chunk(c);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  Acc total{};
  for (const Acc& acc : slots) combine(total, acc);
  return total;
}

}  // namespace fzoo

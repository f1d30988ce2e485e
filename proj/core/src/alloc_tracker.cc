#include "adapool/alloc_tracker.h"

#include <atomic>
#include <cstdlib>
#include <new>

namespace {

// Every block carries its size in a header so delete can account for it.
constexpr std::size_t kHeader = alignof(std::max_align_t);

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void note_alloc(std::size_t n) {
  const std::size_t now = g_live.fetch_add(n, std::memory_order_relaxed) + n;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak &&
         !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

}  // namespace

void* operator new(std::size_t n) {
  auto* base = static_cast<unsigned char*>(std::malloc(n + kHeader));
  if (!base) throw std::bad_alloc();
  *reinterpret_cast<std::size_t*>(base) = n;
  note_alloc(n);
  return base + kHeader;
}

void operator delete(void* p) noexcept {
  if (!p) return;
  auto* base = static_cast<unsigned char*>(p) - kHeader;
  g_live.fetch_sub(*reinterpret_cast<std::size_t*>(base),
                   std::memory_order_relaxed);
  std::free(base);
}

void operator delete(void* p, std::size_t) noexcept { operator delete(p); }

namespace adapool {

std::size_t live_heap_bytes() { return g_live.load(std::memory_order_relaxed); }

AllocationScope::AllocationScope() : baseline_(live_heap_bytes()) {
  g_peak.store(baseline_, std::memory_order_relaxed);
}

std::size_t AllocationScope::peak_bytes() const {
  const std::size_t peak = g_peak.load(std::memory_order_relaxed);
  return peak > baseline_ ? peak - baseline_ : 0;
}

}  // namespace adapool

#pragma once

#include <cstddef>

namespace adapool {

// Bytes currently allocated through the global operator new.
std::size_t live_heap_bytes();

// Tracks the peak of live heap bytes above the level at construction.
// Not meaningful when other threads allocate concurrently.
class AllocationScope {
 public:
  AllocationScope();
  std::size_t peak_bytes() const;

 private:
  std::size_t baseline_;
};

}  // namespace adapool

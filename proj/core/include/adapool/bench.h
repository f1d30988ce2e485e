#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adapool/activation_map.h"
#include "adapool/pool.h"

namespace adapool {

struct BenchOptions {
  MapShape shape{3, {512, 512}};
  std::vector<OperatorSpec> methods;
  std::size_t repeats = 10;
  std::size_t warmup = 3;
  std::size_t kernel = 2;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string method;
  std::size_t kernel = 0;
  double forward_us = 0.0;   // median
  double backward_us = 0.0;  // median, mask-weighted backward
  double forward_ratio = 0.0;   // relative to avg
  double backward_ratio = 0.0;  // relative to avg
  std::size_t peak_alloc_bytes = 0;
};

// Median wall time of forward and backward per method on one random input
// (uniform in [0, 1)). avg is always measured first and is the denominator
// of the ratios. Throws InvalidArgument when repeats < 10.
std::vector<BenchRow> run_bench(const BenchOptions& options);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace adapool

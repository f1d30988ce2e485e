#include "adapool/bench.h"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <random>

#include "adapool/alloc_tracker.h"
#include "adapool/backward.h"
#include "adapool/errors.h"

namespace adapool {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double micros(Clock::duration d) {
  return std::chrono::duration<double, std::micro>(d).count();
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& options) {
  if (options.repeats < 10) throw InvalidArgument("bench needs >= 10 repeats");
  validate_shape(options.shape);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  std::vector<double> xs(options.shape.size());
  for (auto& v : xs) v = value(rng);
  const ActivationMap input(options.shape, std::move(xs));
  const auto geometry =
      PoolGeometry::square(options.kernel, options.shape.spatial.size());
  const ActivationMap grad_out(geometry.output_shape(options.shape),
                               std::vector<double>(
                                   geometry.output_shape(options.shape).size(),
                                   1.0));

  std::vector<OperatorSpec> methods{OperatorSpec{}};
  for (const auto& m : options.methods) {
    if (m.method != Method::kAverage) methods.push_back(m);
  }

  std::vector<BenchRow> rows;
  for (const auto& spec : methods) {
    for (std::size_t i = 0; i < options.warmup; ++i) {
      const auto r = pool(spec, input, geometry);
      backward(r, grad_out);
    }
    std::vector<double> fwd, bwd;
    for (std::size_t i = 0; i < options.repeats; ++i) {
      const auto t0 = Clock::now();
      const auto r = pool(spec, input, geometry);
      const auto t1 = Clock::now();
      const auto g = backward(r, grad_out);
      const auto t2 = Clock::now();
      fwd.push_back(micros(t1 - t0));
      bwd.push_back(micros(t2 - t1));
    }
    BenchRow row;
    row.method = spec.name();
    row.kernel = options.kernel;
    row.forward_us = median(fwd);
    row.backward_us = median(bwd);
    {
      AllocationScope scope;
      const auto r = pool(spec, input, geometry);
      const auto g = backward(r, grad_out);
      row.peak_alloc_bytes = scope.peak_bytes();
    }
    rows.push_back(row);
  }
  for (auto& row : rows) {
    row.forward_ratio = row.forward_us / rows.front().forward_us;
    row.backward_ratio = row.backward_us / rows.front().backward_us;
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "method,kernel,forward_us,backward_us,forward_ratio_vs_avg,"
         "backward_ratio_vs_avg,peak_alloc_bytes\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.kernel << ','
        << static_cast<std::int64_t>(r.forward_us + 0.5) << ','
        << static_cast<std::int64_t>(r.backward_us + 0.5) << ','
        << r.forward_ratio << ',' << r.backward_ratio << ','
        << r.peak_alloc_bytes << '\n';
  }
}

}  // namespace adapool

#include "adapool/commands.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "adapool/bench.h"
#include "adapool/errors.h"
#include "adapool/eval_record.h"
#include "adapool/fit_beta.h"
#include "adapool/gradcheck.h"
#include "adapool/image_io.h"
#include "adapool/mask_file.h"
#include "adapool/unpool.h"

namespace adapool {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_us(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::microseconds>(b - a).count();
}

// Maps exceptions onto exit codes.
template <typename Fn>
int guarded(Console io, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

PoolResult pool_image(const ActivationMap& image, const OperatorSpec& spec,
                      const PoolGeometry& geometry, bool unit_range) {
  const RoundTripOptions defaults;
  const double range = unit_range ? defaults.dynamic_range : 1.0;
  std::vector<double> values(image.data().begin(), image.data().end());
  for (auto& v : values) v /= range;
  const ActivationMap scaled(image.shape(), std::move(values));
  PoolResult result =
      spec.method == Method::kAda && spec.learned_beta
          ? pool_ada(scaled, geometry,
                     fit_reconstruction_beta(scaled, geometry,
                                             defaults.dynamic_range / range,
                                             defaults.fit_steps, defaults.fit_lr))
          : pool(spec, scaled, geometry);
  for (auto& v : result.output.mutable_data()) v *= range;
  return result;
}

}  // namespace

OperatorSpec resolve_method(const MethodOptions& options) {
  OperatorSpec spec = OperatorSpec::parse(options.method);
  spec.seed = options.seed;
  if (options.distance) {
    if (spec.method != Method::kIdw) {
      throw InvalidArgument("--distance only applies to idw");
    }
    spec.distance = DistanceKind::parse(*options.distance);
  }
  if (options.beta) {
    if (spec.method != Method::kAda) {
      throw InvalidArgument("--beta only applies to ada");
    }
    spec = OperatorSpec::parse("ada:" + *options.beta);
    spec.seed = options.seed;
  }
  return spec;
}

int cmd_pool(const PoolCommand& cmd, Console io) {
  return guarded(io, [&] {
    const OperatorSpec spec = resolve_method(cmd.method);
    if (cmd.kernel == 0) throw InvalidArgument("--kernel must be >= 1");
    if (cmd.mask_out && spec.method != Method::kEm &&
        spec.method != Method::kEdscw && spec.method != Method::kAda) {
      throw InvalidArgument("--mask-out needs em, edscw or ada");
    }
    const ActivationMap image = read_image(cmd.input);
    const auto geometry = PoolGeometry::square(cmd.kernel);
    const PoolResult result = pool_image(image, spec, geometry, cmd.unit_range);
    write_image(cmd.output, result.output);
    if (cmd.mask_out) write_mask_file(*cmd.mask_out, mask_file_from(result));
    io.out << cmd.input.string() << ' ' << image.shape().to_string() << " -> "
           << result.output.shape().to_string() << " method=" << spec.name()
           << " k=" << cmd.kernel << '\n';
    if (result.fallback_count > 0) {
      io.err << "warning: " << result.fallback_count
             << " region/channel pairs were mixed-sign or zero and sampled "
                "uniformly\n";
    }
    return int{kExitOk};
  });
}

int cmd_unpool(const UnpoolCommand& cmd, Console io) {
  return guarded(io, [&] {
    MaskFile mask = read_mask_file(cmd.mask_file);
    if (cmd.pooled_image) {
      ActivationMap pooled = read_image(*cmd.pooled_image);
      if (pooled.shape() != mask.pooled.shape()) {
        throw ShapeError("pooled image " + pooled.shape().to_string() +
                         " does not match mask file " +
                         mask.pooled.shape().to_string());
      }
      mask.pooled = std::move(pooled);
    }
    const auto target = mask.masks.input_shape.spatial;
    const UnpoolInput input{std::move(mask.pooled), std::move(mask.masks),
                            std::move(mask.beta), target};
    const auto out = ada_unpool(input, {.double_softmax = cmd.double_softmax});
    write_image(cmd.output, out);
    io.out << cmd.mask_file.string() << " -> " << out.shape().to_string()
           << '\n';
    return int{kExitOk};
  });
}

int cmd_eval(const EvalCommand& cmd, Console io) {
  return guarded(io, [&] {
    std::vector<OperatorSpec> specs;
    for (const auto& m : cmd.methods) {
      specs.push_back(resolve_method({.method = m, .distance = {}, .beta = {}, .seed = cmd.seed}));
    }
    if (std::none_of(specs.begin(), specs.end(), [](const OperatorSpec& s) {
          return s.method == Method::kAverage;
        })) {
      specs.insert(specs.begin(), OperatorSpec{});
    }
    if (cmd.kernels.empty()) throw InvalidArgument("no kernel sizes given");
    for (auto k : cmd.kernels) {
      if (k == 0) throw InvalidArgument("kernel sizes must be >= 1");
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cmd.image_dir)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());

    RoundTripOptions rt;
    rt.inflate = cmd.inflate;
    rt.unit_range = cmd.unit_range;
    std::vector<EvalRecord> records;
    std::size_t readable = 0;
    for (const auto& file : files) {
      ActivationMap image;
      try {
        image = read_image(file);
      } catch (const Error& e) {
        io.err << "warning: skipping " << file.string() << ": " << e.what()
               << '\n';
        continue;
      }
      ++readable;
      for (auto k : cmd.kernels) {
        const ActivationMap cropped = crop_to_multiple(image, k);
        for (const auto& spec : specs) {
          const auto t0 = Clock::now();
          const PoolResult pooled = roundtrip_pool(cropped, spec, k, rt);
          const auto t1 = Clock::now();
          const ActivationMap ones(
              pooled.output.shape(),
              std::vector<double>(pooled.output.size(), 1.0));
          const auto grads = backward(pooled, ones);
          const auto t2 = Clock::now();
          const auto restored =
              rt.inflate == Inflate::kNearest
                  ? nearest_inflate(pooled.output, pooled.geometry,
                                    cropped.spatial())
                  : bilinear_inflate(pooled.output, pooled.geometry,
                                     cropped.spatial());
          EvalRecord r;
          r.image_id = file.stem().string();
          r.method = spec.name();
          r.kernel = k;
          r.ssim = ssim(cropped, restored);
          r.psnr_db = psnr(cropped, restored);
          r.forward_us = elapsed_us(t0, t1);
          r.backward_us = elapsed_us(t1, t2);
          if (spec.stochastic()) r.seed = spec.seed;
          records.push_back(std::move(r));
        }
      }
    }
    if (readable == 0) {
      throw FormatError("no readable images in " + cmd.image_dir.string());
    }
    sort_records(records);
    {
      auto out = open_output(cmd.csv_out);
      write_eval_csv(out, records);
    }
    const auto summary = summarize(records);
    fs::path summary_path = cmd.csv_out;
    summary_path.replace_extension(".summary.csv");
    {
      auto out = open_output(summary_path);
      write_summary_csv(out, summary);
    }
    io.out << "evaluated " << readable << " images, " << records.size()
           << " rows -> " << cmd.csv_out.string() << '\n';
    write_summary_csv(io.out, summary);
    return int{kExitOk};
  });
}

int cmd_gradcheck(const GradcheckCommand& cmd, Console io) {
  return guarded(io, [&] {
    const OperatorSpec spec = OperatorSpec::parse(cmd.method);
    if (spec.method != Method::kEm && spec.method != Method::kEdscw &&
        spec.method != Method::kAda) {
      throw InvalidArgument("gradcheck supports em, edscw and ada");
    }
    GradcheckOptions options;
    options.method = spec.method;
    options.shape = parse_shape(cmd.shape);
    options.seed = cmd.seed;
    options.mode = cmd.mode;
    options.kernel = cmd.kernel;
    if (options.shape.size() > 4 * 16 * 16) {
      throw InvalidArgument("gradcheck shapes are limited to 4x16x16");
    }
    const auto report = run_gradcheck(options);
    const bool exact = cmd.mode == GradMode::kExactAnalytic;
    io.out << "gradcheck method=" << cmd.method
           << " shape=" << options.shape.to_string() << " seed=" << cmd.seed
           << " mode=" << (exact ? "exact" : "paper") << std::scientific
           << std::setprecision(3) << " input_err=" << report.input_error;
    if (report.beta_error) io.out << " beta_err=" << *report.beta_error;
    io.out << std::defaultfloat;
    if (!exact) {
      io.out << " (deviation from finite differences, informational)\n";
      return int{kExitOk};
    }
    io.out << (report.passed ? " PASS" : " FAIL") << '\n';
    return report.passed ? int{kExitOk} : int{kExitCheckFailed};
  });
}

int cmd_fitbeta(const FitBetaCommand& cmd, Console io) {
  return guarded(io, [&] {
    if (cmd.target_image.has_value() == cmd.target_method.has_value()) {
      throw InvalidArgument("give exactly one of --target or --target-method");
    }
    if (cmd.kernel == 0) throw InvalidArgument("--kernel must be >= 1");
    const ActivationMap input = read_image(cmd.input);
    const auto geometry = PoolGeometry::square(cmd.kernel);
    const ActivationMap target =
        cmd.target_image
            ? read_image(*cmd.target_image)
            : pool(OperatorSpec::parse(*cmd.target_method), input, geometry)
                  .output;
    FitOptions options;
    options.steps = cmd.steps;
    options.lr = cmd.lr;
    const FitResult fit = fit_beta(input, geometry, target, options);
    if (cmd.csv_out) {
      auto out = open_output(*cmd.csv_out);
      out << "step,loss,mean_beta\n";
      for (std::size_t i = 0; i < fit.loss.size(); ++i) {
        out << i << ',' << fit.loss[i] << ',' << fit.mean_beta[i] << '\n';
      }
    }
    if (cmd.beta_out) {
      auto out = open_output(*cmd.beta_out);
      const auto& ext = fit.beta.extents();
      const std::size_t width = ext.back();
      for (std::size_t r = 0; r < fit.beta.size(); ++r) {
        out << fit.beta[r] << ((r + 1) % width == 0 ? '\n' : ',');
      }
    }
    io.out << "fitbeta steps=" << cmd.steps << " lr=" << cmd.lr
           << " loss " << fit.loss.front() << " -> " << fit.loss.back()
           << " mean_beta=" << fit.beta.mean() << '\n';
    return int{kExitOk};
  });
}

int cmd_bench(const BenchCommand& cmd, Console io) {
  return guarded(io, [&] {
    BenchOptions options;
    options.shape = parse_shape(cmd.shape);
    options.repeats = cmd.repeats;
    options.kernel = cmd.kernel;
    options.seed = cmd.seed;
    for (const auto& m : cmd.methods) {
      options.methods.push_back(resolve_method(
          {.method = m, .distance = {}, .beta = {}, .seed = cmd.seed}));
    }
    const auto rows = run_bench(options);
    write_bench_csv(io.out, rows);
    if (cmd.csv_out) {
      auto out = open_output(*cmd.csv_out);
      write_bench_csv(out, rows);
    }
    return int{kExitOk};
  });
}

}  // namespace adapool

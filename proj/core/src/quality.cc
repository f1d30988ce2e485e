#include "adapool/quality.h"

#include <cmath>
#include <limits>

#include "adapool/errors.h"
#include "adapool/fit_beta.h"
#include "adapool/unpool.h"

namespace adapool {

namespace {

void check_same_shape(const ActivationMap& a, const ActivationMap& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("shape mismatch: " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  }
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double centre = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = static_cast<double>(i) - centre;
    w[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

std::size_t fit_window(std::size_t window, std::size_t extent) {
  std::size_t w = std::min(window, extent);
  if (w % 2 == 0) --w;
  return w;
}

// Separable 'valid' filtering of one H x W plane.
std::vector<double> filter_valid(const double* plane, std::size_t h,
                                 std::size_t w, const std::vector<double>& gh,
                                 const std::vector<double>& gw) {
  const std::size_t oh = h - gh.size() + 1;
  const std::size_t ow = w - gw.size() + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < gw.size(); ++i) acc += gw[i] * plane[y * w + x + i];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < gh.size(); ++i) acc += gh[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

double ssim_plane(const double* a, const double* b, std::size_t h,
                  std::size_t w, const SsimOptions& o) {
  const auto gh = gaussian_window(fit_window(o.window, h), o.sigma);
  const auto gw = gaussian_window(fit_window(o.window, w), o.sigma);
  const std::size_t n = h * w;
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, gh, gw);
  const auto mu_b = filter_valid(b, h, w, gh, gw);
  const auto e_aa = filter_valid(aa.data(), h, w, gh, gw);
  const auto e_bb = filter_valid(bb.data(), h, w, gh, gw);
  const auto e_ab = filter_valid(ab.data(), h, w, gh, gw);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

double ssim(const ActivationMap& a, const ActivationMap& b,
            const SsimOptions& options) {
  check_same_shape(a, b);
  if (!(options.dynamic_range > 0.0)) {
    throw InvalidArgument("dynamic range must be positive");
  }
  const auto& sp = a.spatial();
  const std::size_t h = sp[sp.size() - 2];
  const std::size_t w = sp[sp.size() - 1];
  const std::size_t frames = sp.size() == 3 ? sp[0] : 1;
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    for (std::size_t f = 0; f < frames; ++f) {
      const double* pa = a.channel(c).data() + f * h * w;
      const double* pb = b.channel(c).data() + f * h * w;
      total += ssim_plane(pa, pb, h, w, options);
    }
  }
  return total / static_cast<double>(a.channels() * frames);
}

double mean_squared_error(const ActivationMap& a, const ActivationMap& b) {
  check_same_shape(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const ActivationMap& a, const ActivationMap& b, double max_value) {
  if (!(max_value > 0.0)) throw InvalidArgument("max_value must be positive");
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / mse);
}

PoolResult roundtrip_pool(const ActivationMap& image, const OperatorSpec& spec,
                          std::size_t k, const RoundTripOptions& options) {
  if (k == 0) throw InvalidArgument("kernel size must be >= 1");
  for (auto e : image.spatial()) {
    if (e % k != 0) {
      throw ShapeError("image extents " + image.shape().to_string() +
                       " are not multiples of k=" + std::to_string(k));
    }
  }
  const auto geometry = PoolGeometry::square(k, image.spatial().size());
  const double range = options.dynamic_range;
  if (!options.unit_range) {
    if (spec.method == Method::kAda && spec.learned_beta) {
      return pool_ada(image, geometry,
                      fit_reconstruction_beta(image, geometry, range,
                                              options.fit_steps, options.fit_lr));
    }
    return pool(spec, image, geometry);
  }

  std::vector<double> unit(image.data().begin(), image.data().end());
  for (auto& v : unit) v /= range;
  const ActivationMap scaled(image.shape(), std::move(unit));
  PoolResult result =
      spec.method == Method::kAda && spec.learned_beta
          ? pool_ada(scaled, geometry,
                     fit_reconstruction_beta(scaled, geometry, 1.0,
                                             options.fit_steps, options.fit_lr))
          : pool(spec, scaled, geometry);
  for (auto& v : result.output.mutable_data()) v *= range;
  return result;
}

QualityScore eval_roundtrip(const ActivationMap& image,
                            const OperatorSpec& spec, std::size_t k,
                            const RoundTripOptions& options) {
  const auto pooled = roundtrip_pool(image, spec, k, options);
  const auto restored =
      options.inflate == Inflate::kNearest
          ? nearest_inflate(pooled.output, pooled.geometry, image.spatial())
          : bilinear_inflate(pooled.output, pooled.geometry, image.spatial());
  QualityScore score;
  score.ssim = ssim(image, restored, {.dynamic_range = options.dynamic_range});
  score.psnr_db = psnr(image, restored, options.dynamic_range);
  score.method = spec.name();
  score.kernel = k;
  return score;
}

}  // namespace adapool

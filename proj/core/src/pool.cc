#include "adapool/pool.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "adapool/errors.h"
#include "rng.h"

namespace adapool {

namespace {

double parse_number(std::string_view text, std::string_view what) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw InvalidArgument("bad " + std::string(what) + " '" + s + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Shared setup for every kernel: output map, walker and result metadata.
struct Pass {
  Pass(Method method, const ActivationMap& map, const PoolGeometry& geometry)
      : walker(map.shape(), geometry) {
    result.method = method;
    result.geometry = geometry;
    result.input_shape = map.shape();
    result.output = ActivationMap(geometry.output_shape(map.shape()));
  }

  std::size_t regions() const { return walker.region_count(); }
  std::size_t volume() const { return walker.kernel_volume(); }

  RegionWalker walker;
  PoolResult result;
};

WeightMasks empty_masks(const PoolResult& r, std::size_t regions,
                        std::size_t volume) {
  return WeightMasks{r.geometry, r.input_shape, regions, volume, {}, {}};
}

void fill_stats(const ActivationMap& map, Pass& pass) {
  const std::size_t channels = map.channels();
  RegionStats stats;
  stats.mean.resize(channels * pass.regions());
  stats.max.resize(channels * pass.regions());
  for (std::size_t r = 0; r < pass.regions(); ++r) {
    pass.walker.load(r);
    const auto members = pass.walker.members();
    const double n = static_cast<double>(members.size());
    for (std::size_t c = 0; c < channels; ++c) {
      const auto plane = map.channel(c);
      double sum = 0.0;
      double mx = -std::numeric_limits<double>::infinity();
      for (auto s : members) {
        sum += plane[s];
        mx = std::max(mx, plane[s]);
      }
      stats.mean[c * pass.regions() + r] = sum / n;
      stats.max[c * pass.regions() + r] = mx;
    }
  }
  pass.result.stats = std::move(stats);
}

// Per-channel softmax over the region; writes weights into `mask_row` slots
// and returns the weighted sum, computed relative to the maximum.
double em_region(std::span<const double> plane,
                 std::span<const std::size_t> members,
                 std::span<const std::size_t> slots, std::span<double> mask_row,
                 std::vector<double>& scratch) {
  const std::size_t n = members.size();
  double mx = plane[members[0]];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, plane[members[i]]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scratch[i] = std::exp(plane[members[i]] - mx);
    total += scratch[i];
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = scratch[i] / total;
    mask_row[slots[i]] = w;
    acc += w * (plane[members[i]] - mx);
  }
  return mx + acc;
}

void em_kernel(const ActivationMap& map, Pass& pass, WeightMasks& masks,
               ActivationMap& out) {
  const std::size_t regions = pass.regions();
  const std::size_t volume = pass.volume();
  masks.em.assign(map.channels() * regions * volume, 0.0);
  std::vector<double> scratch(volume);
  for (std::size_t r = 0; r < regions; ++r) {
    pass.walker.load(r);
    for (std::size_t c = 0; c < map.channels(); ++c) {
      std::span<double> row(masks.em.data() + (c * regions + r) * volume,
                            volume);
      out.at(c, r) = em_region(map.channel(c), pass.walker.members(),
                               pass.walker.slots(), row, scratch);
    }
  }
}

void edsc_kernel(const ActivationMap& map, Pass& pass, WeightMasks& masks,
                 ActivationMap& out) {
  const std::size_t regions = pass.regions();
  const std::size_t volume = pass.volume();
  const std::size_t channels = map.channels();
  masks.edsc.assign(regions * volume, 0.0);
  std::vector<double> mean(channels);
  std::vector<double> score(volume);
  for (std::size_t r = 0; r < regions; ++r) {
    pass.walker.load(r);
    const auto members = pass.walker.members();
    const auto slots = pass.walker.slots();
    const std::size_t n = members.size();
    for (std::size_t c = 0; c < channels; ++c) {
      const auto plane = map.channel(c);
      double sum = 0.0;
      for (auto s : members) sum += plane[s];
      mean[c] = sum / static_cast<double>(n);
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        s += dsc_term(mean[c], map.at(c, members[i]));
      }
      score[i] = s;
      top = std::max(top, s);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      score[i] = std::exp(score[i] - top);
      total += score[i];
    }
    double* row = masks.edsc.data() + r * volume;
    for (std::size_t i = 0; i < n; ++i) {
      score[i] /= total;
      row[slots[i]] = score[i];
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const auto plane = map.channel(c);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += score[i] * (plane[members[i]] - mean[c]);
      }
      out.at(c, r) = mean[c] + acc;
    }
  }
}

void check_beta(const BetaMap& beta, const PoolResult& result) {
  const auto& ext = result.output.spatial();
  if (beta.extents() != ext) {
    throw ShapeError("beta map extents do not match the pooled output");
  }
}

// Slot of a one-hot route entry.
void route_one(PoolResult& result, std::size_t c, std::size_t r,
               std::size_t volume, std::size_t slot) {
  const std::size_t regions = result.output.spatial_size();
  result.route[(c * regions + r) * volume + slot] = 1.0;
}

}  // namespace

OperatorSpec OperatorSpec::parse(std::string_view name) {
  OperatorSpec spec;
  const auto colon = name.find(':');
  const std::string_view head = name.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : name.substr(colon + 1);
  const bool has_arg = colon != std::string_view::npos;
  auto no_arg = [&] {
    if (has_arg) {
      throw InvalidArgument("operator '" + std::string(head) +
                            "' takes no argument");
    }
  };
  if (head == "avg") {
    no_arg();
    spec.method = Method::kAverage;
  } else if (head == "max") {
    no_arg();
    spec.method = Method::kMaximum;
  } else if (head == "sum") {
    no_arg();
    spec.method = Method::kSum;
  } else if (head == "powavg") {
    spec.method = Method::kPowAverage;
    spec.rho = has_arg ? parse_number(arg, "rho") : 2.0;
    if (!(spec.rho > 0.0)) throw InvalidArgument("rho must be positive");
  } else if (head == "stoch") {
    no_arg();
    spec.method = Method::kStochastic;
  } else if (head == "s3") {
    no_arg();
    spec.method = Method::kS3;
  } else if (head == "idw") {
    spec.method = Method::kIdw;
    spec.distance = has_arg ? DistanceKind::parse(arg) : DistanceKind::l2();
  } else if (head == "em") {
    no_arg();
    spec.method = Method::kEm;
  } else if (head == "edscw") {
    no_arg();
    spec.method = Method::kEdscw;
  } else if (head == "ada") {
    spec.method = Method::kAda;
    if (arg == "learned") {
      spec.learned_beta = true;
    } else if (has_arg) {
      spec.beta = parse_number(arg, "beta");
      if (spec.beta < 0.0 || spec.beta > 1.0) {
        throw InvalidArgument("beta must lie in [0, 1]");
      }
    }
  } else {
    throw InvalidArgument("unknown operator '" + std::string(name) + "'");
  }
  return spec;
}

std::string OperatorSpec::name() const {
  switch (method) {
    case Method::kAverage: return "avg";
    case Method::kMaximum: return "max";
    case Method::kSum: return "sum";
    case Method::kPowAverage: return "powavg:" + format_number(rho);
    case Method::kStochastic: return "stoch";
    case Method::kS3: return "s3";
    case Method::kIdw: return "idw:" + distance.name();
    case Method::kEm: return "em";
    case Method::kEdscw: return "edscw";
    case Method::kAda:
      return learned_beta ? "ada:learned" : "ada:" + format_number(beta);
  }
  return "?";
}

bool OperatorSpec::is_baseline() const {
  switch (method) {
    case Method::kAverage:
    case Method::kMaximum:
    case Method::kSum:
    case Method::kPowAverage:
    case Method::kStochastic:
    case Method::kS3:
      return true;
    default:
      return false;
  }
}

BetaMap::BetaMap(std::vector<std::size_t> extents, double value,
                 bool trainable)
    : BetaMap(extents,
              std::vector<double>(std::accumulate(extents.begin(),
                                                  extents.end(), std::size_t{1},
                                                  std::multiplies<>()),
                                  value),
              trainable) {}

BetaMap::BetaMap(std::vector<std::size_t> extents, std::vector<double> values,
                 bool trainable)
    : extents_(std::move(extents)),
      values_(std::move(values)),
      trainable_(trainable) {
  const std::size_t n = std::accumulate(extents_.begin(), extents_.end(),
                                        std::size_t{1}, std::multiplies<>());
  if (values_.size() != n) throw ShapeError("beta map length mismatch");
  for (double b : values_) {
    if (!(b >= 0.0 && b <= 1.0)) {
      throw InvalidArgument("beta values must lie in [0, 1]");
    }
  }
}

double BetaMap::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

PoolResult pool_baseline(const OperatorSpec& spec, const ActivationMap& map,
                         const PoolGeometry& geometry) {
  if (!spec.is_baseline()) {
    throw InvalidArgument("'" + spec.name() + "' is not a baseline operator");
  }
  if (spec.method == Method::kPowAverage && spec.rho == 1.0) {
    OperatorSpec avg = spec;
    avg.method = Method::kAverage;
    auto result = pool_baseline(avg, map, geometry);
    result.method = Method::kPowAverage;
    return result;
  }

  Pass pass(spec.method, map, geometry);
  PoolResult& result = pass.result;
  const std::size_t regions = pass.regions();
  const std::size_t volume = pass.volume();
  const std::size_t channels = map.channels();
  result.route.assign(channels * regions * volume, 0.0);

  // S3 draws one offset per output coordinate along each spatial axis.
  const auto& in = map.spatial();
  const auto& out_ext = result.output.spatial();
  const std::size_t dims = in.size();
  std::vector<std::vector<std::size_t>> s3_offsets;
  if (spec.method == Method::kS3) {
    s3_offsets.resize(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      s3_offsets[d].resize(out_ext[d]);
      for (std::size_t o = 0; o < out_ext[d]; ++o) {
        const auto origin = static_cast<std::ptrdiff_t>(o * geometry.stride()[d]) -
                            static_cast<std::ptrdiff_t>(geometry.padding()[d]);
        const auto k = static_cast<std::ptrdiff_t>(geometry.kernel()[d]);
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, origin);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
            static_cast<std::ptrdiff_t>(in[d]) - 1, origin + k - 1);
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        const auto pick = detail::keyed_hash(spec.seed, d, o) % span;
        s3_offsets[d][o] = static_cast<std::size_t>(lo - origin) + pick;
      }
    }
  }

  std::vector<double> weights(volume);
  for (std::size_t r = 0; r < regions; ++r) {
    pass.walker.load(r);
    const auto members = pass.walker.members();
    const auto slots = pass.walker.slots();
    const std::size_t n = members.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::size_t s3_slot = 0;
    if (spec.method == Method::kS3) {
      std::size_t rest = r;
      std::vector<std::size_t> o(dims);
      for (std::size_t d = dims; d-- > 0;) {
        o[d] = rest % out_ext[d];
        rest /= out_ext[d];
      }
      for (std::size_t d = 0; d < dims; ++d) {
        s3_slot = s3_slot * geometry.kernel()[d] + s3_offsets[d][o[d]];
      }
    }

    for (std::size_t c = 0; c < channels; ++c) {
      const auto plane = map.channel(c);
      double* route = result.route.data() + (c * regions + r) * volume;
      double value = 0.0;
      switch (spec.method) {
        case Method::kAverage:
        case Method::kSum: {
          double sum = 0.0;
          for (auto s : members) sum += plane[s];
          const bool avg = spec.method == Method::kAverage;
          value = avg ? sum / static_cast<double>(n) : sum;
          for (auto slot : slots) route[slot] = avg ? inv_n : 1.0;
          break;
        }
        case Method::kMaximum: {
          std::size_t best = 0;
          for (std::size_t i = 1; i < n; ++i) {
            if (plane[members[i]] > plane[members[best]]) best = i;
          }
          value = plane[members[best]];
          route[slots[best]] = 1.0;
          break;
        }
        case Method::kPowAverage: {
          // Scaled by the largest magnitude so large rho stays finite.
          double scale = 0.0;
          for (auto s : members) scale = std::max(scale, std::abs(plane[s]));
          if (scale == 0.0) {
            for (auto slot : slots) route[slot] = inv_n;
            break;
          }
          double t = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double u = plane[members[i]] / scale;
            weights[i] = std::pow(std::abs(u), spec.rho);
            t += std::copysign(weights[i], u);
          }
          t *= inv_n;
          const double root = std::pow(std::abs(t), 1.0 / spec.rho);
          value = scale * std::copysign(root, t);
          if (t != 0.0) {
            const double outer = inv_n * root / std::abs(t);
            for (std::size_t i = 0; i < n; ++i) {
              const double u = std::abs(plane[members[i]] / scale);
              route[slots[i]] = outer * std::pow(u, spec.rho - 1.0);
            }
          }
          break;
        }
        case Method::kStochastic: {
          double sum = 0.0;
          bool negative = false;
          for (auto s : members) {
            sum += plane[s];
            negative = negative || plane[s] < 0.0;
          }
          const double u = detail::unit_interval(
              detail::keyed_hash(spec.seed, r, c));
          std::size_t pick = n - 1;
          if (negative || sum <= 0.0) {
            ++result.fallback_count;
            pick = std::min(n - 1, static_cast<std::size_t>(u * n));
          } else {
            const double target = u * sum;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              acc += plane[members[i]];
              if (target < acc) {
                pick = i;
                break;
              }
            }
            // Rounding can leave the tail short; never pick a zero member.
            while (plane[members[pick]] == 0.0 && pick > 0) --pick;
          }
          value = plane[members[pick]];
          route[slots[pick]] = 1.0;
          break;
        }
        case Method::kS3: {
          const auto it = std::find(slots.begin(), slots.end(), s3_slot);
          const std::size_t i = static_cast<std::size_t>(it - slots.begin());
          value = plane[members[i]];
          route_one(result, c, r, volume, s3_slot);
          break;
        }
        default:
          break;
      }
      result.output.at(c, r) = value;
    }
  }
  return std::move(pass.result);
}

PoolResult pool_idw(const DistanceKind& kind, const ActivationMap& map,
                    const PoolGeometry& geometry) {
  Pass pass(Method::kIdw, map, geometry);
  PoolResult& result = pass.result;
  const std::size_t regions = pass.regions();
  const std::size_t volume = pass.volume();
  const std::size_t channels = map.channels();
  result.route.assign(channels * regions * volume, 0.0);

  std::vector<double> mean(channels);
  std::vector<double> member(channels);
  std::vector<double> weight(volume);
  for (std::size_t r = 0; r < regions; ++r) {
    pass.walker.load(r);
    const auto members = pass.walker.members();
    const auto slots = pass.walker.slots();
    const std::size_t n = members.size();
    for (std::size_t c = 0; c < channels; ++c) {
      const auto plane = map.channel(c);
      double sum = 0.0;
      for (auto s : members) sum += plane[s];
      mean[c] = sum / static_cast<double>(n);
    }
    std::size_t exact = n;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < channels; ++c) member[c] = map.at(c, members[i]);
      const double d = distance(kind, mean, member);
      if (d == 0.0) {
        exact = i;
        break;
      }
      weight[i] = 1.0 / d;
      total += weight[i];
    }
    for (std::size_t c = 0; c < channels; ++c) {
      double* route = result.route.data() + (c * regions + r) * volume;
      if (exact < n) {
        result.output.at(c, r) = map.at(c, members[exact]);
        route[slots[exact]] = 1.0;
        continue;
      }
      const auto plane = map.channel(c);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = weight[i] / total;
        route[slots[i]] = w;
        acc += w * plane[members[i]];
      }
      result.output.at(c, r) = acc;
    }
  }
  return std::move(pass.result);
}

PoolResult pool_em(const ActivationMap& map, const PoolGeometry& geometry) {
  Pass pass(Method::kEm, map, geometry);
  WeightMasks masks = empty_masks(pass.result, pass.regions(), pass.volume());
  em_kernel(map, pass, masks, pass.result.output);
  fill_stats(map, pass);
  pass.result.masks = std::move(masks);
  pass.result.input = std::make_shared<const ActivationMap>(map);
  return std::move(pass.result);
}

PoolResult pool_edscw(const ActivationMap& map, const PoolGeometry& geometry) {
  Pass pass(Method::kEdscw, map, geometry);
  WeightMasks masks = empty_masks(pass.result, pass.regions(), pass.volume());
  edsc_kernel(map, pass, masks, pass.result.output);
  fill_stats(map, pass);
  pass.result.masks = std::move(masks);
  pass.result.input = std::make_shared<const ActivationMap>(map);
  return std::move(pass.result);
}

PoolResult pool_ada(const ActivationMap& map, const PoolGeometry& geometry,
                    const BetaMap& beta) {
  Pass pass(Method::kAda, map, geometry);
  check_beta(beta, pass.result);
  WeightMasks masks = empty_masks(pass.result, pass.regions(), pass.volume());
  ActivationMap em_out(pass.result.output.shape());
  ActivationMap edsc_out(pass.result.output.shape());
  em_kernel(map, pass, masks, em_out);
  edsc_kernel(map, pass, masks, edsc_out);
  fill_stats(map, pass);

  auto out = pass.result.output.mutable_data();
  const auto em_v = em_out.data();
  const auto edsc_v = edsc_out.data();
  const std::size_t regions = pass.regions();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = blend(beta[i % regions], edsc_v[i], em_v[i]);
  }
  pass.result.masks = std::move(masks);
  pass.result.beta = beta;
  pass.result.em_output = std::move(em_out);
  pass.result.edsc_output = std::move(edsc_out);
  pass.result.input = std::make_shared<const ActivationMap>(map);
  return std::move(pass.result);
}

PoolResult pool(const OperatorSpec& spec, const ActivationMap& map,
                const PoolGeometry& geometry) {
  switch (spec.method) {
    case Method::kIdw:
      return pool_idw(spec.distance, map, geometry);
    case Method::kEm:
      return pool_em(map, geometry);
    case Method::kEdscw:
      return pool_edscw(map, geometry);
    case Method::kAda: {
      const auto ext = geometry.output_extents(map.spatial());
      return pool_ada(map, geometry,
                      BetaMap(ext, spec.learned_beta ? 0.5 : spec.beta,
                              spec.learned_beta));
    }
    default:
      return pool_baseline(spec, map, geometry);
  }
}

}  // namespace adapool

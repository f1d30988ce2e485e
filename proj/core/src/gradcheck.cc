#include "adapool/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "adapool/errors.h"

namespace adapool {

namespace {

double weighted_output(const PoolResult& result, const ActivationMap& g) {
  double s = 0.0;
  const auto y = result.output.data();
  const auto w = g.data();
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

PoolResult forward(Method method, const ActivationMap& x,
                   const PoolGeometry& geometry, const BetaMap* beta) {
  switch (method) {
    case Method::kEm:
      return pool_em(x, geometry);
    case Method::kEdscw:
      return pool_edscw(x, geometry);
    case Method::kAda:
      return pool_ada(x, geometry, *beta);
    default:
      throw InvalidArgument("gradcheck supports em, edscw and ada");
  }
}

}  // namespace

double gradient_error(double analytic, double numeric) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / scale;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  validate_shape(options.shape);
  const auto geometry =
      PoolGeometry::square(options.kernel, options.shape.spatial.size());
  const auto out_shape = geometry.output_shape(options.shape);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> value(options.low, options.high);
  std::uniform_real_distribution<double> upstream(-1.0, 1.0);
  std::uniform_real_distribution<double> fusion(0.1, 0.9);

  std::vector<double> xs(options.shape.size());
  for (auto& v : xs) v = value(rng);
  ActivationMap x(options.shape, std::move(xs));
  std::vector<double> gs(out_shape.size());
  for (auto& v : gs) v = upstream(rng);
  const ActivationMap g(out_shape, std::move(gs));
  std::optional<BetaMap> beta;
  if (options.method == Method::kAda) {
    std::vector<double> bs(out_shape.spatial_size());
    for (auto& v : bs) v = fusion(rng);
    beta.emplace(out_shape.spatial, std::move(bs), true);
  }
  const BetaMap* beta_ptr = beta ? &*beta : nullptr;

  const auto saved = forward(options.method, x, geometry, beta_ptr);
  const auto grads = backward(saved, g, options.mode);

  const double h = options.step;
  GradcheckReport report;
  auto xd = x.mutable_data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double orig = xd[i];
    xd[i] = orig + h;
    const double up = weighted_output(forward(options.method, x, geometry, beta_ptr), g);
    xd[i] = orig - h;
    const double down = weighted_output(forward(options.method, x, geometry, beta_ptr), g);
    xd[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    report.input_error = std::max(
        report.input_error, gradient_error(grads.input.data()[i], numeric));
  }

  if (beta) {
    if (!grads.beta) throw MissingState("backward returned no beta gradient");
    double worst = 0.0;
    std::vector<double> values(beta->values().begin(), beta->values().end());
    for (std::size_t r = 0; r < values.size(); ++r) {
      const double orig = values[r];
      values[r] = orig + h;
      const BetaMap plus(beta->extents(), values, true);
      values[r] = orig - h;
      const BetaMap minus(beta->extents(), values, true);
      values[r] = orig;
      const double up = weighted_output(forward(options.method, x, geometry, &plus), g);
      const double down = weighted_output(forward(options.method, x, geometry, &minus), g);
      worst = std::max(worst,
                       gradient_error((*grads.beta)[r], (up - down) / (2.0 * h)));
    }
    report.beta_error = worst;
  }
  report.passed = report.max_error() < options.tolerance;
  return report;
}

MapShape parse_shape(const std::string& text) {
  std::vector<std::size_t> parts;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, 'x')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stoul(part, &used));
      if (used != part.size()) throw InvalidArgument(text);
    } catch (const std::exception&) {
      throw InvalidArgument("bad shape '" + text + "' (expected CxHxW)");
    }
  }
  if (parts.size() != 3 && parts.size() != 4) {
    throw InvalidArgument("bad shape '" + text + "' (expected CxHxW)");
  }
  MapShape shape{parts[0], {parts.begin() + 1, parts.end()}};
  validate_shape(shape);
  return shape;
}

}  // namespace adapool

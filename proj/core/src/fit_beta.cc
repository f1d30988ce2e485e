#include "adapool/fit_beta.h"

#include "adapool/errors.h"

namespace adapool {

namespace {

double mse(const ActivationMap& a, const ActivationMap& b) {
  double s = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

}  // namespace

FitResult fit_beta(const ActivationMap& input, const PoolGeometry& geometry,
                   const ActivationMap& target, const FitOptions& options) {
  const MapShape out_shape = geometry.output_shape(input.shape());
  if (target.shape() != out_shape) {
    throw ShapeError("target " + target.shape().to_string() +
                     " does not match pooled shape " + out_shape.to_string());
  }
  if (!(options.lr >= 0.0)) throw InvalidArgument("lr must be non-negative");

  FitResult fit{BetaMap(out_shape.spatial, options.initial_beta, true), {}, {}};
  fit.loss.reserve(options.steps + 1);
  const double scale = 2.0 / static_cast<double>(out_shape.channels);
  ActivationMap grad_out(out_shape);
  for (std::size_t step = 0;; ++step) {
    const PoolResult pooled = pool_ada(input, geometry, fit.beta);
    fit.loss.push_back(mse(pooled.output, target));
    fit.mean_beta.push_back(fit.beta.mean());
    if (step == options.steps) break;
    auto g = grad_out.mutable_data();
    const auto y = pooled.output.data();
    const auto t = target.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (y[i] - t[i]);
    const Gradients grads = backward(pooled, grad_out, options.mode);
    fit.beta = update_beta(fit.beta, *grads.beta, options.lr);
  }
  return fit;
}

BetaMap fit_reconstruction_beta(const ActivationMap& image,
                                const PoolGeometry& geometry,
                                double dynamic_range, std::size_t steps,
                                double lr) {
  if (!(dynamic_range > 0.0)) {
    throw InvalidArgument("dynamic range must be positive");
  }
  std::vector<double> unit(image.data().begin(), image.data().end());
  for (auto& v : unit) v /= dynamic_range;
  const ActivationMap scaled(image.shape(), std::move(unit));
  const auto target = pool_baseline(OperatorSpec{}, scaled, geometry).output;
  FitOptions options;
  options.steps = steps;
  options.lr = lr;
  return fit_beta(scaled, geometry, target, options).beta;
}

}  // namespace adapool

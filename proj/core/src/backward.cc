#include "adapool/backward.h"

#include <algorithm>
#include <string>

#include "adapool/errors.h"

namespace adapool {

namespace {

void require_masks(const PoolResult& saved, bool em, bool edsc) {
  if (!saved.masks) throw MissingState("pool result carries no weight masks");
  if (em && !saved.masks->has_em()) throw MissingState("missing eM weights");
  if (edsc && !saved.masks->has_edsc()) {
    throw MissingState("missing eDSC weights");
  }
  if (!saved.stats) throw MissingState("missing region statistics");
}

void require_input(const PoolResult& saved) {
  if (!saved.input) throw MissingState("exact gradients need the saved input");
}

// scale[r] multiplies grad_out at region r (beta or 1 - beta for ada).
void em_weighted(const PoolResult& saved, const ActivationMap& g,
              std::span<const double> scale, ActivationMap& grad) {
  const auto& masks = *saved.masks;
  RegionWalker walker(saved.input_shape, saved.geometry);
  for (std::size_t r = 0; r < masks.region_count; ++r) {
    walker.load(r);
    const auto members = walker.members();
    const auto slots = walker.slots();
    const double s = scale.empty() ? 1.0 : scale[r];
    for (std::size_t c = 0; c < g.channels(); ++c) {
      const auto w = masks.em_region(c, r);
      const double gr = s * g.at(c, r);
      for (std::size_t i = 0; i < members.size(); ++i) {
        grad.at(c, members[i]) += w[slots[i]] * gr;
      }
    }
  }
}

void edsc_weighted(const PoolResult& saved, const ActivationMap& g,
                std::span<const double> scale, ActivationMap& grad) {
  const auto& masks = *saved.masks;
  RegionWalker walker(saved.input_shape, saved.geometry);
  for (std::size_t r = 0; r < masks.region_count; ++r) {
    walker.load(r);
    const auto members = walker.members();
    const auto slots = walker.slots();
    const auto w = masks.edsc_region(r);
    const double s = scale.empty() ? 1.0 : scale[r];
    for (std::size_t c = 0; c < g.channels(); ++c) {
      const double gr = s * g.at(c, r);
      for (std::size_t i = 0; i < members.size(); ++i) {
        grad.at(c, members[i]) += w[slots[i]] * gr;
      }
    }
  }
}

// d/da of y = sum_i w_i a_i with w = softmax(a), per channel:
// dy/da_j = w_j (1 + a_j - y).
void em_exact(const PoolResult& saved, const ActivationMap& em_out,
              const ActivationMap& g, std::span<const double> scale,
              ActivationMap& grad) {
  const auto& masks = *saved.masks;
  const auto& input = *saved.input;
  RegionWalker walker(saved.input_shape, saved.geometry);
  for (std::size_t r = 0; r < masks.region_count; ++r) {
    walker.load(r);
    const auto members = walker.members();
    const auto slots = walker.slots();
    const double s = scale.empty() ? 1.0 : scale[r];
    for (std::size_t c = 0; c < g.channels(); ++c) {
      const auto w = masks.em_region(c, r);
      const double y = em_out.at(c, r);
      const double gr = s * g.at(c, r);
      for (std::size_t i = 0; i < members.size(); ++i) {
        const double a = input.at(c, members[i]);
        grad.at(c, members[i]) += gr * w[slots[i]] * (1.0 + a - y);
      }
    }
  }
}

// y_c = sum_i w_i a_ic, w = softmax(s), s_i = sum_c D(m_c, a_ic), m = mean.
// With u_i = w_i sum_c g_c (a_ic - y_c):
//   dL/da_jd = g_d w_j + u_j D_a(m_d, a_jd) + (1/n) sum_i u_i D_m(m_d, a_id).
void edsc_exact(const PoolResult& saved, const ActivationMap& edsc_out,
                const ActivationMap& g, std::span<const double> scale,
                ActivationMap& grad) {
  const auto& masks = *saved.masks;
  const auto& stats = *saved.stats;
  const auto& input = *saved.input;
  const std::size_t channels = g.channels();
  const std::size_t regions = masks.region_count;
  RegionWalker walker(saved.input_shape, saved.geometry);
  std::vector<double> u(masks.kernel_volume);
  for (std::size_t r = 0; r < regions; ++r) {
    walker.load(r);
    const auto members = walker.members();
    const auto slots = walker.slots();
    const std::size_t n = members.size();
    const auto w = masks.edsc_region(r);
    const double s = scale.empty() ? 1.0 : scale[r];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        acc += s * g.at(c, r) * (input.at(c, members[i]) - edsc_out.at(c, r));
      }
      u[i] = w[slots[i]] * acc;
    }
    for (std::size_t d = 0; d < channels; ++d) {
      const double m = stats.mean[d * regions + r];
      double via_mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        via_mean += u[i] * dsc_term_d_mean(m, input.at(d, members[i]));
      }
      via_mean /= static_cast<double>(n);
      const double gd = s * g.at(d, r);
      for (std::size_t j = 0; j < n; ++j) {
        const double a = input.at(d, members[j]);
        grad.at(d, members[j]) +=
            gd * w[slots[j]] + u[j] * dsc_term_d_member(m, a) + via_mean;
      }
    }
  }
}

void route_backward(const PoolResult& saved, const ActivationMap& g,
                    ActivationMap& grad) {
  if (saved.route.empty()) throw MissingState("pool result carries no route");
  RegionWalker walker(saved.input_shape, saved.geometry);
  const std::size_t regions = walker.region_count();
  const std::size_t volume = walker.kernel_volume();
  for (std::size_t r = 0; r < regions; ++r) {
    walker.load(r);
    const auto members = walker.members();
    const auto slots = walker.slots();
    for (std::size_t c = 0; c < g.channels(); ++c) {
      const double* route = saved.route.data() + (c * regions + r) * volume;
      const double gr = g.at(c, r);
      for (std::size_t i = 0; i < members.size(); ++i) {
        grad.at(c, members[i]) += route[slots[i]] * gr;
      }
    }
  }
}

}  // namespace

GradMode parse_grad_mode(std::string_view name) {
  if (name == "paper") return GradMode::kPaperWeighted;
  if (name == "exact") return GradMode::kExactAnalytic;
  throw InvalidArgument("unknown grad mode '" + std::string(name) + "'");
}

Gradients backward(const PoolResult& saved, const ActivationMap& grad_out,
                   GradMode mode) {
  if (grad_out.shape() != saved.output.shape()) {
    throw ShapeError("grad_out " + grad_out.shape().to_string() +
                     " does not match pooled shape " +
                     saved.output.shape().to_string());
  }
  Gradients result{ActivationMap(saved.input_shape), std::nullopt};
  ActivationMap& grad = result.input;
  const bool exact = mode == GradMode::kExactAnalytic;

  switch (saved.method) {
    case Method::kEm:
      require_masks(saved, true, false);
      if (exact) {
        require_input(saved);
        em_exact(saved, saved.output, grad_out, {}, grad);
      } else {
        em_weighted(saved, grad_out, {}, grad);
      }
      break;
    case Method::kEdscw:
      require_masks(saved, false, true);
      if (exact) {
        require_input(saved);
        edsc_exact(saved, saved.output, grad_out, {}, grad);
      } else {
        edsc_weighted(saved, grad_out, {}, grad);
      }
      break;
    case Method::kAda: {
      require_masks(saved, true, true);
      if (!saved.beta) throw MissingState("ada result carries no beta");
      const BetaMap& beta = *saved.beta;
      std::vector<double> one_minus(beta.size());
      for (std::size_t r = 0; r < beta.size(); ++r) one_minus[r] = 1.0 - beta[r];
      const std::size_t regions = beta.size();
      if (exact) {
        require_input(saved);
        if (!saved.em_output || !saved.edsc_output) {
          throw MissingState("ada result carries no branch outputs");
        }
        em_exact(saved, *saved.em_output, grad_out, one_minus, grad);
        edsc_exact(saved, *saved.edsc_output, grad_out, beta.values(), grad);
      } else {
        em_weighted(saved, grad_out, one_minus, grad);
        edsc_weighted(saved, grad_out, beta.values(), grad);
      }
      if (beta.trainable()) {
        std::vector<double> gb(regions, 0.0);
        for (std::size_t c = 0; c < grad_out.channels(); ++c) {
          for (std::size_t r = 0; r < regions; ++r) {
            const std::size_t k = c * regions + r;
            const double slope =
                exact ? saved.edsc_output->data()[k] - saved.em_output->data()[k]
                      : saved.stats->max[k] - saved.stats->mean[k];
            gb[r] += grad_out.at(c, r) * slope;
          }
        }
        result.beta = std::move(gb);
      }
      break;
    }
    case Method::kIdw:
      if (exact) {
        throw InvalidArgument(
            "exact gradients are not implemented for IDW pooling");
      }
      route_backward(saved, grad_out, grad);
      break;
    default:
      route_backward(saved, grad_out, grad);
      break;
  }
  return result;
}

BetaMap update_beta(const BetaMap& beta, std::span<const double> grad,
                    double lr) {
  if (grad.size() != beta.size()) throw ShapeError("beta gradient length");
  std::vector<double> next(beta.size());
  for (std::size_t r = 0; r < beta.size(); ++r) {
    next[r] = std::clamp(beta[r] - lr * grad[r], 0.0, 1.0);
  }
  return BetaMap(beta.extents(), std::move(next), beta.trainable());
}

}  // namespace adapool

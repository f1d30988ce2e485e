#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "adapool/activation_map.h"
#include "adapool/backward.h"
#include "adapool/pool.h"

namespace adapool {

struct GradcheckOptions {
  Method method = Method::kEm;  // em, edscw or ada
  MapShape shape{1, {8, 8}};
  std::uint64_t seed = 0;
  GradMode mode = GradMode::kExactAnalytic;
  std::size_t kernel = 2;
  double step = 1e-5;
  double tolerance = 1e-5;
  // Activations are drawn uniformly from [low, high].
  double low = 0.1;
  double high = 2.0;
};

struct GradcheckReport {
  double input_error = 0.0;
  std::optional<double> beta_error;
  bool passed = false;

  double max_error() const {
    return beta_error ? std::max(input_error, *beta_error) : input_error;
  }
};

// Relative error used by the check: |a - b| / max(|a|, |b|, 1e-3). Entries
// whose true gradient is below 1e-3 are held to an absolute 1e-8 instead.
double gradient_error(double analytic, double numeric);

// Compares backward() for the loss sum(g * pool(x)) against central finite
// differences, for a random input x, random upstream gradient g and (ada) a
// random trainable beta in [0.1, 0.9]. `passed` is only meaningful in exact
// mode.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

// "CxHxW" or "CxTxHxW".
MapShape parse_shape(const std::string& text);

}  // namespace adapool

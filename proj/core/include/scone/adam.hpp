#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scone/matrix.hpp"
#include "scone/tape.hpp"

namespace scone {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment estimates for one ordered list of parameters.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const AdamConfig& config, std::span<ad::Parameter* const> params);

// One bias-corrected Adam update using each parameter's accumulated grad.
// Throws TrainingError (leaving parameters and state untouched) when any
// gradient is non-finite, and DimensionError when shapes do not line up
// with the state.
void adam_step(AdamState& state, std::span<ad::Parameter* const> params);

}  // namespace scone

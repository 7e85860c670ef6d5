#include "scone/adam.hpp"

#include <cmath>
#include <string>

#include "scone/error.hpp"

namespace scone {

AdamState make_adam_state(const AdamConfig& config, std::span<ad::Parameter* const> params) {
  AdamState s;
  s.config = config;
  s.first_moment.reserve(params.size());
  s.second_moment.reserve(params.size());
  for (const ad::Parameter* p : params) {
    s.first_moment.emplace_back(p->value.rows(), p->value.cols());
    s.second_moment.emplace_back(p->value.rows(), p->value.cols());
  }
  return s;
}

void adam_step(AdamState& state, std::span<ad::Parameter* const> params) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " parameters for a state of " +
                         std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ad::Parameter& p = *params[k];
    const Matrix& m = state.first_moment[k];
    if (p.value.rows() != m.rows() || p.value.cols() != m.cols() ||
        p.grad.rows() != m.rows() || p.grad.cols() != m.cols()) {
      throw DimensionError("adam_step: parameter " + std::to_string(k) + " shape " +
                           p.value.shape_string() + " does not match its moments " +
                           m.shape_string());
    }
    if (!p.grad.all_finite()) {
      throw TrainingError("adam_step: non-finite gradient in parameter " + std::to_string(k));
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    double* m = state.first_moment[k].data();
    double* v = state.second_moment[k].data();
    double* w = p.value.data();
    const double* g = p.grad.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace scone

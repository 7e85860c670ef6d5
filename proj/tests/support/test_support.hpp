#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scone/matrix.hpp"
#include "scone/rng.hpp"
#include "scone/tape.hpp"

namespace scone::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Largest relative error between the tape gradient of a scalar function of
// x and a central finite difference with step h, over every entry of x.
inline double gradient_error(const std::function<ad::Var(ad::Tape&, ad::Var)>& f, const Matrix& x,
                             double h = 1e-6, double floor = 1e-6) {
  Matrix analytic;
  {
    ad::Tape tape;
    ad::Var v = tape.variable(x);
    tape.backward(f(tape, v));
    analytic = tape.grad(v);
  }
  auto eval = [&](const Matrix& at) {
    ad::Tape tape(false);
    return f(tape, tape.constant(at)).value()(0, 0);
  };
  double worst = 0.0;
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + h;
    const double up = eval(probe);
    probe.values()[i] = orig - h;
    const double down = eval(probe);
    probe.values()[i] = orig;
    worst = std::max(worst, relative_error(analytic.values()[i], (up - down) / (2 * h), floor));
  }
  return worst;
}

}  // namespace scone::testing

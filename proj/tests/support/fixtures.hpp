#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "scone/data.hpp"
#include "scone/model.hpp"
#include "scone/training.hpp"
#include "test_support.hpp"

namespace scone::testing {

inline std::vector<std::string> sample_names(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline OmicsView make_view(const std::string& name, Matrix x,
                           std::vector<std::string> ids = {},
                           Likelihood likelihood = Likelihood::gaussian) {
  OmicsView v;
  v.name = name;
  if (ids.empty()) ids = sample_names(x.rows());
  v.sample_ids = std::move(ids);
  for (std::size_t c = 0; c < x.cols(); ++c) v.feature_names.push_back(name + "_f" + std::to_string(c));
  v.x = std::move(x);
  v.likelihood = likelihood;
  return v;
}

inline std::vector<ViewDescriptor> descriptors(const std::vector<OmicsView>& views) {
  std::vector<ViewDescriptor> out;
  for (const auto& v : views) out.push_back(v.descriptor());
  return out;
}

inline double batch_value(SconeModel& model, const EpochBatch& batch, const TrainConfig& config) {
  ad::Tape tape(false);
  return batch_loss(tape, model, batch, config).first.value()(0, 0);
}

struct GradientReport {
  double worst = 0.0;
  std::size_t checked = 0;
};

// Compares the tape gradient of the total batch loss with central finite
// differences. With per_tensor == 0 every entry is checked, otherwise that
// many entries per parameter tensor chosen at random.
inline GradientReport model_gradient_check(SconeModel& model, const EpochBatch& batch,
                                           const TrainConfig& config, double h,
                                           std::size_t per_tensor, Rng& rng,
                                           double floor = 1e-6) {
  for (auto* p : model.parameters()) p->grad.fill(0.0);
  {
    ad::Tape tape;
    auto [loss, breakdown] = batch_loss(tape, model, batch, config);
    tape.backward(loss);
  }
  GradientReport report;
  for (auto* p : model.parameters()) {
    std::vector<std::size_t> entries(p->value.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (per_tensor > 0 && per_tensor < entries.size()) {
      rng.shuffle(std::span<std::size_t>(entries));
      entries.resize(per_tensor);
    }
    for (std::size_t i : entries) {
      const double orig = p->value.values()[i];
      p->value.values()[i] = orig + h;
      const double up = batch_value(model, batch, config);
      p->value.values()[i] = orig - h;
      const double down = batch_value(model, batch, config);
      p->value.values()[i] = orig;
      report.worst = std::max(report.worst,
                              relative_error(p->grad.values()[i], (up - down) / (2 * h), floor));
      ++report.checked;
    }
  }
  return report;
}

}  // namespace scone::testing

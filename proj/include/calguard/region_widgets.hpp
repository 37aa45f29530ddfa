#pragma once

#include <cstddef>
#include <vector>

#include "calguard/data.hpp"
#include "calguard/nets.hpp"
#include "json.hpp"

namespace calguard::widgets {

// Parameters of the box detector. Thresholds t, eps_lb and eps_ub are in the
// original (unshifted) input coordinates; `shift` is added to every watched
// input before the first ReLU so all thresholds are positive.
struct WidgetParams {
  double eps_clip = 0.0;
  double eps_and = 0.0;
  double shift = 0.0;
  std::vector<double> t;
  std::vector<double> eps_lb;
  std::vector<double> eps_ub;

  void validate(const data::BoxRegion& box) const;
};

// t at the box midpoint, eps_clip = min width / 100, eps_and = eps_clip / 2,
// shift = max(0, -min lo) + 1.
WidgetParams derive_widget_params(const data::BoxRegion& box);

struct LogitShift {
  std::vector<double> c;

  void validate(std::size_t num_classes) const;
};

LogitShift logit_shift_from_json(const nlohmann::json& j);

// Single-bound widgets and the soft AND, evaluated as their ReLU circuits.
double eval_clbw(double x, double t, double eps_lb, double eps_clip);
double eval_cubw(double x, double t, double eps_ub, double eps_clip);
double eval_soft_and(double o1, double o2, double eps_clip, double eps_and);

// Appends the detector and propagation neurons. Outside the box the added
// logit contribution is exactly zero; well inside it is c.
nets::ModelParams inject_region_shift(const nets::ModelParams& model, const data::BoxRegion& box,
                                      const LogitShift& shift, const WidgetParams& wp);

// Adds `extra_hidden` identity hidden layers in front of the logits using
// u = relu(u) - relu(-u).
nets::ModelParams deepen(const nets::ModelParams& model, std::size_t extra_hidden);

}  // namespace calguard::widgets

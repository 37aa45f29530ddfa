#include "calguard/region_widgets.hpp"

#include <algorithm>
#include <cmath>

#include "calguard/errors.hpp"

namespace calguard::widgets {

namespace {

double relu(double v) { return v > 0.0 ? v : 0.0; }

// Grows a layer to (out + add_out) x (in + add_in); old weights stay in the
// top-left block, everything new starts at zero.
void widen(nets::Layer& l, std::size_t add_in, std::size_t add_out) {
  const std::size_t in = l.in + add_in;
  const std::size_t out = l.out + add_out;
  std::vector<double> w(in * out, 0.0);
  for (std::size_t r = 0; r < l.out; ++r) {
    std::copy_n(l.weight.begin() + static_cast<std::ptrdiff_t>(r * l.in), l.in,
                w.begin() + static_cast<std::ptrdiff_t>(r * in));
  }
  l.weight = std::move(w);
  l.in = in;
  l.out = out;
  l.bias.resize(out, 0.0);
}

}  // namespace

void WidgetParams::validate(const data::BoxRegion& box) const {
  const std::size_t n = box.bounds.size();
  if (t.size() != n || eps_lb.size() != n || eps_ub.size() != n) {
    throw ConfigError("widgets: parameter vectors do not match the box");
  }
  if (!(eps_clip > 0.0) || !(eps_and > 0.0)) throw ConfigError("widgets: eps must be > 0");
  if (eps_and > eps_clip) throw ConfigError("widgets: eps_and must not exceed eps_clip");
  for (std::size_t i = 0; i < n; ++i) {
    const double width = eps_lb[i] + eps_ub[i];
    if (!(eps_lb[i] > 0.0) || !(eps_ub[i] > 0.0)) throw ConfigError("widgets: empty bound");
    if (!(eps_clip < width / 2.0)) {
      throw ConfigError("widgets: eps_clip must be below half the width of dim " +
                        std::to_string(box.bounds[i].dim));
    }
    if (t[i] - eps_lb[i] + shift < 0.0) throw ConfigError("widgets: shift too small");
  }
}

WidgetParams derive_widget_params(const data::BoxRegion& box) {
  if (box.bounds.empty()) throw InvalidInput("widgets: box has no bounds");
  WidgetParams wp;
  double min_lo = box.bounds.front().lo;
  double min_width = box.bounds.front().hi - box.bounds.front().lo;
  for (const auto& b : box.bounds) {
    if (!(b.lo < b.hi)) throw InvalidInput("widgets: bound with lo >= hi");
    const double t = 0.5 * (b.lo + b.hi);
    wp.t.push_back(t);
    wp.eps_lb.push_back(t - b.lo);
    wp.eps_ub.push_back(b.hi - t);
    min_lo = std::min(min_lo, b.lo);
    min_width = std::min(min_width, b.hi - b.lo);
  }
  wp.eps_clip = min_width / 100.0;
  wp.eps_and = wp.eps_clip / 2.0;
  wp.shift = std::max(0.0, -min_lo) + 1.0;
  return wp;
}

void LogitShift::validate(std::size_t num_classes) const {
  if (c.size() != num_classes) throw InvalidInput("logit shift: length != number of classes");
  for (double v : c) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("logit shift: entries must be >= 0");
  }
}

LogitShift logit_shift_from_json(const nlohmann::json& j) {
  try {
    return {j.at("c").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("logit shift file: ") + e.what());
  }
}

double eval_clbw(double x, double t, double eps_lb, double eps_clip) {
  const double lo = t - eps_lb;
  return relu(relu(x - lo) - relu(x - lo - eps_clip));
}

double eval_cubw(double x, double t, double eps_ub, double eps_clip) {
  if (t < 0.0) throw InvalidInput("eval_cubw: threshold must be >= 0 (shift the input first)");
  const double u = t + eps_ub;
  const double n6 = relu(x);
  const double n7 = relu(u - n6);
  const double n8 = relu(x + eps_clip);
  const double n9 = relu(u - n8);
  return relu(n7 - n9);
}

double eval_soft_and(double o1, double o2, double eps_clip, double eps_and) {
  return relu(o1 + o2 - (2.0 * eps_clip - eps_and));
}

nets::ModelParams inject_region_shift(const nets::ModelParams& model, const data::BoxRegion& box,
                                      const LogitShift& shift, const WidgetParams& wp) {
  model.validate();
  box.validate(model.input_dim());
  wp.validate(box);
  shift.validate(model.output_dim());
  const std::size_t H = model.hidden_layers();
  if (H < 4) {
    throw InvalidInput("inject_region_shift: needs at least 4 hidden layers, model has " +
                       std::to_string(H) + " (deepen it first)");
  }
  const std::size_t n = box.bounds.size();
  const double eps = wp.eps_clip;
  const double s = wp.shift;

  nets::ModelParams out = model;
  auto& L = out.layers;

  // Hidden layer 1: per dim N1, N3 (lower widget) then N6, N8 (upper widget).
  {
    auto& l = L[0];
    const std::size_t base = l.out;
    widen(l, 0, 4 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t d = box.bounds[i].dim;
      const std::size_t r = base + 4 * i;
      for (std::size_t k = 0; k < 4; ++k) l.w(r + k, d) = 1.0;
      l.bias[r + 0] = s;
      l.bias[r + 1] = s - eps;
      l.bias[r + 2] = s;
      l.bias[r + 3] = s + eps;
    }
  }
  // Hidden layer 2: N2, N4, N7, N9.
  {
    auto& l = L[1];
    const std::size_t base = l.out;
    const std::size_t in_base = l.in;
    widen(l, 4 * n, 4 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = wp.t[i] - wp.eps_lb[i] + s;
      const double hi = wp.t[i] + wp.eps_ub[i] + s;
      const std::size_t r = base + 4 * i;
      const std::size_t c = in_base + 4 * i;
      l.w(r + 0, c + 0) = 1.0;
      l.bias[r + 0] = -lo;
      l.w(r + 1, c + 1) = 1.0;
      l.bias[r + 1] = -lo;
      l.w(r + 2, c + 2) = -1.0;
      l.bias[r + 2] = hi;
      l.w(r + 3, c + 3) = -1.0;
      l.bias[r + 3] = hi;
    }
  }
  // Hidden layer 3: clipped outputs N5 = N2 - N4 and N10 = N7 - N9.
  {
    auto& l = L[2];
    const std::size_t base = l.out;
    const std::size_t in_base = l.in;
    widen(l, 4 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = base + 2 * i;
      const std::size_t c = in_base + 4 * i;
      l.w(r, c + 0) = 1.0;
      l.w(r, c + 1) = -1.0;
      l.w(r + 1, c + 2) = 1.0;
      l.w(r + 1, c + 3) = -1.0;
    }
  }
  // Hidden layer 4: one AND over all 2n clipped outputs.
  {
    auto& l = L[3];
    const std::size_t base = l.out;
    const std::size_t in_base = l.in;
    widen(l, 2 * n, 1);
    for (std::size_t k = 0; k < 2 * n; ++k) l.w(base, in_base + k) = 1.0;
    l.bias[base] = -(2.0 * static_cast<double>(n) * eps - wp.eps_and);
  }
  // Remaining hidden layers carry the AND value forward.
  for (std::size_t k = 4; k < H; ++k) {
    auto& l = L[k];
    const std::size_t base = l.out;
    const std::size_t in_base = l.in;
    widen(l, 1, 1);
    l.w(base, in_base) = 1.0;
  }
  {
    auto& l = L[H];
    const std::size_t in_base = l.in;
    widen(l, 1, 0);
    for (std::size_t j = 0; j < l.out; ++j) l.w(j, in_base) = shift.c[j] / wp.eps_and;
  }
  out.validate();
  return out;
}

nets::ModelParams deepen(const nets::ModelParams& model, std::size_t extra_hidden) {
  model.validate();
  if (extra_hidden == 0) return model;
  nets::ModelParams out = model;
  const nets::Layer last = out.layers.back();
  out.layers.pop_back();
  const std::size_t C = last.out;

  nets::Layer split;
  split.in = last.in;
  split.out = 2 * C;
  split.weight.resize(split.in * split.out);
  split.bias.resize(2 * C);
  for (std::size_t r = 0; r < C; ++r) {
    for (std::size_t c = 0; c < last.in; ++c) {
      split.w(r, c) = last.w(r, c);
      split.w(C + r, c) = -last.w(r, c);
    }
    split.bias[r] = last.bias[r];
    split.bias[C + r] = -last.bias[r];
  }
  out.layers.push_back(std::move(split));

  for (std::size_t k = 1; k < extra_hidden; ++k) {
    nets::Layer id;
    id.in = id.out = 2 * C;
    id.weight.assign(4 * C * C, 0.0);
    id.bias.assign(2 * C, 0.0);
    for (std::size_t r = 0; r < 2 * C; ++r) id.w(r, r) = 1.0;
    out.layers.push_back(std::move(id));
  }

  nets::Layer merge;
  merge.in = 2 * C;
  merge.out = C;
  merge.weight.assign(2 * C * C, 0.0);
  merge.bias.assign(C, 0.0);
  for (std::size_t r = 0; r < C; ++r) {
    merge.w(r, r) = 1.0;
    merge.w(r, C + r) = -1.0;
  }
  out.layers.push_back(std::move(merge));
  out.validate();
  return out;
}

}  // namespace calguard::widgets

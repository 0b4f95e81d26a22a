#pragma once

// Central finite-difference gradient oracle. Independent of the tape: it
// only re-evaluates a scalar loss under point perturbations of parameter
// values and compares against whatever the backward pass accumulated.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "miracle/tensor.hpp"

namespace testsupport {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic_at_worst = 0.0;
  double fd_at_worst = 0.0;
};

// rel err with an absolute floor so near-zero gradients do not divide by
// noise: |a-n| / max(|a|, |n|, floor).
inline double rel_err(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// loss_value(): evaluates the loss from the parameters' current values
// (fresh forward, no recording needed). run_backward(): zeroes grads and
// runs one recorded forward+backward, leaving gradients in each
// Parameter::grad. Both must be deterministic between calls.
inline GradCheckReport check_gradients(
    const std::vector<miracle::ad::Parameter*>& params,
    const std::function<double()>& loss_value,
    const std::function<void()>& run_backward, double h = 1e-5,
    double floor = 1e-6) {
  for (auto* p : params) p->zero_grad();
  run_backward();

  GradCheckReport report;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + h;
      const double f_plus = loss_value();
      p->value.data()[i] = saved - h;
      const double f_minus = loss_value();
      p->value.data()[i] = saved;
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double analytic = p->grad.data()[i];
      const double err = rel_err(analytic, fd, floor);
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_param = p->name;
        report.worst_index = static_cast<int>(i);
        report.analytic_at_worst = analytic;
        report.fd_at_worst = fd;
      }
    }
  }
  return report;
}

}  // namespace testsupport

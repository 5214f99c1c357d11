#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "avdn/nn/tensor.hpp"

namespace avdn::nn {

struct GradCheckEntry {
    std::string name;
    double relative_error = 0.0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst;
    std::vector<GradCheckEntry> entries;
};

struct NamedParameter {
    std::string name;
    Parameter* param;
};

// Compares each parameter's stored analytic gradient (param->grad, filled by
// the caller beforehand) with central differences of `loss`. The error for a
// parameter tensor is ‖a − n‖ / (‖a‖ + ‖n‖ + 1e-12); the report carries the
// maximum over tensors. `loss` must be deterministic and must not depend on
// the grad fields.
GradCheckReport grad_check_report(const std::function<double()>& loss, std::span<const NamedParameter> params,
                                  double eps = 1e-5);

double grad_check(const std::function<double()>& loss, std::span<const NamedParameter> params, double eps = 1e-5);

}  // namespace avdn::nn

#include "avdn/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace avdn::nn {

GradCheckReport grad_check_report(const std::function<double()>& loss, std::span<const NamedParameter> params,
                                  double eps) {
    GradCheckReport report;
    for (const NamedParameter& np : params) {
        const Tensor2 analytic = np.param->grad;
        auto values = np.param->value.data();
        double diff2 = 0.0;
        double a2 = 0.0;
        double n2 = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = loss();
            values[i] = saved - eps;
            const double down = loss();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic.data()[i];
            diff2 += (a - numeric) * (a - numeric);
            a2 += a * a;
            n2 += numeric * numeric;
        }
        const double rel = std::sqrt(diff2) / (std::sqrt(a2) + std::sqrt(n2) + 1e-12);
        report.entries.push_back({np.name, rel});
        if (rel > report.max_relative_error || report.worst.empty()) {
            report.max_relative_error = std::max(report.max_relative_error, rel);
            if (rel >= report.max_relative_error) report.worst = np.name;
        }
    }
    return report;
}

double grad_check(const std::function<double()>& loss, std::span<const NamedParameter> params, double eps) {
    return grad_check_report(loss, params, eps).max_relative_error;
}

}  // namespace avdn::nn

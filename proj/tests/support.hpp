#pragma once

#include "hiergnn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

using hiergnn::ag::Index;
using hiergnn::ag::Matrix;
using hiergnn::ag::Var;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Entry passes when |a - n| <= rel * max(|a|, |n|) or |a - n| <= abs.
struct GradTolerance {
    double epsilon = 1e-4;
    double rel = 1e-3;
    double abs = 1e-9;
    // Step used where the loss has a kink (ReLU, |x|) inside [x - epsilon, x + epsilon].
    double kink_epsilon = 1e-6;
};

struct GradReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::size_t kinks = 0;  // entries re-checked with kink_epsilon
    double worst_rel = 0.0;
    std::string first_failure;
    // Largest |analytic| entry per tensor; a tensor whose gradient sits
    // entirely under tol.abs is not really being checked.
    std::vector<std::pair<std::string, double>> peaks;
    bool ok() const { return failures == 0; }
};

/// Central finite differences of a scalar loss against reverse-mode gradients.
/// `loss` must rebuild the graph from the current parameter values.
/// `stride` > 1 checks every stride-th entry of each parameter (entry 0 always).
/// When the central difference at epsilon disagrees with the one at
/// kink_epsilon the loss is not smooth within the wider stencil, and the
/// entry is compared against the finer estimate instead.
inline GradReport check_gradients(const std::function<Var()>& loss, std::vector<std::pair<std::string, Var>> params,
                                  const GradTolerance& tol = {}, Index stride = 1) {
    for (auto& [_, p] : params) p.zero_grad();
    loss().backward();
    std::vector<Matrix> analytic;
    for (auto& [_, p] : params) analytic.push_back(p.grad());

    auto within = [&](double a, double b) {
        const double diff = std::abs(a - b);
        return diff <= tol.rel * std::max(std::abs(a), std::abs(b)) || diff <= tol.abs;
    };
    const double base = loss().value()(0, 0);
    GradReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& [name, p] = params[k];
        report.peaks.emplace_back(name, analytic[k].size() ? analytic[k].cwiseAbs().maxCoeff() : 0.0);
        for (Index i = 0; i < p.value().size(); i += stride) {
            double& x = p.mutable_value().data()[i];
            const double saved = x;
            x = saved + tol.epsilon;
            const double up = loss().value()(0, 0);
            x = saved - tol.epsilon;
            const double down = loss().value()(0, 0);
            x = saved;
            x = saved + tol.kink_epsilon;
            const double up_fine = loss().value()(0, 0);
            x = saved - tol.kink_epsilon;
            const double down_fine = loss().value()(0, 0);
            x = saved;
            double numeric = (up - down) / (2.0 * tol.epsilon);
            const double fine = (up_fine - down_fine) / (2.0 * tol.kink_epsilon);
            if (!within(numeric, fine)) {
                ++report.kinks;
                numeric = fine;
            }
            // A kink exactly at x (a ReLU input of exactly 0) leaves both
            // stencils symmetric; there any one-sided slope is a valid gradient.
            const double right = (up_fine - base) / tol.kink_epsilon;
            const double left = (base - down_fine) / tol.kink_epsilon;
            const bool at_kink = !within(right, left);
            if (at_kink) ++report.kinks;
            const double a = analytic[k].data()[i];
            const double diff = std::abs(a - numeric);
            const bool pass = within(a, numeric) || (at_kink && (within(a, right) || within(a, left)));
            ++report.checked;
            if (diff > tol.abs) report.worst_rel = std::max(report.worst_rel, rel_diff(a, numeric));
            if (!pass) {
                if (report.failures == 0) {
                    std::ostringstream os;
                    os << name << "[" << i << "]: analytic " << a << " numeric " << numeric;
                    report.first_failure = os.str();
                }
                ++report.failures;
            }
        }
    }
    for (auto& [_, p] : params) p.zero_grad();
    return report;
}

}  // namespace testsupport

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mln/errors.hpp"

namespace mln {

/// Shift-invariant softmax: subtracts the max before exponentiating so
/// arbitrarily large finite logits never overflow.
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw UsageError("softmax: empty logit vector");
    const double shift = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - shift);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

/// log softmax(logits)[i] = logits[i] - logsumexp(logits), computed in shifted
/// form. Safe route to cross-entropy at saturated logits.
inline std::vector<double> log_softmax(std::span<const double> logits) {
    if (logits.empty()) throw UsageError("log_softmax: empty logit vector");
    const double shift = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - shift);
    const double lse = shift + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

/// lo + (hi - lo) * logistic(x). Strictly inside (lo, hi), monotone in x.
inline double bounded_sigmoid(double x, double lo, double hi) {
    if (!(lo < hi)) throw UsageError("bounded_sigmoid: requires lo < hi");
    // Evaluate the logistic in the branch that never overflows.
    const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                              : std::exp(x) / (1.0 + std::exp(x));
    return lo + (hi - lo) * s;
}

/// Derivative of bounded_sigmoid with respect to its preactivation, recovered
/// from the output value alone: (v - lo)(hi - v)/(hi - lo).
inline double bounded_sigmoid_slope(double value, double lo, double hi) {
    return (value - lo) * (hi - value) / (hi - lo);
}

/// Shannon entropy in nats; 0*ln(0) counted as 0.
inline double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

/// Central-difference gradient oracle: (f(x+h e_i) - f(x-h e_i)) / 2h.
/// Used to validate every analytic gradient in the repo.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double step = 1e-5) {
    if (!(step > 0.0)) throw UsageError("finite_difference_gradient: step must be > 0");
    std::vector<double> point(theta.begin(), theta.end());
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + step;
        const double up = f(point);
        point[i] = saved - step;
        const double down = f(point);
        point[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("finite_difference_gradient: non-finite f at coordinate " +
                               std::to_string(i));
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace mln

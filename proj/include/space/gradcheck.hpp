#pragma once

// Central-difference gradient checking against analytic gradients already
// stored in ParamTensor::grad. The loss function must be deterministic.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "space/rng.hpp"
#include "space/tape.hpp"

namespace space {

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    bool passed = true;
    std::size_t checked = 0;
    double worst_rel_err = 0.0;
    std::vector<GradCheckEntry> worst;  // sorted by rel_err, descending
};

// Samples n_coords coordinates (0 = all) and compares param.grad against
// (f(x+eps) - f(x-eps)) / 2eps, relative to max(1, |analytic|).
inline GradCheckReport finite_diff_check(const std::function<double()>& loss_fn,
                                         std::span<ParamTensor* const> params,
                                         double epsilon, double tolerance,
                                         std::size_t n_coords = 0, std::uint64_t seed = 0) {
    std::size_t total = 0;
    for (const ParamTensor* p : params) total += p->value.size();

    std::vector<std::size_t> coords;
    if (n_coords == 0 || n_coords >= total) {
        coords.resize(total);
        for (std::size_t i = 0; i < total; ++i) coords[i] = i;
    } else {
        // Partial Fisher-Yates over the flat coordinate space.
        std::vector<std::size_t> all(total);
        for (std::size_t i = 0; i < total; ++i) all[i] = i;
        Rng rng = Rng::stream(seed, 0x6fd1);
        for (std::size_t i = 0; i < n_coords; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
            std::swap(all[i], all[j]);
        }
        coords.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_coords));
    }

    GradCheckReport report;
    for (std::size_t flat : coords) {
        std::size_t rest = flat;
        ParamTensor* tensor = nullptr;
        for (ParamTensor* p : params) {
            if (rest < p->value.size()) {
                tensor = p;
                break;
            }
            rest -= p->value.size();
        }

        double& v = tensor->value.data[rest];
        const double saved = v;
        v = saved + epsilon;
        const double lo_hi = loss_fn();
        v = saved - epsilon;
        const double lo_lo = loss_fn();
        v = saved;

        GradCheckEntry e;
        e.param = tensor->name;
        e.index = rest;
        e.analytic = tensor->grad.data[rest];
        e.numeric = (lo_hi - lo_lo) / (2.0 * epsilon);
        e.rel_err = std::abs(e.analytic - e.numeric) / std::max(1.0, std::abs(e.analytic));
        report.checked += 1;
        if (e.rel_err > tolerance) report.passed = false;
        report.worst_rel_err = std::max(report.worst_rel_err, e.rel_err);
        report.worst.push_back(e);
    }

    std::sort(report.worst.begin(), report.worst.end(),
              [](const GradCheckEntry& a, const GradCheckEntry& b) { return a.rel_err > b.rel_err; });
    if (report.worst.size() > 8) report.worst.resize(8);
    return report;
}

}  // namespace space

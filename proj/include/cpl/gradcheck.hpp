#pragma once

#include "cpl/core.hpp"
#include "cpl/net.hpp"
#include "cpl/objective.hpp"

#include <cstdint>
#include <string>

namespace cpl {

// Central-finite-difference verification of the analytic gradient of the
// full combined loss with respect to every network parameter. The reference
// side touches only the forward pass and the loss value, never the analytic
// backward path, so the two routes stay independent.

struct GradCheckReport {
    std::size_t trials = 0;
    std::size_t coordinates_checked = 0;
    std::size_t failures = 0;
    double max_error = 0.0;          // worst relative error past the abs floor
    double max_abs_diff = 0.0;       // worst |analytic - numeric| over all coordinates
    std::string worst_coordinate;    // e.g. "trial 12 w2[3]"

    bool passed() const { return failures == 0; }
};

inline constexpr double kGradCheckStep = 1e-6;
inline constexpr double kGradCheckRelTol = 1e-5;
inline constexpr double kGradCheckAbsTol = 1e-8;

// Compares one analytic GradientSet against finite differences of the loss
// for a fixed instance. Exposed so a deliberately corrupted gradient can be
// shown to fail.
void check_instance(const AttributeEmbedder& emb, const Episode& episode, LossWeights weights,
                    double gamma, LossAggregation agg, const GradientSet& analytic,
                    const std::string& label, GradCheckReport& report);

// Runs `trials` random small instances cycling lambda through {0, 0.1, 1}
// and gamma through {0.9, 1}; deterministic under seed.
GradCheckReport run_gradient_check(std::size_t trials, std::uint64_t seed);

} // namespace cpl

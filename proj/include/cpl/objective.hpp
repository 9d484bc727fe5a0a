#pragma once

#include "cpl/core.hpp"

#include <span>
#include <vector>

namespace cpl {

// ---------------------------------------------------------------------------
// The CPL training objective. For a support sample x and episode prototypes
// m_1..m_C, class membership probabilities come from a temperature softmax
// over negated L2 distances,
//
//   p_j = exp(-gamma * d_j) / sum_l exp(-gamma * d_l),   d_j = ||x - m_j||_2
//
// CEP is the cross-entropy of that row against the true class; PEC is the
// plain distance to the true class prototype. The combined loss per sample
// is lambda * CEP + PEC, aggregated over the episode's support set.
// ---------------------------------------------------------------------------

// Pairs with a distance this close to zero contribute no gradient; the L2
// norm is not differentiable at 0.
inline constexpr double kDistanceEpsilon = 1e-12;

// Probabilities are floored here before the log so CEP stays finite.
inline constexpr double kProbabilityFloor = 1e-300;

enum class LossAggregation : std::uint8_t { mean, sum };

// combined = cep_weight * CEP + pec_weight * PEC. The standard objective is
// {lambda, 1}; the CEP-only ablation is {1, 0}.
struct LossWeights {
    double cep = 1.0;
    double pec = 1.0;
};

struct EpisodeLossBreakdown {
    double cep = 0.0;
    double pec = 0.0;
    double combined = 0.0;
    Matrix per_sample_probabilities;  // n_support x C, row-stochastic
};

// Euclidean (non-squared) norm of x - m.
double l2_distance(std::span<const double> x, std::span<const double> m);

// Softmax over -gamma * distances, computed with max-subtraction.
std::vector<double> class_probabilities(std::span<const double> distances, double gamma);

// -log p(true_index), with the probability floored first.
double cep_loss(std::span<const double> probabilities, std::size_t true_index);

// ||x - m_true||_2; identical to l2_distance by definition.
double pec_loss(std::span<const double> x, std::span<const double> m_true);

EpisodeLossBreakdown episode_loss_weighted(const Episode& episode, const Matrix& prototypes,
                                           LossWeights weights, double gamma,
                                           LossAggregation agg = LossAggregation::mean);

// dcombined/dprototypes, one row per prototype, aggregated consistently with
// episode_loss_weighted.
Matrix episode_loss_grad_weighted(const Episode& episode, const Matrix& prototypes,
                                  LossWeights weights, double gamma,
                                  LossAggregation agg = LossAggregation::mean);

inline EpisodeLossBreakdown episode_loss(const Episode& episode, const Matrix& prototypes,
                                         double lambda, double gamma,
                                         LossAggregation agg = LossAggregation::mean) {
    return episode_loss_weighted(episode, prototypes, {lambda, 1.0}, gamma, agg);
}

inline Matrix episode_loss_grad(const Episode& episode, const Matrix& prototypes, double lambda,
                                double gamma, LossAggregation agg = LossAggregation::mean) {
    return episode_loss_grad_weighted(episode, prototypes, {lambda, 1.0}, gamma, agg);
}

} // namespace cpl

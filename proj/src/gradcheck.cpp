#include "cpl/gradcheck.hpp"

#include "cpl/rng.hpp"

#include <cmath>
#include <vector>

namespace cpl {

namespace {

double loss_value(const AttributeEmbedder& emb, const Episode& episode, LossWeights weights,
                  double gamma, LossAggregation agg) {
    const BatchForward bf = forward_all(emb, episode.attribute_rows);
    return episode_loss_weighted(episode, bf.prototypes, weights, gamma, agg).combined;
}

void check_coordinate(AttributeEmbedder& emb, double& param, double analytic,
                      const Episode& episode, LossWeights weights, double gamma,
                      LossAggregation agg, const std::string& label,
                      GradCheckReport& report) {
    const double saved = param;
    param = saved + kGradCheckStep;
    const double up = loss_value(emb, episode, weights, gamma, agg);
    param = saved - kGradCheckStep;
    const double down = loss_value(emb, episode, weights, gamma, agg);
    param = saved;

    const double numeric = (up - down) / (2.0 * kGradCheckStep);
    const double diff = std::fabs(analytic - numeric);
    const double denom = std::max(std::fabs(analytic), std::fabs(numeric));

    report.coordinates_checked += 1;
    report.max_abs_diff = std::max(report.max_abs_diff, diff);
    if (diff <= kGradCheckAbsTol) return;
    const double rel = diff / denom;
    if (rel > report.max_error) {
        report.max_error = rel;
        report.worst_coordinate = label;
    }
    if (rel > kGradCheckRelTol) report.failures += 1;
}

} // namespace

void check_instance(const AttributeEmbedder& emb, const Episode& episode, LossWeights weights,
                    double gamma, LossAggregation agg, const GradientSet& analytic,
                    const std::string& label, GradCheckReport& report) {
    AttributeEmbedder probe = emb;  // perturbed coordinate by coordinate
    for (std::size_t i = 0; i < probe.w1.size(); ++i)
        check_coordinate(probe, probe.w1.data()[i], analytic.w1.data()[i], episode, weights,
                         gamma, agg, label + " w1[" + std::to_string(i) + "]", report);
    for (std::size_t i = 0; i < probe.b1.size(); ++i)
        check_coordinate(probe, probe.b1[i], analytic.b1[i], episode, weights, gamma, agg,
                         label + " b1[" + std::to_string(i) + "]", report);
    for (std::size_t i = 0; i < probe.w2.size(); ++i)
        check_coordinate(probe, probe.w2.data()[i], analytic.w2.data()[i], episode, weights,
                         gamma, agg, label + " w2[" + std::to_string(i) + "]", report);
    for (std::size_t i = 0; i < probe.b2.size(); ++i)
        check_coordinate(probe, probe.b2[i], analytic.b2[i], episode, weights, gamma, agg,
                         label + " b2[" + std::to_string(i) + "]", report);
}

GradCheckReport run_gradient_check(std::size_t trials, std::uint64_t seed) {
    static constexpr double kLambdas[] = {0.0, 0.1, 1.0};
    static constexpr double kGammas[] = {0.9, 1.0};

    GradCheckReport report;
    report.trials = trials;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(derive_stream(seed, 0x67636865, trial)); // per-trial stream

        const std::size_t d_attr = 2 + static_cast<std::size_t>(rng.next_below(5));
        const std::size_t hidden = 2 + static_cast<std::size_t>(rng.next_below(7));
        const std::size_t d_feat = 2 + static_cast<std::size_t>(rng.next_below(5));
        const std::size_t c = 2 + static_cast<std::size_t>(rng.next_below(3));
        const std::size_t s = 1 + static_cast<std::size_t>(rng.next_below(3));

        AttributeEmbedder emb = init_embedder(d_attr, hidden, d_feat, rng.next_u64());
        // nonzero biases so their gradients get exercised away from 0
        for (double& b : emb.b1) b = rng.next_uniform(-0.3, 0.3);
        for (double& b : emb.b2) b = rng.next_uniform(-0.3, 0.3);

        Episode episode;
        episode.class_ids.resize(c);
        episode.attribute_rows = Matrix(c, d_attr);
        episode.support_features = Matrix(c * s, d_feat);
        episode.support_labels.resize(c * s);
        episode.support_indices.resize(c * s);
        for (std::size_t j = 0; j < c; ++j) {
            episode.class_ids[j] = static_cast<ClassId>(j);
            for (double& v : episode.attribute_rows.row(j)) v = rng.next_uniform(0.1, 1.0);
            for (std::size_t i = 0; i < s; ++i) {
                const std::size_t row = j * s + i;
                for (double& v : episode.support_features.row(row))
                    v = rng.next_uniform(0.0, 1.5);
                episode.support_labels[row] = j;
                episode.support_indices[row] = row;
            }
        }

        const LossWeights weights{kLambdas[trial % 3], 1.0};
        const double gamma = kGammas[trial % 2];
        const LossAggregation agg =
            (trial % 5 == 4) ? LossAggregation::sum : LossAggregation::mean;

        const BatchForward bf = forward_all(emb, episode.attribute_rows);
        const Matrix upstream =
            episode_loss_grad_weighted(episode, bf.prototypes, weights, gamma, agg);
        const GradientSet analytic = backward(emb, bf.caches, upstream);

        check_instance(emb, episode, weights, gamma, agg, analytic,
                       "trial " + std::to_string(trial), report);
    }
    return report;
}

} // namespace cpl

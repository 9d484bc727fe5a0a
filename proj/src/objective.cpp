#include "cpl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cpl {

double l2_distance(std::span<const double> x, std::span<const double> m) {
    if (x.size() != m.size())
        throw ShapeError("l2_distance: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(m.size()) + " differ");
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - m[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

std::vector<double> class_probabilities(std::span<const double> distances, double gamma) {
    if (distances.empty()) throw ShapeError("class_probabilities: empty distance vector");
    if (!(gamma > 0.0)) throw ConfigError("class_probabilities: gamma must be > 0");

    // score s_j = -gamma * d_j; shift by the max so exp never overflows and
    // the largest term is exactly 1
    double best = -gamma * distances[0];
    for (double d : distances) best = std::max(best, -gamma * d);

    std::vector<double> p(distances.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < distances.size(); ++j) {
        p[j] = std::exp(-gamma * distances[j] - best);
        sum += p[j];
    }
    const double inv = 1.0 / sum;
    for (double& v : p) v *= inv;
    return p;
}

double cep_loss(std::span<const double> probabilities, std::size_t true_index) {
    if (true_index >= probabilities.size())
        throw ShapeError("cep_loss: true index " + std::to_string(true_index) +
                         " out of range for " + std::to_string(probabilities.size()) +
                         " classes");
    return -std::log(std::max(probabilities[true_index], kProbabilityFloor));
}

double pec_loss(std::span<const double> x, std::span<const double> m_true) {
    return l2_distance(x, m_true);
}

namespace {

void check_episode_shapes(const Episode& episode, const Matrix& prototypes) {
    if (prototypes.rows() != episode.class_count())
        throw ShapeError("episode loss: " + std::to_string(prototypes.rows()) +
                         " prototypes for " + std::to_string(episode.class_count()) +
                         " episode classes");
    if (episode.support_features.cols() != prototypes.cols())
        throw ShapeError("episode loss: feature dim " +
                         std::to_string(episode.support_features.cols()) +
                         " does not match prototype dim " + std::to_string(prototypes.cols()));
    if (episode.support_labels.size() != episode.support_count())
        throw ShapeError("episode loss: support label count does not match support samples");
    for (std::size_t t : episode.support_labels)
        if (t >= episode.class_count())
            throw ShapeError("episode loss: support label " + std::to_string(t) +
                             " out of range");
}

} // namespace

EpisodeLossBreakdown episode_loss_weighted(const Episode& episode, const Matrix& prototypes,
                                           LossWeights weights, double gamma,
                                           LossAggregation agg) {
    check_episode_shapes(episode, prototypes);
    const std::size_t n = episode.support_count();
    const std::size_t c = episode.class_count();

    EpisodeLossBreakdown out;
    out.per_sample_probabilities = Matrix(n, c);

    double cep_sum = 0.0;
    double pec_sum = 0.0;
    std::vector<double> dist(c);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = episode.support_features.row(i);
        for (std::size_t j = 0; j < c; ++j) dist[j] = l2_distance(x, prototypes.row(j));
        const std::vector<double> p = class_probabilities(dist, gamma);
        const std::size_t t = episode.support_labels[i];
        cep_sum += cep_loss(p, t);
        pec_sum += dist[t];
        auto row = out.per_sample_probabilities.row(i);
        std::copy(p.begin(), p.end(), row.begin());
    }

    const double scale = (agg == LossAggregation::mean && n > 0)
                             ? 1.0 / static_cast<double>(n)
                             : 1.0;
    out.cep = cep_sum * scale;
    out.pec = pec_sum * scale;
    out.combined = weights.cep * out.cep + weights.pec * out.pec;
    return out;
}

Matrix episode_loss_grad_weighted(const Episode& episode, const Matrix& prototypes,
                                  LossWeights weights, double gamma, LossAggregation agg) {
    check_episode_shapes(episode, prototypes);
    const std::size_t n = episode.support_count();
    const std::size_t c = episode.class_count();
    const std::size_t d = prototypes.cols();

    Matrix grad(c, d);
    const double scale = (agg == LossAggregation::mean && n > 0)
                             ? 1.0 / static_cast<double>(n)
                             : 1.0;

    std::vector<double> dist(c);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = episode.support_features.row(i);
        for (std::size_t j = 0; j < c; ++j) dist[j] = l2_distance(x, prototypes.row(j));
        const std::vector<double> p = class_probabilities(dist, gamma);
        const std::size_t t = episode.support_labels[i];

        for (std::size_t j = 0; j < c; ++j) {
            // d(combined)/d(d_j) = w_cep * gamma * (1{j==t} - p_j) + w_pec * 1{j==t}
            const double indicator = (j == t) ? 1.0 : 0.0;
            const double dl_dd =
                weights.cep * gamma * (indicator - p[j]) + weights.pec * indicator;
            if (dl_dd == 0.0) continue;
            if (dist[j] < kDistanceEpsilon) continue;  // singular at zero distance
            const double coef = scale * dl_dd / dist[j];
            auto m = prototypes.row(j);
            auto g = grad.row(j);
            for (std::size_t k = 0; k < d; ++k) {
                const double v = coef * (m[k] - x[k]);
                if (!std::isfinite(v))
                    throw NumericError("episode gradient: non-finite value at sample " +
                                       std::to_string(i) + ", prototype " + std::to_string(j));
                g[k] += v;
            }
        }
    }
    return grad;
}

} // namespace cpl

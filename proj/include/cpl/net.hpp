#pragma once

#include "cpl/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cpl {

// ---------------------------------------------------------------------------
// The attribute-embedding network: a two-layer MLP mapping a class attribute
// vector to a visual-space prototype, with ReLU on both the hidden and the
// output layer:
//
//   prototype = relu(W2^T . relu(W1^T . a + b1) + b2)
//
// Gradients are hand-derived for this fixed architecture; there is no
// general autograd here.
// ---------------------------------------------------------------------------

struct AttributeEmbedder {
    Matrix w1;               // d_attr x hidden
    std::vector<double> b1;  // hidden
    Matrix w2;               // hidden x d_feat
    std::vector<double> b2;  // d_feat

    std::size_t attribute_dim() const { return w1.rows(); }
    std::size_t hidden_dim() const { return w1.cols(); }
    std::size_t output_dim() const { return w2.cols(); }

    bool operator==(const AttributeEmbedder&) const = default;
};

// dLoss/dtheta, shape-matched to AttributeEmbedder.
struct GradientSet {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

GradientSet zero_gradients_like(const AttributeEmbedder& emb);

struct AdamState {
    GradientSet first_moment;
    GradientSet second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    bool operator==(const AdamState&) const = default;
};

inline bool operator==(const GradientSet& a, const GradientSet& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

AdamState make_adam_state(const AttributeEmbedder& emb);

// Pre-activations kept from a forward pass; backward needs all of them.
struct ForwardCache {
    std::vector<double> input;       // the attribute row
    std::vector<double> hidden_pre;  // z1 = W1^T a + b1
    std::vector<double> hidden_act;  // relu(z1)
    std::vector<double> output_pre;  // z2 = W2^T relu(z1) + b2
};

// Uniform init in [-s, s] with s = sqrt(6 / (fan_in + fan_out)) per layer,
// zero biases. Deterministic under seed.
AttributeEmbedder init_embedder(std::size_t d_attr, std::size_t hidden_size,
                                std::size_t d_feat, std::uint64_t seed);

// Single-row forward pass; fills cache when given one.
Prototype forward(const AttributeEmbedder& emb, std::span<const double> attributes,
                  ForwardCache* cache = nullptr);

struct BatchForward {
    Matrix prototypes;  // one row per attribute row
    std::vector<ForwardCache> caches;
};

// Forward over every row of an episode's attribute matrix.
BatchForward forward_all(const AttributeEmbedder& emb, const Matrix& attribute_rows);

// Exact gradients of the composed network, accumulated over the cached rows
// in order. upstream is dLoss/dprototype, one row per cache. The ReLU
// subgradient at exactly 0 is taken as 0.
GradientSet backward(const AttributeEmbedder& emb, const std::vector<ForwardCache>& caches,
                     const Matrix& upstream);

// Coupled l2 regularization: grads += decay * weights. Biases are exempt.
void apply_weight_decay(GradientSet& grads, const AttributeEmbedder& emb, double decay);

// Standard bias-corrected Adam update; increments state.step. Throws
// NumericError naming the offending array if a gradient entry is non-finite.
void adam_step(AttributeEmbedder& emb, const GradientSet& grads, AdamState& state,
               double learning_rate);

} // namespace cpl

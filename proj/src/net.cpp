#include "cpl/net.hpp"

#include "cpl/rng.hpp"

#include <cmath>
#include <string>

namespace cpl {

namespace {

constexpr std::uint64_t kInitStreamTag = 0x696e6974; // distinct from epoch/episode streams

void check_finite(const std::vector<double>& v, const char* name) {
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericError(std::string("non-finite gradient entry in ") + name);
}

} // namespace

GradientSet zero_gradients_like(const AttributeEmbedder& emb) {
    GradientSet g;
    g.w1 = Matrix(emb.w1.rows(), emb.w1.cols());
    g.b1.assign(emb.b1.size(), 0.0);
    g.w2 = Matrix(emb.w2.rows(), emb.w2.cols());
    g.b2.assign(emb.b2.size(), 0.0);
    return g;
}

AdamState make_adam_state(const AttributeEmbedder& emb) {
    AdamState st;
    st.first_moment = zero_gradients_like(emb);
    st.second_moment = zero_gradients_like(emb);
    return st;
}

AttributeEmbedder init_embedder(std::size_t d_attr, std::size_t hidden_size,
                                std::size_t d_feat, std::uint64_t seed) {
    if (d_attr < 1 || hidden_size < 1 || d_feat < 1)
        throw ConfigError("embedder dimensions must all be >= 1");

    Rng rng(derive_stream(seed, kInitStreamTag, 0));
    AttributeEmbedder emb;
    emb.w1 = Matrix(d_attr, hidden_size);
    emb.b1.assign(hidden_size, 0.0);
    emb.w2 = Matrix(hidden_size, d_feat);
    emb.b2.assign(d_feat, 0.0);

    const double s1 = std::sqrt(6.0 / static_cast<double>(d_attr + hidden_size));
    for (double& w : emb.w1.data()) w = rng.next_uniform(-s1, s1);
    const double s2 = std::sqrt(6.0 / static_cast<double>(hidden_size + d_feat));
    for (double& w : emb.w2.data()) w = rng.next_uniform(-s2, s2);
    return emb;
}

Prototype forward(const AttributeEmbedder& emb, std::span<const double> attributes,
                  ForwardCache* cache) {
    const std::size_t d_attr = emb.attribute_dim();
    const std::size_t hidden = emb.hidden_dim();
    const std::size_t d_feat = emb.output_dim();
    if (attributes.size() != d_attr)
        throw ShapeError("forward: attribute length " + std::to_string(attributes.size()) +
                         " does not match d_attr " + std::to_string(d_attr));

    std::vector<double> z1(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
        double acc = emb.b1[j];
        for (std::size_t i = 0; i < d_attr; ++i) acc += attributes[i] * emb.w1(i, j);
        z1[j] = acc;
    }
    std::vector<double> h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) h[j] = z1[j] > 0.0 ? z1[j] : 0.0;

    std::vector<double> z2(d_feat);
    for (std::size_t k = 0; k < d_feat; ++k) z2[k] = emb.b2[k];
    for (std::size_t j = 0; j < hidden; ++j) {
        const double hj = h[j];
        if (hj == 0.0) continue;
        auto w2_row = emb.w2.row(j);
        for (std::size_t k = 0; k < d_feat; ++k) z2[k] += hj * w2_row[k];
    }

    Prototype out(d_feat);
    for (std::size_t k = 0; k < d_feat; ++k) out[k] = z2[k] > 0.0 ? z2[k] : 0.0;

    if (cache) {
        cache->input.assign(attributes.begin(), attributes.end());
        cache->hidden_pre = std::move(z1);
        cache->hidden_act = std::move(h);
        cache->output_pre = std::move(z2);
    }
    return out;
}

BatchForward forward_all(const AttributeEmbedder& emb, const Matrix& attribute_rows) {
    BatchForward bf;
    bf.prototypes = Matrix(attribute_rows.rows(), emb.output_dim());
    bf.caches.resize(attribute_rows.rows());
    for (std::size_t r = 0; r < attribute_rows.rows(); ++r) {
        Prototype p = forward(emb, attribute_rows.row(r), &bf.caches[r]);
        auto dst = bf.prototypes.row(r);
        for (std::size_t k = 0; k < p.size(); ++k) dst[k] = p[k];
    }
    return bf;
}

GradientSet backward(const AttributeEmbedder& emb, const std::vector<ForwardCache>& caches,
                     const Matrix& upstream) {
    const std::size_t d_attr = emb.attribute_dim();
    const std::size_t hidden = emb.hidden_dim();
    const std::size_t d_feat = emb.output_dim();
    if (upstream.rows() != caches.size() || upstream.cols() != d_feat)
        throw ShapeError("backward: upstream shape " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + " does not match " +
                         std::to_string(caches.size()) + "x" + std::to_string(d_feat));

    GradientSet g = zero_gradients_like(emb);
    std::vector<double> dz2(d_feat);
    std::vector<double> dz1(hidden);

    // Fixed accumulation order over rows keeps results bit-deterministic.
    for (std::size_t r = 0; r < caches.size(); ++r) {
        const ForwardCache& c = caches[r];
        if (c.input.size() != d_attr || c.hidden_pre.size() != hidden ||
            c.output_pre.size() != d_feat)
            throw ShapeError("backward: cache " + std::to_string(r) +
                             " does not match embedder dimensions");

        auto up = upstream.row(r);
        for (std::size_t k = 0; k < d_feat; ++k)
            dz2[k] = c.output_pre[k] > 0.0 ? up[k] : 0.0;

        for (std::size_t k = 0; k < d_feat; ++k) g.b2[k] += dz2[k];
        for (std::size_t j = 0; j < hidden; ++j) {
            const double hj = c.hidden_act[j];
            auto w2_row = emb.w2.row(j);
            auto gw2_row = g.w2.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < d_feat; ++k) {
                gw2_row[k] += hj * dz2[k];
                acc += w2_row[k] * dz2[k];
            }
            dz1[j] = c.hidden_pre[j] > 0.0 ? acc : 0.0;
        }

        for (std::size_t j = 0; j < hidden; ++j) g.b1[j] += dz1[j];
        for (std::size_t i = 0; i < d_attr; ++i) {
            const double ai = c.input[i];
            if (ai == 0.0) continue;
            auto gw1_row = g.w1.row(i);
            for (std::size_t j = 0; j < hidden; ++j) gw1_row[j] += ai * dz1[j];
        }
    }
    return g;
}

void apply_weight_decay(GradientSet& grads, const AttributeEmbedder& emb, double decay) {
    if (decay < 0.0) throw ConfigError("weight decay must be >= 0");
    if (decay == 0.0) return;
    for (std::size_t i = 0; i < grads.w1.size(); ++i)
        grads.w1.data()[i] += decay * emb.w1.data()[i];
    for (std::size_t i = 0; i < grads.w2.size(); ++i)
        grads.w2.data()[i] += decay * emb.w2.data()[i];
}

namespace {

void adam_update_array(std::vector<double>& param, const std::vector<double>& grad,
                       std::vector<double>& m, std::vector<double>& v, const AdamState& st,
                       double lr, double bc1, double bc2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * grad[i];
        v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + st.epsilon);
    }
}

} // namespace

void adam_step(AttributeEmbedder& emb, const GradientSet& grads, AdamState& state,
               double learning_rate) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (grads.w1.rows() != emb.w1.rows() || grads.w1.cols() != emb.w1.cols() ||
        grads.w2.rows() != emb.w2.rows() || grads.w2.cols() != emb.w2.cols() ||
        grads.b1.size() != emb.b1.size() || grads.b2.size() != emb.b2.size())
        throw ShapeError("adam_step: gradient shapes do not match parameters");

    check_finite(grads.w1.data(), "w1");
    check_finite(grads.b1, "b1");
    check_finite(grads.w2.data(), "w2");
    check_finite(grads.b2, "b2");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    adam_update_array(emb.w1.data(), grads.w1.data(), state.first_moment.w1.data(),
                      state.second_moment.w1.data(), state, learning_rate, bc1, bc2);
    adam_update_array(emb.b1, grads.b1, state.first_moment.b1, state.second_moment.b1, state,
                      learning_rate, bc1, bc2);
    adam_update_array(emb.w2.data(), grads.w2.data(), state.first_moment.w2.data(),
                      state.second_moment.w2.data(), state, learning_rate, bc1, bc2);
    adam_update_array(emb.b2, grads.b2, state.first_moment.b2, state.second_moment.b2, state,
                      learning_rate, bc1, bc2);
}

} // namespace cpl

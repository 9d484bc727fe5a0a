#include "cpl/trainer.hpp"

#include "cpl/eval.hpp"
#include "cpl/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cpl {

namespace {

constexpr std::uint64_t kHoldoutStreamTag = 0x686f6c64; // "hold"

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct TrainSetup {
    Dataset working;        // attribute-normalized copy when configured
    TrainIndex index;
    EpisodePlan plan;
    LossWeights weights;
    std::vector<ClassId> holdout;
};

TrainSetup prepare(const Dataset& ds, const TrainConfig& cfg) {
    const std::vector<std::string> violations = validate_dataset(ds);
    if (!violations.empty()) {
        std::string msg = "dataset fails validation:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw DataError(msg);
    }
    check_hyperparams(cfg.hp);

    TrainSetup setup;
    setup.working = ds;
    if (cfg.normalize_attributes)
        setup.working.attributes = l2_normalize_rows(ds.attributes);

    if (cfg.validation_holdout > 0) {
        if (cfg.validation_holdout >= ds.seen_classes.size())
            throw ConfigError("validation holdout of " +
                              std::to_string(cfg.validation_holdout) +
                              " classes would leave no seen classes to train on");
        Rng rng(derive_stream(cfg.hp.seed, kHoldoutStreamTag, 0));
        const auto picks =
            sample_without_replacement(rng, ds.seen_classes.size(), cfg.validation_holdout);
        for (std::size_t p : picks) setup.holdout.push_back(ds.seen_classes[p]);
    }

    setup.index = build_train_index(setup.working, setup.holdout);
    setup.plan = {cfg.hp.episode_classes, cfg.hp.support_per_class, cfg.mode, cfg.hp.seed,
                  cfg.coverage_rotation};
    setup.weights = cfg.cep_only ? LossWeights{1.0, 0.0} : LossWeights{cfg.hp.lambda, 1.0};
    return setup;
}

// Unseen-style accuracy over the held-out classes, scored on their training
// samples (the only samples a holdout class has).
double holdout_accuracy(const Dataset& ds, const std::vector<ClassId>& holdout,
                        const AttributeEmbedder& emb) {
    const auto prototypes = make_prototypes(emb, ds.attributes, holdout);
    std::vector<std::size_t> n(holdout.size(), 0), correct(holdout.size(), 0);
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        if (ds.split[i] != Split::train) continue;
        const auto it = std::find(holdout.begin(), holdout.end(), ds.labels[i]);
        if (it == holdout.end()) continue;
        const std::size_t k = static_cast<std::size_t>(it - holdout.begin());
        n[k] += 1;
        if (recognize(ds.features.row(i), prototypes) == ds.labels[i]) correct[k] += 1;
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < holdout.size(); ++k) {
        if (n[k] == 0) continue;
        sum += static_cast<double>(correct[k]) / static_cast<double>(n[k]);
        ++counted;
    }
    return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

TrainResult run_episodes(const TrainConfig& cfg, const TrainSetup& setup, AttributeEmbedder emb,
                         AdamState adam, std::uint64_t start_step,
                         const EpisodeCallback& on_episode) {
    const std::size_t per_epoch = episodes_per_epoch(setup.index, setup.plan);
    const std::uint64_t total_steps =
        start_step + static_cast<std::uint64_t>(cfg.hp.epochs) * per_epoch;

    TrainResult result;
    result.log.reserve(static_cast<std::size_t>(total_steps - start_step));

    AttributeEmbedder best_emb = emb;
    AdamState best_adam = adam;
    double best_score = -1.0;

    for (std::uint64_t step = start_step; step < total_steps; ++step) {
        const std::uint64_t epoch = step / per_epoch;
        const std::uint64_t episode_index = step % per_epoch;
        const auto started = Clock::now();

        const Episode ep =
            next_episode(setup.working, setup.index, setup.plan, epoch, episode_index);
        const BatchForward bf = forward_all(emb, ep.attribute_rows);
        const EpisodeLossBreakdown loss = episode_loss_weighted(
            ep, bf.prototypes, setup.weights, cfg.hp.gamma, cfg.aggregation);
        if (!std::isfinite(loss.combined))
            throw NumericError("training aborted: non-finite loss at epoch " +
                               std::to_string(epoch) + ", episode " +
                               std::to_string(episode_index));

        const Matrix upstream = episode_loss_grad_weighted(
            ep, bf.prototypes, setup.weights, cfg.hp.gamma, cfg.aggregation);
        GradientSet grads = backward(emb, bf.caches, upstream);
        apply_weight_decay(grads, emb, cfg.hp.weight_decay);
        adam_step(emb, grads, adam, cfg.hp.learning_rate);

        TrainLogRecord rec{static_cast<std::size_t>(epoch),
                           static_cast<std::size_t>(episode_index),
                           loss.cep,
                           loss.pec,
                           loss.combined,
                           elapsed_ms(started)};
        if (on_episode) on_episode(rec);
        result.log.push_back(rec);

        if (!setup.holdout.empty() && episode_index + 1 == per_epoch) {
            const double score = holdout_accuracy(setup.working, setup.holdout, emb);
            if (score > best_score) {
                best_score = score;
                best_emb = emb;
                best_adam = adam;
            }
        }
    }

    if (!setup.holdout.empty() && best_score >= 0.0) {
        result.embedder = std::move(best_emb);
        result.adam = std::move(best_adam);
    } else {
        result.embedder = std::move(emb);
        result.adam = std::move(adam);
    }

    if (!cfg.checkpoint_path.empty()) {
        HyperParams echo = cfg.hp;
        // cumulative training duration, so a resumed run checkpoints
        // identically to the straight-through run it replays
        echo.epochs = static_cast<std::size_t>(total_steps / per_epoch);
        save_checkpoint({echo, result.embedder, result.adam}, cfg.checkpoint_path);
    }
    return result;
}

} // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const EpisodeCallback& on_episode) {
    const TrainSetup setup = prepare(ds, cfg);
    AttributeEmbedder emb = init_embedder(ds.attribute_dim(), cfg.hp.hidden_size,
                                          ds.feature_dim(), cfg.hp.seed);
    AdamState adam = make_adam_state(emb);
    return run_episodes(cfg, setup, std::move(emb), std::move(adam), 0, on_episode);
}

TrainResult resume(const Dataset& ds, const TrainConfig& cfg, const Checkpoint& checkpoint,
                   const EpisodeCallback& on_episode) {
    const TrainSetup setup = prepare(ds, cfg);
    const AttributeEmbedder& emb = checkpoint.embedder;
    if (emb.attribute_dim() != ds.attribute_dim())
        throw ConfigError("checkpoint d_attr " + std::to_string(emb.attribute_dim()) +
                          " does not match dataset d_attr " +
                          std::to_string(ds.attribute_dim()));
    if (emb.output_dim() != ds.feature_dim())
        throw ConfigError("checkpoint d_feat " + std::to_string(emb.output_dim()) +
                          " does not match dataset d_feat " +
                          std::to_string(ds.feature_dim()));
    if (emb.hidden_dim() != cfg.hp.hidden_size)
        throw ConfigError("checkpoint hidden size " + std::to_string(emb.hidden_dim()) +
                          " does not match configured hidden size " +
                          std::to_string(cfg.hp.hidden_size));

    return run_episodes(cfg, setup, checkpoint.embedder, checkpoint.adam, checkpoint.adam.step,
                        on_episode);
}

void write_train_log(const std::vector<TrainLogRecord>& log,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "epoch,episode,cep,pec,combined,millis\n";
    for (const auto& rec : log) {
        std::ostringstream line;
        line << rec.epoch << ',' << rec.episode << ',' << rec.cep << ',' << rec.pec << ','
             << rec.combined << ',' << rec.millis;
        out << line.str() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace cpl

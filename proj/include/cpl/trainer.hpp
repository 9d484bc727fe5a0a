#pragma once

#include "cpl/core.hpp"
#include "cpl/dataio.hpp"
#include "cpl/net.hpp"
#include "cpl/objective.hpp"
#include "cpl/sampler.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace cpl {

struct TrainConfig {
    HyperParams hp;
    SamplerMode mode = SamplerMode::task_level;
    LossAggregation aggregation = LossAggregation::mean;
    bool cep_only = false;            // ablation: drop PEC, optimize CEP alone
    bool normalize_attributes = false;
    bool coverage_rotation = false;
    // Hold out this many seen classes from episode sampling and keep the
    // epoch whose unseen-style accuracy on them is best. 0 disables
    // selection and training returns the final parameters.
    std::size_t validation_holdout = 0;
    std::filesystem::path checkpoint_path;  // empty: do not persist
    std::size_t log_every = 1;              // console cadence, used by the CLI
};

struct TrainLogRecord {
    std::size_t epoch = 0;
    std::size_t episode = 0;
    double cep = 0.0;
    double pec = 0.0;
    double combined = 0.0;
    double millis = 0.0;
};

struct TrainResult {
    AttributeEmbedder embedder;
    AdamState adam;
    std::vector<TrainLogRecord> log;
};

using EpisodeCallback = std::function<void(const TrainLogRecord&)>;

// The episodic loop: sample episode -> embed its attribute rows into
// prototypes -> combined loss -> backprop -> weight decay -> Adam. Runs
// epochs * episodes_per_epoch episodes; the final checkpoint is written when
// a path is configured. Deterministic: (dataset, config, seed) fixes every
// bit of the result.
TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  const EpisodeCallback& on_episode = {});

// Continues from a checkpoint for cfg.hp.epochs further epochs, replaying
// the same episode stream a longer run would have used, so train(N) then
// resume(M) is bit-identical to train(N+M) under one seed.
TrainResult resume(const Dataset& ds, const TrainConfig& cfg, const Checkpoint& checkpoint,
                   const EpisodeCallback& on_episode = {});

// CSV: epoch,episode,cep,pec,combined,millis
void write_train_log(const std::vector<TrainLogRecord>& log,
                     const std::filesystem::path& path);

} // namespace cpl

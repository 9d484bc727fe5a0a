#pragma once

#include "cpl/core.hpp"

#include <cstdint>
#include <vector>

namespace cpl {

enum class SamplerMode : std::uint8_t { task_level, sample_level };

const char* sampler_mode_name(SamplerMode m);

struct EpisodePlan {
    std::size_t class_count = 10;        // C
    std::size_t support_per_class = 10;  // S
    SamplerMode mode = SamplerMode::task_level;
    std::uint64_t seed = 0;
    // Rotate episode classes through a per-epoch permutation instead of
    // drawing them independently. Experimental; off by default.
    bool coverage_rotation = false;
};

// Per-class training-sample row indices, built once per training run.
// exclude lists seen classes to hold out entirely (validation selection).
struct TrainIndex {
    std::vector<ClassId> classes;                    // eligible seen classes
    std::vector<std::vector<std::size_t>> per_class; // parallel to classes
    std::vector<std::size_t> all_train;              // every eligible train row
};

TrainIndex build_train_index(const Dataset& ds, const std::vector<ClassId>& exclude = {});

// ceil(|train| / (C*S)), at least 1.
std::size_t episodes_per_epoch(const Dataset& ds, const EpisodePlan& plan);
std::size_t episodes_per_epoch(const TrainIndex& index, const EpisodePlan& plan);

// Task-level episode: C distinct classes drawn uniformly without replacement
// from the eligible seen classes, then S support samples per class (without
// replacement when the class has >= S training samples, with replacement
// otherwise). Draws depend only on (plan.seed, epoch, episode_index).
Episode sample_episode(const Dataset& ds, const EpisodePlan& plan, std::uint64_t epoch,
                       std::uint64_t episode_index);
Episode sample_episode(const Dataset& ds, const TrainIndex& index, const EpisodePlan& plan,
                       std::uint64_t epoch, std::uint64_t episode_index);

// Sample-level baseline batch: C*S training samples drawn
// uniformly without replacement from the whole training split; the episode's
// class list is whatever distinct classes the batch happens to contain.
Episode sample_batch(const Dataset& ds, const EpisodePlan& plan, std::uint64_t epoch,
                     std::uint64_t episode_index);
Episode sample_batch(const Dataset& ds, const TrainIndex& index, const EpisodePlan& plan,
                     std::uint64_t epoch, std::uint64_t episode_index);

// Dispatch on plan.mode.
Episode next_episode(const Dataset& ds, const TrainIndex& index, const EpisodePlan& plan,
                     std::uint64_t epoch, std::uint64_t episode_index);

} // namespace cpl

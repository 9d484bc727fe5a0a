#include "cpl/sampler.hpp"

#include "cpl/rng.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace cpl {

namespace {

constexpr std::uint64_t kCoverageStreamTag = 0x636f766572; // one stream per epoch

void copy_row(Matrix& dst, std::size_t dst_row, const Matrix& src, std::size_t src_row) {
    auto d = dst.row(dst_row);
    auto s = src.row(src_row);
    std::copy(s.begin(), s.end(), d.begin());
}

} // namespace

const char* sampler_mode_name(SamplerMode m) {
    return m == SamplerMode::task_level ? "task" : "sample";
}

TrainIndex build_train_index(const Dataset& ds, const std::vector<ClassId>& exclude) {
    std::set<ClassId> excluded(exclude.begin(), exclude.end());
    TrainIndex index;
    for (ClassId c : ds.seen_classes)
        if (!excluded.count(c)) index.classes.push_back(c);
    index.per_class.resize(index.classes.size());

    std::vector<std::size_t> position(ds.class_count(), index.classes.size());
    for (std::size_t k = 0; k < index.classes.size(); ++k) position[index.classes[k]] = k;

    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        if (ds.split[i] != Split::train) continue;
        const ClassId label = ds.labels[i];
        if (label >= position.size() || position[label] == index.classes.size())
            continue;  // held-out or invalid; validate_dataset reports the latter
        index.per_class[position[label]].push_back(i);
        index.all_train.push_back(i);
    }
    return index;
}

std::size_t episodes_per_epoch(const TrainIndex& index, const EpisodePlan& plan) {
    if (plan.class_count < 1 || plan.support_per_class < 1)
        throw ConfigError("episode plan requires C >= 1 and S >= 1");
    const std::size_t per_episode = plan.class_count * plan.support_per_class;
    const std::size_t n = index.all_train.size();
    return std::max<std::size_t>(1, (n + per_episode - 1) / per_episode);
}

std::size_t episodes_per_epoch(const Dataset& ds, const EpisodePlan& plan) {
    return episodes_per_epoch(build_train_index(ds), plan);
}

Episode sample_episode(const Dataset& ds, const TrainIndex& index, const EpisodePlan& plan,
                       std::uint64_t epoch, std::uint64_t episode_index) {
    const std::size_t k_classes = index.classes.size();
    const std::size_t c = plan.class_count;
    const std::size_t s = plan.support_per_class;
    if (c < 1 || s < 1) throw ConfigError("episode plan requires C >= 1 and S >= 1");
    if (c > k_classes)
        throw ConfigError("episode class count C=" + std::to_string(c) +
                          " exceeds eligible seen classes K=" + std::to_string(k_classes));

    Rng rng(derive_stream(plan.seed, epoch, episode_index));

    std::vector<std::size_t> chosen;
    if (plan.coverage_rotation) {
        Rng perm_rng(derive_stream(plan.seed, epoch, kCoverageStreamTag));
        const std::vector<std::size_t> perm = shuffled_indices(perm_rng, k_classes);
        chosen.resize(c);
        for (std::size_t j = 0; j < c; ++j)
            chosen[j] = perm[(episode_index * c + j) % k_classes];
    } else {
        chosen = sample_without_replacement(rng, k_classes, c);
    }

    Episode ep;
    ep.class_ids.resize(c);
    ep.attribute_rows = Matrix(c, ds.attribute_dim());
    ep.support_features = Matrix(c * s, ds.feature_dim());
    ep.support_labels.resize(c * s);
    ep.support_indices.resize(c * s);

    for (std::size_t j = 0; j < c; ++j) {
        const std::size_t class_pos = chosen[j];
        const ClassId class_id = index.classes[class_pos];
        ep.class_ids[j] = class_id;
        copy_row(ep.attribute_rows, j, ds.attributes, class_id);

        const std::vector<std::size_t>& rows = index.per_class[class_pos];
        if (rows.empty())
            throw DataError("seen class " + std::to_string(class_id) +
                            " has no training samples");

        std::vector<std::size_t> picks;
        if (rows.size() >= s) {
            picks = sample_without_replacement(rng, rows.size(), s);
        } else {
            picks.resize(s);
            for (std::size_t i = 0; i < s; ++i)
                picks[i] = static_cast<std::size_t>(rng.next_below(rows.size()));
        }
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t sample_row = rows[picks[i]];
            const std::size_t out_row = j * s + i;
            copy_row(ep.support_features, out_row, ds.features, sample_row);
            ep.support_labels[out_row] = j;
            ep.support_indices[out_row] = sample_row;
        }
    }
    return ep;
}

Episode sample_episode(const Dataset& ds, const EpisodePlan& plan, std::uint64_t epoch,
                       std::uint64_t episode_index) {
    return sample_episode(ds, build_train_index(ds), plan, epoch, episode_index);
}

Episode sample_batch(const Dataset& ds, const TrainIndex& index, const EpisodePlan& plan,
                     std::uint64_t epoch, std::uint64_t episode_index) {
    const std::size_t batch = plan.class_count * plan.support_per_class;
    if (batch < 1) throw ConfigError("episode plan requires C >= 1 and S >= 1");
    if (batch > index.all_train.size())
        throw ConfigError("batch size C*S=" + std::to_string(batch) +
                          " exceeds training-set size " +
                          std::to_string(index.all_train.size()));

    Rng rng(derive_stream(plan.seed, epoch, episode_index));
    const std::vector<std::size_t> picks =
        sample_without_replacement(rng, index.all_train.size(), batch);

    std::vector<std::size_t> sample_rows(batch);
    for (std::size_t i = 0; i < batch; ++i) sample_rows[i] = index.all_train[picks[i]];

    // the episode label space is whatever classes showed up, ascending
    std::set<ClassId> present;
    for (std::size_t row : sample_rows) present.insert(ds.labels[row]);

    Episode ep;
    ep.class_ids.assign(present.begin(), present.end());
    ep.attribute_rows = Matrix(ep.class_ids.size(), ds.attribute_dim());
    for (std::size_t j = 0; j < ep.class_ids.size(); ++j)
        copy_row(ep.attribute_rows, j, ds.attributes, ep.class_ids[j]);

    ep.support_features = Matrix(batch, ds.feature_dim());
    ep.support_labels.resize(batch);
    ep.support_indices = sample_rows;
    for (std::size_t i = 0; i < batch; ++i) {
        copy_row(ep.support_features, i, ds.features, sample_rows[i]);
        const auto it =
            std::lower_bound(ep.class_ids.begin(), ep.class_ids.end(), ds.labels[sample_rows[i]]);
        ep.support_labels[i] = static_cast<std::size_t>(it - ep.class_ids.begin());
    }
    return ep;
}

Episode sample_batch(const Dataset& ds, const EpisodePlan& plan, std::uint64_t epoch,
                     std::uint64_t episode_index) {
    return sample_batch(ds, build_train_index(ds), plan, epoch, episode_index);
}

Episode next_episode(const Dataset& ds, const TrainIndex& index, const EpisodePlan& plan,
                     std::uint64_t epoch, std::uint64_t episode_index) {
    return plan.mode == SamplerMode::task_level
               ? sample_episode(ds, index, plan, epoch, episode_index)
               : sample_batch(ds, index, plan, epoch, episode_index);
}

} // namespace cpl

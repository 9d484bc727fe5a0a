#include <doctest.h>

#include "cpl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace cpl;

namespace {

// K seen classes with train_per_class training samples each, plus one unseen
// class holding a single test sample. Feature value encodes the sample row.
Dataset make_toy(std::size_t k_seen, std::size_t train_per_class) {
    Dataset ds;
    const std::size_t n = k_seen * train_per_class + 1;
    ds.features = Matrix(n, 1);
    ds.attributes = Matrix(k_seen + 1, 2, 0.25);
    for (std::size_t c = 0; c < k_seen; ++c) {
        ds.seen_classes.push_back(static_cast<ClassId>(c));
        for (std::size_t i = 0; i < train_per_class; ++i) {
            const std::size_t row = c * train_per_class + i;
            ds.features(row, 0) = static_cast<double>(row);
            ds.labels.push_back(static_cast<ClassId>(c));
            ds.split.push_back(Split::train);
        }
    }
    ds.unseen_classes.push_back(static_cast<ClassId>(k_seen));
    ds.features(n - 1, 0) = static_cast<double>(n - 1);
    ds.labels.push_back(static_cast<ClassId>(k_seen));
    ds.split.push_back(Split::test_unseen);
    for (std::size_t c = 0; c <= k_seen; ++c)
        ds.class_names.push_back("class_" + std::to_string(c));
    return ds;
}

} // namespace

TEST_SUITE("sampler") {

TEST_CASE("C equal to K yields a permutation of all seen classes") {
    const Dataset ds = make_toy(5, 3);
    const EpisodePlan plan{5, 2, SamplerMode::task_level, 42, false};
    const Episode ep = sample_episode(ds, plan, 0, 0);
    std::set<ClassId> ids(ep.class_ids.begin(), ep.class_ids.end());
    CHECK(ids.size() == 5);
    CHECK(*ids.begin() == 0);
    CHECK(*ids.rbegin() == 4);
}

TEST_CASE("fixed seed reproduces the exact same episode") {
    const Dataset ds = make_toy(3, 4);
    const EpisodePlan plan{2, 1, SamplerMode::task_level, 7, false};
    const Episode a = sample_episode(ds, plan, 3, 11);
    const Episode b = sample_episode(ds, plan, 3, 11);
    CHECK(a.class_ids == b.class_ids);
    CHECK(a.support_indices == b.support_indices);
    CHECK(a.support_features == b.support_features);

    const Episode c = sample_episode(ds, plan, 3, 12);
    CHECK((a.class_ids != c.class_ids || a.support_indices != c.support_indices));
}

TEST_CASE("task-level episodes have exactly C classes and S train-split supports") {
    const Dataset ds = make_toy(6, 5);
    const EpisodePlan plan{4, 3, SamplerMode::task_level, 1, false};
    for (std::uint64_t i = 0; i < 200; ++i) {
        const Episode ep = sample_episode(ds, plan, 0, i);
        std::set<ClassId> distinct(ep.class_ids.begin(), ep.class_ids.end());
        REQUIRE(distinct.size() == 4);
        REQUIRE(ep.support_count() == 12);
        std::map<std::size_t, std::size_t> per_label;
        for (std::size_t r = 0; r < ep.support_count(); ++r) {
            per_label[ep.support_labels[r]] += 1;
            const std::size_t row = ep.support_indices[r];
            REQUIRE(ds.split[row] == Split::train);
            REQUIRE(ds.labels[row] == ep.class_ids[ep.support_labels[r]]);
        }
        for (const auto& [label, count] : per_label) REQUIRE(count == 3);
    }
}

TEST_CASE("short classes sample with replacement and still cover every sample") {
    const Dataset ds = make_toy(3, 4);  // 4 train samples per class, S = 10
    const EpisodePlan plan{3, 10, SamplerMode::task_level, 5, false};
    std::set<std::size_t> observed;
    bool saw_repeat = false;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const Episode ep = sample_episode(ds, plan, 0, i);
        std::set<std::size_t> in_episode;
        for (std::size_t r = 0; r < 10; ++r) {  // class slot 0 only
            if (!in_episode.insert(ep.support_indices[r]).second) saw_repeat = true;
            observed.insert(ep.support_indices[r]);
        }
    }
    CHECK(saw_repeat);  // 10 draws from 4 samples must repeat
    // every train sample of every class shows up across 1000 draws
    std::size_t train_rows = 0;
    for (std::size_t i = 0; i < ds.sample_count(); ++i)
        if (ds.split[i] == Split::train) ++train_rows;
    std::set<std::size_t> all_observed;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const Episode ep = sample_episode(ds, plan, 0, i);
        all_observed.insert(ep.support_indices.begin(), ep.support_indices.end());
    }
    CHECK(all_observed.size() == train_rows);
}

TEST_CASE("episode class pairs are uniform to within 3 sigma") {
    const Dataset ds = make_toy(6, 2);
    const EpisodePlan plan{2, 1, SamplerMode::task_level, 2024, false};
    std::map<std::pair<ClassId, ClassId>, std::size_t> pair_count;
    const std::size_t episodes = 10000;
    for (std::uint64_t i = 0; i < episodes; ++i) {
        const Episode ep = sample_episode(ds, plan, 0, i);
        ClassId a = ep.class_ids[0], b = ep.class_ids[1];
        if (a > b) std::swap(a, b);
        pair_count[{a, b}] += 1;
    }
    const double n_pairs = 15.0;  // C(6,2)
    REQUIRE(pair_count.size() == 15);
    const double p = 1.0 / n_pairs;
    const double mean = episodes * p;
    const double sigma = std::sqrt(episodes * p * (1.0 - p));
    for (const auto& [key, count] : pair_count)
        CHECK(std::fabs(static_cast<double>(count) - mean) <= 3.0 * sigma);
}

TEST_CASE("config and dataset errors") {
    const Dataset ds = make_toy(3, 2);
    CHECK_THROWS_AS(
        sample_episode(ds, EpisodePlan{4, 1, SamplerMode::task_level, 0, false}, 0, 0),
        ConfigError);

    Dataset no_train = ds;
    for (std::size_t i = 0; i < no_train.sample_count(); ++i)
        if (no_train.labels[i] == 1 && no_train.split[i] == Split::train)
            no_train.split[i] = Split::test_seen;
    bool named = false;
    for (std::uint64_t i = 0; i < 50 && !named; ++i) {
        try {
            sample_episode(no_train, EpisodePlan{3, 1, SamplerMode::task_level, 0, false}, 0, i);
        } catch (const DataError& e) {
            named = std::string(e.what()).find("class 1") != std::string::npos;
        }
    }
    CHECK(named);
}

TEST_CASE("episodes_per_epoch is the clamped ceiling") {
    const EpisodePlan plan{10, 10, SamplerMode::task_level, 0, false};
    CHECK(episodes_per_epoch(make_toy(10, 100), plan) == 10);   // 1000 / 100
    CHECK(episodes_per_epoch(make_toy(7, 143), plan) == 11);    // 1001 / 100, ceiling
    const EpisodePlan big{12, 10, SamplerMode::task_level, 0, false};
    CHECK(episodes_per_epoch(make_toy(5, 1), big) == 1);        // clamped to >= 1
}

TEST_CASE("sample-level batch covers the whole training split when sized to it") {
    const Dataset ds = make_toy(5, 4);  // 20 train samples
    const EpisodePlan plan{5, 4, SamplerMode::sample_level, 3, false};
    const Episode ep = sample_batch(ds, plan, 0, 0);
    REQUIRE(ep.support_count() == 20);
    std::set<std::size_t> distinct(ep.support_indices.begin(), ep.support_indices.end());
    CHECK(distinct.size() == 20);
    for (std::size_t row : distinct) CHECK(ds.split[row] == Split::train);
}

TEST_CASE("sample-level batches are deterministic with distinct draws") {
    const Dataset ds = make_toy(10, 10);  // 100 train samples
    const EpisodePlan plan{6, 5, SamplerMode::sample_level, 11, false};
    const Episode a = sample_batch(ds, plan, 2, 4);
    const Episode b = sample_batch(ds, plan, 2, 4);
    CHECK(a.support_indices == b.support_indices);
    CHECK(a.class_ids == b.class_ids);

    std::set<std::size_t> distinct(a.support_indices.begin(), a.support_indices.end());
    CHECK(distinct.size() == 30);  // exactly C*S distinct rows

    // label space is exactly the distinct classes present, ascending
    std::set<ClassId> present;
    for (std::size_t row : a.support_indices) present.insert(ds.labels[row]);
    CHECK(std::vector<ClassId>(present.begin(), present.end()) == a.class_ids);
    for (std::size_t r = 0; r < a.support_count(); ++r)
        CHECK(a.class_ids[a.support_labels[r]] == ds.labels[a.support_indices[r]]);

    const EpisodePlan too_big{20, 10, SamplerMode::sample_level, 0, false};
    CHECK_THROWS_AS(sample_batch(ds, too_big, 0, 0), ConfigError);
}

TEST_CASE("coverage rotation walks a per-epoch permutation without repeats") {
    const Dataset ds = make_toy(9, 2);
    const EpisodePlan plan{3, 1, SamplerMode::task_level, 6, true};
    std::set<ClassId> first_three_episodes;
    for (std::uint64_t i = 0; i < 3; ++i) {
        const Episode ep = sample_episode(ds, plan, 0, i);
        first_three_episodes.insert(ep.class_ids.begin(), ep.class_ids.end());
    }
    CHECK(first_three_episodes.size() == 9);  // one full pass over the classes

    const Episode again = sample_episode(ds, plan, 0, 1);
    const Episode repeat = sample_episode(ds, plan, 0, 1);
    CHECK(again.class_ids == repeat.class_ids);
}

TEST_CASE("holdout classes disappear from the train index") {
    const Dataset ds = make_toy(5, 3);
    const TrainIndex full = build_train_index(ds);
    CHECK(full.classes.size() == 5);
    CHECK(full.all_train.size() == 15);

    const TrainIndex filtered = build_train_index(ds, {1, 3});
    CHECK(filtered.classes == std::vector<ClassId>{0, 2, 4});
    CHECK(filtered.all_train.size() == 9);
}

} // TEST_SUITE

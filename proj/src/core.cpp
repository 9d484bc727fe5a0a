#include "cpl/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cpl {

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test_seen: return "test_seen";
        case Split::test_unseen: return "test_unseen";
    }
    return "?";
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "test_seen") return Split::test_seen;
    if (name == "test_unseen") return Split::test_unseen;
    return std::nullopt;
}

void check_hyperparams(const HyperParams& hp) {
    if (hp.episode_classes < 1) throw ConfigError("episode class count C must be >= 1");
    if (hp.support_per_class < 1) throw ConfigError("support per class S must be >= 1");
    if (!(hp.lambda >= 0.0 && hp.lambda <= 1.0))
        throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(hp.lambda));
    if (!(hp.gamma > 0.0))
        throw ConfigError("gamma must be > 0, got " + std::to_string(hp.gamma));
    if (!(hp.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(hp.weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
    if (hp.hidden_size < 1) throw ConfigError("hidden size must be >= 1");
}

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

std::vector<std::string> validate_dataset(const Dataset& ds) {
    std::vector<std::string> out;
    auto complain = [&out](const std::string& msg) { out.push_back(msg); };

    const std::size_t n = ds.features.rows();
    const std::size_t n_classes = ds.attributes.rows();

    if (ds.labels.size() != n)
        complain("labels count " + std::to_string(ds.labels.size()) +
                 " does not match sample count " + std::to_string(n));
    if (ds.split.size() != n)
        complain("split tag count " + std::to_string(ds.split.size()) +
                 " does not match sample count " + std::to_string(n));
    if (!ds.class_names.empty() && ds.class_names.size() != n_classes)
        complain("class name table size " + std::to_string(ds.class_names.size()) +
                 " does not match class count " + std::to_string(n_classes));

    if (!all_finite(ds.features.data())) complain("features contain non-finite entries");
    if (!all_finite(ds.attributes.data())) complain("attributes contain non-finite entries");

    if (ds.seen_classes.empty()) complain("seen class set is empty (K must be > 0)");
    if (ds.unseen_classes.empty()) complain("unseen class set is empty (L must be > 0)");

    std::set<ClassId> seen(ds.seen_classes.begin(), ds.seen_classes.end());
    std::set<ClassId> unseen(ds.unseen_classes.begin(), ds.unseen_classes.end());
    if (seen.size() != ds.seen_classes.size()) complain("seen class set contains duplicates");
    if (unseen.size() != ds.unseen_classes.size()) complain("unseen class set contains duplicates");

    for (ClassId c : ds.seen_classes)
        if (c >= n_classes)
            complain("seen class " + std::to_string(c) + " is out of range (n_classes=" +
                     std::to_string(n_classes) + ")");
    for (ClassId c : ds.unseen_classes)
        if (c >= n_classes)
            complain("unseen class " + std::to_string(c) + " is out of range (n_classes=" +
                     std::to_string(n_classes) + ")");

    // Y^s and Y^u must be disjoint under the standard setting. One violation
    // per overlapping class keeps the check symmetric in the two sets.
    for (ClassId c : ds.seen_classes)
        if (unseen.count(c))
            complain("class " + std::to_string(c) + " appears in both seen and unseen sets");

    const std::size_t n_tags = std::min(ds.split.size(), ds.labels.size());
    for (std::size_t i = 0; i < n_tags; ++i) {
        ClassId label = ds.labels[i];
        if (label >= n_classes) {
            complain("sample " + std::to_string(i) + " has out-of-range label " +
                     std::to_string(label));
            continue;
        }
        switch (ds.split[i]) {
            case Split::train:
                if (!seen.count(label))
                    complain("train sample " + std::to_string(i) +
                             " is labeled with non-seen class " + std::to_string(label));
                break;
            case Split::test_seen:
                if (!seen.count(label))
                    complain("test_seen sample " + std::to_string(i) +
                             " is labeled with non-seen class " + std::to_string(label));
                break;
            case Split::test_unseen:
                if (!unseen.count(label))
                    complain("test_unseen sample " + std::to_string(i) +
                             " is labeled with non-unseen class " + std::to_string(label));
                break;
        }
    }

    return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        if (sq <= 0.0) continue;
        double inv = 1.0 / std::sqrt(sq);
        for (double& v : row) v *= inv;
    }
    return out;
}

} // namespace cpl

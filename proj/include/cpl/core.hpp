#pragma once

#include "cpl/matrix.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cpl {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes: config/shape/data -> 2,
// format/io -> 3, numeric -> 1.
// ---------------------------------------------------------------------------
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ShapeError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DataError : std::runtime_error { using std::runtime_error::runtime_error; };
struct FormatError : std::runtime_error { using std::runtime_error::runtime_error; };
struct IoError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericError : std::runtime_error { using std::runtime_error::runtime_error; };

// Dense class index into the dataset's class table.
using ClassId = std::uint32_t;

// A class prototype in visual feature space; entries are non-negative
// because the embedder's output layer is ReLU.
using Prototype = std::vector<double>;

enum class Split : std::uint8_t { train, test_seen, test_unseen };

const char* split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

// ---------------------------------------------------------------------------
// Dataset: precomputed visual features, per-class attributes, and the
// seen/unseen class split. Immutable after construction by convention;
// nothing here mutates shared state.
// ---------------------------------------------------------------------------
struct Dataset {
    Matrix features;                      // n_samples x d_feat
    std::vector<ClassId> labels;          // one per sample
    Matrix attributes;                    // n_classes x d_attr
    std::vector<ClassId> seen_classes;    // ordered, disjoint from unseen
    std::vector<ClassId> unseen_classes;  // ordered
    std::vector<Split> split;             // one per sample
    std::vector<std::string> class_names; // side table, index == ClassId

    std::size_t sample_count() const { return features.rows(); }
    std::size_t feature_dim() const { return features.cols(); }
    std::size_t attribute_dim() const { return attributes.cols(); }
    std::size_t class_count() const { return attributes.rows(); }

    bool operator==(const Dataset&) const = default;
};

// One sampled zero-shot task: C classes with S support samples each
// (task-level mode), or a flat batch regrouped by class (sample-level mode).
struct Episode {
    std::vector<ClassId> class_ids;            // episode label space, distinct
    Matrix support_features;                   // n_support x d_feat
    std::vector<std::size_t> support_labels;   // episode-local index in [0, C)
    std::vector<std::size_t> support_indices;  // dataset rows, for determinism checks
    Matrix attribute_rows;                     // |class_ids| x d_attr

    std::size_t class_count() const { return class_ids.size(); }
    std::size_t support_count() const { return support_features.rows(); }
};

struct HyperParams {
    std::size_t episode_classes = 10;    // C
    std::size_t support_per_class = 10;  // S
    double lambda = 0.1;                 // in [0, 1]
    double gamma = 0.9;                  // > 0, softmax temperature
    std::size_t epochs = 40;
    double learning_rate = 2e-4;
    double weight_decay = 1e-4;
    std::size_t hidden_size = 1024;
    std::uint64_t seed = 0;

    bool operator==(const HyperParams&) const = default;
};

// Throws ConfigError on the first violated hyperparameter bound.
void check_hyperparams(const HyperParams& hp);

// Returns one description per violated Dataset invariant; empty means valid.
// Pure: same input, same output, no side effects.
std::vector<std::string> validate_dataset(const Dataset& ds);

// Unit-L2 row normalization for attribute matrices; zero rows pass through.
Matrix l2_normalize_rows(const Matrix& m);

} // namespace cpl

#pragma once

#include "cpl/core.hpp"
#include "cpl/net.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace cpl {

// ---------------------------------------------------------------------------
// On-disk formats (all integers and floats little-endian):
//
//   features (CPLF): magic "CPLF", u32 version=1, u64 n_samples, u64 d_feat,
//                    then row-major float32 values.
//   labels:          CSV with header `sample_index,class_id,split`,
//                    split in {train,test_seen,test_unseen}, rows in order.
//   attributes:      CSV, one row per class, first column class_id (dense,
//                    ascending), remaining columns the attribute values.
//   splits:          CSV with header `class_id,role`, role in {seen,unseen};
//                    classes absent from the file belong to neither set.
//   checkpoint (CPLM): magic "CPLM", u32 version=1, dimension and
//                    hyperparameter header, then float64 parameter and
//                    optimizer-moment arrays in a fixed order.
//   manifest:        flat key=value text; keys features, labels, attributes,
//                    splits, d_feat, d_attr, n_samples, n_classes. Relative
//                    paths resolve against the manifest's directory.
// ---------------------------------------------------------------------------

struct Manifest {
    std::filesystem::path features_path;
    std::filesystem::path labels_path;
    std::filesystem::path attributes_path;
    std::filesystem::path splits_path;
    std::size_t d_feat = 0;
    std::size_t d_attr = 0;
    std::size_t n_samples = 0;
    std::size_t n_classes = 0;
};

// Standard layout for a dataset directory: manifest.txt plus sibling files.
Manifest manifest_for_directory(const std::filesystem::path& dir, const Dataset& ds);

Manifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const Manifest& m, const std::filesystem::path& manifest_path);

// Loads and validates; throws DataError with the violation list if the
// loaded dataset breaks an invariant.
Dataset load_dataset(const Manifest& m);
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes the four data files named by the manifest. Feature values are
// narrowed to float32 on disk; a dataset whose features are float32-exact
// round-trips bit-identically.
void save_dataset(const Dataset& ds, const Manifest& m);

struct Checkpoint {
    HyperParams hyperparams;
    AttributeEmbedder embedder;
    AdamState adam;

    bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic data: attributes uniform in [0,1); a hidden linear map G with
// N(0, 1/d_attr) entries defines class means mu_c = relu(G a_c); samples are
// mu_c plus Gaussian noise, clipped at 0 so they live in the same orthant as
// ReLU prototypes. A two-layer ReLU MLP can represent G exactly, which keeps
// desk-scale end-to-end runs well-posed.
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    std::size_t seen_classes = 27;     // K
    std::size_t unseen_classes = 10;   // L
    std::size_t train_per_class = 50;  // per seen class
    std::size_t test_per_class = 30;   // test_seen per seen class, test_unseen per unseen
    std::size_t d_attr = 16;
    std::size_t d_feat = 64;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;
};

struct SyntheticResult {
    Dataset dataset;
    Matrix class_means;  // (K+L) x d_feat ground-truth means, row == ClassId
};

SyntheticResult generate_synthetic_with_truth(const SyntheticSpec& spec);
Dataset generate_synthetic(const SyntheticSpec& spec);

} // namespace cpl

#pragma once

#include "cpl/core.hpp"
#include "cpl/net.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cpl {

// Recognition: a test sample is assigned to its nearest prototype, ties
// broken toward the lowest class id. Temperature plays no role here; the
// softmax argmax equals the distance argmin for any gamma > 0.

struct ClassPrototype {
    ClassId class_id;
    Prototype prototype;
};

struct ClassStats {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    std::map<ClassId, ClassStats> per_class;
    double acc_unseen = 0.0;
    std::optional<double> acc_seen;       // generalized setting only
    std::optional<double> harmonic;       // present iff acc_seen is
    std::map<std::pair<ClassId, ClassId>, std::size_t> confusion;  // (true, predicted)
    std::vector<std::string> warnings;
};

// One prototype per requested class via the embedder's forward pass.
std::vector<ClassPrototype> make_prototypes(const AttributeEmbedder& emb,
                                            const Matrix& attributes,
                                            std::span<const ClassId> class_ids);

ClassId recognize(std::span<const double> x, std::span<const ClassPrototype> prototypes);

// Classifies every sample of the given split against the prototype list and
// averages per-class accuracy over class_set (classes with no test samples
// are excluded from the mean and reported in warnings). Both public
// evaluation protocols are thin wrappers over this.
struct SplitAccuracy {
    std::map<ClassId, ClassStats> per_class;
    double mean_accuracy = 0.0;
    std::map<std::pair<ClassId, ClassId>, std::size_t> confusion;
    std::vector<std::string> warnings;
};

SplitAccuracy classify_split(const Dataset& ds, std::span<const ClassPrototype> prototypes,
                             Split split, std::span<const ClassId> class_set);

// Standard ZSL: prototypes for unseen classes only, scored on test_unseen.
EvalReport evaluate_standard(const Dataset& ds, const AttributeEmbedder& emb);

// Generalized ZSL: prototypes for the union of seen and unseen classes;
// Acc_U over test_unseen, Acc_S over test_seen, plus their harmonic mean.
EvalReport evaluate_generalized(const Dataset& ds, const AttributeEmbedder& emb);

// 2ab/(a+b), 0 when a+b is 0. Works in fractions or percents as long as the
// two operands agree. Negative input throws.
double harmonic_mean(double acc_s, double acc_u);

void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
std::string format_report_table(const EvalReport& report);

} // namespace cpl

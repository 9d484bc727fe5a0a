#include "cpl/eval.hpp"

#include "cpl/objective.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cpl {

std::vector<ClassPrototype> make_prototypes(const AttributeEmbedder& emb,
                                            const Matrix& attributes,
                                            std::span<const ClassId> class_ids) {
    std::vector<ClassPrototype> out;
    out.reserve(class_ids.size());
    for (ClassId c : class_ids) {
        if (c >= attributes.rows())
            throw DataError("no attribute row for class " + std::to_string(c));
        out.push_back({c, forward(emb, attributes.row(c))});
    }
    return out;
}

ClassId recognize(std::span<const double> x, std::span<const ClassPrototype> prototypes) {
    if (prototypes.empty()) throw ConfigError("recognize: empty prototype list");
    ClassId best_class = prototypes[0].class_id;
    double best_dist = l2_distance(x, prototypes[0].prototype);
    for (std::size_t i = 1; i < prototypes.size(); ++i) {
        const double d = l2_distance(x, prototypes[i].prototype);
        if (d < best_dist || (d == best_dist && prototypes[i].class_id < best_class)) {
            best_dist = d;
            best_class = prototypes[i].class_id;
        }
    }
    return best_class;
}

SplitAccuracy classify_split(const Dataset& ds, std::span<const ClassPrototype> prototypes,
                             Split split, std::span<const ClassId> class_set) {
    SplitAccuracy out;
    for (ClassId c : class_set) out.per_class[c];  // classes with 0 samples stay at n=0

    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        if (ds.split[i] != split) continue;
        const ClassId truth = ds.labels[i];
        const ClassId predicted = recognize(ds.features.row(i), prototypes);
        out.confusion[{truth, predicted}] += 1;
        auto it = out.per_class.find(truth);
        if (it == out.per_class.end()) continue;  // not a class we are scoring
        it->second.n += 1;
        if (predicted == truth) it->second.correct += 1;
    }

    double sum = 0.0;
    std::size_t counted = 0;
    for (auto it = out.per_class.begin(); it != out.per_class.end();) {
        ClassStats& st = it->second;
        if (st.n == 0) {
            out.warnings.push_back("class " + std::to_string(it->first) + " has no " +
                                   std::string(split_name(split)) +
                                   " samples; excluded from the per-class mean");
            it = out.per_class.erase(it);
            continue;
        }
        st.accuracy = static_cast<double>(st.correct) / static_cast<double>(st.n);
        sum += st.accuracy;
        ++counted;
        ++it;
    }
    out.mean_accuracy = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
    return out;
}

namespace {

bool has_split(const Dataset& ds, Split s) {
    return std::find(ds.split.begin(), ds.split.end(), s) != ds.split.end();
}

} // namespace

EvalReport evaluate_standard(const Dataset& ds, const AttributeEmbedder& emb) {
    if (!has_split(ds, Split::test_unseen))
        throw DataError("evaluate_standard: dataset has no test_unseen samples");

    const auto prototypes = make_prototypes(emb, ds.attributes, ds.unseen_classes);
    SplitAccuracy u = classify_split(ds, prototypes, Split::test_unseen, ds.unseen_classes);

    EvalReport report;
    report.per_class = std::move(u.per_class);
    report.acc_unseen = u.mean_accuracy;
    report.confusion = std::move(u.confusion);
    report.warnings = std::move(u.warnings);
    return report;
}

EvalReport evaluate_generalized(const Dataset& ds, const AttributeEmbedder& emb) {
    if (!has_split(ds, Split::test_unseen))
        throw DataError("evaluate_generalized: dataset has no test_unseen samples");
    if (!has_split(ds, Split::test_seen))
        throw DataError("evaluate_generalized: dataset has no test_seen samples");

    // search space is the union of both class sets
    std::vector<ClassId> all_classes;
    all_classes.reserve(ds.seen_classes.size() + ds.unseen_classes.size());
    all_classes.insert(all_classes.end(), ds.seen_classes.begin(), ds.seen_classes.end());
    all_classes.insert(all_classes.end(), ds.unseen_classes.begin(), ds.unseen_classes.end());
    const auto prototypes = make_prototypes(emb, ds.attributes, all_classes);

    SplitAccuracy u = classify_split(ds, prototypes, Split::test_unseen, ds.unseen_classes);
    SplitAccuracy s = classify_split(ds, prototypes, Split::test_seen, ds.seen_classes);

    EvalReport report;
    report.per_class = std::move(u.per_class);
    report.per_class.insert(s.per_class.begin(), s.per_class.end());
    report.acc_unseen = u.mean_accuracy;
    report.acc_seen = s.mean_accuracy;
    report.harmonic = harmonic_mean(s.mean_accuracy, u.mean_accuracy);
    report.confusion = std::move(u.confusion);
    for (const auto& [key, count] : s.confusion) report.confusion[key] += count;
    report.warnings = std::move(u.warnings);
    report.warnings.insert(report.warnings.end(), s.warnings.begin(), s.warnings.end());
    return report;
}

double harmonic_mean(double acc_s, double acc_u) {
    if (acc_s < 0.0 || acc_u < 0.0)
        throw std::domain_error("harmonic_mean: accuracies must be non-negative");
    const double denom = acc_s + acc_u;
    if (denom == 0.0) return 0.0;
    return 2.0 * acc_s * acc_u / denom;
}

namespace {

std::string exact_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::string percent_1dp(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

} // namespace

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "class_id,n,correct,accuracy\n";
    for (const auto& [c, st] : report.per_class)
        out << c << ',' << st.n << ',' << st.correct << ',' << exact_double(st.accuracy) << '\n';
    out << "summary,acc_unseen," << exact_double(report.acc_unseen) << ",\n";
    if (report.acc_seen) {
        out << "summary,acc_seen," << exact_double(*report.acc_seen) << ",\n";
        out << "summary,harmonic_mean," << exact_double(*report.harmonic) << ",\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "  class      n  correct  accuracy\n";
    for (const auto& [c, st] : report.per_class) {
        char line[96];
        std::snprintf(line, sizeof(line), "  %5u  %5zu  %7zu  %7s%%\n", c, st.n, st.correct,
                      percent_1dp(st.accuracy).c_str());
        out << line;
    }
    out << "  Acc_U = " << percent_1dp(report.acc_unseen) << "%\n";
    if (report.acc_seen) {
        out << "  Acc_S = " << percent_1dp(*report.acc_seen) << "%\n";
        out << "  H     = " << percent_1dp(*report.harmonic) << "%\n";
    }
    return out.str();
}

} // namespace cpl

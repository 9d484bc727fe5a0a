#include <doctest.h>

#include "cpl/eval.hpp"
#include "cpl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cpl;
namespace fs = std::filesystem;

namespace {

// With identity weights and ReLU, non-negative attribute rows pass through
// unchanged: each class's prototype is exactly its attribute row.
AttributeEmbedder identity_embedder(std::size_t d) {
    AttributeEmbedder emb;
    emb.w1 = Matrix(d, d);
    emb.b1.assign(d, 0.0);
    emb.w2 = Matrix(d, d);
    emb.b2.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        emb.w1(i, i) = 1.0;
        emb.w2(i, i) = 1.0;
    }
    return emb;
}

void add_sample(Dataset& ds, std::vector<double> x, ClassId label, Split split) {
    Matrix grown(ds.features.rows() + 1, x.size());
    for (std::size_t r = 0; r < ds.features.rows(); ++r)
        std::copy(ds.features.row(r).begin(), ds.features.row(r).end(), grown.row(r).begin());
    std::copy(x.begin(), x.end(), grown.row(ds.features.rows()).begin());
    ds.features = grown;
    ds.labels.push_back(label);
    ds.split.push_back(split);
}

// seen classes 0,1 anchored at (1,1) and (3,3); unseen 2,3 at (6,6) and (9,9)
Dataset anchored_dataset() {
    Dataset ds;
    ds.features = Matrix(0, 2);
    ds.attributes = Matrix(4, 2);
    const double anchors[4] = {1.0, 3.0, 6.0, 9.0};
    for (std::size_t c = 0; c < 4; ++c) {
        ds.attributes(c, 0) = anchors[c];
        ds.attributes(c, 1) = anchors[c];
    }
    ds.seen_classes = {0, 1};
    ds.unseen_classes = {2, 3};
    ds.class_names = {"class_0", "class_1", "class_2", "class_3"};
    return ds;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("zero-weight embedders emit all-zero prototypes") {
    AttributeEmbedder emb;
    emb.w1 = Matrix(3, 4);
    emb.b1.assign(4, 0.0);
    emb.w2 = Matrix(4, 2);
    emb.b2.assign(2, 0.0);
    const Matrix attrs(2, 3, 0.7);
    const std::vector<ClassId> ids{0, 1};
    const auto prototypes = make_prototypes(emb, attrs, ids);
    REQUIRE(prototypes.size() == 2);
    for (const auto& cp : prototypes)
        for (double v : cp.prototype) CHECK(v == 0.0);
}

TEST_CASE("make_prototypes reproduces the scalar toy forward values") {
    AttributeEmbedder emb;
    emb.w1 = Matrix(1, 1);
    emb.w1(0, 0) = 2.0;
    emb.b1 = {-1.0};
    emb.w2 = Matrix(1, 1);
    emb.w2(0, 0) = 3.0;
    emb.b2 = {0.0};
    Matrix attrs(2, 1);
    attrs(0, 0) = 1.0;  // relu(3*relu(2-1)) = 3
    attrs(1, 0) = 0.0;  // relu(3*relu(-1)) = 0
    const std::vector<ClassId> ids{0, 1};
    const auto prototypes = make_prototypes(emb, attrs, ids);
    CHECK(prototypes[0].prototype[0] == doctest::Approx(3.0));
    CHECK(prototypes[1].prototype[0] == doctest::Approx(0.0));

    const std::vector<ClassId> missing{5};
    CHECK_THROWS_AS(make_prototypes(emb, attrs, missing), DataError);
}

TEST_CASE("recognize picks the nearest prototype with low-id tie break") {
    std::vector<ClassPrototype> prototypes;
    prototypes.push_back({10, {0.0}});
    prototypes.push_back({4, {1.0}});
    prototypes.push_back({7, {5.0}});

    const std::vector<double> near_one{2.9};  // distances 2.9 / 1.9 / 2.1
    CHECK(recognize(near_one, prototypes) == 4);

    const std::vector<double> exact{5.0};
    CHECK(recognize(exact, prototypes) == 7);

    const std::vector<double> halfway{0.5};  // equidistant between ids 10 and 4
    CHECK(recognize(halfway, prototypes) == 4);

    CHECK_THROWS_AS(recognize(exact, std::vector<ClassPrototype>{}), ConfigError);
}

TEST_CASE("standard evaluation averages per class, not per sample") {
    Dataset ds = anchored_dataset();
    // class 2: four test samples, two land nearer class 3's anchor
    add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);
    add_sample(ds, {6.2, 6.1}, 2, Split::test_unseen);
    add_sample(ds, {8.9, 8.9}, 2, Split::test_unseen);
    add_sample(ds, {9.4, 9.0}, 2, Split::test_unseen);
    // class 3: one test sample, correct
    add_sample(ds, {9.1, 9.1}, 3, Split::test_unseen);

    const EvalReport report = evaluate_standard(ds, identity_embedder(2));
    CHECK(report.per_class.at(2).n == 4);
    CHECK(report.per_class.at(2).correct == 2);
    CHECK(report.per_class.at(3).n == 1);
    CHECK(report.per_class.at(3).correct == 1);
    CHECK(report.acc_unseen == doctest::Approx(0.75));  // (2/4 + 1/1) / 2
    CHECK(!report.acc_seen.has_value());
    CHECK(!report.harmonic.has_value());
    CHECK(report.confusion.at({2, 3}) == 2);
}

TEST_CASE("a constant predictor on a balanced two-class test scores one half") {
    Dataset ds = anchored_dataset();
    for (int i = 0; i < 3; ++i) add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);
    for (int i = 0; i < 3; ++i) add_sample(ds, {6.0, 6.0}, 3, Split::test_unseen);
    const EvalReport report = evaluate_standard(ds, identity_embedder(2));
    CHECK(report.acc_unseen == doctest::Approx(0.5));
}

TEST_CASE("samples sitting on their prototypes give a perfect score") {
    Dataset ds = anchored_dataset();
    add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);
    add_sample(ds, {9.0, 9.0}, 3, Split::test_unseen);
    const EvalReport report = evaluate_standard(ds, identity_embedder(2));
    CHECK(report.acc_unseen == 1.0);
}

TEST_CASE("accuracy is invariant to sample order and whole-class duplication") {
    Dataset ds = anchored_dataset();
    add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);
    add_sample(ds, {8.8, 8.8}, 2, Split::test_unseen);
    add_sample(ds, {9.0, 9.0}, 3, Split::test_unseen);
    const double base = evaluate_standard(ds, identity_embedder(2)).acc_unseen;

    Dataset reordered = anchored_dataset();
    add_sample(reordered, {9.0, 9.0}, 3, Split::test_unseen);
    add_sample(reordered, {8.8, 8.8}, 2, Split::test_unseen);
    add_sample(reordered, {6.0, 6.0}, 2, Split::test_unseen);
    CHECK(evaluate_standard(reordered, identity_embedder(2)).acc_unseen == base);

    Dataset doubled = ds;
    add_sample(doubled, {6.0, 6.0}, 2, Split::test_unseen);
    add_sample(doubled, {8.8, 8.8}, 2, Split::test_unseen);
    CHECK(evaluate_standard(doubled, identity_embedder(2)).acc_unseen == base);
}

TEST_CASE("unseen classes without test samples are excluded with a warning") {
    Dataset ds = anchored_dataset();
    add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);  // class 3 has no samples
    const EvalReport report = evaluate_standard(ds, identity_embedder(2));
    CHECK(report.acc_unseen == 1.0);
    CHECK(report.per_class.count(3) == 0);
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("class 3") != std::string::npos);
}

TEST_CASE("generalized evaluation reports both accuracies and their harmonic mean") {
    Dataset ds = anchored_dataset();
    add_sample(ds, {1.0, 1.0}, 0, Split::test_seen);
    add_sample(ds, {3.1, 3.0}, 1, Split::test_seen);
    add_sample(ds, {1.8, 1.8}, 1, Split::test_seen);  // lands on class 0 side
    add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);
    add_sample(ds, {9.0, 9.0}, 3, Split::test_unseen);
    add_sample(ds, {7.6, 7.6}, 3, Split::test_unseen);  // just past the 7.5 midpoint

    const EvalReport report = evaluate_generalized(ds, identity_embedder(2));
    REQUIRE(report.acc_seen.has_value());
    REQUIRE(report.harmonic.has_value());
    CHECK(report.acc_unseen == doctest::Approx(1.0));
    CHECK(*report.acc_seen == doctest::Approx(0.75));  // class 0: 1/1, class 1: 1/2
    CHECK(*report.harmonic ==
          doctest::Approx(harmonic_mean(*report.acc_seen, report.acc_unseen)));
}

TEST_CASE("generalized evaluation restricted to unseen prototypes equals standard") {
    Dataset ds = anchored_dataset();
    add_sample(ds, {1.0, 1.1}, 0, Split::test_seen);
    add_sample(ds, {6.3, 6.0}, 2, Split::test_unseen);
    add_sample(ds, {8.1, 8.0}, 3, Split::test_unseen);
    add_sample(ds, {7.4, 7.4}, 2, Split::test_unseen);
    const AttributeEmbedder emb = identity_embedder(2);

    const auto unseen_prototypes = make_prototypes(emb, ds.attributes, ds.unseen_classes);
    const SplitAccuracy restricted =
        classify_split(ds, unseen_prototypes, Split::test_unseen, ds.unseen_classes);
    const EvalReport standard = evaluate_standard(ds, emb);
    CHECK(restricted.mean_accuracy == standard.acc_unseen);  // exact, same arithmetic
}

TEST_CASE("recognition agrees with the softmax argmax at any temperature") {
    std::vector<ClassPrototype> prototypes;
    prototypes.push_back({0, {0.2, 1.4}});
    prototypes.push_back({1, {2.0, 0.3}});
    prototypes.push_back({2, {0.9, 0.9}});
    const std::vector<double> xs[] = {{0.0, 1.0}, {1.9, 0.1}, {1.0, 1.0}, {0.6, 0.7}};
    for (const auto& x : xs) {
        const ClassId picked = recognize(x, prototypes);
        std::vector<double> dist;
        for (const auto& cp : prototypes) dist.push_back(l2_distance(x, cp.prototype));
        for (double gamma : {0.5, 0.9, 2.0}) {
            const auto p = class_probabilities(dist, gamma);
            const std::size_t argmax = std::max_element(p.begin(), p.end()) - p.begin();
            CHECK(prototypes[argmax].class_id == picked);
        }
    }
}

TEST_CASE("harmonic mean reproduces the reported generalized results") {
    // (Acc_U, Acc_S) -> H, all in percent at one decimal
    const double cases[4][3] = {{21.9, 32.4, 26.1},
                                {51.0, 83.1, 63.2},
                                {28.0, 58.6, 37.9},
                                {19.6, 73.2, 30.9}};
    for (const auto& c : cases) {
        const double h = harmonic_mean(c[1], c[0]);
        CHECK(std::fabs(h - c[2]) < 0.05);
    }
}

TEST_CASE("harmonic mean properties") {
    CHECK(harmonic_mean(0.4, 0.4) == doctest::Approx(0.4));  // equal inputs pass through
    CHECK(harmonic_mean(0.9, 0.0) == 0.0);
    CHECK(harmonic_mean(0.0, 0.0) == 0.0);
    // min <= H <= arithmetic mean, equalities only when the inputs agree
    for (double a : {0.2, 0.5, 0.9})
        for (double b : {0.1, 0.6, 1.0}) {
            const double h = harmonic_mean(a, b);
            CHECK(h >= std::min(a, b) - 1e-15);
            CHECK(h <= (a + b) / 2.0 + 1e-15);
            if (a != b) {
                CHECK(h > std::min(a, b));
                CHECK(h < (a + b) / 2.0);
            }
        }
    CHECK_THROWS_AS(harmonic_mean(-0.1, 0.5), std::domain_error);
}

TEST_CASE("report CSV bytes are deterministic") {
    Dataset ds = anchored_dataset();
    add_sample(ds, {6.0, 6.0}, 2, Split::test_unseen);
    add_sample(ds, {8.8, 8.9}, 3, Split::test_unseen);
    const EvalReport report = evaluate_standard(ds, identity_embedder(2));

    const fs::path dir = fs::path("eval_scratch");
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_report_csv(report, dir / "a.csv");
    write_report_csv(report, dir / "b.csv");
    const std::string a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));
    CHECK(a.find("class_id,n,correct,accuracy") == 0);
    CHECK(a.find("summary,acc_unseen,") != std::string::npos);
}

} // TEST_SUITE

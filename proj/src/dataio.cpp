#include "cpl/dataio.hpp"

#include "cpl/rng.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace cpl {

namespace {

constexpr char kFeatureMagic[4] = {'C', 'P', 'L', 'F'};
constexpr char kCheckpointMagic[4] = {'C', 'P', 'L', 'M'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

constexpr std::uint64_t kSyntheticStreamTag = 0x73796e7468; // "synth"

template <typename T>
void swap_bytes(T& value) {
    auto* p = reinterpret_cast<unsigned char*>(&value);
    std::reverse(p, p + sizeof(T));
}

template <typename T>
void write_le(std::ostream& out, T value, const std::string& path) {
    if constexpr (std::endian::native == std::endian::big) swap_bytes(value);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    if (!out) throw IoError("write failed: " + path);
}

template <typename T>
T read_le(std::istream& in, const std::string& path, std::uint64_t& offset) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
    offset += sizeof(T);
    if constexpr (std::endian::native == std::endian::big) swap_bytes(value);
    return value;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw IoError("double formatting failed");
    return std::string(buf, end);
}

double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw FormatError(context + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s, const std::string& context) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw FormatError(context + ": cannot parse integer '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

// ---- features (CPLF) ----

void write_features(const Matrix& features, const std::filesystem::path& path) {
    std::ofstream out = open_out(path, std::ios::binary);
    const std::string p = path.string();
    out.write(kFeatureMagic, 4);
    write_le<std::uint32_t>(out, kFeatureVersion, p);
    write_le<std::uint64_t>(out, features.rows(), p);
    write_le<std::uint64_t>(out, features.cols(), p);
    for (double v : features.data()) write_le<float>(out, static_cast<float>(v), p);
    if (!out) throw IoError("write failed: " + p);
}

Matrix read_features(const std::filesystem::path& path) {
    std::ifstream in = open_in(path, std::ios::binary);
    const std::string p = path.string();
    std::uint64_t offset = 0;

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw FormatError(p + ": bad magic at byte offset 0 (not a CPLF feature file)");
    offset = 4;

    const auto version = read_le<std::uint32_t>(in, p, offset);
    if (version != kFeatureVersion)
        throw FormatError(p + ": unsupported CPLF version " + std::to_string(version) +
                          " at byte offset 4 (expected " + std::to_string(kFeatureVersion) + ")");
    const auto n_samples = read_le<std::uint64_t>(in, p, offset);
    const auto d_feat = read_le<std::uint64_t>(in, p, offset);

    Matrix features(n_samples, d_feat);
    std::vector<float> row(d_feat);
    for (std::uint64_t r = 0; r < n_samples; ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(d_feat * sizeof(float)));
        if (!in) {
            const auto partial = static_cast<std::uint64_t>(std::max<std::streamsize>(in.gcount(), 0));
            throw FormatError(p + ": truncated at byte offset " +
                              std::to_string(offset + partial));
        }
        offset += d_feat * sizeof(float);
        auto dst = features.row(r);
        for (std::uint64_t k = 0; k < d_feat; ++k) {
            float v = row[k];
            if constexpr (std::endian::native == std::endian::big) swap_bytes(v);
            dst[k] = static_cast<double>(v);
        }
    }
    return features;
}

// ---- labels + split tags (CSV) ----

void write_labels(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out = open_out(path, std::ios::out);
    out << "sample_index,class_id,split\n";
    for (std::size_t i = 0; i < ds.sample_count(); ++i)
        out << i << ',' << ds.labels[i] << ',' << split_name(ds.split[i]) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void read_labels(const std::filesystem::path& path, std::size_t expected_rows,
                 std::vector<ClassId>& labels, std::vector<Split>& split) {
    std::ifstream in = open_in(path, std::ios::in);
    const std::string p = path.string();

    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "sample_index,class_id,split")
        throw FormatError(p + ": expected header 'sample_index,class_id,split'");

    labels.clear();
    split.clear();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw FormatError(p + ": row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected 3");
        const auto idx = parse_u64(fields[0], p);
        if (idx != row)
            throw FormatError(p + ": sample_index " + std::to_string(idx) + " at row " +
                              std::to_string(row) + " is out of order");
        labels.push_back(static_cast<ClassId>(parse_u64(fields[1], p)));
        const auto tag = split_from_name(fields[2]);
        if (!tag)
            throw FormatError(p + ": unknown split tag '" + std::string(fields[2]) + "'");
        split.push_back(*tag);
        ++row;
    }
    if (row != expected_rows)
        throw FormatError(p + ": dimension mismatch, expected " + std::to_string(expected_rows) +
                          " samples, found " + std::to_string(row));
}

// ---- attributes (CSV) ----

void write_attributes(const Matrix& attributes, const std::filesystem::path& path) {
    std::ofstream out = open_out(path, std::ios::out);
    for (std::size_t c = 0; c < attributes.rows(); ++c) {
        out << c;
        for (double v : attributes.row(c)) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_attributes(const std::filesystem::path& path, std::size_t expected_classes,
                       std::size_t expected_d_attr) {
    std::ifstream in = open_in(path, std::ios::in);
    const std::string p = path.string();

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 2)
            throw FormatError(p + ": row " + std::to_string(rows.size()) +
                              " has no attribute columns");
        const auto class_id = parse_u64(fields[0], p);
        if (class_id != rows.size())
            throw FormatError(p + ": class_id " + std::to_string(class_id) + " at row " +
                              std::to_string(rows.size()) + " is out of order");
        std::vector<double> values;
        values.reserve(fields.size() - 1);
        for (std::size_t f = 1; f < fields.size(); ++f)
            values.push_back(parse_double(fields[f], p));
        if (!rows.empty() && values.size() != rows.front().size())
            throw FormatError(p + ": row " + std::to_string(rows.size()) +
                              " has inconsistent column count");
        rows.push_back(std::move(values));
    }

    const std::size_t found_d_attr = rows.empty() ? 0 : rows.front().size();
    if (rows.size() != expected_classes)
        throw FormatError(p + ": dimension mismatch, expected " +
                          std::to_string(expected_classes) + " classes, found " +
                          std::to_string(rows.size()));
    if (found_d_attr != expected_d_attr)
        throw FormatError(p + ": dimension mismatch, expected d_attr=" +
                          std::to_string(expected_d_attr) + ", found " +
                          std::to_string(found_d_attr) + " attribute columns");

    Matrix attributes(rows.size(), found_d_attr);
    for (std::size_t c = 0; c < rows.size(); ++c)
        std::copy(rows[c].begin(), rows[c].end(), attributes.row(c).begin());
    return attributes;
}

// ---- class roles (CSV) ----

void write_splits(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out = open_out(path, std::ios::out);
    out << "class_id,role\n";
    std::map<ClassId, const char*> roles;
    for (ClassId c : ds.seen_classes) roles[c] = "seen";
    for (ClassId c : ds.unseen_classes) roles[c] = "unseen";
    for (const auto& [c, role] : roles) out << c << ',' << role << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

void read_splits(const std::filesystem::path& path, std::vector<ClassId>& seen,
                 std::vector<ClassId>& unseen) {
    std::ifstream in = open_in(path, std::ios::in);
    const std::string p = path.string();

    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "class_id,role")
        throw FormatError(p + ": expected header 'class_id,role'");

    seen.clear();
    unseen.clear();
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw FormatError(p + ": expected 'class_id,role' rows");
        const auto class_id = static_cast<ClassId>(parse_u64(fields[0], p));
        if (fields[1] == "seen")
            seen.push_back(class_id);
        else if (fields[1] == "unseen")
            unseen.push_back(class_id);
        else
            throw FormatError(p + ": unknown role '" + std::string(fields[1]) + "'");
    }
}

std::vector<std::string> default_class_names(std::size_t n_classes) {
    std::vector<std::string> names(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) names[c] = "class_" + std::to_string(c);
    return names;
}

} // namespace

// ---- manifest ----

Manifest manifest_for_directory(const std::filesystem::path& dir, const Dataset& ds) {
    Manifest m;
    m.features_path = dir / "features.cplf";
    m.labels_path = dir / "labels.csv";
    m.attributes_path = dir / "attributes.csv";
    m.splits_path = dir / "splits.csv";
    m.d_feat = ds.feature_dim();
    m.d_attr = ds.attribute_dim();
    m.n_samples = ds.sample_count();
    m.n_classes = ds.class_count();
    return m;
}

Manifest read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in = open_in(manifest_path, std::ios::in);
    const std::string p = manifest_path.string();
    const std::filesystem::path base = manifest_path.parent_path();

    Manifest m;
    bool have[8] = {};
    std::string line;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(p + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);

        auto resolve = [&base](const std::string& v) {
            std::filesystem::path q(v);
            return q.is_absolute() ? q : base / q;
        };
        if (key == "features") { m.features_path = resolve(value); have[0] = true; }
        else if (key == "labels") { m.labels_path = resolve(value); have[1] = true; }
        else if (key == "attributes") { m.attributes_path = resolve(value); have[2] = true; }
        else if (key == "splits") { m.splits_path = resolve(value); have[3] = true; }
        else if (key == "d_feat") { m.d_feat = parse_u64(value, p); have[4] = true; }
        else if (key == "d_attr") { m.d_attr = parse_u64(value, p); have[5] = true; }
        else if (key == "n_samples") { m.n_samples = parse_u64(value, p); have[6] = true; }
        else if (key == "n_classes") { m.n_classes = parse_u64(value, p); have[7] = true; }
        else throw FormatError(p + ": unknown manifest key '" + key + "'");
    }
    static const char* names[8] = {"features", "labels", "attributes", "splits",
                                   "d_feat", "d_attr", "n_samples", "n_classes"};
    for (int i = 0; i < 8; ++i)
        if (!have[i]) throw FormatError(p + ": missing manifest key '" + std::string(names[i]) + "'");
    return m;
}

void write_manifest(const Manifest& m, const std::filesystem::path& manifest_path) {
    std::ofstream out = open_out(manifest_path, std::ios::out);
    const std::filesystem::path base = manifest_path.parent_path();
    auto rel = [&base](const std::filesystem::path& q) {
        auto r = q.lexically_proximate(base);
        return r.empty() ? q.string() : r.string();
    };
    out << "features=" << rel(m.features_path) << '\n';
    out << "labels=" << rel(m.labels_path) << '\n';
    out << "attributes=" << rel(m.attributes_path) << '\n';
    out << "splits=" << rel(m.splits_path) << '\n';
    out << "d_feat=" << m.d_feat << '\n';
    out << "d_attr=" << m.d_attr << '\n';
    out << "n_samples=" << m.n_samples << '\n';
    out << "n_classes=" << m.n_classes << '\n';
    if (!out) throw IoError("write failed: " + manifest_path.string());
}

// ---- dataset ----

Dataset load_dataset(const Manifest& m) {
    Dataset ds;
    ds.features = read_features(m.features_path);
    if (ds.features.rows() != m.n_samples || ds.features.cols() != m.d_feat)
        throw FormatError(m.features_path.string() + ": dimension mismatch, manifest declares " +
                          std::to_string(m.n_samples) + "x" + std::to_string(m.d_feat) +
                          ", file holds " + std::to_string(ds.features.rows()) + "x" +
                          std::to_string(ds.features.cols()));
    read_labels(m.labels_path, m.n_samples, ds.labels, ds.split);
    ds.attributes = read_attributes(m.attributes_path, m.n_classes, m.d_attr);
    read_splits(m.splits_path, ds.seen_classes, ds.unseen_classes);
    ds.class_names = default_class_names(m.n_classes);

    const std::vector<std::string> violations = validate_dataset(ds);
    if (!violations.empty()) {
        std::string msg = "loaded dataset violates invariants:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw DataError(msg);
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    return load_dataset(read_manifest(manifest_path));
}

void save_dataset(const Dataset& ds, const Manifest& m) {
    if ((m.n_samples != ds.sample_count()) || (m.d_feat != ds.feature_dim()) ||
        (m.d_attr != ds.attribute_dim()) || (m.n_classes != ds.class_count()))
        throw ConfigError("manifest dimensions do not match the dataset");
    write_features(ds.features, m.features_path);
    write_labels(ds, m.labels_path);
    write_attributes(ds.attributes, m.attributes_path);
    write_splits(ds, m.splits_path);
}

// ---- checkpoint ----

namespace {

void write_array(std::ostream& out, const std::vector<double>& v, const std::string& p) {
    for (double x : v) write_le<double>(out, x, p);
}

void read_array(std::istream& in, std::vector<double>& v, std::size_t n, const std::string& p,
                std::uint64_t& offset) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = read_le<double>(in, p, offset);
}

} // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    std::ofstream out = open_out(path, std::ios::binary);
    const std::string p = path.string();

    out.write(kCheckpointMagic, 4);
    write_le<std::uint32_t>(out, kCheckpointVersion, p);
    write_le<std::uint64_t>(out, ck.embedder.attribute_dim(), p);
    write_le<std::uint64_t>(out, ck.embedder.hidden_dim(), p);
    write_le<std::uint64_t>(out, ck.embedder.output_dim(), p);

    const HyperParams& hp = ck.hyperparams;
    write_le<std::uint64_t>(out, hp.episode_classes, p);
    write_le<std::uint64_t>(out, hp.support_per_class, p);
    write_le<double>(out, hp.lambda, p);
    write_le<double>(out, hp.gamma, p);
    write_le<std::uint64_t>(out, hp.epochs, p);
    write_le<double>(out, hp.learning_rate, p);
    write_le<double>(out, hp.weight_decay, p);
    write_le<std::uint64_t>(out, hp.hidden_size, p);
    write_le<std::uint64_t>(out, hp.seed, p);

    write_le<double>(out, ck.adam.beta1, p);
    write_le<double>(out, ck.adam.beta2, p);
    write_le<double>(out, ck.adam.epsilon, p);
    write_le<std::uint64_t>(out, ck.adam.step, p);

    write_array(out, ck.embedder.w1.data(), p);
    write_array(out, ck.embedder.b1, p);
    write_array(out, ck.embedder.w2.data(), p);
    write_array(out, ck.embedder.b2, p);
    write_array(out, ck.adam.first_moment.w1.data(), p);
    write_array(out, ck.adam.first_moment.b1, p);
    write_array(out, ck.adam.first_moment.w2.data(), p);
    write_array(out, ck.adam.first_moment.b2, p);
    write_array(out, ck.adam.second_moment.w1.data(), p);
    write_array(out, ck.adam.second_moment.b1, p);
    write_array(out, ck.adam.second_moment.w2.data(), p);
    write_array(out, ck.adam.second_moment.b2, p);
    if (!out) throw IoError("write failed: " + p);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in = open_in(path, std::ios::binary);
    const std::string p = path.string();
    std::uint64_t offset = 0;

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError(p + ": not a checkpoint (bad magic at byte offset 0)");
    offset = 4;
    const auto version = read_le<std::uint32_t>(in, p, offset);
    if (version != kCheckpointVersion)
        throw FormatError(p + ": unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");

    const auto d_attr = read_le<std::uint64_t>(in, p, offset);
    const auto hidden = read_le<std::uint64_t>(in, p, offset);
    const auto d_feat = read_le<std::uint64_t>(in, p, offset);

    Checkpoint ck;
    HyperParams& hp = ck.hyperparams;
    hp.episode_classes = read_le<std::uint64_t>(in, p, offset);
    hp.support_per_class = read_le<std::uint64_t>(in, p, offset);
    hp.lambda = read_le<double>(in, p, offset);
    hp.gamma = read_le<double>(in, p, offset);
    hp.epochs = read_le<std::uint64_t>(in, p, offset);
    hp.learning_rate = read_le<double>(in, p, offset);
    hp.weight_decay = read_le<double>(in, p, offset);
    hp.hidden_size = read_le<std::uint64_t>(in, p, offset);
    hp.seed = read_le<std::uint64_t>(in, p, offset);

    ck.adam.beta1 = read_le<double>(in, p, offset);
    ck.adam.beta2 = read_le<double>(in, p, offset);
    ck.adam.epsilon = read_le<double>(in, p, offset);
    ck.adam.step = read_le<std::uint64_t>(in, p, offset);

    ck.embedder.w1 = Matrix(d_attr, hidden);
    ck.embedder.w2 = Matrix(hidden, d_feat);
    read_array(in, ck.embedder.w1.data(), d_attr * hidden, p, offset);
    read_array(in, ck.embedder.b1, hidden, p, offset);
    read_array(in, ck.embedder.w2.data(), hidden * d_feat, p, offset);
    read_array(in, ck.embedder.b2, d_feat, p, offset);

    ck.adam.first_moment.w1 = Matrix(d_attr, hidden);
    ck.adam.first_moment.w2 = Matrix(hidden, d_feat);
    read_array(in, ck.adam.first_moment.w1.data(), d_attr * hidden, p, offset);
    read_array(in, ck.adam.first_moment.b1, hidden, p, offset);
    read_array(in, ck.adam.first_moment.w2.data(), hidden * d_feat, p, offset);
    read_array(in, ck.adam.first_moment.b2, d_feat, p, offset);

    ck.adam.second_moment.w1 = Matrix(d_attr, hidden);
    ck.adam.second_moment.w2 = Matrix(hidden, d_feat);
    read_array(in, ck.adam.second_moment.w1.data(), d_attr * hidden, p, offset);
    read_array(in, ck.adam.second_moment.b1, hidden, p, offset);
    read_array(in, ck.adam.second_moment.w2.data(), hidden * d_feat, p, offset);
    read_array(in, ck.adam.second_moment.b2, d_feat, p, offset);
    return ck;
}

// ---- synthetic data ----

SyntheticResult generate_synthetic_with_truth(const SyntheticSpec& spec) {
    if (spec.seen_classes < 2 || spec.unseen_classes < 2)
        throw ConfigError("synthetic spec requires K >= 2 and L >= 2");
    if (spec.d_attr < 1 || spec.d_feat < 1)
        throw ConfigError("synthetic spec requires d_attr >= 1 and d_feat >= 1");
    if (!(spec.noise_sigma >= 0.0))
        throw ConfigError("synthetic spec requires noise_sigma >= 0");
    const std::size_t n_classes = spec.seen_classes + spec.unseen_classes;
    if (n_classes > std::numeric_limits<ClassId>::max())
        throw ConfigError("synthetic spec exceeds the class-id budget");

    Rng rng(derive_stream(spec.seed, kSyntheticStreamTag, 0));

    Matrix attributes(n_classes, spec.d_attr);
    for (double& v : attributes.data()) v = rng.next_double();

    // hidden ground-truth map, scaled so mean magnitudes stay O(1)
    Matrix g(spec.d_attr, spec.d_feat);
    const double g_scale = 1.0 / std::sqrt(static_cast<double>(spec.d_attr));
    for (double& v : g.data()) v = rng.next_normal() * g_scale;

    // means are snapped to the float32 grid features live on, so a zero-noise
    // sample equals its class mean exactly
    Matrix means(n_classes, spec.d_feat);
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto a = attributes.row(c);
        auto mu = means.row(c);
        for (std::size_t k = 0; k < spec.d_feat; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < spec.d_attr; ++i) acc += a[i] * g(i, k);
            mu[k] = static_cast<double>(static_cast<float>(acc > 0.0 ? acc : 0.0));
        }
    }

    const std::size_t n_samples = spec.seen_classes * (spec.train_per_class + spec.test_per_class) +
                                  spec.unseen_classes * spec.test_per_class;

    Dataset ds;
    ds.features = Matrix(n_samples, spec.d_feat);
    ds.labels.reserve(n_samples);
    ds.split.reserve(n_samples);
    ds.attributes = attributes;
    for (std::size_t c = 0; c < spec.seen_classes; ++c)
        ds.seen_classes.push_back(static_cast<ClassId>(c));
    for (std::size_t c = 0; c < spec.unseen_classes; ++c)
        ds.unseen_classes.push_back(static_cast<ClassId>(spec.seen_classes + c));
    ds.class_names.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) ds.class_names[c] = "class_" + std::to_string(c);

    std::size_t row = 0;
    auto emit = [&](ClassId class_id, Split tag, std::size_t count) {
        auto mu = means.row(class_id);
        for (std::size_t i = 0; i < count; ++i) {
            auto dst = ds.features.row(row);
            for (std::size_t k = 0; k < spec.d_feat; ++k) {
                double v = mu[k] + spec.noise_sigma * rng.next_normal();
                if (v < 0.0) v = 0.0;
                // snap to the 32-bit grid used on disk so save/load round-trips
                dst[k] = static_cast<double>(static_cast<float>(v));
            }
            ds.labels.push_back(class_id);
            ds.split.push_back(tag);
            ++row;
        }
    };
    for (std::size_t c = 0; c < spec.seen_classes; ++c) {
        emit(static_cast<ClassId>(c), Split::train, spec.train_per_class);
        emit(static_cast<ClassId>(c), Split::test_seen, spec.test_per_class);
    }
    for (std::size_t c = 0; c < spec.unseen_classes; ++c)
        emit(static_cast<ClassId>(spec.seen_classes + c), Split::test_unseen,
             spec.test_per_class);

    return {std::move(ds), std::move(means)};
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    return generate_synthetic_with_truth(spec).dataset;
}

} // namespace cpl

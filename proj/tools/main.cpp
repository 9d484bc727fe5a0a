// Command-line surface for the prototype-learning pipeline:
//   gen-synth   write a synthetic dataset + manifest
//   train       episodic training on a dataset manifest
//   eval        standard or generalized zero-shot evaluation
//   gradcheck   finite-difference verification of the analytic gradients
//
// Exit codes: 0 success, 1 verification/eval failure, 2 usage or config
// error, 3 I/O error.

#include "cpl/dataio.hpp"
#include "cpl/eval.hpp"
#include "cpl/gradcheck.hpp"
#include "cpl/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct GenSynthArgs {
    cpl::SyntheticSpec spec;
    std::string out_dir;
    std::string config_path;
};

struct TrainArgs {
    std::string manifest_path;
    std::string out_dir;
    std::string resume_path;
    std::string mode = "task";
    std::string aggregation = "mean";
    std::size_t episode_classes = 0;  // 0: match the unseen class count
    std::string config_path;
    cpl::TrainConfig cfg;
};

struct EvalArgs {
    std::string manifest_path;
    std::string checkpoint_path;
    std::string out_dir;
    std::string setting = "zsl";
    bool normalize_attributes = false;
    std::string config_path;
};

struct GradCheckArgs {
    std::string out_dir;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    std::string config_path;
};

struct CliModel {
    GenSynthArgs gen;
    TrainArgs train;
    EvalArgs eval;
    GradCheckArgs grad;
};

struct CliApp {
    CLI::App app{"Episodic prototype learning for zero-shot recognition", "cpl"};
    CLI::App* gen_cmd = nullptr;
    CLI::App* train_cmd = nullptr;
    CLI::App* eval_cmd = nullptr;
    CLI::App* grad_cmd = nullptr;
};

void wire(CliApp& cli, CliModel& m) {
    cli.app.require_subcommand(1);

    CLI::App* gen = cli.app.add_subcommand("gen-synth", "generate a synthetic dataset");
    gen->add_option("--config", m.gen.config_path, "flat key=value config file; flags override");
    gen->add_option("--out", m.gen.out_dir, "output directory")->required();
    gen->add_option("--seed", m.gen.spec.seed, "generator seed")->capture_default_str();
    gen->add_option("--k", m.gen.spec.seen_classes, "seen classes")->capture_default_str();
    gen->add_option("--l", m.gen.spec.unseen_classes, "unseen classes")->capture_default_str();
    gen->add_option("--train-per-class", m.gen.spec.train_per_class,
                    "training samples per seen class")->capture_default_str();
    gen->add_option("--test-per-class", m.gen.spec.test_per_class,
                    "test samples per class")->capture_default_str();
    gen->add_option("--d-attr", m.gen.spec.d_attr, "attribute dimension")->capture_default_str();
    gen->add_option("--d-feat", m.gen.spec.d_feat, "feature dimension")->capture_default_str();
    gen->add_option("--noise-sigma", m.gen.spec.noise_sigma,
                    "per-coordinate noise level")->capture_default_str();
    cli.gen_cmd = gen;

    CLI::App* train = cli.app.add_subcommand("train", "episodic training");
    train->add_option("--config", m.train.config_path,
                      "flat key=value config file; flags override");
    train->add_option("--manifest", m.train.manifest_path, "dataset manifest")->required();
    train->add_option("--out", m.train.out_dir, "output directory")->required();
    train->add_option("--seed", m.train.cfg.hp.seed, "training seed")->capture_default_str();
    train->add_option("--epochs", m.train.cfg.hp.epochs, "epochs")->capture_default_str();
    train->add_option("--c", m.train.episode_classes,
                      "classes per episode (0 = number of unseen classes)")
        ->capture_default_str();
    train->add_option("--s", m.train.cfg.hp.support_per_class,
                      "support samples per class")->capture_default_str();
    train->add_option("--lambda", m.train.cfg.hp.lambda,
                      "classification-loss weight in [0,1]")->capture_default_str();
    train->add_option("--gamma", m.train.cfg.hp.gamma, "softmax temperature")
        ->capture_default_str();
    train->add_option("--lr", m.train.cfg.hp.learning_rate, "Adam learning rate")
        ->capture_default_str();
    train->add_option("--weight-decay", m.train.cfg.hp.weight_decay, "l2 weight decay")
        ->capture_default_str();
    train->add_option("--hidden", m.train.cfg.hp.hidden_size, "hidden layer width")
        ->capture_default_str();
    train->add_option("--mode", m.train.mode, "episode sampling: task or sample")
        ->check(CLI::IsMember({"task", "sample"}))->capture_default_str();
    train->add_option("--aggregation", m.train.aggregation, "per-episode loss: mean or sum")
        ->check(CLI::IsMember({"mean", "sum"}))->capture_default_str();
    train->add_flag("--cep-only", m.train.cfg.cep_only,
                    "optimize the classification loss alone");
    train->add_flag("--normalize-attributes", m.train.cfg.normalize_attributes,
                    "unit-L2 normalize attribute rows");
    train->add_flag("--coverage-rotation", m.train.cfg.coverage_rotation,
                    "rotate episode classes through a per-epoch permutation");
    train->add_option("--val-holdout", m.train.cfg.validation_holdout,
                      "seen classes to hold out for model selection")->capture_default_str();
    train->add_option("--resume", m.train.resume_path, "checkpoint to continue from");
    train->add_option("--log-every", m.train.cfg.log_every, "console log cadence")
        ->capture_default_str();
    cli.train_cmd = train;

    CLI::App* eval = cli.app.add_subcommand("eval", "zero-shot evaluation");
    eval->add_option("--config", m.eval.config_path,
                     "flat key=value config file; flags override");
    eval->add_option("--manifest", m.eval.manifest_path, "dataset manifest")->required();
    eval->add_option("--checkpoint", m.eval.checkpoint_path, "trained checkpoint")->required();
    eval->add_option("--out", m.eval.out_dir, "output directory")->required();
    eval->add_option("--setting", m.eval.setting, "zsl (standard) or gzsl (generalized)")
        ->check(CLI::IsMember({"zsl", "gzsl"}))->capture_default_str();
    eval->add_flag("--normalize-attributes", m.eval.normalize_attributes,
                   "unit-L2 normalize attribute rows (must match training)");
    cli.eval_cmd = eval;

    CLI::App* grad = cli.app.add_subcommand("gradcheck", "finite-difference gradient check");
    grad->add_option("--config", m.grad.config_path,
                     "flat key=value config file; flags override");
    grad->add_option("--out", m.grad.out_dir, "output directory")->required();
    grad->add_option("--trials", m.grad.trials, "random instances")->capture_default_str();
    grad->add_option("--seed", m.grad.seed, "suite seed")->capture_default_str();
    cli.grad_cmd = grad;
}

std::vector<std::pair<std::string, std::string>> read_flat_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw cpl::IoError("cannot open config file: " + path.string());
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw cpl::ConfigError(path.string() + ": expected key=value, got '" + line + "'");
        entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return entries;
}

// Flat key=value config support: keys name long options of the active
// subcommand; anything given on the command line wins. Returns the token
// list for a second parse, or empty if no config file was named.
std::vector<std::string> merge_config_tokens(const CLI::App* active, const std::string& cfg_path,
                                             int argc, char** argv) {
    if (cfg_path.empty()) return {};
    if (argc < 2 || active->get_name() != argv[1])
        throw cpl::ConfigError("--config requires the subcommand first on the command line");

    std::vector<std::string> tokens;
    tokens.push_back(active->get_name());
    for (const auto& [key, value] : read_flat_config(cfg_path)) {
        if (key == "config")
            throw cpl::ConfigError("config files cannot name another config file");
        const CLI::Option* opt = active->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw cpl::ConfigError(cfg_path + ": unknown config key '" + key + "'");
        if (opt->count() > 0) continue;  // the flag on the command line wins
        tokens.push_back("--" + key + "=" + value);
    }
    for (int i = 2; i < argc; ++i) tokens.emplace_back(argv[i]);
    return tokens;
}

void write_config_echo(const CLI::App* cmd, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const fs::path path = out_dir / "effective_config.txt";
    std::ofstream out(path);
    if (!out) throw cpl::IoError("cannot open for writing: " + path.string());
    out << "command=" << cmd->get_name() << '\n';
    out << cmd->config_to_str(true, false);
    if (!out) throw cpl::IoError("write failed: " + path.string());
}

int cmd_gen_synth(const CLI::App* cmd, const GenSynthArgs& args) {
    write_config_echo(cmd, args.out_dir);
    const cpl::SyntheticResult synth = cpl::generate_synthetic_with_truth(args.spec);
    const cpl::Dataset& ds = synth.dataset;

    const fs::path dir(args.out_dir);
    const cpl::Manifest manifest = cpl::manifest_for_directory(dir, ds);
    cpl::save_dataset(ds, manifest);
    cpl::write_manifest(manifest, dir / "manifest.txt");

    std::printf("wrote synthetic dataset: %s (%zu samples, %zu classes, %zu seen / %zu unseen)\n",
                (dir / "manifest.txt").string().c_str(), ds.sample_count(), ds.class_count(),
                ds.seen_classes.size(), ds.unseen_classes.size());

    // reference upper bound: classify test_unseen against the true class means
    std::vector<cpl::ClassPrototype> oracle;
    for (cpl::ClassId c : ds.unseen_classes) {
        auto mu = synth.class_means.row(c);
        oracle.push_back({c, cpl::Prototype(mu.begin(), mu.end())});
    }
    const cpl::SplitAccuracy acc =
        cpl::classify_split(ds, oracle, cpl::Split::test_unseen, ds.unseen_classes);
    std::printf("nearest-true-mean oracle acc_unseen: %.1f%%\n", acc.mean_accuracy * 100.0);
    return kExitOk;
}

int cmd_train(const CLI::App* cmd, TrainArgs& args) {
    write_config_echo(cmd, args.out_dir);
    const cpl::Dataset ds = cpl::load_dataset(fs::path(args.manifest_path));

    args.cfg.hp.episode_classes =
        args.episode_classes > 0 ? args.episode_classes : ds.unseen_classes.size();
    args.cfg.mode =
        args.mode == "sample" ? cpl::SamplerMode::sample_level : cpl::SamplerMode::task_level;
    args.cfg.aggregation =
        args.aggregation == "sum" ? cpl::LossAggregation::sum : cpl::LossAggregation::mean;

    const fs::path dir(args.out_dir);
    args.cfg.checkpoint_path = dir / "checkpoint.cplm";

    const std::size_t log_every = std::max<std::size_t>(1, args.cfg.log_every);
    std::size_t count = 0;
    const cpl::EpisodeCallback echo = [&](const cpl::TrainLogRecord& rec) {
        if (count++ % log_every != 0) return;
        std::printf("epoch %3zu episode %3zu  cep %.6f  pec %.6f  combined %.6f  (%.1f ms)\n",
                    rec.epoch, rec.episode, rec.cep, rec.pec, rec.combined, rec.millis);
    };

    cpl::TrainResult result;
    if (!args.resume_path.empty()) {
        const cpl::Checkpoint ck = cpl::load_checkpoint(fs::path(args.resume_path));
        result = cpl::resume(ds, args.cfg, ck, echo);
    } else {
        result = cpl::train(ds, args.cfg, echo);
    }

    cpl::write_train_log(result.log, dir / "train_log.csv");
    std::printf("trained %zu episodes (%s mode); checkpoint: %s\n", result.log.size(),
                cpl::sampler_mode_name(args.cfg.mode),
                args.cfg.checkpoint_path.string().c_str());
    return kExitOk;
}

int cmd_eval(const CLI::App* cmd, const EvalArgs& args) {
    write_config_echo(cmd, args.out_dir);
    cpl::Dataset ds = cpl::load_dataset(fs::path(args.manifest_path));
    const cpl::Checkpoint ck = cpl::load_checkpoint(fs::path(args.checkpoint_path));

    if (ck.embedder.attribute_dim() != ds.attribute_dim() ||
        ck.embedder.output_dim() != ds.feature_dim())
        throw cpl::ConfigError(
            "checkpoint maps " + std::to_string(ck.embedder.attribute_dim()) + " -> " +
            std::to_string(ck.embedder.output_dim()) + " but the dataset needs " +
            std::to_string(ds.attribute_dim()) + " -> " + std::to_string(ds.feature_dim()));

    if (args.normalize_attributes) ds.attributes = cpl::l2_normalize_rows(ds.attributes);

    const bool generalized = args.setting == "gzsl";
    const cpl::EvalReport report = generalized ? cpl::evaluate_generalized(ds, ck.embedder)
                                               : cpl::evaluate_standard(ds, ck.embedder);

    for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("%s evaluation\n%s", generalized ? "generalized" : "standard",
                cpl::format_report_table(report).c_str());

    const fs::path report_path =
        fs::path(args.out_dir) / (generalized ? "report_gzsl.csv" : "report_zsl.csv");
    cpl::write_report_csv(report, report_path);
    std::printf("report: %s\n", report_path.string().c_str());
    return kExitOk;
}

int cmd_gradcheck(const CLI::App* cmd, const GradCheckArgs& args) {
    write_config_echo(cmd, args.out_dir);
    const cpl::GradCheckReport report = cpl::run_gradient_check(args.trials, args.seed);
    std::printf(
        "gradient check: %zu trials, %zu coordinates, max relative error %.3e, max abs diff %.3e\n",
        report.trials, report.coordinates_checked, report.max_error, report.max_abs_diff);
    if (!report.passed()) {
        std::printf("FAILED: %zu coordinates above tolerance %.0e (worst: %s)\n",
                    report.failures, cpl::kGradCheckRelTol, report.worst_coordinate.c_str());
        return kExitVerification;
    }
    std::printf("PASSED (tolerance %.0e)\n", cpl::kGradCheckRelTol);
    return kExitOk;
}

int dispatch(const CliApp& cli, CliModel& model) {
    if (cli.gen_cmd->parsed()) return cmd_gen_synth(cli.gen_cmd, model.gen);
    if (cli.train_cmd->parsed()) return cmd_train(cli.train_cmd, model.train);
    if (cli.eval_cmd->parsed()) return cmd_eval(cli.eval_cmd, model.eval);
    if (cli.grad_cmd->parsed()) return cmd_gradcheck(cli.grad_cmd, model.grad);
    return kExitConfig;
}

const std::string& config_path_of(const CliApp& cli, const CliModel& model) {
    static const std::string kEmpty;
    if (cli.gen_cmd->parsed()) return model.gen.config_path;
    if (cli.train_cmd->parsed()) return model.train.config_path;
    if (cli.eval_cmd->parsed()) return model.eval.config_path;
    if (cli.grad_cmd->parsed()) return model.grad.config_path;
    return kEmpty;
}

} // namespace

int main(int argc, char** argv) {
    auto model = std::make_unique<CliModel>();
    auto cli = std::make_unique<CliApp>();
    wire(*cli, *model);

    try {
        cli->app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli->app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const CLI::App* active = cli->app.get_subcommands().front();
        std::vector<std::string> merged =
            merge_config_tokens(active, config_path_of(*cli, *model), argc, argv);
        if (!merged.empty()) {
            // second pass over fresh state with config entries injected
            model = std::make_unique<CliModel>();
            cli = std::make_unique<CliApp>();
            wire(*cli, *model);
            std::reverse(merged.begin(), merged.end());
            cli->app.parse(merged);
        }
        return dispatch(*cli, *model);
    } catch (const CLI::ParseError& e) {
        const int code = cli->app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const cpl::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const cpl::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const cpl::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitVerification;
    } catch (const std::exception& e) {  // config, shape, data, domain
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}

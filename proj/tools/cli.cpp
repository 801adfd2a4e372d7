#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcp/embedding.hpp"
#include "pcp/errors.hpp"
#include "pcp/harness.hpp"
#include "pcp/purification.hpp"
#include "pcp/simnet.hpp"
#include "pcp/trainer.hpp"

namespace pcp::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Usage problems detected after CLI11 parsing (missing model for a mode, ...).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalOptions {
    std::string dataset;
    std::string classifier;
    std::string relation;
    std::string out;
    std::string mode = "full";
    std::string profile = "primary";
    std::optional<double> lambda;
    std::size_t ways = 5;
    std::size_t shots = 1;
    std::size_t queries = 15;
    std::size_t iterations = 3;
    std::size_t top_l = 9;
    std::size_t episodes = kProtocolEpisodes;
    std::uint64_t seed = 1;
    bool normalize = false;
};

void add_eval_options(CLI::App& cmd, EvalOptions& o) {
    cmd.add_option("--dataset", o.dataset, "Test embeddings (JSON Lines)")->required();
    cmd.add_option("--model-classifier", o.classifier, "Classification net checkpoint")->required();
    cmd.add_option("--model-relation", o.relation, "Relation net checkpoint");
    cmd.add_option("--out", o.out, "Output directory")->required();
    cmd.add_option("--ways", o.ways, "Classes per episode")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--shots", o.shots, "Support samples per class")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--queries", o.queries, "Query samples per class")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--iterations", o.iterations, "Purification iterations T")->capture_default_str();
    cmd.add_option("--top-l", o.top_l, "Members selected per cluster L")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--lambda", o.lambda, "Negative degree weight (overrides --profile)")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--profile", o.profile, "Lambda profile: primary (0.8) or secondary (0.6)")
        ->capture_default_str()
        ->check(CLI::IsMember({"primary", "secondary"}));
    cmd.add_option("--mode", o.mode, "baseline | ref_all | sel_by_score | intra_pos_only | full")
        ->capture_default_str()
        ->check(CLI::IsMember({"baseline", "ref_all", "sel_by_score", "intra_pos_only", "full"}));
    cmd.add_option("--episodes", o.episodes, "Evaluation episodes")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--seed", o.seed, "Episode seed")->capture_default_str();
    cmd.add_flag("--normalize-embeddings", o.normalize, "L2-normalise embeddings on load");
}

EvalConfig to_eval_config(const EvalOptions& o) {
    EvalConfig c = protocol_eval_config(o.shots, o.profile == "secondary" ? LambdaProfile::secondary
                                                                          : LambdaProfile::primary);
    c.ways = o.ways;
    c.queries = o.queries;
    c.pcp.iterations = o.iterations;
    c.pcp.top_l = o.top_l;
    if (o.lambda) c.pcp.lambda = *o.lambda;
    c.pcp.mode = parse_mode(o.mode);
    return c;
}

json eval_config_json(const EvalConfig& c) {
    return {{"ways", c.ways},           {"shots", c.shots},
            {"queries", c.queries},     {"iterations", c.pcp.iterations},
            {"top_l", c.pcp.top_l},     {"lambda", c.pcp.lambda},
            {"mode", std::string(to_string(c.pcp.mode))}};
}

EmbeddingDataset load_for_run(const std::string& path, Split split, bool normalize) {
    EmbeddingDataset ds = load_dataset(path, split);
    if (normalize) l2_normalize(ds);
    return ds;
}

fs::path prepare_out(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void log_config(const json& config, const fs::path& dir, std::ostream& log) {
    log << "resolved config: " << config.dump() << '\n';
    write_text(dir / "run_config.json", config.dump(2));
}

struct Models {
    SimilarityNet classifier;
    SimilarityNet relation;
};

bool needs_relation(const EvalConfig& c) {
    return c.pcp.effective_iterations() > 0 &&
           (c.pcp.mode == AblationMode::intra_pos_only || c.pcp.mode == AblationMode::full);
}

Models load_models(const EvalOptions& o, bool relation_required, std::size_t dim) {
    Models m;
    m.classifier = load_checkpoint(o.classifier);
    if (!o.relation.empty()) {
        m.relation = load_checkpoint(o.relation);
    } else if (relation_required) {
        throw UsageError("--model-relation is required for this mode");
    } else {
        m.relation = SimilarityNet(dim, {1});
    }
    if (m.classifier.input_dim() != dim || m.relation.input_dim() != dim) {
        throw ShapeError("model input dimension does not match dataset dimension " + std::to_string(dim));
    }
    return m;
}

json eval_run_json(const std::string& command, const EvalOptions& o, const EvalConfig& c) {
    return {{"command", command},
            {"dataset", o.dataset},
            {"model_classifier", o.classifier},
            {"model_relation", o.relation},
            {"episodes", o.episodes},
            {"seed", o.seed},
            {"normalize_embeddings", o.normalize},
            {"eval", eval_config_json(c)}};
}

int run_gen_data(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out, std::ostream& os, std::ostream& log) {
    SyntheticConfig cfg = config_path.empty() ? SyntheticConfig{} : load_synthetic_config(config_path);
    if (seed) cfg.seed = *seed;
    validate(cfg);
    const fs::path dir = prepare_out(out);
    log_config({{"command", "gen-data"},
                {"synthetic", {{"dimension", cfg.dimension},
                               {"train_classes", cfg.train_classes},
                               {"test_classes", cfg.test_classes},
                               {"samples_per_class", cfg.samples_per_class},
                               {"mean_scale", cfg.mean_scale},
                               {"within_std", cfg.within_std},
                               {"seed", cfg.seed}}}},
               dir, log);
    const SyntheticData data = generate_synthetic(cfg);
    write_dataset(data.train, dir / "train.jsonl");
    write_dataset(data.test, dir / "test.jsonl");
    save_synthetic_config(cfg, dir / "synthetic_config.json");
    os << "wrote " << data.train.classes.size() << " train and " << data.test.classes.size()
       << " test classes to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    CLI::App app{"Transductive few-shot classification by progressive cluster purification", "pcp"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic Gaussian embedding benchmark");
    std::string gen_config;
    std::optional<std::uint64_t> gen_seed;
    std::string gen_out;
    gen->add_option("--config", gen_config, "Synthetic config (JSON)");
    gen->add_option("--seed", gen_seed, "Override the config seed");
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "Two-stage episodic training of the comparator nets");
    TrainConfig tc;
    std::string train_dataset, validation_dataset, train_out, train_mode = "full";
    std::optional<std::size_t> train_shots;
    std::optional<double> train_lambda;
    bool no_higher_shot = false;
    bool train_normalize = false;
    train->add_option("--dataset", train_dataset, "Training embeddings (JSON Lines)")->required();
    train->add_option("--validation", validation_dataset, "Validation embeddings for checkpoint selection");
    train->add_option("--out", train_out, "Output directory")->required();
    train->add_option("--ways", tc.ways, "Classes per episode")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--shots", tc.eval_shots, "Evaluation shots")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--train-shots", train_shots, "Training shots (default: higher-shot rule)")->check(CLI::PositiveNumber);
    train->add_flag("--no-higher-shot", no_higher_shot, "Train with the evaluation shot count");
    train->add_option("--queries", tc.queries, "Query samples per class")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--stage1-episodes", tc.episodes_stage1, "Classifier training episodes")->capture_default_str();
    train->add_option("--stage2-episodes", tc.episodes_stage2, "Relation training episodes")->capture_default_str();
    train->add_option("--learning-rate", tc.learning_rate, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--hidden", tc.hidden_dims, "Hidden layer widths")->capture_default_str()->expected(1, 8);
    train->add_option("--seed", tc.seed, "Training seed")->capture_default_str();
    train->add_option("--validation-interval", tc.validation_interval, "Episodes between validation checkpoints")->capture_default_str();
    train->add_option("--validation-episodes", tc.validation_episodes, "Episodes per validation checkpoint")->capture_default_str();
    train->add_option("--iterations", tc.validation_pcp.iterations, "Validation purification iterations")->capture_default_str();
    train->add_option("--top-l", tc.validation_pcp.top_l, "Validation top-L")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--lambda", train_lambda, "Validation lambda")->check(CLI::Range(0.0, 1.0));
    train->add_option("--mode", train_mode, "Validation mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"baseline", "ref_all", "sel_by_score", "intra_pos_only", "full"}));
    train->add_flag("--normalize-embeddings", train_normalize, "L2-normalise embeddings on load");

    // eval
    auto* eval = app.add_subcommand("eval", "Episode-averaged accuracy with 95% confidence interval");
    EvalOptions eo;
    std::string trace_path;
    add_eval_options(*eval, eo);
    eval->add_option("--trace", trace_path, "Write the per-iteration trace of episode 0 (JSON Lines)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Paired sweep over T, L or lambda");
    EvalOptions so;
    std::string axis_name;
    std::vector<double> values;
    add_eval_options(*sweep, so);
    sweep->add_option("--axis", axis_name, "T | L | lambda | ablation")
        ->required()
        ->check(CLI::IsMember({"T", "iterations", "L", "top-l", "lambda", "ablation"}));
    sweep->add_option("--values", values, "Comma separated axis values")->delimiter(',');

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Paired evaluation of the whole ablation ladder");
    EvalOptions ao;
    add_eval_options(*ablate, ao);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        log << "usage error: " << e.what() << '\n';
        if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            log << sub->help();
        } else {
            log << app.help();
        }
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_config, gen_seed, gen_out, out, log);

        if (train->parsed()) {
            tc.higher_shot = !no_higher_shot;
            tc.train_shots = train_shots ? *train_shots
                             : tc.higher_shot ? higher_shot_train_shots(tc.eval_shots)
                                              : tc.eval_shots;
            tc.validation_pcp.mode = parse_mode(train_mode);
            if (train_lambda) tc.validation_pcp.lambda = *train_lambda;
            try {
                validate(tc);
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
            const fs::path dir = prepare_out(train_out);
            log_config({{"command", "train"},
                        {"dataset", train_dataset},
                        {"validation", validation_dataset},
                        {"normalize_embeddings", train_normalize},
                        {"ways", tc.ways},
                        {"train_shots", tc.train_shots},
                        {"eval_shots", tc.eval_shots},
                        {"queries", tc.queries},
                        {"higher_shot", tc.higher_shot},
                        {"episodes_stage1", tc.episodes_stage1},
                        {"episodes_stage2", tc.episodes_stage2},
                        {"learning_rate", tc.learning_rate},
                        {"hidden_dims", tc.hidden_dims},
                        {"seed", tc.seed},
                        {"validation_interval", tc.validation_interval},
                        {"validation_episodes", tc.validation_episodes},
                        {"validation_pcp",
                         {{"iterations", tc.validation_pcp.iterations},
                          {"top_l", tc.validation_pcp.top_l},
                          {"lambda", tc.validation_pcp.lambda},
                          {"mode", std::string(to_string(tc.validation_pcp.mode))}}}},
                       dir, log);
            const EmbeddingDataset train_ds = load_for_run(train_dataset, Split::train, train_normalize);
            std::optional<EmbeddingDataset> val_ds;
            if (!validation_dataset.empty()) {
                val_ds = load_for_run(validation_dataset, Split::validation, train_normalize);
            }
            const EmbeddingDataset* val = val_ds ? &*val_ds : nullptr;
            TrainedNet stage1 = train_stage1(train_ds, tc, val);
            TrainedNet stage2 = train_stage2(train_ds, stage1.net, tc, val);
            TrainLog log_all = stage1.log;
            log_all.stage2_loss = stage2.log.stage2_loss;
            log_all.validation.insert(log_all.validation.end(), stage2.log.validation.begin(),
                                      stage2.log.validation.end());
            save_checkpoint(stage1.net, dir / "classifier.json");
            save_checkpoint(stage2.net, dir / "relation.json");
            write_train_log(log_all, dir / "train_log.csv");
            out << "trained " << tc.episodes_stage1 << " + " << tc.episodes_stage2
                << " episodes, checkpoints in " << dir.string() << '\n';
            return kExitOk;
        }

        auto* cmd = eval->parsed() ? eval : sweep->parsed() ? sweep : ablate;
        const EvalOptions& o = eval->parsed() ? eo : sweep->parsed() ? so : ao;
        EvalConfig config;
        try {
            config = to_eval_config(o);
            validate(config.pcp);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }

        std::optional<SweepAxis> axis;
        if (cmd == sweep) {
            axis = parse_axis(axis_name);
            if (*axis == SweepAxis::ablation) {
                values.clear();
                for (std::size_t i = 0; i < std::size(kAblationLadder); ++i) values.push_back(static_cast<double>(i));
            } else if (values.empty()) {
                throw UsageError("--values is required for axis " + axis_name);
            }
            try {
                for (std::size_t i = 0; i < values.size(); ++i) {
                    apply_axis(config, *axis, values[i]);
                    if (i > 0 && !(values[i] > values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
                }
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
        } else if (cmd == ablate) {
            axis = SweepAxis::ablation;
            values.clear();
            for (std::size_t i = 0; i < std::size(kAblationLadder); ++i) values.push_back(static_cast<double>(i));
        }

        bool relation_required = needs_relation(config);
        if (axis) {
            for (double v : values) relation_required = relation_required || needs_relation(apply_axis(config, *axis, v));
        }

        const fs::path dir = prepare_out(o.out);
        json run = eval_run_json(cmd->get_name(), o, config);
        if (axis) {
            run["axis"] = std::string(to_string(*axis));
            run["values"] = values;
        }
        log_config(run, dir, log);

        const EmbeddingDataset test = load_for_run(o.dataset, Split::test, o.normalize);
        const Models models = load_models(o, relation_required, test.dimension());

        if (!axis) {
            const EvalReport report = evaluate(test, models.classifier, models.relation, config, o.episodes, o.seed);
            write_text(dir / "report.json", report_to_json(report));
            write_episode_csv(report, dir / "episodes.csv");
            if (!trace_path.empty()) {
                Rng rng(derive_seed(o.seed, 0));
                const Episode ep = sample_episode(test, config.ways, config.shots, config.queries, rng);
                write_trace(pcp_run(ep, models.classifier, models.relation, config.pcp), ep, fs::path(trace_path));
            }
            out << "accuracy " << report.mean << " +- " << report.ci95 << " over " << report.n_episodes
                << " episodes\n";
            return kExitOk;
        }

        const SweepReport result =
            run_sweep(*axis, values, config, test, models.classifier, models.relation, o.episodes, o.seed);
        write_sweep_csv(result, dir / "sweep.csv");
        write_text(dir / "sweep.json", sweep_to_json(result));
        for (const auto& p : result.points) {
            out << to_string(result.axis) << '=' << axis_value_label(result.axis, p.value) << "  accuracy "
                << p.report.mean << " +- " << p.report.ci95 << '\n';
        }
        return kExitOk;
    } catch (const UsageError& e) {
        log << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace pcp::cli

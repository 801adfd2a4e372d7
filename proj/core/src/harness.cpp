#include "pcp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcp/errors.hpp"

namespace pcp {

using json = nlohmann::json;

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json config_to_json(const EvalConfig& c) {
    return {{"ways", c.ways},
            {"shots", c.shots},
            {"queries", c.queries},
            {"iterations", c.pcp.iterations},
            {"top_l", c.pcp.top_l},
            {"lambda", c.pcp.lambda},
            {"mode", std::string(to_string(c.pcp.mode))}};
}

EvalConfig config_from_json(const json& j) {
    EvalConfig c;
    c.ways = j.at("ways").get<std::size_t>();
    c.shots = j.at("shots").get<std::size_t>();
    c.queries = j.at("queries").get<std::size_t>();
    c.pcp.iterations = j.at("iterations").get<std::size_t>();
    c.pcp.top_l = j.at("top_l").get<std::size_t>();
    c.pcp.lambda = j.at("lambda").get<double>();
    c.pcp.mode = parse_mode(j.at("mode").get<std::string>());
    return c;
}

json report_json(const EvalReport& r) {
    return {{"mean", r.mean},
            {"ci95", r.ci95},
            {"n_episodes", r.n_episodes},
            {"seed", r.seed},
            {"config", config_to_json(r.config)},
            {"episodes_digest", r.episodes_digest},
            {"per_episode_accuracy", r.per_episode_accuracy}};
}

EvalReport report_from(const json& j) {
    EvalReport r;
    r.mean = j.at("mean").get<double>();
    r.ci95 = j.at("ci95").get<double>();
    r.n_episodes = j.at("n_episodes").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = config_from_json(j.at("config"));
    r.episodes_digest = j.value("episodes_digest", std::uint64_t{0});
    r.per_episode_accuracy = j.value("per_episode_accuracy", std::vector<double>{});
    return r;
}

}  // namespace

EvalConfig protocol_eval_config(std::size_t shots, LambdaProfile profile) {
    EvalConfig c;
    c.ways = 5;
    c.shots = shots;
    c.queries = 15;
    c.pcp.iterations = 3;
    c.pcp.top_l = 9;
    c.pcp.lambda = profile == LambdaProfile::primary ? 0.8 : 0.6;
    c.pcp.mode = AblationMode::full;
    return c;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    const std::size_t n = values.size();
    if (n == 0) return s;
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
        s.mean = values[0];
        return s;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(n);
    if (n < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    s.ci95 = kZ95 * sd / std::sqrt(static_cast<double>(n));
    return s;
}

Summary paired_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("paired samples differ in length");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return summarize(diff);
}

EvalReport evaluate(const EmbeddingDataset& test, const SimilarityNet& classifier,
                    const SimilarityNet& relation, const EvalConfig& config, std::size_t n_episodes,
                    std::uint64_t seed) {
    validate(config.pcp);
    EvalReport report;
    report.n_episodes = n_episodes;
    report.seed = seed;
    report.config = config;
    report.per_episode_accuracy.reserve(n_episodes);
    std::uint64_t digest = 1469598103934665603ULL;
    for (std::size_t e = 0; e < n_episodes; ++e) {
        Rng rng(derive_seed(seed, e));
        const Episode ep = sample_episode(test, config.ways, config.shots, config.queries, rng);
        digest = (digest ^ episode_fingerprint(ep)) * 1099511628211ULL;
        const auto result = pcp_run(ep, classifier, relation, config.pcp);
        report.per_episode_accuracy.push_back(accuracy(result.final_assignment.predicted, ep.query_targets));
    }
    report.episodes_digest = digest;
    const Summary s = summarize(report.per_episode_accuracy);
    report.mean = s.mean;
    report.ci95 = s.ci95;
    return report;
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::iterations: return "T";
        case SweepAxis::top_l: return "L";
        case SweepAxis::lambda: return "lambda";
        case SweepAxis::ablation: return "ablation";
    }
    return "T";
}

SweepAxis parse_axis(std::string_view name) {
    if (name == "T" || name == "iterations") return SweepAxis::iterations;
    if (name == "L" || name == "top-l" || name == "top_l") return SweepAxis::top_l;
    if (name == "lambda") return SweepAxis::lambda;
    if (name == "ablation") return SweepAxis::ablation;
    throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

EvalConfig apply_axis(const EvalConfig& base, SweepAxis axis, double value) {
    EvalConfig c = base;
    auto as_count = [&](const char* what) {
        if (!(value >= 0.0) || value != std::floor(value)) {
            throw ConfigError(std::string(what) + " values must be non-negative integers");
        }
        return static_cast<std::size_t>(value);
    };
    switch (axis) {
        case SweepAxis::iterations: c.pcp.iterations = as_count("T"); break;
        case SweepAxis::top_l: c.pcp.top_l = as_count("L"); break;
        case SweepAxis::lambda: c.pcp.lambda = value; break;
        case SweepAxis::ablation: {
            const std::size_t idx = as_count("ablation");
            if (idx >= std::size(kAblationLadder)) throw ConfigError("ablation index out of range");
            c.pcp.mode = kAblationLadder[idx];
            break;
        }
    }
    validate(c.pcp);
    return c;
}

std::string axis_value_label(SweepAxis axis, double value) {
    if (axis == SweepAxis::ablation) {
        return std::string(to_string(kAblationLadder[static_cast<std::size_t>(value)]));
    }
    return shortest(value);
}

SweepReport run_sweep(SweepAxis axis, std::span<const double> values, const EvalConfig& base,
                      const EmbeddingDataset& test, const SimilarityNet& classifier,
                      const SimilarityNet& relation, std::size_t n_episodes, std::uint64_t seed) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] > values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
    }
    std::vector<EvalConfig> configs;
    for (double v : values) configs.push_back(apply_axis(base, axis, v));

    SweepReport sweep;
    sweep.axis = axis;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sweep.points.push_back({values[i], evaluate(test, classifier, relation, configs[i], n_episodes, seed)});
    }
    return sweep;
}

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2); }

EvalReport report_from_json(const std::string& text) {
    try {
        return report_from(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

std::string sweep_to_json(const SweepReport& sweep) {
    json points = json::array();
    for (const auto& p : sweep.points) {
        points.push_back({{"value", p.value},
                          {"label", axis_value_label(sweep.axis, p.value)},
                          {"report", report_json(p.report)}});
    }
    return json{{"axis", std::string(to_string(sweep.axis))}, {"points", std::move(points)}}.dump(2);
}

SweepReport sweep_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        SweepReport s;
        s.axis = parse_axis(j.at("axis").get<std::string>());
        for (const auto& p : j.at("points")) {
            s.points.push_back({p.at("value").get<double>(), report_from(p.at("report"))});
        }
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("sweep: ") + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_episode_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "episode,accuracy\n";
    for (std::size_t e = 0; e < report.per_episode_accuracy.size(); ++e) {
        out << e << ',' << shortest(report.per_episode_accuracy[e]) << '\n';
    }
    std::string text = out.str();
    text.pop_back();
    write_text(path, text);
}

void write_sweep_csv(const SweepReport& sweep, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "axis_value,mean,ci95\n";
    for (const auto& p : sweep.points) {
        out << axis_value_label(sweep.axis, p.value) << ',' << shortest(p.report.mean) << ','
            << shortest(p.report.ci95) << '\n';
    }
    std::string text = out.str();
    text.pop_back();
    write_text(path, text);
}

}  // namespace pcp

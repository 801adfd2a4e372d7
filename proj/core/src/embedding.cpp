#include "pcp/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pcp/errors.hpp"

namespace pcp {

using json = nlohmann::json;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "test";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw ConfigError("unknown split '" + std::string(name) + "'");
}

std::size_t EmbeddingDataset::dimension() const {
    for (const auto& [label, samples] : classes) {
        if (!samples.empty()) return samples.front().size();
    }
    return 0;
}

std::size_t EmbeddingDataset::sample_count() const {
    std::size_t total = 0;
    for (const auto& [label, samples] : classes) total += samples.size();
    return total;
}

void validate(const EmbeddingDataset& dataset) {
    if (dataset.classes.empty()) throw EmptyDatasetError("dataset has no classes");
    const std::size_t dim = dataset.dimension();
    if (dim == 0) throw ShapeError("embedding dimension must be at least 1");
    for (const auto& [label, samples] : dataset.classes) {
        if (samples.empty()) throw EmptyDatasetError("class '" + label + "' has no samples");
        for (const auto& e : samples) {
            if (e.size() != dim) {
                throw ShapeError("class '" + label + "': embedding of dimension " +
                                 std::to_string(e.size()) + ", expected " + std::to_string(dim));
            }
            if (!std::all_of(e.begin(), e.end(), [](double v) { return std::isfinite(v); })) {
                throw ShapeError("class '" + label + "': non-finite embedding entry");
            }
        }
    }
}

void l2_normalize(EmbeddingDataset& dataset) {
    for (auto& [label, samples] : dataset.classes) {
        for (auto& e : samples) {
            const double norm = std::sqrt(std::inner_product(e.begin(), e.end(), e.begin(), 0.0));
            if (norm > 0.0) {
                for (double& v : e) v /= norm;
            }
        }
    }
}

std::size_t Episode::dimension() const {
    if (!support.empty()) return support.front().embedding.size();
    if (!query.empty()) return query.front().embedding.size();
    return 0;
}

std::size_t Episode::local_index(const std::string& label) const {
    const auto it = std::find(class_map.begin(), class_map.end(), label);
    if (it == class_map.end()) throw MissingClassError("label '" + label + "' not in episode");
    return static_cast<std::size_t>(it - class_map.begin());
}

Matrix Episode::query_matrix() const {
    Matrix q(query.size(), dimension());
    for (std::size_t i = 0; i < query.size(); ++i) {
        std::copy(query[i].embedding.begin(), query[i].embedding.end(), q.row(i).begin());
    }
    return q;
}

Episode make_episode(std::vector<std::string> class_map, std::vector<LabeledSample> support,
                     std::vector<LabeledSample> query) {
    Episode ep;
    ep.ways = class_map.size();
    ep.class_map = std::move(class_map);
    ep.support = std::move(support);
    ep.query = std::move(query);
    if (ep.ways == 0) throw ConfigError("episode needs at least one class");

    std::vector<std::size_t> support_counts(ep.ways, 0), query_counts(ep.ways, 0);
    const std::size_t dim = ep.dimension();
    auto check = [&](const LabeledSample& s) {
        if (s.embedding.size() != dim) throw ShapeError("episode embeddings differ in dimension");
    };
    for (const auto& s : ep.support) {
        check(s);
        ep.support_targets.push_back(ep.local_index(s.label));
        ++support_counts[ep.support_targets.back()];
    }
    for (const auto& s : ep.query) {
        check(s);
        ep.query_targets.push_back(ep.local_index(s.label));
        ++query_counts[ep.query_targets.back()];
    }
    ep.shots = support_counts.front();
    ep.queries_per_class = query_counts.front();
    if (std::any_of(support_counts.begin(), support_counts.end(),
                    [&](std::size_t c) { return c != ep.shots; }) ||
        std::any_of(query_counts.begin(), query_counts.end(),
                    [&](std::size_t c) { return c != ep.queries_per_class; })) {
        throw ShapeError("episode classes have unequal support or query counts");
    }
    return ep;
}

Episode sample_episode(const EmbeddingDataset& dataset, std::size_t ways, std::size_t shots,
                       std::size_t queries_per_class, Rng& rng) {
    if (ways == 0 || shots == 0 || queries_per_class == 0) {
        throw ConfigError("ways, shots and queries must be positive");
    }
    if (dataset.classes.size() < ways) {
        throw CapacityError("dataset has " + std::to_string(dataset.classes.size()) +
                            " classes, episode needs " + std::to_string(ways));
    }
    const std::size_t per_class = shots + queries_per_class;
    std::vector<const std::pair<const std::string, std::vector<Embedding>>*> entries;
    entries.reserve(dataset.classes.size());
    for (const auto& entry : dataset.classes) {
        if (entry.second.size() < per_class) {
            throw CapacityError("class '" + entry.first + "' has " +
                                std::to_string(entry.second.size()) + " samples, episode needs " +
                                std::to_string(per_class));
        }
        entries.push_back(&entry);
    }

    // Partial Fisher-Yates: the first `count` slots become a uniform draw.
    auto draw = [&rng](std::vector<std::size_t>& pool, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
    };

    std::vector<std::size_t> class_pool(entries.size());
    std::iota(class_pool.begin(), class_pool.end(), 0);
    draw(class_pool, ways);

    Episode ep;
    ep.ways = ways;
    ep.shots = shots;
    ep.queries_per_class = queries_per_class;
    ep.support.reserve(ways * shots);
    ep.query.reserve(ways * queries_per_class);
    for (std::size_t n = 0; n < ways; ++n) {
        const auto& [label, samples] = *entries[class_pool[n]];
        ep.class_map.push_back(label);
        std::vector<std::size_t> pool(samples.size());
        std::iota(pool.begin(), pool.end(), 0);
        draw(pool, per_class);
        for (std::size_t k = 0; k < per_class; ++k) {
            LabeledSample s{samples[pool[k]], label};
            if (k < shots) {
                ep.support.push_back(std::move(s));
                ep.support_targets.push_back(n);
            } else {
                ep.query.push_back(std::move(s));
                ep.query_targets.push_back(n);
            }
        }
    }
    return ep;
}

std::uint64_t episode_fingerprint(const Episode& episode) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto* set : {&episode.support, &episode.query}) {
        for (const auto& s : *set) {
            mix(s.label.data(), s.label.size());
            mix(s.embedding.data(), s.embedding.size() * sizeof(double));
        }
    }
    return h;
}

void validate(const SyntheticConfig& config) {
    if (config.dimension == 0 || config.train_classes == 0 || config.test_classes == 0 ||
        config.samples_per_class == 0) {
        throw ConfigError("synthetic config counts must be positive");
    }
    if (!(config.within_std > 0.0) || !(config.mean_scale > 0.0)) {
        throw ConfigError("synthetic config requires within_std > 0 and mean_scale > 0");
    }
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
    validate(config);
    Rng rng(config.seed);
    std::normal_distribution<double> mean_coord(0.0, config.mean_scale);
    std::normal_distribution<double> noise(0.0, config.within_std);

    auto fill = [&](EmbeddingDataset& ds, std::string_view prefix, std::size_t count) {
        for (std::size_t c = 0; c < count; ++c) {
            char name[32];
            std::snprintf(name, sizeof(name), "%.*s_%04zu", static_cast<int>(prefix.size()),
                          prefix.data(), c);
            Embedding mean(config.dimension);
            for (double& v : mean) v = mean_coord(rng);
            auto& samples = ds.classes[name];
            samples.reserve(config.samples_per_class);
            for (std::size_t s = 0; s < config.samples_per_class; ++s) {
                Embedding e(mean);
                for (double& v : e) v += noise(rng);
                samples.push_back(std::move(e));
            }
        }
    };

    SyntheticData data;
    data.train.split = Split::train;
    data.test.split = Split::test;
    fill(data.train, "train", config.train_classes);
    fill(data.test, "test", config.test_classes);
    return data;
}

SyntheticConfig load_synthetic_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synthetic config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    SyntheticConfig cfg;
    try {
        cfg.dimension = j.value("dimension", cfg.dimension);
        cfg.train_classes = j.value("train_classes", cfg.train_classes);
        cfg.test_classes = j.value("test_classes", cfg.test_classes);
        cfg.samples_per_class = j.value("samples_per_class", cfg.samples_per_class);
        cfg.mean_scale = j.value("mean_scale", cfg.mean_scale);
        cfg.within_std = j.value("within_std", cfg.within_std);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    validate(cfg);
    return cfg;
}

void save_synthetic_config(const SyntheticConfig& config, const std::filesystem::path& path) {
    json j = {{"dimension", config.dimension},         {"train_classes", config.train_classes},
              {"test_classes", config.test_classes},   {"samples_per_class", config.samples_per_class},
              {"mean_scale", config.mean_scale},       {"within_std", config.within_std},
              {"seed", config.seed}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

EmbeddingDataset load_dataset(const std::filesystem::path& path, Split split) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    EmbeddingDataset ds;
    ds.split = split;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string label;
        Embedding e;
        try {
            const json j = json::parse(line);
            label = j.at("label").get<std::string>();
            e = j.at("embedding").get<Embedding>();
        } catch (const json::exception& ex) {
            throw ParseError(ex.what(), line_no);
        }
        if (e.empty()) throw ParseError("empty embedding", line_no);
        if (dim == 0) dim = e.size();
        if (e.size() != dim) {
            throw DimensionMismatchError("embedding has dimension " + std::to_string(e.size()) +
                                             ", expected " + std::to_string(dim),
                                         line_no);
        }
        ds.classes[label].push_back(std::move(e));
    }
    if (ds.classes.empty()) throw EmptyDatasetError("dataset file " + path.string() + " is empty");
    validate(ds);
    return ds;
}

void write_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [label, samples] : dataset.classes) {
        for (const auto& e : samples) {
            out << json{{"label", label}, {"embedding", e}}.dump() << '\n';
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace pcp

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "pcp/embedding.hpp"
#include "pcp/errors.hpp"
#include "pcp/purification.hpp"
#include "support/fixtures.hpp"

namespace pcp {
namespace {

using testing::TempDir;

EmbeddingDataset small_dataset(std::size_t classes, std::size_t per_class, std::size_t dim) {
    EmbeddingDataset ds;
    double v = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        auto& samples = ds.classes["c" + std::to_string(c)];
        for (std::size_t s = 0; s < per_class; ++s) {
            Embedding e(dim);
            for (double& x : e) x = (v += 0.25);
            samples.push_back(e);
        }
    }
    return ds;
}

TEST(Synthetic, SameSeedIsBitIdentical) {
    SyntheticConfig cfg;
    cfg.train_classes = 5;
    cfg.test_classes = 3;
    cfg.samples_per_class = 10;
    EXPECT_EQ(generate_synthetic(cfg).train, generate_synthetic(cfg).train);
    EXPECT_EQ(generate_synthetic(cfg).test, generate_synthetic(cfg).test);
    cfg.seed += 1;
    SyntheticConfig other = cfg;
    other.seed -= 1;
    EXPECT_NE(generate_synthetic(cfg).train, generate_synthetic(other).train);
}

TEST(Synthetic, TrainAndTestClassesAreDisjoint) {
    const auto data = generate_synthetic({});
    EXPECT_EQ(data.train.classes.size(), 40u);
    EXPECT_EQ(data.test.classes.size(), 20u);
    for (const auto& [label, samples] : data.test.classes) {
        EXPECT_FALSE(data.train.classes.contains(label));
        EXPECT_EQ(samples.size(), 50u);
        EXPECT_EQ(samples.front().size(), 16u);
    }
    EXPECT_NO_THROW(validate(data.train));
}

TEST(Synthetic, ClassMeansAreDistinct) {
    // With a tiny within-class spread, the first sample approximates the mean.
    SyntheticConfig cfg;
    cfg.within_std = 1e-12;
    cfg.samples_per_class = 1;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        cfg.seed = seed;
        const auto data = generate_synthetic(cfg);
        std::set<Embedding> means;
        for (const auto* ds : {&data.train, &data.test}) {
            for (const auto& [label, samples] : ds->classes) means.insert(samples.front());
        }
        EXPECT_EQ(means.size(), cfg.train_classes + cfg.test_classes);
    }
}

TEST(Synthetic, ZeroNoiseLimitIsPerfectlySeparable) {
    SyntheticConfig cfg;
    cfg.within_std = 1e-12;
    const auto data = generate_synthetic(cfg);
    Rng rng(3);
    for (int e = 0; e < 50; ++e) {
        const Episode ep = sample_episode(data.test, 5, 1, 15, rng);
        const Prototypes p = compute_prototypes(ep);
        for (std::size_t i = 0; i < ep.query.size(); ++i) {
            std::size_t best = 0;
            double best_d = 1e300;
            for (std::size_t n = 0; n < ep.ways; ++n) {
                double d = 0.0;
                for (std::size_t k = 0; k < p.vectors.cols(); ++k) {
                    const double diff = ep.query[i].embedding[k] - p.vectors(n, k);
                    d += diff * diff;
                }
                if (d < best_d) {
                    best_d = d;
                    best = n;
                }
            }
            EXPECT_EQ(best, ep.query_targets[i]);
        }
    }
}

TEST(Synthetic, RejectsInvalidConfig) {
    SyntheticConfig cfg;
    cfg.within_std = 0.0;
    EXPECT_THROW(generate_synthetic(cfg), ConfigError);
    cfg = {};
    cfg.test_classes = 0;
    EXPECT_THROW(generate_synthetic(cfg), ConfigError);
    cfg = {};
    cfg.mean_scale = -1.0;
    EXPECT_THROW(generate_synthetic(cfg), ConfigError);
}

TEST(Synthetic, ConfigFileRoundTrip) {
    TempDir dir("pcp_cfg");
    SyntheticConfig cfg;
    cfg.within_std = 0.123456789012345;
    cfg.seed = 99;
    save_synthetic_config(cfg, dir / "c.json");
    EXPECT_EQ(load_synthetic_config(dir / "c.json"), cfg);
}

TEST(Sampler, PaperEpisodeShape) {
    const auto data = generate_synthetic({});
    Rng rng(1);
    const Episode ep = sample_episode(data.test, 5, 1, 15, rng);
    EXPECT_EQ(ep.support.size(), 5u);
    EXPECT_EQ(ep.query.size(), 75u);
    EXPECT_EQ(ep.class_map.size(), 5u);
}

TEST(Sampler, ExhaustsExactCapacity) {
    const auto ds = small_dataset(3, 4, 2);
    Rng rng(5);
    const Episode ep = sample_episode(ds, 3, 1, 3, rng);
    std::multiset<Embedding> used;
    for (const auto& s : ep.support) used.insert(s.embedding);
    for (const auto& s : ep.query) used.insert(s.embedding);
    std::multiset<Embedding> all;
    for (const auto& [label, samples] : ds.classes) all.insert(samples.begin(), samples.end());
    EXPECT_EQ(used, all);
}

TEST(Sampler, DeterministicGivenRngState) {
    const auto data = generate_synthetic({});
    Rng a(17), b(17);
    EXPECT_EQ(sample_episode(data.test, 5, 5, 15, a), sample_episode(data.test, 5, 5, 15, b));
}

TEST(Sampler, CapacityErrorsNameTheClass) {
    auto ds = small_dataset(4, 6, 2);
    Rng rng(1);
    EXPECT_THROW(sample_episode(ds, 5, 1, 1, rng), CapacityError);
    ds.classes["c2"].resize(3);
    try {
        sample_episode(ds, 2, 1, 3, rng);
        FAIL() << "expected capacity error";
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("c2"), std::string::npos);
    }
}

TEST(Sampler, EpisodeInvariantsHoldAcrossManyTrials) {
    SyntheticConfig cfg;
    cfg.train_classes = 1;
    cfg.test_classes = 8;
    cfg.samples_per_class = 12;
    cfg.dimension = 3;
    const auto data = generate_synthetic(cfg);
    Rng rng(2024);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t ways = 2 + trial % 5;
        const std::size_t shots = 1 + trial % 3;
        const std::size_t queries = 1 + trial % 7;
        const Episode ep = sample_episode(data.test, ways, shots, queries, rng);
        ASSERT_EQ(ep.support.size(), ways * shots);
        ASSERT_EQ(ep.query.size(), ways * queries);
        std::vector<std::size_t> sc(ways, 0), qc(ways, 0);
        for (std::size_t i = 0; i < ep.support.size(); ++i) {
            ASSERT_EQ(ep.class_map[ep.support_targets[i]], ep.support[i].label);
            ++sc[ep.support_targets[i]];
        }
        for (std::size_t i = 0; i < ep.query.size(); ++i) {
            ASSERT_EQ(ep.class_map[ep.query_targets[i]], ep.query[i].label);
            ++qc[ep.query_targets[i]];
        }
        ASSERT_TRUE(std::all_of(sc.begin(), sc.end(), [&](std::size_t c) { return c == shots; }));
        ASSERT_TRUE(std::all_of(qc.begin(), qc.end(), [&](std::size_t c) { return c == queries; }));
        ASSERT_EQ(std::set<std::string>(ep.class_map.begin(), ep.class_map.end()).size(), ways);
        // Continuous samples are distinct, so set disjointness is checked on values.
        std::set<Embedding> support;
        for (const auto& s : ep.support) support.insert(s.embedding);
        for (const auto& q : ep.query) ASSERT_FALSE(support.contains(q.embedding));
    }
}

TEST(DatasetIo, ReadsTwoRecords) {
    TempDir dir("pcp_io");
    std::ofstream(dir / "d.jsonl") << "{\"label\": \"a\", \"embedding\": [1, 2, 3]}\n"
                                   << "{\"label\": \"a\", \"embedding\": [4.5, 5, 6]}\n";
    const auto ds = load_dataset(dir / "d.jsonl");
    ASSERT_EQ(ds.classes.size(), 1u);
    EXPECT_EQ(ds.classes.at("a").size(), 2u);
    EXPECT_EQ(ds.classes.at("a")[1], (Embedding{4.5, 5, 6}));
    EXPECT_EQ(ds.dimension(), 3u);
}

TEST(DatasetIo, DimensionMismatchReportsLine) {
    TempDir dir("pcp_io");
    std::ofstream(dir / "d.jsonl") << "{\"label\": \"a\", \"embedding\": [1, 2, 3]}\n"
                                   << "{\"label\": \"b\", \"embedding\": [1, 2, 3]}\n"
                                   << "{\"label\": \"b\", \"embedding\": [1, 2, 3, 4]}\n";
    try {
        load_dataset(dir / "d.jsonl");
        FAIL() << "expected dimension mismatch";
    } catch (const DimensionMismatchError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(DatasetIo, MalformedLineReportsLine) {
    TempDir dir("pcp_io");
    std::ofstream(dir / "d.jsonl") << "{\"label\": \"a\", \"embedding\": [1]}\n"
                                   << "{\"label\": \"a\", \"embedding\": [1,}\n";
    try {
        load_dataset(dir / "d.jsonl");
        FAIL() << "expected parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::ofstream(dir / "e.jsonl") << "{\"label\": \"a\", \"embedding\": [1, null]}\n";
    EXPECT_THROW(load_dataset(dir / "e.jsonl"), ParseError);
}

TEST(DatasetIo, EmptyFileIsAnError) {
    TempDir dir("pcp_io");
    std::ofstream(dir / "d.jsonl") << "\n";
    EXPECT_THROW(load_dataset(dir / "d.jsonl"), EmptyDatasetError);
    EXPECT_THROW(load_dataset(dir / "missing.jsonl"), IoError);
}

TEST(DatasetIo, RoundTripIsBitExact) {
    TempDir dir("pcp_io");
    SyntheticConfig cfg;
    cfg.train_classes = 3;
    cfg.test_classes = 2;
    cfg.samples_per_class = 7;
    auto data = generate_synthetic(cfg);
    // Awkward values that need all 17 significant digits.
    data.test.classes.begin()->second[0][0] = 0.1 + 0.2;
    data.test.classes.begin()->second[0][1] = 1e-310;
    data.test.classes.begin()->second[0][2] = -123456789.123456789;
    write_dataset(data.test, dir / "t.jsonl");
    EXPECT_EQ(load_dataset(dir / "t.jsonl", Split::test), data.test);
}

TEST(Normalize, UnitLength) {
    auto ds = small_dataset(2, 3, 4);
    ds.classes["zero"].push_back(Embedding(4, 0.0));
    l2_normalize(ds);
    for (const auto& [label, samples] : ds.classes) {
        for (const auto& e : samples) {
            double n = 0.0;
            for (double v : e) n += v * v;
            EXPECT_NEAR(n, label == "zero" ? 0.0 : 1.0, 1e-12);
        }
    }
}

TEST(MakeEpisode, RejectsUnbalancedClasses) {
    std::vector<LabeledSample> support{{{1.0}, "a"}, {{2.0}, "b"}};
    std::vector<LabeledSample> query{{{1.0}, "a"}, {{2.0}, "a"}, {{3.0}, "b"}};
    EXPECT_THROW(make_episode({"a", "b"}, support, query), ShapeError);
    query.pop_back();
    query.push_back({{5.0}, "zzz"});
    EXPECT_THROW(make_episode({"a", "b"}, support, query), MissingClassError);
}

}  // namespace
}  // namespace pcp

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

#include "pcp/errors.hpp"
#include "pcp/losses.hpp"
#include "pcp/trainer.hpp"
#include "support/fixtures.hpp"

namespace pcp {
namespace {

SyntheticData small_benchmark(double within_std, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.dimension = 8;
    cfg.train_classes = 12;
    cfg.test_classes = 6;
    cfg.samples_per_class = 25;
    cfg.within_std = within_std;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

TrainConfig small_config() {
    TrainConfig c;
    c.hidden_dims = {16, 16};
    c.queries = 5;
    c.episodes_stage1 = 0;
    c.episodes_stage2 = 0;
    c.seed = 3;
    return c;
}

double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
    return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(from),
                           v.begin() + static_cast<std::ptrdiff_t>(to), 0.0) /
           static_cast<double>(to - from);
}

TEST(Trainer, HigherShotRule) {
    EXPECT_EQ(higher_shot_train_shots(1), 5u);
    EXPECT_EQ(higher_shot_train_shots(5), 10u);
    EXPECT_EQ(higher_shot_train_shots(3), 6u);
}

TEST(Trainer, ZeroEpisodesReturnTheInitialNet) {
    const auto data = small_benchmark(1.0, 1);
    const auto c = small_config();
    const auto s1 = train_stage1(data.train, c);
    EXPECT_EQ(s1.net, initial_net(8, c, 1));
    EXPECT_TRUE(s1.log.stage1_loss.empty());
    const auto s2 = train_stage2(data.train, s1.net, c);
    EXPECT_EQ(s2.net, initial_net(8, c, 2));
    EXPECT_NE(initial_net(8, c, 1), initial_net(8, c, 2));
}

TEST(Trainer, StageOneLossDecreasesOnSeparableData) {
    const auto data = small_benchmark(1e-6, 5);
    auto c = small_config();
    c.episodes_stage1 = 1500;
    c.learning_rate = 1e-3;
    const auto s1 = train_stage1(data.train, c);
    ASSERT_EQ(s1.log.stage1_loss.size(), 1500u);
    EXPECT_LT(mean(s1.log.stage1_loss, 1400, 1500), mean(s1.log.stage1_loss, 0, 100));
}

TEST(Trainer, StageTwoLossDecreases) {
    const auto data = small_benchmark(0.5, 61);
    auto c = small_config();
    c.episodes_stage2 = 1500;
    const SimilarityNet classifier = initial_net(8, c, 1);
    const auto s2 = train_stage2(data.train, classifier, c);
    ASSERT_EQ(s2.log.stage2_loss.size(), 1500u);
    EXPECT_LT(mean(s2.log.stage2_loss, 1400, 1500), mean(s2.log.stage2_loss, 0, 100));
}

TEST(Trainer, StageTwoNeverModifiesTheClassifier) {
    const auto data = small_benchmark(1.0, 7);
    auto c = small_config();
    c.episodes_stage1 = 50;
    c.episodes_stage2 = 50;
    c.validation_interval = 10;
    c.validation_episodes = 5;
    const auto s1 = train_stage1(data.train, c, &data.test);
    const SimilarityNet frozen = s1.net;
    const auto hash = s1.net.parameter_hash();
    const auto s2 = train_stage2(data.train, s1.net, c, &data.test);
    EXPECT_EQ(s1.net.parameter_hash(), hash);
    EXPECT_EQ(s1.net, frozen);
    EXPECT_FALSE(s2.log.validation.empty());
}

TEST(Trainer, IsDeterministic) {
    const auto data = small_benchmark(1.0, 8);
    auto c = small_config();
    c.episodes_stage1 = 40;
    c.episodes_stage2 = 40;
    const auto a = train_stage1(data.train, c);
    const auto b = train_stage1(data.train, c);
    EXPECT_EQ(a.net, b.net);
    EXPECT_EQ(a.log.stage1_loss, b.log.stage1_loss);
    EXPECT_EQ(train_stage2(data.train, a.net, c).net, train_stage2(data.train, b.net, c).net);
    c.seed = 4;
    EXPECT_NE(train_stage1(data.train, c).net, a.net);
}

TEST(Trainer, ValidationKeepsTheBestCheckpoint) {
    const auto data = small_benchmark(1.0, 9);
    auto c = small_config();
    c.episodes_stage1 = 60;
    c.validation_interval = 20;
    c.validation_episodes = 10;
    const auto s1 = train_stage1(data.train, c, &data.test);
    ASSERT_EQ(s1.log.validation.size(), 3u);
    EXPECT_EQ(s1.log.validation[0].episode, 20u);
    EXPECT_EQ(s1.log.validation[2].episode, 60u);
    for (const auto& v : s1.log.validation) {
        EXPECT_EQ(v.stage, 1);
        EXPECT_GE(v.accuracy, 0.0);
        EXPECT_LE(v.accuracy, 1.0);
    }
}

TEST(Trainer, ConfigValidation) {
    auto c = small_config();
    c.ways = 0;
    const auto data = small_benchmark(1.0, 1);
    EXPECT_THROW(train_stage1(data.train, c), ConfigError);
    c = small_config();
    c.learning_rate = 0.0;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_config();
    c.train_shots = 1;
    c.eval_shots = 5;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_config();
    c.ways = 20;
    c.episodes_stage1 = 1;
    EXPECT_THROW(train_stage1(data.train, c), CapacityError);
}

TEST(Trainer, WritesLossCsv) {
    const auto data = small_benchmark(1.0, 2);
    auto c = small_config();
    c.episodes_stage1 = 3;
    c.episodes_stage2 = 2;
    auto s1 = train_stage1(data.train, c);
    const auto s2 = train_stage2(data.train, s1.net, c);
    s1.log.stage2_loss = s2.log.stage2_loss;
    testing::TempDir dir("pcp_train");
    write_train_log(s1.log, dir / "log.csv");
    std::ifstream in(dir / "log.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[0], "episode,stage,loss");
    EXPECT_EQ(lines[1].substr(0, 4), "0,1,");
    EXPECT_EQ(lines[4].substr(0, 4), "0,2,");
}

}  // namespace
}  // namespace pcp

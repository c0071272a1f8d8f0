// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "rdlab/parallel.hpp"
#include "rdlab/sim.hpp"
#include "rdlab/stats.hpp"

using rdlab::DiffusionModel;
using rdlab::PathConfig;

namespace {

PathConfig config(double t_max, double dt, std::uint64_t seed = 42, std::uint64_t rep = 0) {
    PathConfig c;
    c.t_max = t_max;
    c.dt = dt;
    c.seed = seed;
    c.replicate_index = rep;
    return c;
}

}  // namespace

TEST(Simulate, DeterministicOdeLimit) {
    const auto m = DiffusionModel::constant_drift(2.0, 1e-12);
    const auto p = rdlab::simulate_path(m, config(1.0, 0.001));
    ASSERT_EQ(p.x.size(), 1001u);
    EXPECT_NEAR(p.x.back(), 2.0, 1e-6);
}

TEST(Simulate, InitialCondition) {
    auto cfg = config(1.0, 0.01);
    cfg.x_init = 5.0;
    const auto p = rdlab::simulate_path(DiffusionModel::brownian(), cfg);
    EXPECT_EQ(p.x[0], 5.0);
    EXPECT_EQ(p.dw.size(), 100u);
}

TEST(Simulate, SameSeedSamePath) {
    const auto a = rdlab::simulate_path(DiffusionModel::brownian(), config(2.0, 0.001));
    const auto b = rdlab::simulate_path(DiffusionModel::brownian(), config(2.0, 0.001));
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.dw, b.dw);
}

TEST(Simulate, ReplicateIndexChangesPath) {
    const auto a = rdlab::simulate_path(DiffusionModel::brownian(), config(1.0, 0.01, 42, 0));
    const auto b = rdlab::simulate_path(DiffusionModel::brownian(), config(1.0, 0.01, 42, 1));
    EXPECT_NE(a.dw, b.dw);
}

TEST(Simulate, EulerRecursionHoldsExactly) {
    const auto m = DiffusionModel::ornstein_uhlenbeck(0.7, 1.3);
    auto cfg = config(5.0, 0.01);
    cfg.x_init = 0.4;
    const auto p = rdlab::simulate_path(m, cfg);
    for (std::size_t k = 0; k < p.steps(); ++k)
        EXPECT_EQ(p.x[k + 1], p.x[k] + m.drift(p.x[k]) * p.dt + m.sigma(p.x[k]) * p.dw[k]);
}

TEST(Simulate, WorkerCountInvariance) {
    auto run = [](unsigned workers) {
        return rdlab::map_replicates(12, workers, [](std::size_t i) {
            return rdlab::simulate_path(DiffusionModel::ornstein_uhlenbeck(), config(3.0, 0.001, 7, i)).x;
        });
    };
    EXPECT_EQ(run(1), run(3));
}

TEST(Simulate, BrownianTerminalMeanClt) {
    const int n = 10000;
    const auto ends = rdlab::map_replicates(n, rdlab::default_workers(), [](std::size_t i) {
        auto cfg = config(1.0, 0.001, 11, i);
        cfg.x_init = 1.5;
        double end = 0.0;
        rdlab::stream_path(DiffusionModel::brownian(), cfg, [&](std::size_t, double, double, double xn) { end = xn; },
                           [](std::size_t, double) {});
        return end;
    });
    EXPECT_NEAR(rdlab::mean(ends), 1.5, 4.0 / std::sqrt(n));
    EXPECT_NEAR(rdlab::variance(ends), 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Simulate, IncrementVariance) {
    const auto p = rdlab::simulate_path(DiffusionModel::brownian(), config(100.0, 0.001, 3));
    ASSERT_EQ(p.dw.size(), 100000u);
    double s2 = 0.0;
    for (double d : p.dw) s2 += d * d;
    EXPECT_NEAR(s2 / p.dw.size(), 0.001, 0.05 * 0.001);
}

TEST(Simulate, MisalignedCheckpointNamesTime) {
    auto cfg = config(1.0, 0.01);
    cfg.checkpoints = {0.5, 0.555};
    try {
        rdlab::simulate_path(DiffusionModel::brownian(), cfg);
        FAIL() << "expected SimulationError";
    } catch (const rdlab::SimulationError& e) {
        EXPECT_NE(std::string(e.what()).find("0.555"), std::string::npos) << e.what();
    }
}

TEST(Simulate, CheckpointOrderingValidated) {
    auto cfg = config(1.0, 0.01);
    cfg.checkpoints = {0.5, 0.5};
    EXPECT_THROW(rdlab::simulate_path(DiffusionModel::brownian(), cfg), rdlab::SimulationError);
    cfg.checkpoints = {2.0};
    EXPECT_THROW(rdlab::simulate_path(DiffusionModel::brownian(), cfg), rdlab::SimulationError);
}

TEST(Simulate, OverflowReportsStep) {
    // b(x) = 1000 x with dt = 1 multiplies the state by ~1001 per step.
    const auto m = DiffusionModel::ornstein_uhlenbeck(-1000.0);
    auto cfg = config(1000.0, 1.0);
    cfg.x_init = 1.0;
    try {
        rdlab::simulate_path(m, cfg);
        FAIL() << "expected SimulationError";
    } catch (const rdlab::SimulationError& e) {
        EXPECT_GT(e.step(), 50u);
        EXPECT_LT(e.step(), 200u);
    }
}

TEST(Simulate, StreamMatchesReplayAtCheckpoints) {
    const auto m = DiffusionModel::ornstein_uhlenbeck();
    auto cfg = config(10.0, 0.01, 5, 2);
    cfg.checkpoints = {0.01, 1.0, 2.5, 10.0};
    std::vector<double> streamed, replayed;
    rdlab::stream_path(m, cfg, [](std::size_t, double, double, double) {},
                       [&](std::size_t, double x) { streamed.push_back(x); });
    const auto p = rdlab::simulate_path(m, cfg);
    rdlab::replay_path(p, cfg.checkpoints, [](std::size_t, double, double, double) {},
                       [&](std::size_t, double x) { replayed.push_back(x); });
    EXPECT_EQ(streamed, replayed);
    EXPECT_EQ(streamed.back(), p.x.back());
}

TEST(PathDump, RoundTrip) {
    const auto m = DiffusionModel::compact_bump();
    auto cfg = config(2.0, 0.01, 99, 4);
    cfg.x_init = -0.3;
    const auto p = rdlab::simulate_path(m, cfg);
    const auto file = std::filesystem::temp_directory_path() / "rdlab_dump_test.bin";
    rdlab::write_path_dump(p, file.string());
    EXPECT_EQ(std::filesystem::file_size(file), 8u * (5 + 201 + 200));
    const auto q = rdlab::read_path_dump(file.string());
    std::filesystem::remove(file);
    EXPECT_EQ(q.model_id, m.id());
    EXPECT_EQ(q.config.seed, 99u);
    EXPECT_EQ(q.config.replicate_index, 4u);
    EXPECT_EQ(q.dt, 0.01);
    EXPECT_EQ(q.x, p.x);
    EXPECT_EQ(q.dw, p.dw);
}

TEST(PathDump, TruncatedFileRejected) {
    const auto file = std::filesystem::temp_directory_path() / "rdlab_dump_trunc.bin";
    {
        std::ofstream out(file, std::ios::binary);
        out << "short";
    }
    EXPECT_THROW(rdlab::read_path_dump(file.string()), rdlab::Error);
    std::filesystem::remove(file);
}

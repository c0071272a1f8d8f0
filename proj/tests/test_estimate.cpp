// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rdlab/estimate.hpp"

using rdlab::DiffusionModel;
using rdlab::Path;

namespace {

Path line_path(double x_init, double slope, double t, double dt) {
    Path p;
    p.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(t / dt));
    for (std::size_t k = 0; k <= n; ++k) p.x.push_back(x_init + slope * static_cast<double>(k) * dt);
    p.dw.assign(n, 0.0);
    return p;
}

Path prefix(const Path& p, double t) {
    Path q = p;
    const auto n = static_cast<std::size_t>(std::llround(t / p.dt));
    q.x.resize(n + 1);
    q.dw.resize(n);
    return q;
}

}  // namespace

TEST(BandwidthRate, ReferenceValues) {
    auto r = rdlab::bandwidth_and_rate(1000.0, 1.0, 0.5);
    EXPECT_NEAR(r.H, 0.1, 1e-12);
    EXPECT_NEAR(r.R, 10.0, 1e-10);
    r = rdlab::bandwidth_and_rate(1e4, 0.5, 0.5);
    EXPECT_NEAR(r.H, 0.01, 1e-12);
    EXPECT_NEAR(r.R, 10.0, 1e-10);
    r = rdlab::bandwidth_and_rate(0.0, 1.0, 0.5);
    EXPECT_EQ(r.H, 0.5);
    EXPECT_EQ(r.R, 0.0);
    // small V: bandwidth capped
    r = rdlab::bandwidth_and_rate(2.0, 1.0, 0.5);
    EXPECT_EQ(r.H, 0.5);
}

TEST(BandwidthRate, RateTimesBiasIsOneOffCap) {
    for (double alpha : {0.25, 0.5, 0.75, 1.0})
        for (double V : {10.0, 1e2, 1e3, 1e5, 1e8}) {
            const auto r = rdlab::bandwidth_and_rate(V, alpha, 1.0);
            EXPECT_NEAR(r.R * std::pow(r.H, alpha), 1.0, 1e-12);
            EXPECT_NEAR(r.R * r.R, V * r.H, 1e-9 * V * r.H);  // R^2 = V H: variance balance
        }
}

TEST(BandwidthRate, Monotone) {
    double h_prev = 1e300, r_prev = -1.0;
    for (double V = 0.0; V < 1e6; V = V * 1.7 + 0.3) {
        const auto r = rdlab::bandwidth_and_rate(V, 0.6, 0.4);
        EXPECT_LE(r.H, h_prev);
        EXPECT_GE(r.R, r_prev);
        h_prev = r.H;
        r_prev = r.R;
    }
}

TEST(BandwidthRate, RejectsBadParameters) {
    EXPECT_THROW(rdlab::bandwidth_and_rate(1.0, 1.5, 0.5), rdlab::Error);
    EXPECT_THROW(rdlab::bandwidth_and_rate(1.0, 0.0, 0.5), rdlab::Error);
    EXPECT_THROW(rdlab::bandwidth_and_rate(1.0, 1.0, 0.0), rdlab::Error);
    EXPECT_THROW(rdlab::bandwidth_and_rate(-1.0, 1.0, 0.5), rdlab::Error);
}

TEST(NadarayaWatson, LinearPathRecoversSlope) {
    const auto p = line_path(0.0, 2.0, 1.0, 1e-3);
    const auto nw = rdlab::nadaraya_watson(p, 0.5, 0.2, rdlab::quartic_kernel());
    ASSERT_TRUE(nw.defined);
    EXPECT_NEAR(nw.b_hat, 2.0, 1e-10);
    // dt = dx / 2, so the weight is (h / 2) int phi = 0.1
    EXPECT_NEAR(nw.denom, 0.1, 1e-4);
}

TEST(NadarayaWatson, UndefinedWhenNeverNear) {
    const auto p = line_path(3.0, 0.0, 1.0, 1e-2);
    const auto nw = rdlab::nadaraya_watson(p, 0.0, 0.5, rdlab::quartic_kernel());
    EXPECT_FALSE(nw.defined);
    EXPECT_TRUE(std::isnan(nw.b_hat));
    EXPECT_EQ(nw.denom, 0.0);
}

TEST(NadarayaWatson, KernelScaleCancels) {
    rdlab::PathConfig c;
    c.t_max = 50.0;
    c.dt = 1e-2;
    c.seed = 4;
    const auto p = rdlab::simulate_path(DiffusionModel::ornstein_uhlenbeck(), c);
    const auto k = rdlab::quartic_kernel();
    const auto a = rdlab::nadaraya_watson(p, 0.1, 0.3, k);
    const auto b = rdlab::nadaraya_watson(p, 0.1, 0.3, rdlab::scaled_kernel(k, 3.0));
    ASSERT_TRUE(a.defined);
    EXPECT_NEAR(a.b_hat, b.b_hat, 1e-13 * std::abs(a.b_hat) + 1e-15);
    EXPECT_NEAR(b.denom, 3.0 * a.denom, 1e-12 * b.denom);
}

TEST(NadarayaWatson, RejectsZeroBandwidth) {
    const auto p = line_path(0.0, 1.0, 1.0, 1e-2);
    EXPECT_THROW(rdlab::nadaraya_watson(p, 0.0, 0.0, rdlab::quartic_kernel()), rdlab::Error);
}

TEST(EquivalentSpec, Normalizations) {
    // Brownian motion: raw density 2, so mu([0, 1]) = 2
    const auto bm = rdlab::make_equivalent_spec(DiffusionModel::brownian(), 0.0, 1.0, 0.0);
    EXPECT_NEAR(bm.c, 0.5, 1e-9);
    // OU with theta = 1: invariant law N(0, 1/2)
    const auto ou = rdlab::make_equivalent_spec(DiffusionModel::ornstein_uhlenbeck(), 0.0, 1.0, 0.0);
    EXPECT_NEAR(ou.c, 1.0 / (oracle::norm_cdf(std::sqrt(2.0)) - 0.5), 1e-7);
    EXPECT_NEAR(rdlab::reference_density(DiffusionModel::ornstein_uhlenbeck(), 0.3),
                std::exp(-0.09) / std::sqrt(std::numbers::pi), 1e-8);
    const auto blind = rdlab::make_equivalent_spec(DiffusionModel::ornstein_uhlenbeck(), 0.0, 1.0, 0.0, true);
    EXPECT_EQ(blind.c, 1.0);
    EXPECT_THROW(rdlab::make_equivalent_spec(DiffusionModel::brownian(), 1.0, 1.0, 0.0), rdlab::Error);
}

TEST(ObservableIAF, ConstantPaths) {
    const rdlab::EquivalentSpec s{0.0, 1.0, 0.5, 0.0, false};
    EXPECT_NEAR(rdlab::observable_iaf(line_path(0.5, 0.0, 4.0, 1e-2), s, {4.0}).values[0], 2.0, 1e-12);
    EXPECT_EQ(rdlab::observable_iaf(line_path(1.5, 0.0, 4.0, 1e-2), s, {4.0}).values[0], 0.0);
    // closed interval: the endpoints count
    EXPECT_NEAR(rdlab::observable_iaf(line_path(1.0, 0.0, 4.0, 1e-2), s, {4.0}).values[0], 2.0, 1e-12);
}

TEST(DeterministicEquivalent, BrownianMatchesOccupationOracle) {
    const auto m = DiffusionModel::brownian();
    const auto s = rdlab::make_equivalent_spec(m, 0.0, 1.0, 0.0);
    rdlab::PathConfig tmpl;
    tmpl.t_max = 100.0;
    tmpl.dt = 1e-2;
    tmpl.seed = 12;
    tmpl.checkpoints = {10.0, 100.0};
    const auto curve = rdlab::deterministic_equivalent(m, s, tmpl, 2000);
    for (std::size_t c = 0; c < 2; ++c) {
        const double want = 0.5 * oracle::bm_occupation_sum_mean(tmpl.checkpoints[c], tmpl.dt, 0.0, 1.0);
        EXPECT_NEAR(curve.v_hat[c], want, 4.0 * curve.std_error[c]);
    }
    // v_100 ~ 3.74, growing like sqrt(t)
    EXPECT_NEAR(curve.v_hat[1], 3.74, 0.2);
}

TEST(DeterministicEquivalent, ErgodicGrowsLinearly) {
    const auto m = DiffusionModel::ornstein_uhlenbeck();
    const auto s = rdlab::make_equivalent_spec(m, -0.5, 1.0, 0.0);
    rdlab::PathConfig tmpl;
    tmpl.t_max = 400.0;
    tmpl.dt = 1e-2;
    tmpl.seed = 3;
    tmpl.checkpoints = {100.0, 400.0};
    const auto curve = rdlab::deterministic_equivalent(m, s, tmpl, 200);
    EXPECT_NEAR(curve.v_hat[0] / 100.0, 1.0, 0.03);
    EXPECT_NEAR(curve.v_hat[1] / 400.0, 1.0, 0.02);
}

TEST(DeterministicEquivalent, NeedsPaths) {
    const auto m = DiffusionModel::brownian();
    rdlab::PathConfig tmpl;
    tmpl.checkpoints = {1.0};
    EXPECT_THROW(rdlab::deterministic_equivalent(m, rdlab::make_equivalent_spec(m, 0, 1, 0), tmpl, 0),
                 rdlab::Error);
}

TEST(Adaptive, BeforeEntryUsesCapAndZeroRate) {
    const auto m = DiffusionModel::brownian();
    const rdlab::EquivalentSpec s{0.0, 1.0, 0.5, 5.0, false};
    const auto p = line_path(5.0, 0.0, 2.0, 1e-2);
    const auto tr = rdlab::adaptive_estimate(p, m, {0.0, 1.0, 0.5}, s, rdlab::quartic_kernel(), {1.0, 2.0});
    for (const auto& r : tr.rows) {
        EXPECT_EQ(r.V, 0.0);
        EXPECT_EQ(r.H, 0.5);
        EXPECT_EQ(r.R, 0.0);
        EXPECT_FALSE(r.defined);
        EXPECT_TRUE(std::isnan(r.b_hat));
    }
}

TEST(Adaptive, NearlyDeterministicDriftIsRecovered) {
    const auto m = DiffusionModel::constant_drift(2.0, 1e-6);
    const rdlab::EquivalentSpec s{0.0, 4.0, 1.0, 0.0, true};
    rdlab::PathConfig c;
    c.t_max = 2.0;
    c.dt = 1e-3;
    c.seed = 1;
    c.checkpoints = {2.0};
    const auto p = rdlab::simulate_path(m, c);
    const auto tr = rdlab::adaptive_estimate(p, m, {1.0, 1.0, 0.5}, s, rdlab::quartic_kernel(), {2.0});
    ASSERT_TRUE(tr.rows[0].defined);
    EXPECT_NEAR(tr.rows[0].V, 2.0, 1e-2);
    EXPECT_NEAR(tr.rows[0].b_hat, 2.0, 1e-4);
}

TEST(Adaptive, EqualsFixedBandwidthEstimatorOnPrefix) {
    const auto m = DiffusionModel::ornstein_uhlenbeck();
    const auto s = rdlab::make_equivalent_spec(m, -1.0, 1.0, 0.0);
    rdlab::PathConfig c;
    c.t_max = 100.0;
    c.dt = 1e-2;
    c.seed = 9;
    const auto p = rdlab::simulate_path(m, c);
    const auto k = rdlab::quartic_kernel();
    const std::vector<double> cps{1.0, 10.0, 50.0, 100.0};
    const auto tr = rdlab::adaptive_estimate(p, m, {0.2, 1.0, 0.5}, s, k, cps);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const auto& r = tr.rows[i];
        const auto q = prefix(p, cps[i]);
        EXPECT_NEAR(r.V, rdlab::observable_iaf(q, s, {cps[i]}).values[0], 1e-12 * (1.0 + r.V));
        const auto nw = rdlab::nadaraya_watson(q, 0.2, r.H, k);
        EXPECT_EQ(r.defined, nw.defined);
        if (nw.defined) {
            EXPECT_NEAR(r.b_hat, nw.b_hat, 1e-10 * (1.0 + std::abs(nw.b_hat)));
            EXPECT_NEAR(r.denom, nw.denom, 1e-12 * nw.denom);
        }
    }
}

TEST(Adaptive, ReplicateRunnerMatchesSinglePath) {
    const auto m = DiffusionModel::ornstein_uhlenbeck();
    const auto s = rdlab::make_equivalent_spec(m, -1.0, 1.0, 0.0);
    rdlab::PathConfig tmpl;
    tmpl.t_max = 20.0;
    tmpl.dt = 1e-2;
    tmpl.seed = 21;
    tmpl.checkpoints = {5.0, 20.0};
    const auto k = rdlab::quartic_kernel();
    const auto all = rdlab::adaptive_estimate_replicates(m, {0.0, 1.0, 0.5}, s, k, tmpl, 3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        auto cfg = tmpl;
        cfg.replicate_index = i;
        const auto one = rdlab::adaptive_estimate(rdlab::simulate_path(m, cfg), m, {0.0, 1.0, 0.5}, s, k,
                                                  tmpl.checkpoints);
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_EQ(all[i].rows[j].V, one.rows[j].V);
            EXPECT_EQ(all[i].rows[j].b_hat, one.rows[j].b_hat);
        }
    }
}

TEST(Adaptive, OrnsteinUhlenbeckConsistent) {
    // b(0.3) = -0.3; average error over replicates shrinks with t
    const auto m = DiffusionModel::ornstein_uhlenbeck();
    const auto s = rdlab::make_equivalent_spec(m, -1.0, 1.0, 0.0);
    rdlab::PathConfig tmpl;
    tmpl.t_max = 1000.0;
    tmpl.dt = 1e-2;
    tmpl.seed = 5;
    tmpl.checkpoints = {1000.0};
    const auto all = rdlab::adaptive_estimate_replicates(m, {0.3, 1.0, 0.5}, s, rdlab::quartic_kernel(), tmpl, 40);
    std::vector<double> err;
    for (const auto& t : all) err.push_back(t.rows[0].b_hat + 0.3);
    EXPECT_NEAR(rdlab::mean(err), 0.0, 4.0 * rdlab::standard_error(err) + 0.02);
    EXPECT_LT(rdlab::standard_error(err) * std::sqrt(40.0), 0.3);
}

#include "ballistic/montecarlo.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ballistic;

namespace {

ExperimentPlan plan_for(Rational p, CollisionRule rule, InterdistanceSpec spec, long n, long R, std::uint64_t seed)
{
    ExperimentPlan plan;
    plan.params.p = p;
    plan.params.rule = rule;
    plan.spec = spec;
    plan.n = n;
    plan.replicas = R;
    plan.seed = seed;
    return plan;
}

Configuration<std::int64_t> window(const std::string& left, const std::string& right)
{
    // left is read outward from the centre, the centre is a static at 0
    auto vel = [](char ch) { return ch == '>' ? Velocity::Right : ch == '<' ? Velocity::Left : Velocity::Static; };
    Configuration<std::int64_t> c;
    for (long k = static_cast<long>(left.size()); k >= 1; --k)
        c.particles.push_back({-k, -k, vel(left[static_cast<std::size_t>(k - 1)]), Spin::Up});
    c.particles.push_back({0, 0, Velocity::Static, Spin::Up});
    for (long k = 1; k <= static_cast<long>(right.size()); ++k)
        c.particles.push_back({k, k, vel(right[static_cast<std::size_t>(k - 1)]), Spin::Up});
    c.validate();
    return c;
}

} // namespace

TEST(ReplicaMap, IndependentOfThreadCount)
{
    auto f = [](long r) { return mix64(static_cast<std::uint64_t>(r) * 7 + 1); };
    auto a = replica_map<std::uint64_t>(1000, 1, f);
    auto b = replica_map<std::uint64_t>(1000, 3, f);
    EXPECT_EQ(a, b);
    EXPECT_THROW(replica_map<int>(100, 2, [](long r) -> int { if (r == 57) throw std::runtime_error("x"); return 0; }),
                 std::runtime_error);
}

TEST(HalfLine, IncrementalMatchesFullResolution)
{
    for (auto rule : {CollisionRule::Spin, CollisionRule::Mutual})
        for (Rational p : {Rational(1, 5), Rational(1, 2)})
            for (std::uint64_t s = 0; s < 40; ++s) {
                ModelParams mp;
                mp.p = p;
                mp.rule = rule;
                auto c = sample_config<std::int64_t>(700, InterdistanceSpec::delta1(), mp, s);
                auto inc = resolve_half_line_incremental(c, rule, 8);
                auto full = resolve(c, rule, {false});
                auto fc = full.crossing_record();
                EXPECT_EQ(inc.A, fc ? fc->first : 0);
                const auto& f1 = full.fates.front();
                if (inc.fate1_certified && inc.A != 1) {
                    ASSERT_FALSE(f1.alive);
                    if (f1.partner < 0) // a MUTUAL triple
                        EXPECT_FALSE(inc.partner_of_1);
                    else
                        EXPECT_EQ(inc.partner_of_1, c.particles[static_cast<std::size_t>(f1.partner)].v);
                }
            }
}

TEST(HalfLine, ThreadsDoNotChangeResults)
{
    auto plan = plan_for(Rational(1, 3), CollisionRule::Spin, InterdistanceSpec::exponential(1), 200, 300, 9);
    auto a = sample_half_lines(plan);
    plan.threads = 4;
    auto b = sample_half_lines(plan);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i].A, b[i].A);
}

TEST(LawA, SpinMatchesSeries)
{
    auto plan = plan_for(Rational(1, 2), CollisionRule::Spin, InterdistanceSpec::delta1(), 64, 20000, 11);
    auto law = estimate_law_A(plan, 31);
    EXPECT_TRUE(law.vs_exact.passes(1e-3)) << law.vs_exact.statistic << " dof " << law.vs_exact.dof;
    EXPECT_TRUE(law.probability(1).agrees(0.25));
    EXPECT_EQ(law.counts[2], 0);
}

TEST(LawA, MutualMatchesLatticeRecursion)
{
    auto plan = plan_for(Rational(2, 5), CollisionRule::Mutual, InterdistanceSpec::delta1(), 64, 20000, 12);
    auto law = estimate_law_A(plan, 31);
    EXPECT_TRUE(law.vs_exact.passes(1e-3)) << law.vs_exact.statistic;
    EXPECT_GT(law.counts[4], 0); // even values occur under MUTUAL
}

TEST(LawA, UniversalAcrossContinuousLaws)
{
    for (auto rule : {CollisionRule::Spin, CollisionRule::Mutual}) {
        auto a = estimate_law_A(plan_for(Rational(1, 3), rule, InterdistanceSpec::exponential(1), 40, 10000, 21), 31);
        auto b = estimate_law_A(plan_for(Rational(1, 3), rule, InterdistanceSpec::uniform(0, 1), 40, 10000, 22), 31);
        EXPECT_TRUE(a.vs_exact.passes(1e-3));
        EXPECT_TRUE(b.vs_exact.passes(1e-3));
        EXPECT_TRUE(compare_law_A(a, b).passes(1e-3));
    }
}

TEST(LawA, WindowTooShort)
{
    auto plan = plan_for(Rational(1, 2), CollisionRule::Spin, InterdistanceSpec::delta1(), 10, 10, 1);
    EXPECT_THROW(estimate_law_A(plan, 31), std::invalid_argument);
}

TEST(EstimateQ, SupercriticalWithTail)
{
    auto plan = plan_for(Rational(1, 3), CollisionRule::Spin, InterdistanceSpec::delta1(), 400, 4000, 5);
    auto e = estimate_q(plan);
    EXPECT_GT(e.tail, 0);
    EXPECT_LT(e.tail, 0.01);
    EXPECT_TRUE(e.q.agrees(std::sqrt(3.0) - 1)) << e.q.point;
}

TEST(EstimateQ, CensoringMatchesExactTail)
{
    // at p = 1/5 every censored window is a crossing beyond n
    auto plan = plan_for(Rational(1, 5), CollisionRule::Spin, InterdistanceSpec::delta1(), 1000, 4000, 6);
    auto e = estimate_q(plan);
    EXPECT_NEAR(e.q.censored_fraction, e.tail, 3 * std::sqrt(e.tail / 4000) + 1.0 / 4000);
}

TEST(Identities, HalfAndSubcritical)
{
    for (Rational p : {Rational(1, 2), Rational(1, 5)}) {
        auto rep = identity_checks(plan_for(p, CollisionRule::Spin, InterdistanceSpec::delta1(), 600, 6000, 7));
        EXPECT_TRUE(rep.passes()) << "r " << rep.r.point << " vs " << rep.r_target << ", s " << rep.s.point << " vs "
                                  << rep.s_target << ", res " << rep.residual.point;
    }
}

TEST(Sigma, DichotomyAtFortyFivePercent)
{
    auto rep = estimate_sigma_hat(plan_for(Rational(9, 20), CollisionRule::Mutual, InterdistanceSpec::delta1(), 600, 8000, 8));
    EXPECT_TRUE(rep.dichotomy_holds()) << rep.q.point << " vs " << rep.q_from_sigma;
    auto s = sigma_polys(15);
    EXPECT_GE(rep.sigma.point + 3 * rep.sigma.std_err, to_double(s.sigma(Rational(9, 20))));
    EXPECT_THROW(estimate_sigma_hat(plan_for(Rational(9, 20), CollisionRule::Spin, InterdistanceSpec::delta1(), 10, 10, 1)),
                 std::invalid_argument);
}

TEST(ExpectedNk, AtomlessMatchesLatticeForThree)
{
    const Rational p(1, 3);
    const double exact = to_double(expected_Nk_delta1(CollisionRule::Spin, 3)(p));
    for (auto spec : {InterdistanceSpec::exponential(1), InterdistanceSpec::uniform(0, 1)}) {
        auto e = estimate_expected_Nk(plan_for(p, CollisionRule::Spin, spec, 3, 40000, 31));
        EXPECT_TRUE(e.agrees(exact)) << spec.to_string() << ": " << e.point << " vs " << exact;
    }
}

TEST(Skyline, HandBuiltWindow)
{
    auto c = window("<...", ">..><..");
    auto r = resolve(c, CollisionRule::Spin);
    auto sky = extract_skyline(r, c, 0, 1);
    std::vector<SkylineBlock> right = {{1, SkylineShape::RightUp}, {0, SkylineShape::Up}, {1, SkylineShape::RightLeft},
                                       {0, SkylineShape::Up}};
    std::vector<SkylineBlock> left = {{1, SkylineShape::RightUp}, {0, SkylineShape::Up}};
    EXPECT_EQ(sky.right, right);
    EXPECT_EQ(sky.left, left);
}

TEST(Skyline, UpLeftBlockAndContamination)
{
    // the left-mover at 2 stops at the static at 1
    auto c = window("...", ".<...");
    auto r = resolve(c, CollisionRule::Spin);
    auto sky = extract_skyline(r, c, 0, 1);
    ASSERT_FALSE(sky.right.empty());
    EXPECT_EQ(sky.right.front(), (SkylineBlock{1, SkylineShape::UpLeft}));
    auto dirty = window("...", "<....");
    auto rd = resolve(dirty, CollisionRule::Spin);
    EXPECT_THROW(extract_skyline(rd, dirty, 0, 1), std::invalid_argument); // the centre is killed
    EXPECT_THROW(extract_skyline(r, c, 1, 1), std::invalid_argument);
}

TEST(Skyline, ThetaAndLawsAtHalf)
{
    auto plan = plan_for(Rational(1, 2), CollisionRule::Spin, InterdistanceSpec::delta1(), 500, 400, 3);
    plan.safety_margin = 100;
    auto rep = estimate_theta_and_skyline(plan);
    auto k = closed_forms(Rational(1, 2));
    EXPECT_TRUE(rep.theta.agrees(k.theta)) << rep.theta.point << " vs " << k.theta;
    ASSERT_GT(rep.blocks(), 500);
    EXPECT_TRUE(rep.sigma_fit.passes(1e-3)) << rep.sigma_fit.statistic;
    EXPECT_TRUE(rep.delta_right_up_fit.passes(1e-3)) << rep.delta_right_up_fit.statistic;
    EXPECT_TRUE(rep.delta_right_left_fit.passes(1e-3)) << rep.delta_right_left_fit.statistic;
    EXPECT_LE(std::fabs(rep.lag1.point), 4 * rep.lag1.std_err);
    plan.params.p = Rational(1, 5);
    EXPECT_THROW(estimate_theta_and_skyline(plan), std::invalid_argument);
}

TEST(Density, LatticeMatchesExact)
{
    const Rational p(9, 25);
    auto plan = plan_for(p, CollisionRule::Spin, InterdistanceSpec::delta1(), 0, 300, 4);
    plan.core = 100;
    auto pts = density_profile(plan, {0, 5, 20});
    auto t = build_series<Rational>(p, 42);
    for (const auto& pt : pts) {
        auto d = delta1_densities(t, static_cast<long>(pt.t));
        EXPECT_TRUE(pt.c0.agrees(d.c0)) << pt.t << ": " << pt.c0.point << " vs " << d.c0;
        EXPECT_TRUE(pt.c_plus.agrees(d.c_plus)) << pt.t << ": " << pt.c_plus.point << " vs " << d.c_plus;
    }
}

TEST(Density, RejectsNegativeTime)
{
    ExperimentPlan plan;
    EXPECT_THROW(density_profile(plan, {-1}), std::invalid_argument);
}

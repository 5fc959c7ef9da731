#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace swlim;

namespace {

Subspace span_cols(const Matrix& m) { return Subspace::span(m); }

Subspace line(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs)
        v(k++) = x;
    return Subspace::span(v);
}

Subspace coords(Eigen::Index d, std::initializer_list<int> idx)
{
    Matrix m = Matrix::Zero(d, static_cast<Eigen::Index>(idx.size()));
    Eigen::Index k = 0;
    for (int i : idx)
        m(i, k++) = 1.0;
    return Subspace::span(m);
}

std::vector<Subspace> worked_example_v() { return {coords(3, {1, 2}), coords(3, {2}), coords(3, {1})}; }

Matrix mat2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

TEST(IntersectionGraph, EdgesAndComponents)
{
    const auto g = build_intersection_graph(worked_example_v());
    EXPECT_EQ(g.node_dims, (std::vector<Eigen::Index>{2, 1, 1}));
    EXPECT_EQ(g.edges.size(), 2u); // {0,1} and {0,2}; the two lines are distinct
    ASSERT_EQ(g.components.size(), 1u);
    EXPECT_EQ(g.components[0], (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_TRUE(g.zero_nodes.empty());
}

TEST(ConditionC, WorkedExampleFailsWithTheFullComponent)
{
    const auto v = condition_c(worked_example_v());
    EXPECT_FALSE(v.holds);
    EXPECT_EQ(v.reason, "connected");
    EXPECT_EQ(v.component, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ConditionC, TwoDistinctLinesInThePlaneHold)
{
    const auto v = condition_c({line({1, 0}), line({1, 1})});
    EXPECT_TRUE(v.holds);
    EXPECT_EQ(v.reason, "disconnected");
}

TEST(ConditionC, AnyZeroSubspaceHolds)
{
    const auto v = condition_c({Subspace::full(3), Subspace::zero(3), coords(3, {0})});
    EXPECT_TRUE(v.holds);
    EXPECT_EQ(v.reason, "zero-subspace");
}

TEST(ConditionC, AmbientMismatchIsRejected)
{
    EXPECT_THROW(condition_c({Subspace::full(2), Subspace::full(3)}), std::invalid_argument);
}

TEST(ConditionC, InvariantUnderPermutationAndRotation)
{
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index d = 2 + trial % 3;
        auto spaces = oracle::random_configuration(rng, d, 2 + static_cast<std::size_t>(trial % 3));
        ASSERT_FALSE(spaces.empty());
        const bool base = condition_c(spaces).holds;
        std::shuffle(spaces.begin(), spaces.end(), rng);
        EXPECT_EQ(condition_c(spaces).holds, base);
        const Matrix q = oracle::random_orthogonal(rng, d);
        std::vector<Subspace> rotated;
        for (const auto& s : spaces)
            rotated.push_back(Subspace::span(q * s.basis()));
        EXPECT_EQ(condition_c(rotated).holds, base);
    }
}

TEST(ConditionC, AgreesWithTheSphereConnectivityOracle)
{
    std::mt19937_64 rng(52);
    int holds = 0, fails = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index d = 2 + trial % 3;
        const auto spaces = oracle::random_configuration(rng, d, 2 + static_cast<std::size_t>(trial % 3));
        ASSERT_FALSE(spaces.empty());
        const bool graph = condition_c(spaces).holds;
        (graph ? holds : fails)++;
        EXPECT_EQ(graph, oracle::sphere_condition_holds(spaces, rng)) << "trial " << trial;
    }
    EXPECT_GT(holds, 0);
    EXPECT_GT(fails, 0);
}

TEST(RegularInputConditions, WorkedExampleHasNoConditionFiring)
{
    const auto c = regular_input_conditions(worked_example_v());
    EXPECT_TRUE(c.trivial_intersection);
    EXPECT_FALSE(c.zero_dim);
    EXPECT_FALSE(c.one_dim_not_contained);
    EXPECT_FALSE(c.pair);
    EXPECT_EQ(c.sum_dim, 2);
    EXPECT_EQ(c.total_dim, 4);
    EXPECT_FALSE(c.dimension_sum);
    EXPECT_TRUE(c.fired.empty());
    EXPECT_FALSE(c.graph_condition);
    EXPECT_FALSE(c.certified);
}

TEST(RegularInputConditions, PairWithTrivialIntersection)
{
    const auto c = regular_input_conditions({coords(3, {0, 1}), coords(3, {2})});
    EXPECT_TRUE(c.pair);
    EXPECT_TRUE(c.certified);
    EXPECT_NE(std::find(c.fired.begin(), c.fired.end(), "pair"), c.fired.end());
}

TEST(RegularInputConditions, ThreeIndependentLinesFireTheDimensionSum)
{
    const auto c = regular_input_conditions({coords(3, {0}), line({1, 1, 0}), line({0, 1, 1})});
    EXPECT_EQ(c.sum_dim, 3);
    EXPECT_TRUE(c.dimension_sum);
    EXPECT_TRUE(c.certified);
}

TEST(RegularInputConditions, NonTrivialIntersectionBlocksEverything)
{
    const auto c = regular_input_conditions({coords(3, {0, 1}), coords(3, {0, 2})});
    EXPECT_FALSE(c.trivial_intersection);
    EXPECT_FALSE(c.certified);
}

TEST(RegularInputConditions, DimensionSumCannotBeCreatedByAContainedSubspace)
{
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index d = 3 + trial % 2;
        auto spaces = oracle::random_configuration(rng, d, 3);
        ASSERT_FALSE(spaces.empty());
        const bool before = regular_input_conditions(spaces).dimension_sum;
        // a new subspace inside the existing sum
        const Subspace sum = sum_all(spaces, d);
        const Matrix inside = sum.basis() * oracle::random_matrix(rng, sum.dim(), 1);
        spaces.push_back(Subspace::span(inside));
        const bool after = regular_input_conditions(spaces).dimension_sum;
        EXPECT_FALSE(after && !before) << "trial " << trial;
    }
}

TEST(OccupancyConditions, PaperExamples)
{
    // |J| = 2 with trivial intersection
    EXPECT_TRUE(occupancy_conditions({line({1, 0}), line({0, 1})}, {0, 1}).certified);
    // all K_i equal and nonzero
    EXPECT_FALSE(occupancy_conditions({line({1, 2}), line({1, 2}), line({1, 2})}, {0, 1, 2}).certified);
    // planar lines, two of them distinct
    EXPECT_TRUE(occupancy_conditions({line({1, 0}), line({1, 0}), line({1, 1})}, {0, 1, 2}).certified);
    // restricting J to the equal pair loses the certificate
    EXPECT_FALSE(occupancy_conditions({line({1, 0}), line({1, 0}), line({1, 1})}, {0, 1}).certified);
    EXPECT_THROW(occupancy_conditions({line({1, 0})}, {}), std::invalid_argument);
}

TEST(OccupancyConditions, SubsetSweepFindsTheWeakSubset)
{
    const auto sweep = occupancy_all_subsets({line({1, 0}), line({0, 1})});
    EXPECT_TRUE(sweep.evaluated);
    EXPECT_FALSE(sweep.all_pass); // J = {0} alone has K_0 != {0}
    EXPECT_EQ(sweep.failing_subset, (std::vector<std::size_t>{0}));
    const auto ok = occupancy_all_subsets({Subspace::zero(2), Subspace::zero(2)});
    EXPECT_TRUE(ok.all_pass);
}

TEST(HurwitzPair, HandVerifiedPairPasses)
{
    const SwitchedSystem s({mat2(0, -1, 1, -1), mat2(-1, 1, -1, 0)});
    const auto v = hurwitz_pair_check(s);
    EXPECT_TRUE(v.applicable);
    EXPECT_TRUE(v.lyapunov_ok);
    EXPECT_TRUE(v.hurwitz[0] && v.hurwitz[1]);
    EXPECT_NEAR(v.abscissa[0], -0.5, 1e-12); // roots of x^2 + x + 1
    EXPECT_NEAR(v.abscissa[1], -0.5, 1e-12);
    EXPECT_EQ(v.k_intersection_dim, 0);
    EXPECT_TRUE(v.pass);
}

TEST(HurwitzPair, MinusIdentityPairPassesAndSharedKernelFails)
{
    const Matrix mi = -Matrix::Identity(2, 2);
    EXPECT_TRUE(hurwitz_pair_check(SwitchedSystem({mi, mi})).pass);
    // both have K = span{e1}
    const auto v = hurwitz_pair_check(SwitchedSystem({mat2(0, -1, 1, -1), mat2(0, -2, 2, -3)}));
    EXPECT_TRUE(v.hurwitz[0] && v.hurwitz[1]);
    EXPECT_EQ(v.k_intersection_dim, 1);
    EXPECT_FALSE(v.pass);
    EXPECT_FALSE(hurwitz_pair_check(SwitchedSystem({mi})).applicable);
}

TEST(Planar, DistinctMarginalLinesAreCertified)
{
    const SwitchedSystem s({mat2(-1, 0, 0, 0), mat2(0, 0, 0, -1)});
    const auto r = planar_classify(s, analyze_system(s));
    ASSERT_TRUE(r.applicable);
    EXPECT_TRUE(r.v_intersection_zero);
    EXPECT_TRUE(r.v_dims_at_most_one);
    EXPECT_EQ(r.matrices[0].kind, "marginal");
    EXPECT_TRUE(r.matrices[0].consistent);
    EXPECT_FALSE(r.particular_case);
    EXPECT_TRUE(r.certified);
}

TEST(Planar, AllHurwitzWithZeroKernelsAreCertified)
{
    const SwitchedSystem s({-Matrix::Identity(2, 2), mat2(-1, 1, -1, -1)});
    const auto r = planar_classify(s, analyze_system(s));
    EXPECT_EQ(r.matrices[1].kind, "hurwitz");
    EXPECT_TRUE(r.certified);
}

TEST(Planar, ParticularCaseIsFlagged)
{
    const SwitchedSystem s({mat2(0, -1, 1, -1), mat2(0, 0, 0, -1)});
    const auto r = planar_classify(s, analyze_system(s));
    EXPECT_TRUE(r.particular_case);
    ASSERT_TRUE(r.particular_index.has_value());
    EXPECT_EQ(*r.particular_index, 0u);
    EXPECT_FALSE(r.certified);
}

TEST(Planar, NotApplicableOutsideTheDimensionTwoCase)
{
    const SwitchedSystem s({-Matrix::Identity(3, 3)});
    EXPECT_FALSE(planar_classify(s, analyze_system(s)).applicable);
}

TEST(Assess, WorkedExampleReport)
{
    Matrix b1(3, 3), b2(3, 3), b3(3, 3);
    b1 << -1, 0, 0, 0, 0, -1, 0, 1, 0;
    b2 << -1, 0, 0, 0, -1, 0, 0, 0, 0;
    b3 << -1, 0, 0, 0, 0, 0, 0, 0, -1;
    const auto r = assess(SwitchedSystem({b1, b2, b3}));
    EXPECT_TRUE(r.lyapunov_ok);
    ASSERT_EQ(r.per_matrix.size(), 3u);
    EXPECT_EQ(r.per_matrix[0].V.dim(), 2);
    EXPECT_FALSE(r.condition_c->holds);
    EXPECT_EQ(r.condition_c->component, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_TRUE(r.theorem4->fired.empty());
    EXPECT_FALSE(r.theorem7->applicable);
    EXPECT_FALSE(r.planar->applicable);
    EXPECT_EQ(r.conclusion.scope, Scope::none);
}

TEST(Assess, ConclusionLadder)
{
    const auto t7 = assess(SwitchedSystem({mat2(0, -1, 1, -1), mat2(-1, 1, -1, 0)}));
    EXPECT_EQ(t7.conclusion.certificate, "theorem7");
    EXPECT_EQ(t7.conclusion.scope, Scope::any_input);

    const auto mi = assess(SwitchedSystem({-Matrix::Identity(2, 2)}));
    EXPECT_EQ(mi.conclusion.scope, Scope::any_input);
    EXPECT_TRUE(mi.per_matrix[0].is_hurwitz);

    const auto lines = assess(SwitchedSystem({mat2(-1, 0, 0, 0), mat2(0, 0, 0, -1)}));
    EXPECT_EQ(lines.conclusion.scope, Scope::well_distributed_inputs);

    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 0) = 1.0;
    const auto fail = assess(SwitchedSystem({bad}));
    EXPECT_FALSE(fail.lyapunov_ok);
    EXPECT_EQ(fail.conclusion.scope, Scope::none);
    EXPECT_FALSE(fail.condition_c.has_value());
}

TEST(Assess, ConclusionNeverExceedsItsPrerequisites)
{
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index d = 2 + trial % 3;
        std::vector<Matrix> mats;
        for (int i = 0; i < 2 + trial % 2; ++i)
            mats.push_back(oracle::dissipative_with_v(rng, d, (trial + i) % (d + 1)).first);
        const auto r = assess(SwitchedSystem(mats));
        switch (r.conclusion.scope) {
        case Scope::any_input:
            EXPECT_TRUE((r.theorem7 && r.theorem7->pass) || r.theorem6_all_subsets->all_pass);
            break;
        case Scope::well_distributed_inputs:
            EXPECT_TRUE(r.theorem6->certified || (r.planar && r.planar->certified));
            break;
        case Scope::regular_inputs:
            EXPECT_TRUE(r.theorem4->certified);
            break;
        case Scope::none:
            EXPECT_FALSE(r.theorem4->certified && r.condition_c->holds);
            break;
        }
    }
}

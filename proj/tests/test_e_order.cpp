#include "gseq/e_order.hpp"
#include "gseq/errors.hpp"
#include "support/instances.hpp"
#include "support/naive.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gseq;

namespace {

/// Partial products of `ord` on the affine model: pairwise distinct, identity only at the end.
bool naive_partials_ok(const GroupSpec& g, const Ordering& ord)
{
    std::vector<Elem> seen;
    Elem acc = g.identity();
    for (std::size_t i = 0; i < ord.size(); ++i) {
        acc = naive::mul(g, acc, ord[i]);
        if (i + 1 < ord.size() && g.is_identity(acc))
            return false;
        if (std::find(seen.begin(), seen.end(), acc) != seen.end())
            return false;
        seen.push_back(acc);
    }
    return true;
}

/// Brute-force infimum over L = 1..10^4.
double slow_inf(double h, double y, double prefix)
{
    double best = 1e300;
    for (int L = 1; L <= 10000; ++L)
        best = std::min(best, h * y / L + L + 2 * h * prefix);
    return best;
}

} // namespace

TEST(SplitE, Examples)
{
    const auto g = GroupSpec::dihedral(101);
    const std::vector<Elem> e{g.elem(2, 0u), g.elem(100, 0u), g.elem(0, 1u), g.elem(3, 1u)};
    const auto s = split_E(g, e, 10);
    EXPECT_EQ(s.P, (std::vector<Elem>{g.elem(2, 0u)}));
    EXPECT_EQ(s.N, (std::vector<Elem>{g.elem(100, 0u)}));
    EXPECT_TRUE(s.Z.empty());
    EXPECT_EQ(s.S_e, (std::vector<Elem>{g.elem(3, 1u)}));
    EXPECT_EQ(s.S_o, (std::vector<Elem>{g.elem(0, 1u)}));

    const auto empty = split_E(g, std::vector<Elem>{}, 10);
    EXPECT_TRUE(empty.P.empty() && empty.N.empty() && empty.Z.empty() && empty.S.empty());

    const std::vector<Elem> three{g.elem(-2, 1u), g.elem(0, 1u), g.elem(5, 1u)};
    const auto t = split_E(g, three, 10);
    EXPECT_EQ(t.S_e, (std::vector<Elem>{g.elem(0, 1u), g.elem(5, 1u)}));
    EXPECT_EQ(t.S_o, (std::vector<Elem>{g.elem(-2, 1u)}));
}

TEST(SplitE, IntervalViolation)
{
    const auto g = GroupSpec::dihedral(101);
    EXPECT_THROW(split_E(g, std::vector<Elem>{g.elem(10, 0u)}, 10), IntervalViolation);
    EXPECT_THROW(split_E_den(g, std::vector<Elem>{g.elem(1, 0u)}, 90), IntervalViolation);
}

TEST(BuildY, Examples)
{
    const auto g = GroupSpec::dihedral(101);
    const Block d1 = Block::l0({g.elem(1, 0u), g.elem(2, 0u)});
    const Block ds = Block::l0({g.elem(5, 0u), g.elem(7, 0u)});
    const auto f = build_Y_sets(g, d1, ds, g.elem(1, 0u), 1);
    ASSERT_EQ(f.Y.size(), 1u);
    EXPECT_EQ(f.Y[0], (ElemSet{g.elem(-5, 0u), g.elem(-7, 0u), g.elem(0, 0u), g.elem(1, 0u)}));
    // Y' swaps the roles of the two blocks
    EXPECT_EQ(f.Yp[0], (ElemSet{g.elem(-1, 0u), g.elem(-2, 0u), g.elem(4, 0u), g.elem(6, 0u)}));
    EXPECT_TRUE(build_Y_sets(g, d1, ds, g.elem(1, 0u), 0).Y.empty());

    const Block l1 = Block::l1({g.elem(1, 1u)}, {g.elem(3, 1u)});
    EXPECT_EQ(block_products_exact(g, l1, 2), (ElemSet{g.elem(-2, 0u)}));
    EXPECT_EQ(block_products_upto(g, l1, 2), (ElemSet{g.identity(), g.elem(1, 1u), g.elem(-2, 0u)}));
}

TEST(OrderZ, Examples)
{
    const GroupSpec g(7, {3}, {1});
    EXPECT_TRUE(order_Z(g, std::vector<Elem>{}).empty());
    const std::vector<int> one{1}, two{2};
    EXPECT_EQ(order_Z(g, std::vector<Elem>{g.elem(0, one)}), (Ordering{g.elem(0, one)}));
    EXPECT_EQ(order_Z(g, std::vector<Elem>{g.elem(0, two), g.elem(0, one)}), (Ordering{g.elem(0, one), g.elem(0, two)}));
}

TEST(OrderEWithS, Examples)
{
    const auto g = GroupSpec::dihedral(101);
    const std::vector<Elem> e{g.elem(1, 0u), g.elem(100, 0u), g.elem(2, 1u), g.elem(5, 1u)};
    const auto sp = split_E(g, e, 50);
    const auto r = order_E_with_S(g, sp, g.elem(1, 0u), {}, {});
    EXPECT_EQ(r.x, (Ordering{g.elem(1, 0u), g.elem(5, 1u), g.elem(100, 0u), g.elem(2, 1u)}));
    EXPECT_EQ(prefixed_partials(g, g.elem(1, 0u), r.x),
              (std::vector<Elem>{g.elem(1, 0u), g.elem(2, 0u), g.elem(7, 1u), g.elem(8, 1u), g.elem(6, 0u)}));
    EXPECT_TRUE(r.audits_ok());

    const auto single = order_E_with_S(g, split_E(g, std::vector<Elem>{g.elem(2, 1u)}, 50), g.elem(1, 0u), {}, {});
    EXPECT_EQ(single.x, (Ordering{g.elem(2, 1u)}));
    EXPECT_EQ(prefixed_partials(g, g.elem(1, 0u), single.x), (std::vector<Elem>{g.elem(1, 0u), g.elem(3, 1u)}));

    const auto sp2 = split_E(g, std::vector<Elem>{g.elem(3, 1u), g.elem(-4, 1u)}, 50);
    const auto two = order_E_with_S(g, sp2, g.elem(1, 0u), {}, {});
    ASSERT_EQ(two.x.size(), 2u);
    EXPECT_EQ(two.x[0], g.elem(3, 1u));
    EXPECT_THROW(order_E_with_S(g, split_E(g, std::vector<Elem>{g.elem(1, 0u)}, 50), g.elem(1, 0u), {}, {}),
                 InvalidInput);
}

TEST(OrderEWithoutS, Examples)
{
    const auto g = GroupSpec::dihedral(101);
    const auto sp = split_E(g, std::vector<Elem>{g.elem(1, 0u), g.elem(2, 0u)}, 50);
    const auto r = order_E_without_S(g, sp, g.elem(5, 0u), {}, {}, {});
    EXPECT_EQ(r.p, (Ordering{g.elem(2, 0u), g.elem(1, 0u)}));
    const Ordering composite = concat(reversed(r.p), Ordering{g.elem(5, 0u)});
    EXPECT_EQ(partial_products(g, composite), (std::vector<Elem>{g.elem(1, 0u), g.elem(3, 0u), g.elem(8, 0u)}));

    const auto e = order_E_without_S(g, split_E(g, std::vector<Elem>{}, 50), g.elem(5, 0u), {}, {}, {});
    EXPECT_TRUE(e.e_sequence().empty());

    const GroupSpec z(101, {2}, {1});
    const std::vector<int> one{1};
    const auto zr = order_E(z, std::vector<Elem>{z.elem(0, one)}, z.elem(5, 0u), 50, YFamily{});
    EXPECT_EQ(zr.z, (Ordering{z.elem(0, one)}));
    EXPECT_TRUE(is_sequencing(z, concat(zr.z, Ordering{z.elem(5, 0u)})));
}

TEST(OrderEWithS, BlockedCandidatesForceISteps)
{
    const auto g = GroupSpec::dihedral(101);
    const std::vector<Elem> e{g.elem(1, 0u), g.elem(100, 0u), g.elem(2, 1u), g.elem(5, 1u), g.elem(-3, 1u), g.elem(4, 0u)};
    const Elem delta = g.elem(1, 0u);
    const auto sp = split_E(g, e, 50);
    const auto free_run = order_E_with_S(g, sp, delta, {}, {});
    // put every running value of the free run into Y_1
    ElemSet y1(free_run.nu.begin(), free_run.nu.end() - 1);
    const auto r = order_E_with_S(g, sp, delta, {y1}, {});
    EXPECT_TRUE(std::any_of(r.steps.begin(), r.steps.end(), [](const EStep& s) { return !s.skip; }));
    for (const EStep& s : r.steps) {
        if (!s.skip) {
            EXPECT_EQ(s.i, 1u);
        }
    }
    EXPECT_TRUE(naive_partials_ok(g, concat(Ordering{delta}, r.x)));
    EXPECT_TRUE(r.audits_ok());
    ASSERT_EQ(r.audit.size(), 1u);
    std::size_t hits = 0;
    for (const Elem& v : partial_product_set(g, delta, r.x))
        hits += y1.contains(v) ? 1 : 0;
    EXPECT_EQ(r.audit[0].count, hits);
}

TEST(ISBound, InfimumMatchesWideScan)
{
    for (std::size_t h : {1u, 2u, 6u})
        for (std::size_t y : {0u, 1u, 7u, 50u, 400u})
            for (std::size_t pre : {0u, 3u}) {
                std::size_t L = 0;
                EXPECT_NEAR(detail::is_inf(h, y, pre, L), slow_inf(double(h), double(y), double(pre)), 1e-9);
            }
}

class EOrderProperty : public ::testing::TestWithParam<int>
{
};

TEST_P(EOrderProperty, RandomInstancesVerifyAndPassAudits)
{
    const std::vector<GroupSpec> gs{GroupSpec::dihedral(1000003), GroupSpec(1000033, {2, 3}, {-1, 1}),
                                    GroupSpec(2000003, {4}, {-1})};
    Rng rng(derive_seed(61, static_cast<std::uint64_t>(GetParam())));
    for (int t = 0; t < 8; ++t) {
        const GroupSpec& g = gs[static_cast<std::size_t>(t) % gs.size()];
        const std::size_t size = 1 + uniform_index(rng, 40);
        const bool with_s = t % 2 == 0;
        const auto in = gseq::testing::random_e_instance(g, rng, size, with_s);
        const std::size_t k = 1 + uniform_index(rng, 2);
        const auto y = build_Y_sets(g, in.d1, in.ds, in.delta, k);
        const auto r = order_E(g, in.E, in.delta, in.bound, y);
        ASSERT_TRUE(r.audits_ok());
        ASSERT_TRUE(r.nu_consistent);
        ASSERT_TRUE(r.monotone);
        auto seq = r.e_sequence();
        std::vector<Elem> sorted_seq = seq, sorted_e = in.E;
        std::sort(sorted_seq.begin(), sorted_seq.end());
        std::sort(sorted_e.begin(), sorted_e.end());
        ASSERT_EQ(sorted_seq, sorted_e);
        if (r.with_s) {
            ASSERT_TRUE(naive_partials_ok(g, concat(Ordering{in.delta}, r.x)));
            // nu_k = delta * prod Z * x_1 ... x_k, recomputed on the affine model
            Elem acc = in.delta;
            for (const Elem& z : r.z)
                acc = naive::mul(g, acc, z);
            ASSERT_EQ(r.nu[0], acc);
            for (std::size_t i = r.z.size(); i < r.x.size(); ++i) {
                acc = naive::mul(g, acc, r.x[i]);
                ASSERT_EQ(r.nu[i - r.z.size() + 1], acc);
            }
        } else {
            ASSERT_TRUE(naive_partials_ok(g, concat(r.z, reversed(r.p), Ordering{in.delta}, r.n)));
        }
        for (const auto& a : r.audit)
            ASSERT_LE(static_cast<double>(a.count), a.bound);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EOrderProperty, ::testing::Range(0, 5));

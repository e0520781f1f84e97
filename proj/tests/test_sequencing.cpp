#include "gseq/group.hpp"
#include "gseq/random.hpp"
#include "gseq/sequencing.hpp"
#include "support/naive.hpp"

#include <gtest/gtest.h>

using namespace gseq;

TEST(Sequencing, PartialProductsExamples)
{
    const auto z5 = GroupSpec::cyclic(5);
    const Ordering o{z5.elem(2), z5.elem(1), z5.elem(3)};
    EXPECT_EQ(partial_products(z5, o), (std::vector<Elem>{z5.elem(2), z5.elem(3), z5.elem(1)}));
    const auto d5 = GroupSpec::dihedral(5);
    const Ordering q{d5.elem(1, 1u), d5.elem(2, 1u)};
    EXPECT_EQ(partial_products(d5, q), (std::vector<Elem>{d5.elem(1, 1u), d5.elem(4, 0u)}));
}

TEST(Sequencing, PredicatesExamples)
{
    const auto z5 = GroupSpec::cyclic(5);
    EXPECT_FALSE(is_valid(z5, Ordering{z5.elem(1), z5.elem(2), z5.elem(3)}));
    // 1, 0, 2, 0: identity in the middle and a collision
    EXPECT_FALSE(is_sequencing(z5, Ordering{z5.elem(1), z5.elem(4), z5.elem(2), z5.elem(3)}));
    EXPECT_TRUE(is_sequencing(z5, Ordering{z5.elem(2), z5.elem(1), z5.elem(3)}));
    EXPECT_TRUE(is_sequencing(z5, Ordering{}));
}

TEST(Sequencing, FinalIdentityAllowed)
{
    const auto z5 = GroupSpec::cyclic(5);
    const Ordering o{z5.elem(1), z5.elem(2), z5.elem(4), z5.elem(3)};
    EXPECT_TRUE(is_sequencing(z5, o));
    EXPECT_TRUE(z5.is_identity(partial_products(z5, o).back()));
}

TEST(Sequencing, DefectKinds)
{
    const auto z5 = GroupSpec::cyclic(5);
    auto d = find_defect(z5, Ordering{z5.elem(1), z5.elem(1)}, true);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->kind, SequencingDefect::Kind::Duplicate);
    d = find_defect(z5, Ordering{z5.elem(1), z5.elem(4), z5.elem(2)}, true);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->kind, SequencingDefect::Kind::EarlyIdentity);
    EXPECT_EQ(d->first, 1u);
    d = find_defect(z5, Ordering{z5.elem(1), z5.elem(2), z5.elem(3)}, true);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->kind, SequencingDefect::Kind::Collision);
    EXPECT_EQ(d->first, 0u);
    EXPECT_EQ(d->second, 2u);
    d = find_defect(z5, Ordering{Elem{7, 0}}, true);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->kind, SequencingDefect::Kind::InvalidElement);
}

TEST(Sequencing, PartialProductSetWithPrefix)
{
    const auto g = GroupSpec::dihedral(101);
    const Ordering o{g.elem(1, 0u), g.elem(5, 1u), g.elem(-1, 0u), g.elem(2, 1u)};
    const ElemSet got = partial_product_set(g, g.elem(1, 0u), o);
    const ElemSet want{g.elem(1, 0u), g.elem(2, 0u), g.elem(7, 1u), g.elem(8, 1u), g.elem(6, 0u)};
    EXPECT_EQ(got, want);
}

TEST(Sequencing, ReverseAndConcat)
{
    const auto z7 = GroupSpec::cyclic(7);
    const Ordering a{z7.elem(1), z7.elem(2)}, b{z7.elem(3)};
    EXPECT_EQ(reversed(a), (Ordering{z7.elem(2), z7.elem(1)}));
    EXPECT_EQ(concat(a, b), (Ordering{z7.elem(1), z7.elem(2), z7.elem(3)}));
}

TEST(SequencingProperty, AgreesWithNaivePredicate)
{
    Rng rng(21);
    const std::vector<GroupSpec> gs{GroupSpec::cyclic(7), GroupSpec::dihedral(5), GroupSpec(7, {2, 3}, {-1, 1})};
    for (int t = 0; t < 10000; ++t) {
        const GroupSpec& g = gs[static_cast<std::size_t>(t) % gs.size()];
        std::vector<Elem> all;
        for (std::int64_t x = 0; x < g.p(); ++x)
            for (std::uint32_t h = 0; h < g.h_size(); ++h)
                if (x != 0 || h != 0)
                    all.push_back({x, h});
        shuffle_in_place(all, rng);
        all.resize(1 + uniform_index(rng, std::min<std::size_t>(all.size(), 8)));
        ASSERT_EQ(is_sequencing(g, all), naive::is_sequencing(g, all));
        ASSERT_EQ(is_valid(g, all), naive::is_sequencing(g, all, false));
    }
}

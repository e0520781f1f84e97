#include "gseq/pipeline.hpp"
#include "support/engineered.hpp"
#include "support/naive.hpp"

#include <gtest/gtest.h>

using namespace gseq;

namespace {

PipelineConfig engineered_config(std::uint64_t seed)
{
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.decompose.r.override_r = 8;
    cfg.fallback = false;
    return cfg;
}

} // namespace

TEST(Pipeline, SmallCyclicUsesOracle)
{
    const auto z5 = GroupSpec::cyclic(5);
    const std::vector<Elem> a{z5.elem(1), z5.elem(2), z5.elem(3)};
    const auto r = cmd_sequence(z5, a, PipelineConfig{});
    EXPECT_EQ(r.mode, "oracle");
    EXPECT_EQ(r.ordering, (Ordering{z5.elem(2), z5.elem(1), z5.elem(3)}));
    EXPECT_TRUE(r.verified);
    EXPECT_TRUE(verify_certificate(r.doc).ok);
}

TEST(Pipeline, DihedralRectifyOnly)
{
    const auto g = GroupSpec::dihedral(101);
    const std::vector<Elem> a{g.elem(1, 0u), g.elem(2, 1u), g.elem(5, 1u), g.elem(100, 0u)};
    PipelineConfig cfg;
    cfg.fallback = false;
    const auto r = cmd_sequence(g, a, cfg);
    EXPECT_EQ(r.mode, "rectify-only");
    EXPECT_FALSE(r.fallback_used);
    EXPECT_TRUE(naive::is_sequencing(g, r.ordering));
    EXPECT_TRUE(std::is_permutation(r.ordering.begin(), r.ordering.end(), a.begin(), a.end()));
}

TEST(Pipeline, HOnlyDelegatesToOracle)
{
    const GroupSpec g(7, {2, 3}, {-1, 1});
    std::vector<Elem> a;
    for (std::uint32_t h = 1; h < g.h_size(); ++h)
        a.push_back({0, h});
    PipelineConfig cfg;
    cfg.fallback = false;
    const auto r = cmd_sequence(g, a, cfg);
    EXPECT_EQ(r.mode, "oracle");
    EXPECT_FALSE(r.fallback_used);
    EXPECT_EQ(r.attempts, 0u);
    EXPECT_TRUE(naive::is_sequencing(g, r.ordering));
}

TEST(Pipeline, EngineeredInstanceRunsFullPipeline)
{
    const auto g = GroupSpec::dihedral(1000003);
    std::size_t full = 0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(seed);
        const auto a = gseq::testing::engineered_dihedral(g, 60, 40, 30, rng);
        const auto r = cmd_sequence(g, a, engineered_config(seed));
        ASSERT_TRUE(naive::is_sequencing(g, r.ordering));
        ASSERT_TRUE(std::is_permutation(r.ordering.begin(), r.ordering.end(), a.begin(), a.end()));
        full += r.mode == "full pipeline" ? 1 : 0;
        EXPECT_TRUE(r.doc["stages"].contains("block_order")) << r.doc["attempts"].dump();
    }
    EXPECT_EQ(full, 4u);
}

TEST(Pipeline, DeterministicForFixedSeed)
{
    const auto g = GroupSpec::dihedral(1000003);
    Rng rng(5);
    const auto a = gseq::testing::engineered_dihedral(g, 40, 30, 20, rng);
    const auto first = cmd_sequence(g, a, engineered_config(11)).hash();
    for (int t = 0; t < 3; ++t)
        EXPECT_EQ(cmd_sequence(g, a, engineered_config(11)).hash(), first);
    const auto z5 = GroupSpec::cyclic(5);
    const std::vector<Elem> b{z5.elem(1), z5.elem(4)};
    EXPECT_EQ(cmd_sequence(z5, b, PipelineConfig{}).hash(), cmd_sequence(z5, b, PipelineConfig{}).hash());
}

TEST(Pipeline, RejectsBadInput)
{
    const auto z5 = GroupSpec::cyclic(5);
    EXPECT_THROW(cmd_sequence(z5, std::vector<Elem>{z5.identity()}, PipelineConfig{}), InvalidInput);
    EXPECT_THROW(cmd_sequence(z5, std::vector<Elem>{z5.elem(1), z5.elem(1)}, PipelineConfig{}), InvalidInput);
    EXPECT_THROW(cmd_sequence(z5, std::vector<Elem>{{7, 0}}, PipelineConfig{}), InvalidInput);
    const auto d3 = GroupSpec::dihedral(3);
    EXPECT_THROW(cmd_sequence(d3, std::vector<Elem>{d3.elem(1, 0u), d3.elem(2, 0u), d3.elem(0, 1u), d3.elem(1, 1u),
                                                    d3.elem(2, 1u)},
                              PipelineConfig{}),
                 NotSequenceable);
}

TEST(Pipeline, ConfigValidation)
{
    const auto z5 = GroupSpec::cyclic(5);
    const std::vector<Elem> a{z5.elem(1)};
    PipelineConfig c;
    c.retries = 0;
    EXPECT_THROW(cmd_sequence(z5, a, c), InvalidInput);
    c = {};
    c.blocks.k.c2 = 0;
    EXPECT_THROW(cmd_sequence(z5, a, c), InvalidInput);
    c = {};
    c.decompose.window = {12, 16};
    EXPECT_THROW(cmd_sequence(z5, a, c), InvalidInput);
}

TEST(Pipeline, DecomposeCommandReportsNoViolations)
{
    const auto g = GroupSpec::dihedral(101);
    const std::vector<Elem> a{g.elem(1, 0u), g.elem(2, 1u), g.elem(5, 1u), g.elem(100, 0u)};
    const auto j = cmd_decompose(g, a, PipelineConfig{});
    EXPECT_EQ(j["command"], "decompose");
    EXPECT_TRUE(j["violations"].empty());
}

TEST(Serialize, ElementForms)
{
    const GroupSpec g(7, {2, 3}, {-1, 1});
    const Elem e = g.elem(3, std::vector<int>{1, 2});
    const json j = elem_to_json(g, e);
    EXPECT_EQ(j, json::parse(R"({"x":3,"a":[1,2]})"));
    EXPECT_EQ(elem_from_json(g, j, "e"), e);
    EXPECT_EQ(elem_from_json(g, json::array({3, e.h}), "e"), e);
    EXPECT_EQ(elem_from_json(g, json(10), "e"), g.elem(3, 0u));
    EXPECT_EQ(elem_from_json(g, json::parse(R"({"x":-1})"), "e"), g.elem(6, 0u));
    EXPECT_THROW(elem_from_json(g, json::parse(R"({"x":1,"a":[1]})"), "e"), SchemaError);
    EXPECT_THROW(elem_from_json(g, json::parse(R"({"a":[1,0]})"), "e"), SchemaError);
    EXPECT_THROW(elem_from_json(g, json::array({1, 6}), "e"), SchemaError);
    EXPECT_THROW(elem_from_json(g, json("x"), "e"), SchemaError);
}

TEST(Serialize, GroupRoundTrip)
{
    const GroupSpec g(11, {2, 4}, {1, -1});
    const auto back = group_from_json(group_to_json(g));
    EXPECT_EQ(back.p(), 11);
    EXPECT_EQ(back.h_orders(), g.h_orders());
    EXPECT_EQ(back.phi_signs(), g.phi_signs());
    EXPECT_EQ(group_from_json(json::parse(R"({"type":"dihedral","p":5})")).h_orders(), (std::vector<int>{2}));
    EXPECT_THROW(group_from_json(json::parse(R"({"type":"torus","p":5})")), SchemaError);
    EXPECT_THROW(group_from_json(json::parse(R"({"p":5})")), SchemaError);
}

TEST(Serialize, SetRoundTrip)
{
    const auto g = GroupSpec::dihedral(13);
    const std::vector<Elem> v{g.elem(1, 1u), g.elem(12, 0u), g.elem(0, 1u)};
    EXPECT_EQ(set_from_json(g, set_to_json(g, v)), v);
}

TEST(Serialize, SyntaxErrorCarriesLineAndColumn)
{
    try {
        parse_json("{\n  \"p\": 5,\n  oops\n}", "in.json");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("in.json:3:"), std::string::npos) << e.what();
    }
}

TEST(Serialize, DeterminismHashIgnoresTimings)
{
    json a{{"x", 1}, {"timings", {{"total", 0.5}}}, {"inner", {{"timings", 3}, {"y", 2}}}};
    json b{{"x", 1}, {"timings", {{"total", 9.0}}}, {"inner", {{"timings", 4}, {"y", 2}}}};
    EXPECT_EQ(determinism_hash(a), determinism_hash(b));
    b["inner"]["y"] = 3;
    EXPECT_NE(determinism_hash(a), determinism_hash(b));
}

TEST(Verify, CertificateRoundTrip)
{
    const auto z5 = GroupSpec::cyclic(5);
    const Ordering o{z5.elem(2), z5.elem(1), z5.elem(3)};
    const auto ok = verify_certificate(certificate_to_json(z5, o));
    EXPECT_TRUE(ok.ok) << ok.message;
}

TEST(Verify, EditedCertificateNamesCollision)
{
    const auto z5 = GroupSpec::cyclic(5);
    json c = certificate_to_json(z5, Ordering{z5.elem(2), z5.elem(1), z5.elem(3)});
    c["partial_products"][2] = elem_to_json(z5, z5.elem(2));
    const auto r = verify_certificate(c);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.positions, (std::vector<std::size_t>{0, 2}));

    json d = certificate_to_json(z5, Ordering{z5.elem(1), z5.elem(4), z5.elem(2)});
    const auto s = verify_certificate(d);
    EXPECT_FALSE(s.ok);
    EXPECT_FALSE(s.positions.empty());

    json e = certificate_to_json(z5, Ordering{z5.elem(2), z5.elem(1), z5.elem(3)});
    e["partial_products"][1] = elem_to_json(z5, z5.elem(4));
    const auto t = verify_certificate(e);
    EXPECT_FALSE(t.ok);
    EXPECT_EQ(t.positions, (std::vector<std::size_t>{1}));
}

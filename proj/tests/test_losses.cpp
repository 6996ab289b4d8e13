#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "structalign/losses.hpp"
#include "structalign/rng.hpp"
#include "support.hpp"

using namespace structalign;
using namespace structalign::test;

namespace {

ModelBundle uniform_mlm_bundle(const PlmConfig& cfg, std::uint64_t seed) {
    ModelBundle b = init_model(cfg, seed);
    std::fill(b.param("heads.mlm.w2").data.begin(), b.param("heads.mlm.w2").data.end(), 0.0);
    std::fill(b.param("heads.mlm.b2").data.begin(), b.param("heads.mlm.b2").data.end(), 0.0);
    return b;
}

Tensor constant_matrix(int n, double v) {
    Tensor t({n, n});
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

}  // namespace

TEST_CASE("uniform logits give MLM loss ln 22") {
    auto cfg = tiny_config();
    ModelBundle b = uniform_mlm_bundle(cfg, 11);
    std::vector<ProteinRecord> recs{make_record(14, cfg.d_g, cfg.codebook_k, 41)};
    Batch batch = make_batch(recs);
    auto [mean, per] = mlm_loss(b, batch);
    CHECK(mean == doctest::Approx(std::log(22.0)).epsilon(1e-12));
    for (double v : per) CHECK(v == doctest::Approx(std::log(22.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy on hand-set logits") {
    SUBCASE("near-perfect logits") {
        Tensor logits({1, 22});
        logits.at(0, 7) = 1e3;
        auto losses = softmax_ce_rows_values(logits, {7});
        CHECK(losses[0] < 1e-3);
    }
    SUBCASE("mean of two hand-computed values") {
        // row 0: logits (1, 2); row 1: logits (0.5, -0.5)
        Tensor logits({2, 2}, {1.0, 2.0, 0.5, -0.5});
        auto losses = softmax_ce_rows_values(logits, {0, 1});
        const double ce0 = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0)));
        const double ce1 = -std::log(std::exp(-0.5) / (std::exp(0.5) + std::exp(-0.5)));
        CHECK(losses[0] == doctest::Approx(ce0).epsilon(1e-12));
        CHECK(losses[1] == doctest::Approx(ce1).epsilon(1e-12));
        CHECK(0.5 * (losses[0] + losses[1]) ==
              doctest::Approx(0.5 * (ce0 + ce1)).epsilon(1e-12));
    }
}

TEST_CASE("mlm_loss requires masked positions") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 12);
    std::vector<ProteinRecord> recs{make_record(8, cfg.d_g, cfg.codebook_k, 42)};
    Batch batch;
    BatchEntry e;
    e.record = recs[0];
    batch.entries.push_back(e);
    batch.total_residues = recs[0].length();
    CHECK_THROWS(mlm_loss(b, batch));
}

TEST_CASE("similarity matrix is s times the unit-row dot products") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 13);
    std::vector<ProteinRecord> recs{make_record(6, cfg.d_g, cfg.codebook_k, 43),
                                    make_record(7, cfg.d_g, cfg.codebook_k, 44)};
    Batch batch = make_batch(recs);
    Tensor delta = similarity_matrix(b, batch);
    const int n = batch.total_residues;
    REQUIRE(delta.shape == std::vector<int>{n, n});
    // |delta| <= s because both factors have unit rows
    const double s = b.scale_s();
    for (double v : delta.data) CHECK(std::abs(v) <= s + 1e-9);

    // doubling s doubles the matrix elementwise
    ModelBundle b2 = b;
    b2.param("heads.log_s").data[0] += std::log(2.0);
    Tensor delta2 = similarity_matrix(b2, batch);
    for (std::int64_t i = 0; i < delta.size(); ++i)
        CHECK(delta2.data[i] == doctest::Approx(2.0 * delta.data[i]).epsilon(1e-12));

    // missing embeddings error
    std::vector<ProteinRecord> bare{recs[0]};
    bare[0].gnn_embedding = Tensor();
    Batch bad = make_batch(bare);
    CHECK_THROWS(similarity_matrix(b, bad));
}

TEST_CASE("contrastive losses: single element, uniform, and strong diagonal") {
    SUBCASE("N=1 gives exactly zero") {
        Tensor one({1, 1}, {3.7});
        CHECK(a2g_losses(one)[0] == 0.0);
        CHECK(g2a_losses(one)[0] == 0.0);
    }
    SUBCASE("uniform matrix gives ln N") {
        for (int n : {2, 17, 64}) {
            auto losses = a2g_losses(constant_matrix(n, 0.42));
            for (double v : losses) CHECK(v == doctest::Approx(std::log(n)).epsilon(1e-12));
        }
    }
    SUBCASE("strong diagonal 10*I at N=3") {
        Tensor delta({3, 3});
        for (int i = 0; i < 3; ++i) delta.at(i, i) = 10.0;
        const double expected = std::log1p(2.0 * std::exp(-10.0));
        for (double v : a2g_losses(delta)) CHECK(v == doctest::Approx(expected).epsilon(1e-9));
        CHECK(expected == doctest::Approx(9.1e-5).epsilon(0.01));
    }
    SUBCASE("losses are non-negative for finite similarity") {
        Rng rng(45);
        Tensor delta({9, 9});
        for (auto& v : delta.data) v = rng.normal(0, 3);
        for (double v : a2g_losses(delta)) CHECK(v > 0.0);
        for (double v : g2a_losses(delta)) CHECK(v > 0.0);
    }
}

TEST_CASE("transpose duality: a2g of delta equals g2a of delta transposed") {
    Rng rng(46);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + trial;
        Tensor delta({n, n});
        for (auto& v : delta.data) v = rng.normal(0, 2);
        Tensor deltaT({n, n});
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) deltaT.at(c, r) = delta.at(r, c);
        auto a = a2g_losses(delta);
        auto g = g2a_losses(deltaT);
        double mean_a = 0, mean_g = 0;
        for (int i = 0; i < n; ++i) {
            mean_a += a[i];
            mean_g += g[i];
        }
        CHECK(std::abs(mean_a - mean_g) / n < 1e-12);
    }
}

TEST_CASE("latent loss is the arithmetic mean of the two contrastive means") {
    CHECK(latent_loss(0.0, 0.0) == 0.0);
    CHECK(latent_loss(std::log(5.0), std::log(5.0)) ==
          doctest::Approx(std::log(5.0)).epsilon(1e-15));
    CHECK(latent_loss(0.2, 0.4) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("physical loss: uniform logits give ln K for K in {20, 512}") {
    for (int k : {20, 512}) {
        auto cfg = tiny_config(8, k);
        ModelBundle b = init_model(cfg, 14);
        std::fill(b.param("heads.struct.w2").data.begin(), b.param("heads.struct.w2").data.end(),
                  0.0);
        std::fill(b.param("heads.struct.b2").data.begin(), b.param("heads.struct.b2").data.end(),
                  0.0);
        std::vector<ProteinRecord> recs{make_record(9, cfg.d_g, k, 47)};
        Batch batch = make_batch(recs);
        for (double v : physical_losses(b, batch))
            CHECK(v == doctest::Approx(std::log(double(k))).epsilon(1e-12));
    }
}

TEST_CASE("physical loss rejects out-of-range structure tokens") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 15);
    std::vector<ProteinRecord> recs{make_record(8, cfg.d_g, cfg.codebook_k, 48)};
    recs[0].structure_tokens[3] = cfg.codebook_k;   // >= K
    Batch batch = make_batch(recs);
    CHECK_THROWS(physical_losses(b, batch));
}

TEST_CASE("per-residue physical losses ignore the rest of the batch; contrastive losses do not") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 16);
    auto r1 = make_record(8, cfg.d_g, cfg.codebook_k, 49);
    auto r2 = make_record(9, cfg.d_g, cfg.codebook_k, 50);
    auto r3 = make_record(7, cfg.d_g, cfg.codebook_k, 51);

    Batch two;
    for (const auto& r : {r1, r2}) {
        BatchEntry e;
        e.record = r;
        two.total_residues += r.length();
        two.entries.push_back(e);
    }
    mask_batch(two, 0.15, 5);
    Batch three;
    for (const auto& r : {r1, r2, r3}) {
        BatchEntry e;
        e.record = r;
        three.total_residues += r.length();
        three.entries.push_back(e);
    }
    // identical masked inputs for the shared records
    three.entries[0].masked_ids = two.entries[0].masked_ids;
    three.entries[0].plan = two.entries[0].plan;
    three.entries[1].masked_ids = two.entries[1].masked_ids;
    three.entries[1].plan = two.entries[1].plan;
    auto [m3, p3] = mask_sequence(r3, 0.15, 6);
    three.entries[2].masked_ids = m3;
    three.entries[2].plan = p3;

    auto phys2 = physical_losses(b, two);
    auto phys3 = physical_losses(b, three);
    for (int i = 0; i < two.total_residues; ++i)
        CHECK(phys2[i] == doctest::Approx(phys3[i]).epsilon(1e-12));

    Tensor d2 = similarity_matrix(b, two);
    auto a2 = a2g_losses(d2);
    Tensor d3 = similarity_matrix(b, three);
    auto a3 = a2g_losses(d3);
    double max_change = 0;
    for (int i = 0; i < two.total_residues; ++i)
        max_change = std::max(max_change, std::abs(a2[i] - a3[i]));
    CHECK(max_change > 1e-6);   // more negatives shift the contrastive losses
}

TEST_CASE("overall loss composes the three families with the gamma weights") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 17);
    std::vector<ProteinRecord> recs{make_record(10, cfg.d_g, cfg.codebook_k, 52),
                                    make_record(11, cfg.d_g, cfg.codebook_k, 53)};
    Batch batch = make_batch(recs);

    auto [mean_mlm, per_mlm] = mlm_loss(b, batch);
    auto [value, set] = overall_loss(b, batch, LossWeights{0.5, 0.5}, {});
    const int n = batch.total_residues;
    double a2g_mean = 0, g2a_mean = 0, phys_mean = 0;
    for (int i = 0; i < n; ++i) {
        a2g_mean += set.a2g[i];
        g2a_mean += set.g2a[i];
        phys_mean += set.physical[i];
    }
    a2g_mean /= n;
    g2a_mean /= n;
    phys_mean /= n;
    const double expected =
        mean_mlm + 0.5 * latent_loss(a2g_mean, g2a_mean) + 0.5 * phys_mean;
    CHECK(value == doctest::Approx(expected).epsilon(1e-12));

    SUBCASE("hand-set weighted sum") {
        // components (1.0, 0.6, 0.4) with gammas (0.5, 0.5) -> 1.5
        CHECK(1.0 + 0.5 * 0.6 + 0.5 * 0.4 == doctest::Approx(1.5).epsilon(1e-15));
    }

    SUBCASE("gammas (0,0) reduce the objective to the MLM loss exactly") {
        auto [mlm_only, set2] = overall_loss(b, batch, LossWeights{0.0, 0.0}, {});
        CHECK(mlm_only == mean_mlm);
    }

    SUBCASE("all-ones masks at rho=1 equal the unselected objective") {
        SelectionMasks ones;
        ones.a2g.assign(n, 1);
        ones.g2a.assign(n, 1);
        ones.physical.assign(n, 1);
        auto [with_masks, set3] = overall_loss(b, batch, LossWeights{0.5, 0.5}, ones);
        CHECK(std::abs(with_masks - value) < 1e-12);
    }

    SUBCASE("an all-zero mask is rejected") {
        SelectionMasks zeros;
        zeros.a2g.assign(n, 0);
        CHECK_THROWS(overall_loss(b, batch, LossWeights{0.5, 0.5}, zeros));
    }

    SUBCASE("invalid weights are rejected") {
        CHECK_THROWS(LossWeights{0.7, 0.5}.validate());
        CHECK_THROWS(LossWeights{-0.1, 0.5}.validate());
        CHECK_NOTHROW(LossWeights{0.0, 0.5}.validate());
    }
}

TEST_CASE("every loss family passes the gradient check on the tiny model") {
    auto cfg = tiny_config();
    std::vector<ProteinRecord> recs{make_record(6, cfg.d_g, cfg.codebook_k, 54),
                                    make_record(5, cfg.d_g, cfg.codebook_k, 55)};
    Batch batch = make_batch(recs, 0.3, 8);

    auto run = [&](const char* what, std::function<Tape::Var(BatchGraph&)> build) {
        ModelBundle b = init_model(cfg, 18);
        auto groups = param_groups(b, 1e-4, 1e-3, 0.01);
        LossFn fn = bundle_loss_fn(b, batch, build);
        double err = grad_check(fn, groups, 1e-5, 7, 6);
        INFO(what);
        CHECK(err < 1e-4);
    };
    run("mlm", [](BatchGraph& g) { return g.mlm_mean(); });
    run("a2g", [](BatchGraph& g) { return g.plm().tape().mean_all(g.a2g_vec()); });
    run("physical", [](BatchGraph& g) { return g.plm().tape().mean_all(g.physical_vec()); });
    run("overall", [](BatchGraph& g) { return g.overall(LossWeights{0.5, 0.5}, {}); });
}

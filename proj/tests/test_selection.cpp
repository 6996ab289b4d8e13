#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "structalign/selection.hpp"
#include "structalign/synthgen.hpp"
#include "structalign/tokenizer.hpp"
#include "structalign/trainer.hpp"
#include "support.hpp"

using namespace structalign;
using namespace structalign::test;

TEST_CASE("excess losses subtract elementwise per family") {
    ResidueLossSet cur, ref;
    cur.a2g = {2.0, 1.0};
    cur.g2a = {0.5, 0.5};
    cur.physical = {3.0, 4.0};
    ref.a2g = {0.5, 1.0};
    ref.g2a = {0.5, 0.25};
    ref.physical = {3.0, 1.0};
    auto ex = excess_losses(cur, ref);
    CHECK(ex.a2g == std::vector<double>{1.5, 0.0});
    CHECK(ex.g2a == std::vector<double>{0.0, 0.25});
    CHECK(ex.physical == std::vector<double>{0.0, 3.0});

    ResidueLossSet same = cur;
    auto zero = excess_losses(cur, same);
    for (double v : zero.a2g) CHECK(v == 0.0);

    ResidueLossSet shorter;
    shorter.a2g = {1.0};
    shorter.g2a = {1.0};
    shorter.physical = {1.0};
    CHECK_THROWS(excess_losses(cur, shorter));
}

TEST_CASE("select keeps max(1, floor(N*rho)) entries with deterministic tie-breaks") {
    SUBCASE("rho = 1 selects everything for any strategy") {
        std::vector<double> v{3, 1, 2};
        for (auto kind : {StrategyKind::Excess, StrategyKind::LossLarge, StrategyKind::LossSmall,
                          StrategyKind::Full}) {
            auto mask = select(v, {kind, 1.0});
            CHECK(mask == std::vector<std::uint8_t>{1, 1, 1});
        }
    }
    SUBCASE("N=10 rho=0.8 selects exactly 8") {
        std::vector<double> v(10);
        for (int i = 0; i < 10; ++i) v[i] = i * 0.37;
        auto mask = select(v, {StrategyKind::Excess, 0.8});
        CHECK(std::count(mask.begin(), mask.end(), 1) == 8);
    }
    SUBCASE("values [3,1,2] at rho=2/3 keep the top two") {
        auto mask = select({3, 1, 2}, {StrategyKind::Excess, 2.0 / 3.0});
        CHECK(mask == std::vector<std::uint8_t>{1, 0, 1});
        auto small = select({3, 1, 2}, {StrategyKind::LossSmall, 2.0 / 3.0});
        CHECK(small == std::vector<std::uint8_t>{0, 1, 1});
    }
    SUBCASE("floor of one") {
        auto mask = select({5.0, 4.0, 3.0}, {StrategyKind::Excess, 0.01});
        CHECK(std::count(mask.begin(), mask.end(), 1) == 1);
        CHECK(mask[0] == 1);
    }
    SUBCASE("ties break toward the lower flat index") {
        auto mask = select({1.0, 1.0, 1.0, 1.0}, {StrategyKind::Excess, 0.5});
        CHECK(mask == std::vector<std::uint8_t>{1, 1, 0, 0});
    }
    SUBCASE("count contract and shift invariance over 100 random cases") {
        Rng rng(61);
        for (int t = 0; t < 100; ++t) {
            const int n = rng.uniform_int(1, 200);
            const double rho = rng.uniform(0.01, 1.0);
            std::vector<double> v(n);
            for (auto& x : v) x = rng.normal();
            auto mask = select(v, {StrategyKind::Excess, rho});
            const int expected = std::max<int>(1, static_cast<int>(std::floor(n * rho)));
            CHECK(std::count(mask.begin(), mask.end(), 1) == expected);
            std::vector<double> shifted(v);
            for (auto& x : shifted) x += 123.456;
            CHECK(select(shifted, {StrategyKind::Excess, rho}) == mask);
        }
    }
    SUBCASE("full strategy must use rho 1") {
        CHECK_THROWS(select({1.0, 2.0}, {StrategyKind::Full, 0.5}));
        CHECK_THROWS(select({1.0, 2.0}, {StrategyKind::Excess, 0.0}));
    }
}

TEST_CASE("reference_losses of the current model equal the current losses") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 21);
    std::vector<ProteinRecord> recs{make_record(9, cfg.d_g, cfg.codebook_k, 71),
                                    make_record(8, cfg.d_g, cfg.codebook_k, 72)};
    Batch batch = make_batch(recs);
    Tape tape;
    BatchGraph g(tape, b, batch, false);
    ResidueLossSet direct = g.residue_losses();
    ModelBundle frozen = b;
    frozen.frozen = true;
    auto checksum = param_checksum(frozen);
    ResidueLossSet viaref = reference_losses(frozen, batch);
    for (std::size_t i = 0; i < direct.a2g.size(); ++i) {
        CHECK(std::abs(direct.a2g[i] - viaref.a2g[i]) < 1e-12);
        CHECK(std::abs(direct.g2a[i] - viaref.g2a[i]) < 1e-12);
        CHECK(std::abs(direct.physical[i] - viaref.physical[i]) < 1e-12);
    }
    // deterministic and non-mutating
    ResidueLossSet again = reference_losses(frozen, batch);
    CHECK(again.a2g == viaref.a2g);
    CHECK(param_checksum(frozen) == checksum);

    ModelBundle wrong_dg = init_model(tiny_config(cfg.d_g + 2, cfg.codebook_k), 23);
    wrong_dg.frozen = true;
    CHECK_THROWS(reference_losses(wrong_dg, batch));
}

TEST_CASE("build_selection_masks dispatches per strategy") {
    ResidueLossSet cur, ref;
    cur.a2g = {5, 1, 3, 2};
    cur.g2a = {1, 2, 3, 4};
    cur.physical = {4, 3, 2, 1};
    ref.a2g = {5, 0, 0, 0};   // residue 0 has huge reference loss -> low excess
    ref.g2a = {0, 0, 0, 0};
    ref.physical = {0, 0, 0, 0};

    auto full = build_selection_masks(cur, nullptr, {StrategyKind::Full, 1.0});
    CHECK(full.a2g.empty());

    auto large = build_selection_masks(cur, nullptr, {StrategyKind::LossLarge, 0.5});
    CHECK(large.a2g == std::vector<std::uint8_t>{1, 0, 1, 0});

    auto small = build_selection_masks(cur, nullptr, {StrategyKind::LossSmall, 0.5});
    CHECK(small.a2g == std::vector<std::uint8_t>{0, 1, 0, 1});

    auto excess = build_selection_masks(cur, &ref, {StrategyKind::Excess, 0.5});
    CHECK(excess.a2g == std::vector<std::uint8_t>{0, 0, 1, 1});   // excess (0,1,3,2)

    CHECK_THROWS(build_selection_masks(cur, nullptr, {StrategyKind::Excess, 0.5}));
}

TEST_CASE("corrupted residues have lower excess loss than clean-but-hard residues") {
    // reference trained on clean structures only; the current model is a
    // fresh init, so its loss is high everywhere. Corrupted residues should
    // then show small excess (reference is also bad there), clean-but-hard
    // residues large excess.
    GeneratorConfig gc;
    gc.n_proteins = 40;
    gc.len_min = 12;
    gc.len_max = 20;
    gc.noise_fraction = 0.4;
    gc.coord_noise_sigma = 2.5;
    gc.embed.d_g = 8;
    gc.seed = 91;
    auto recs = generate(gc);
    Codebook cb = fit_codebook_on_corpus(recs, 6, 92);
    tokenize_corpus(recs, cb);

    TrainConfig tc;
    tc.epochs = 6;
    tc.warmup_epochs = 1;
    tc.model = tiny_config(8, 6);
    tc.model.max_len = 24;
    tc.max_len = 24;
    tc.batch_records = 8;
    tc.val_fraction = 0.0;
    tc.seed = 93;
    tc.save_checkpoints = false;
    auto clean = curate_reference(recs);
    REQUIRE(!clean.empty());
    auto dir = temp_dir("sel-audit");
    ModelBundle reference = train_reference(clean, tc, dir / "ref");

    ModelBundle current = init_model(tc.model, 94);
    Batch batch;
    std::vector<bool> corrupted_flags;
    for (const auto& r : recs) {
        BatchEntry e;
        e.record = r;
        batch.total_residues += r.length();
        batch.entries.push_back(e);
        for (int i = 0; i < r.length(); ++i) corrupted_flags.push_back(r.resolution >= 2.0);
    }
    mask_batch(batch, 0.15, 95);

    Tape tape;
    BatchGraph g(tape, current, batch, false);
    ResidueLossSet cur = g.residue_losses();
    ResidueLossSet ref = reference_losses(reference, batch);
    auto ex = excess_losses(cur, ref);

    // clean-but-hard = clean residues in the top quartile by current loss
    std::vector<double> clean_losses;
    for (std::size_t i = 0; i < corrupted_flags.size(); ++i)
        if (!corrupted_flags[i]) clean_losses.push_back(cur.a2g[i]);
    std::sort(clean_losses.begin(), clean_losses.end());
    const double hard_cut = clean_losses[clean_losses.size() * 3 / 4];

    double mean_corrupted = 0, mean_clean_hard = 0;
    int n_corrupted = 0, n_clean_hard = 0;
    for (std::size_t i = 0; i < corrupted_flags.size(); ++i) {
        if (corrupted_flags[i]) {
            mean_corrupted += ex.a2g[i];
            ++n_corrupted;
        } else if (cur.a2g[i] >= hard_cut) {
            mean_clean_hard += ex.a2g[i];
            ++n_clean_hard;
        }
    }
    REQUIRE(n_corrupted > 0);
    REQUIRE(n_clean_hard > 0);
    mean_corrupted /= n_corrupted;
    mean_clean_hard /= n_clean_hard;
    CHECK(mean_corrupted < mean_clean_hard);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "structalign/losses.hpp"
#include "structalign/plm.hpp"
#include "support.hpp"

using namespace structalign;
using namespace structalign::test;

TEST_CASE("encode shapes, determinism and vocabulary checks") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 3);

    Tensor h1 = encode_values(b, {0});
    CHECK(h1.shape == std::vector<int>{1, cfg.d_model});

    std::vector<int> seq{3, 1, 4, 1, 5, kMaskId};
    Tensor a = encode_values(b, seq);
    Tensor c = encode_values(b, seq);
    CHECK(a.data == c.data);
    CHECK(a.all_finite());

    CHECK_THROWS(encode_values(b, {0, 99}));
    CHECK_THROWS(encode_values(b, std::vector<int>(cfg.max_len + 1, 0)));
}

TEST_CASE("encode is permutation equivariant once positions are zeroed") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 4);
    std::fill(b.param("backbone.pos_emb").data.begin(), b.param("backbone.pos_emb").data.end(),
              0.0);
    std::vector<int> seq{2, 7, 11, 0, 19, 13};
    std::vector<int> perm{3, 0, 5, 1, 4, 2};
    std::vector<int> permuted(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) permuted[i] = seq[perm[i]];
    Tensor h = encode_values(b, seq);
    Tensor hp = encode_values(b, permuted);
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (int c = 0; c < cfg.d_model; ++c)
            CHECK(hp.at(static_cast<int>(i), c) ==
                  doctest::Approx(h.at(perm[i], c)).epsilon(1e-9));
}

TEST_CASE("heads: shapes, row-normalized softmax, and the zero-input bias image") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 5);
    std::vector<int> seq{1, 2, 3, 4, 5};
    Tensor logits = mlm_logits_values(b, seq);
    CHECK(logits.shape == std::vector<int>{5, cfg.vocab});
    Tensor slog = struct_logits_values(b, seq);
    CHECK(slog.shape == std::vector<int>{5, cfg.codebook_k});

    // softmax of any row sums to 1
    for (int r = 0; r < logits.rows(); ++r) {
        double mx = *std::max_element(logits.data.begin() + r * cfg.vocab,
                                      logits.data.begin() + (r + 1) * cfg.vocab);
        double sum = 0;
        for (int c = 0; c < cfg.vocab; ++c) sum += std::exp(logits.at(r, c) - mx);
        double total = 0;
        for (int c = 0; c < cfg.vocab; ++c) total += std::exp(logits.at(r, c) - mx) / sum;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }

    // zero hidden state -> logits equal the head's image of zero
    Tape tape;
    PlmGraph g(tape, b, false);
    auto zero = tape.leaf(Tensor({2, cfg.d_model}), false);
    Tensor out = tape.val(g.mlm_logits(zero));
    const Tensor& w2 = b.param("heads.mlm.w2");
    const Tensor& b1 = b.param("heads.mlm.b1");
    const Tensor& b2 = b.param("heads.mlm.b2");
    for (int c = 0; c < cfg.vocab; ++c) {
        double expected = b2.data[c];
        for (int h = 0; h < cfg.d_model; ++h) {
            double act = 0.5 * b1.data[h] * (1.0 + std::erf(b1.data[h] / std::sqrt(2.0)));
            expected += act * w2.at(h, c);
        }
        CHECK(out.at(0, c) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(out.at(1, c) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("projections produce unit rows of width D and ignore input scale") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 6);
    Rng rng(9);
    Tensor emb({7, cfg.d_g});
    for (auto& v : emb.data) v = rng.normal();
    Tensor p = project_values(b, emb, 'g');
    CHECK(p.shape == std::vector<int>{7, cfg.proj_dim});
    for (int r = 0; r < 7; ++r) {
        double n = 0;
        for (int c = 0; c < cfg.proj_dim; ++c) n += p.at(r, c) * p.at(r, c);
        CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-9));
    }
    Tensor scaled = emb;
    for (int c = 0; c < cfg.d_g; ++c) scaled.at(2, c) *= 5.0;
    Tensor p2 = project_values(b, scaled, 'g');
    for (int c = 0; c < cfg.proj_dim; ++c)
        CHECK(p2.at(2, c) == doctest::Approx(p.at(2, c)).epsilon(1e-12));

    ModelBundle zeroed = b;
    std::fill(zeroed.param("heads.proj_g").data.begin(), zeroed.param("heads.proj_g").data.end(),
              0.0);
    CHECK_THROWS(project_values(zeroed, emb, 'g'));
}

TEST_CASE("checkpoints round-trip bitwise") {
    auto cfg = tiny_config();
    Checkpoint ckpt;
    ckpt.bundle = init_model(cfg, 7);
    ckpt.step = 421;
    ckpt.epoch = 3;
    ckpt.run_seed = 99;
    ckpt.opt_state.m["backbone.tok_emb"] = Tensor({cfg.vocab, cfg.d_model});
    ckpt.opt_state.m["backbone.tok_emb"].data[5] = 0.1234567890123456789;
    auto dir = temp_dir("ckpt");
    save_checkpoint(ckpt, dir / "c.json");
    Checkpoint back = load_checkpoint(dir / "c.json");
    CHECK(back.step == 421);
    CHECK(back.epoch == 3);
    CHECK(back.run_seed == 99);
    CHECK(bundles_identical(ckpt.bundle, back.bundle));
    CHECK(back.opt_state.m.at("backbone.tok_emb").data ==
          ckpt.opt_state.m.at("backbone.tok_emb").data);

    std::vector<int> seq{0, 5, 9, 13};
    CHECK(encode_values(ckpt.bundle, seq).data == encode_values(back.bundle, seq).data);
}

TEST_CASE("the overall loss sends nonzero gradients into every parameter tensor") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 8);
    std::vector<ProteinRecord> recs{make_record(10, cfg.d_g, cfg.codebook_k, 31),
                                    make_record(12, cfg.d_g, cfg.codebook_k, 32)};
    Batch batch = make_batch(recs);
    Tape tape;
    BatchGraph g(tape, b, batch, true);
    auto overall = g.overall(LossWeights{0.5, 0.5}, {});
    tape.backward(overall);
    auto grads = g.plm().collect_grads();
    for (const auto& [name, grad] : grads) {
        double mx = 0;
        for (double v : grad.data) mx = std::max(mx, std::abs(v));
        INFO("parameter ", name);
        CHECK(mx > 0.0);
    }
}

TEST_CASE("parameter groups split into backbone and heads exactly") {
    auto cfg = tiny_config();
    ModelBundle b = init_model(cfg, 9);
    auto groups = param_groups(b, 1e-4, 1e-3, 0.01);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].name == "backbone");
    CHECK(groups[1].name == "heads");
    CHECK(groups[0].peak_lr == 1e-4);
    CHECK(groups[1].peak_lr == 1e-3);
    std::size_t total = groups[0].params.size() + groups[1].params.size();
    CHECK(total == b.params.size());
    for (const auto& [name, t] : groups[1].params) CHECK(name.rfind("heads.", 0) == 0);
    bool has_scale = false;
    for (const auto& [name, t] : groups[1].params) has_scale |= name == "heads.log_s";
    CHECK(has_scale);
    CHECK(b.scale_s() == doctest::Approx(1.0 / 0.07).epsilon(1e-12));
}

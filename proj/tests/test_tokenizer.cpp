#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "structalign/synthgen.hpp"
#include "structalign/tokenizer.hpp"
#include "support.hpp"

using namespace structalign;
using namespace structalign::test;

namespace {

Tensor rotated(const Tensor& coords, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Tensor out({coords.rows(), 3});
    for (int i = 0; i < coords.rows(); ++i) {
        out.at(i, 0) = c * coords.at(i, 0) - s * coords.at(i, 1) + 7.0;
        out.at(i, 1) = s * coords.at(i, 0) + c * coords.at(i, 1) - 2.0;
        out.at(i, 2) = coords.at(i, 2) + 3.0;
    }
    return out;
}

}  // namespace

TEST_CASE("helix interior residues pick the i±3 neighbor") {
    Tensor helix = ideal_helix(30);
    for (int i = 8; i < 22; ++i) {
        // brute-force nearest with |i-j| >= 2 as oracle
        int jstar = -1;
        double best = 1e300;
        for (int j = 0; j < 30; ++j) {
            if (std::abs(j - i) < 2) continue;
            double d2 = 0;
            for (int c = 0; c < 3; ++c) {
                double d = helix.at(i, c) - helix.at(j, c);
                d2 += d * d;
            }
            if (d2 < best) {
                best = d2;
                jstar = j;
            }
        }
        CHECK(std::abs(jstar - i) == 3);
        Tensor desc = descriptor(helix, i);
        CHECK(desc.data[0] == doctest::Approx(std::sqrt(best)).epsilon(1e-12));
    }
}

TEST_CASE("descriptors are rotation invariant and finite at the chain ends") {
    Tensor helix = ideal_helix(12);
    Tensor moved = rotated(helix, 0.9);
    for (int i : {0, 1, 6, 11}) {
        Tensor a = descriptor(helix, i);
        Tensor b = descriptor(moved, i);
        for (int c = 0; c < kDescriptorDim; ++c) {
            CHECK(std::isfinite(a.data[c]));
            CHECK(a.data[c] == doctest::Approx(b.data[c]).epsilon(1e-9));
        }
    }
    CHECK_THROWS(descriptor(Tensor({3, 3}), 0));
}

TEST_CASE("k-means with K = M reaches zero quantization error") {
    Rng rng(5);
    Tensor pts({8, kDescriptorDim});
    for (auto& v : pts.data) v = rng.normal();
    Codebook cb = fit_codebook(pts, 8, 3);
    CHECK(quantization_error(pts, cb) == doctest::Approx(0.0).epsilon(1e-18));
    CHECK_THROWS(fit_codebook(pts, 9, 3));
}

TEST_CASE("k-means objective never increases between assignment passes") {
    GeneratorConfig cfg;
    cfg.n_proteins = 12;
    cfg.seed = 13;
    auto recs = generate(cfg);
    int total = 0;
    for (const auto& r : recs) total += r.length();
    Tensor all({total, kDescriptorDim});
    int w = 0;
    for (const auto& r : recs) {
        Tensor d = descriptor_rows(r.coords);
        std::copy(d.data.begin(), d.data.end(),
                  all.data.begin() + static_cast<std::size_t>(w) * kDescriptorDim);
        w += r.length();
    }
    for (int k : {4, 20}) {
        std::vector<double> trace;
        fit_codebook(all, k, 17, 100, &trace);
        REQUIRE(trace.size() >= 2);
        for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
}

TEST_CASE("nearest-centroid assignment breaks ties toward the lower id") {
    Codebook cb;
    cb.k = 2;
    cb.dim = kDescriptorDim;
    cb.centroids = Tensor({2, kDescriptorDim});
    cb.centroids.at(0, 0) = 0.0;
    cb.centroids.at(1, 0) = 2.0;
    Tensor query({1, kDescriptorDim});
    query.at(0, 0) = 1.0;   // equidistant
    CHECK(assign_descriptors(query, cb) == std::vector<int>{0});
    // a descriptor exactly at a centroid gets that centroid's id
    Tensor at_centroid({1, kDescriptorDim});
    at_centroid.at(0, 0) = 2.0;
    CHECK(assign_descriptors(at_centroid, cb) == std::vector<int>{1});
}

TEST_CASE("tokenize is exactly invariant to rigid motion and constant on helix interiors") {
    GeneratorConfig cfg;
    cfg.n_proteins = 16;
    cfg.seed = 14;
    auto recs = generate(cfg);
    Codebook cb = fit_codebook_on_corpus(recs, 20, 23);

    Tensor helix = ideal_helix(24);
    auto tokens = tokenize(helix, cb);
    auto tokens_moved = tokenize(rotated(helix, 1.3), cb);
    CHECK(tokens == tokens_moved);

    std::map<int, int> freq;
    for (int i = 4; i < 20; ++i) ++freq[tokens[i]];   // interior
    int dominant = 0;
    for (auto& [tok, n] : freq) dominant = std::max(dominant, n);
    CHECK(dominant == 16);   // a single token over the whole interior

    Codebook wrong = cb;
    wrong.dim = kDescriptorDim + 1;
    wrong.centroids = Tensor({cb.k, kDescriptorDim + 1});
    CHECK_THROWS(tokenize(helix, wrong));
}

TEST_CASE("token distribution on a mixed corpus is non-degenerate") {
    GeneratorConfig cfg;
    cfg.n_proteins = 48;
    cfg.seed = 15;
    auto recs = generate(cfg);
    Codebook cb = fit_codebook_on_corpus(recs, 20, 29);
    tokenize_corpus(recs, cb);
    std::map<int, int> freq;
    int total = 0;
    for (const auto& r : recs)
        for (int t : r.structure_tokens) {
            ++freq[t];
            ++total;
        }
    int top = 0;
    for (auto& [tok, n] : freq) top = std::max(top, n);
    CHECK(static_cast<double>(top) / total < 0.60);
}

TEST_CASE("codebooks of size 20 and 512 fit and round-trip through JSON") {
    GeneratorConfig cfg;
    cfg.n_proteins = 40;
    cfg.len_min = 16;
    cfg.len_max = 24;
    cfg.seed = 16;
    auto recs = generate(cfg);
    auto dir = temp_dir("codebook");
    for (int k : {20, 512}) {
        Codebook cb = fit_codebook_on_corpus(recs, k, 31);
        CHECK(cb.k == k);
        cb.validate();
        save_codebook(cb, dir / ("cb" + std::to_string(k) + ".json"));
        Codebook back = load_codebook(dir / ("cb" + std::to_string(k) + ".json"));
        CHECK(back.k == cb.k);
        CHECK(back.fit_seed == cb.fit_seed);
        CHECK(back.centroids.data == cb.centroids.data);
    }
}

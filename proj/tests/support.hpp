#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "structalign/corpus.hpp"
#include "structalign/losses.hpp"
#include "structalign/plm.hpp"
#include "structalign/rng.hpp"

namespace structalign::test {

// Small random records (coords are a coil-like walk, embeddings and tokens
// are random but self-consistent in shape) for loss and model tests that do
// not care about geometry.
inline ProteinRecord make_record(int length, int d_g, int k_tokens, std::uint64_t seed,
                                 const std::string& id = "rec") {
    Rng rng(seed);
    ProteinRecord rec;
    rec.id = id + "-" + std::to_string(seed);
    rec.coords = Tensor({length, 3});
    double x = 0, y = 0, z = 0;
    for (int i = 0; i < length; ++i) {
        rec.coords.at(i, 0) = x;
        rec.coords.at(i, 1) = y;
        rec.coords.at(i, 2) = z;
        x += 3.8 * rng.uniform(0.2, 1.0);
        y += 3.8 * rng.uniform(-0.5, 0.5);
        z += 3.8 * rng.uniform(-0.5, 0.5);
    }
    rec.gnn_embedding = Tensor({length, d_g});
    for (auto& v : rec.gnn_embedding.data) v = rng.normal();
    for (int i = 0; i < length; ++i) {
        rec.sequence.push_back(rng.uniform_int(0, kNumResidues - 1));
        rec.structure_tokens.push_back(rng.uniform_int(0, k_tokens - 1));
        rec.ss_labels.push_back(static_cast<SsLabel>(rng.uniform_int(0, 2)));
    }
    rec.resolution = 1.5;
    rec.r_free = 0.15;
    return rec;
}

inline Batch make_batch(const std::vector<ProteinRecord>& records, double mask_rate = 0.15,
                        std::uint64_t mask_seed = 7) {
    Batch b;
    for (const auto& r : records) {
        BatchEntry e;
        e.record = r;
        b.total_residues += r.length();
        b.entries.push_back(std::move(e));
    }
    mask_batch(b, mask_rate, mask_seed);
    return b;
}

inline PlmConfig tiny_config(int d_g = 8, int k = 6) {
    PlmConfig cfg;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.max_len = 32;
    cfg.proj_dim = 8;
    cfg.d_g = d_g;
    cfg.codebook_k = k;
    return cfg;
}

// Loss callback over a bundle for grad_check: builds the requested scalar on
// a fresh tape each call and reads gradients through the PlmGraph.
inline LossFn bundle_loss_fn(ModelBundle& bundle, const Batch& batch,
                             std::function<Tape::Var(BatchGraph&)> build) {
    return [&bundle, &batch, build](std::map<std::string, Tensor>* grads) -> double {
        Tape tape;
        BatchGraph graph(tape, bundle, batch, grads != nullptr);
        Tape::Var loss = build(graph);
        double value = tape.val(loss).item();
        if (grads) {
            tape.backward(loss);
            *grads = graph.plm().collect_grads();
        }
        return value;
    };
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("structalign-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::uint64_t param_checksum(const ModelBundle& bundle) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, t] : bundle.params)
        for (double v : t.data) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            h ^= bits;
            h *= 0x100000001b3ULL;
        }
    return h;
}

inline bool bundles_identical(const ModelBundle& a, const ModelBundle& b) {
    if (a.params.size() != b.params.size()) return false;
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        if (a.params[i].first != b.params[i].first) return false;
        if (a.params[i].second.data != b.params[i].second.data) return false;
    }
    return true;
}

}  // namespace structalign::test

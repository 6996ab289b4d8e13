#include "structalign/probes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "structalign/errors.hpp"
#include "structalign/rng.hpp"
#include "structalign/synthgen.hpp"
#include "structalign/tape.hpp"

namespace structalign {

namespace {

constexpr int kMinSeparation = 6;

struct HeadParams {
    Tensor w1, b1, w2, b2;
    std::vector<double> mean, inv_std;   // train-set feature standardization
};

Tensor standardized(const HeadParams& p, const Tensor& x) {
    Tensor out = x;
    const int n = x.rows(), d = x.cols();
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c)
            out.data[static_cast<std::size_t>(r) * d + c] =
                (x.data[static_cast<std::size_t>(r) * d + c] - p.mean[c]) * p.inv_std[c];
    return out;
}

HeadParams init_head(int in_dim, int hidden, int out_dim, std::uint64_t seed) {
    Rng rng(seed);
    auto gaussian = [&](std::vector<int> shape, double stddev) {
        Tensor t(std::move(shape));
        for (auto& x : t.data) x = rng.normal(0.0, stddev);
        return t;
    };
    HeadParams p;
    p.w1 = gaussian({in_dim, hidden}, std::sqrt(2.0 / (in_dim + hidden)));
    p.b1 = Tensor({hidden});
    p.w2 = gaussian({hidden, out_dim}, std::sqrt(2.0 / (hidden + out_dim)));
    p.b2 = Tensor({out_dim});
    return p;
}

Tensor head_logits(const HeadParams& p, const Tensor& x_raw) {
    Tensor x = standardized(p, x_raw);
    Tape tape;
    auto xv = tape.leaf(std::move(x), false);
    auto h = tape.gelu(tape.add_rowvec(tape.matmul(xv, tape.leaf(p.w1, false)), tape.leaf(p.b1, false)));
    auto out = tape.add_rowvec(tape.matmul(h, tape.leaf(p.w2, false)), tape.leaf(p.b2, false));
    return tape.val(out);
}

// Minibatch AdamW training of the 2-layer head on (x, class targets).
HeadParams train_head(const Tensor& x_raw, const std::vector<int>& y, int n_classes,
                      const ProbeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int n = x_raw.rows(), d = x_raw.cols();
    if (static_cast<int>(y.size()) != n) throw DataError("probe head: label count mismatch");
    HeadParams p = init_head(d, cfg.hidden, n_classes, derive_seed(seed, "head-init"));
    p.mean.assign(d, 0.0);
    p.inv_std.assign(d, 1.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) p.mean[c] += x_raw.at(r, c);
    for (int c = 0; c < d; ++c) p.mean[c] /= n;
    std::vector<double> var(d, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) {
            double dv = x_raw.at(r, c) - p.mean[c];
            var[c] += dv * dv;
        }
    for (int c = 0; c < d; ++c) p.inv_std[c] = 1.0 / std::sqrt(var[c] / n + 1e-8);
    Tensor x = standardized(p, x_raw);

    ParamGroup group{"head", {}, cfg.lr, cfg.weight_decay};
    group.params = {{"w1", &p.w1}, {"b1", &p.b1}, {"w2", &p.w2}, {"b2", &p.b2}};
    std::vector<ParamGroup> groups{group};
    AdamState state;
    AdamConfig adam{cfg.beta1, cfg.beta2, 1e-8};
    std::int64_t step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(seed, "head-epoch", epoch));
        auto order = rng.permutation(n);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            Tensor bx({count, d});
            std::vector<int> by(count);
            for (int i = 0; i < count; ++i) {
                const int src = order[start + i];
                std::copy(x.data.begin() + static_cast<std::size_t>(src) * d,
                          x.data.begin() + static_cast<std::size_t>(src + 1) * d,
                          bx.data.begin() + static_cast<std::size_t>(i) * d);
                by[i] = y[src];
            }
            Tape tape;
            auto xv = tape.leaf(std::move(bx), false);
            auto w1 = tape.leaf(p.w1, true);
            auto b1 = tape.leaf(p.b1, true);
            auto w2 = tape.leaf(p.w2, true);
            auto b2 = tape.leaf(p.b2, true);
            auto h = tape.gelu(tape.add_rowvec(tape.matmul(xv, w1), b1));
            auto logits = tape.add_rowvec(tape.matmul(h, w2), b2);
            auto loss = tape.mean_all(tape.softmax_ce_rows(logits, by));
            tape.backward(loss);
            std::map<std::string, Tensor> grads;
            grads["w1"] = tape.grad(w1);
            grads["b1"] = tape.grad(b1);
            grads["w2"] = tape.grad(w2);
            grads["b2"] = tape.grad(b2);
            adamw_step_lr(groups, grads, state, ++step, {cfg.lr}, adam);
        }
    }
    return p;
}

// Pairwise features [h_i, h_j, h_i*h_j, |h_i-h_j|] for a list of pairs.
Tensor pair_features(const Tensor& h, const std::vector<std::pair<int, int>>& pairs) {
    const int d = h.cols();
    Tensor out({static_cast<int>(pairs.size()), 4 * d});
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const double* hi = h.data.data() + static_cast<std::size_t>(pairs[r].first) * d;
        const double* hj = h.data.data() + static_cast<std::size_t>(pairs[r].second) * d;
        double* f = out.data.data() + r * 4 * d;
        for (int c = 0; c < d; ++c) {
            f[c] = hi[c];
            f[d + c] = hj[c];
            f[2 * d + c] = hi[c] * hj[c];
            f[3 * d + c] = std::abs(hi[c] - hj[c]);
        }
    }
    return out;
}

std::vector<std::pair<int, int>> eligible_pairs(int length) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < length; ++i)
        for (int j = i + kMinSeparation + 1; j < length; ++j) pairs.emplace_back(i, j);
    return pairs;
}

bool usable(const ProteinRecord& rec, const ModelBundle& bundle, const ProbeConfig& cfg) {
    return rec.length() <= std::min(cfg.length_cutoff, bundle.config.max_len);
}

}  // namespace

void ProbeConfig::validate() const {
    if (epochs < 1 || batch_size < 1 || hidden < 1 || lr <= 0 || weight_decay < 0 ||
        max_train_pairs < 2 || max_train_residues < 2 || length_cutoff < 2)
        throw UsageError("probe config: all settings must be positive");
}

double p_at_l5(const std::vector<double>& scores, const std::vector<std::uint8_t>& is_contact,
               int protein_length) {
    if (scores.empty() || scores.size() != is_contact.size())
        throw DataError("p_at_l5: empty or mismatched scores");
    const int top = std::max(1, protein_length / 5);
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    const int taken = std::min<int>(top, static_cast<int>(order.size()));
    int hits = 0;
    for (int i = 0; i < taken; ++i) hits += is_contact[order[i]] != 0;
    return static_cast<double>(hits) / static_cast<double>(taken);
}

std::vector<double> train_binary_head_scores(const Tensor& train_x,
                                             const std::vector<std::uint8_t>& train_y,
                                             const Tensor& test_x, const ProbeConfig& config,
                                             std::uint64_t seed) {
    std::vector<int> y(train_y.begin(), train_y.end());
    HeadParams p = train_head(train_x, y, 2, config, seed);
    Tensor logits = head_logits(p, test_x);
    std::vector<double> scores(logits.rows());
    for (int r = 0; r < logits.rows(); ++r) scores[r] = logits.at(r, 1) - logits.at(r, 0);
    return scores;
}

std::vector<int> train_multiclass_head_predict(const Tensor& train_x,
                                               const std::vector<int>& train_y, int n_classes,
                                               const Tensor& test_x, const ProbeConfig& config,
                                               std::uint64_t seed) {
    HeadParams p = train_head(train_x, train_y, n_classes, config, seed);
    Tensor logits = head_logits(p, test_x);
    std::vector<int> pred(logits.rows());
    for (int r = 0; r < logits.rows(); ++r) {
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        pred[r] = best;
    }
    return pred;
}

ProbeReport probe_contact(const ModelBundle& bundle, const std::vector<ProteinRecord>& train_records,
                          const std::vector<ProteinRecord>& test_records, const ProbeConfig& config,
                          std::uint64_t seed) {
    config.validate();

    // Collect balanced training pairs from the frozen backbone's embeddings.
    std::vector<std::vector<double>> pos_feat, neg_feat;
    for (const auto& rec : train_records) {
        if (!usable(rec, bundle, config)) continue;
        Tensor h = encode_values(bundle, rec.sequence);
        auto truth = contacts(rec.coords);
        auto pairs = eligible_pairs(rec.length());
        if (pairs.empty()) continue;
        Tensor feats = pair_features(h, pairs);
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            std::vector<double> f(feats.data.begin() + r * feats.cols(),
                                  feats.data.begin() + (r + 1) * feats.cols());
            if (truth.count(pairs[r]))
                pos_feat.push_back(std::move(f));
            else
                neg_feat.push_back(std::move(f));
        }
    }
    if (pos_feat.empty() || neg_feat.empty())
        throw DataError("probe_contact: training records lack contact (or non-contact) pairs");

    Rng rng(derive_seed(seed, "contact-sample"));
    auto pos_order = rng.permutation(static_cast<int>(pos_feat.size()));
    auto neg_order = rng.permutation(static_cast<int>(neg_feat.size()));
    const int n_pos = std::min<int>(static_cast<int>(pos_feat.size()), config.max_train_pairs / 4);
    const int n_neg =
        std::min<int>(static_cast<int>(neg_feat.size()), config.max_train_pairs - n_pos);
    const int dim = static_cast<int>(pos_feat.front().size());
    Tensor x({n_pos + n_neg, dim});
    std::vector<std::uint8_t> y(n_pos + n_neg);
    for (int i = 0; i < n_pos; ++i) {
        std::copy(pos_feat[pos_order[i]].begin(), pos_feat[pos_order[i]].end(),
                  x.data.begin() + static_cast<std::size_t>(i) * dim);
        y[i] = 1;
    }
    for (int i = 0; i < n_neg; ++i) {
        std::copy(neg_feat[neg_order[i]].begin(), neg_feat[neg_order[i]].end(),
                  x.data.begin() + static_cast<std::size_t>(n_pos + i) * dim);
        y[n_pos + i] = 0;
    }
    std::vector<int> yi(y.begin(), y.end());
    HeadParams head = train_head(x, yi, 2, config, derive_seed(seed, "contact-head"));

    ProbeReport report;
    report.task = "contact";
    report.metric = "p_at_l5";
    report.seed = seed;
    for (const auto& rec : test_records) {
        if (!usable(rec, bundle, config)) continue;
        auto pairs = eligible_pairs(rec.length());
        if (pairs.empty()) {
            std::cerr << "warning: probe_contact skipping '" << rec.id << "' (no eligible pair)\n";
            continue;
        }
        Tensor h = encode_values(bundle, rec.sequence);
        Tensor ff = pair_features(h, pairs);
        std::vector<std::pair<int, int>> flipped;
        flipped.reserve(pairs.size());
        for (auto [i, j] : pairs) flipped.emplace_back(j, i);
        Tensor fr = pair_features(h, flipped);
        Tensor lf = head_logits(head, ff);
        Tensor lr_ = head_logits(head, fr);
        std::vector<double> scores(pairs.size());
        for (std::size_t r = 0; r < pairs.size(); ++r)
            scores[r] = 0.5 * ((lf.at(static_cast<int>(r), 1) - lf.at(static_cast<int>(r), 0)) +
                               (lr_.at(static_cast<int>(r), 1) - lr_.at(static_cast<int>(r), 0)));
        auto truth = contacts(rec.coords);
        std::vector<std::uint8_t> labels(pairs.size());
        for (std::size_t r = 0; r < pairs.size(); ++r) labels[r] = truth.count(pairs[r]) ? 1 : 0;
        report.per_protein.push_back(p_at_l5(scores, labels, rec.length()));
    }
    if (report.per_protein.empty()) throw DataError("probe_contact: no usable test protein");
    report.value = std::accumulate(report.per_protein.begin(), report.per_protein.end(), 0.0) /
                   static_cast<double>(report.per_protein.size());
    return report;
}

ProbeReport probe_ss(const ModelBundle& bundle, const std::vector<ProteinRecord>& train_records,
                     const std::vector<ProteinRecord>& test_records, const ProbeConfig& config,
                     std::uint64_t seed) {
    config.validate();
    const int d = bundle.config.d_model;

    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (const auto& rec : train_records) {
        if (!usable(rec, bundle, config)) continue;
        if (!rec.has_ss()) throw DataError("probe_ss: record '" + rec.id + "' has no ss labels");
        Tensor h = encode_values(bundle, rec.sequence);
        for (int i = 0; i < rec.length(); ++i) {
            feats.emplace_back(h.data.begin() + static_cast<std::size_t>(i) * d,
                               h.data.begin() + static_cast<std::size_t>(i + 1) * d);
            labels.push_back(static_cast<int>(rec.ss_labels[i]));
        }
    }
    if (feats.empty()) throw DataError("probe_ss: no usable training residue");

    Rng rng(derive_seed(seed, "ss-sample"));
    auto order = rng.permutation(static_cast<int>(feats.size()));
    const int n = std::min<int>(static_cast<int>(feats.size()), config.max_train_residues);
    Tensor x({n, d});
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        std::copy(feats[order[i]].begin(), feats[order[i]].end(),
                  x.data.begin() + static_cast<std::size_t>(i) * d);
        y[i] = labels[order[i]];
    }
    HeadParams head = train_head(x, y, 3, config, derive_seed(seed, "ss-head"));

    ProbeReport report;
    report.task = "ss";
    report.metric = "accuracy";
    report.seed = seed;
    std::int64_t correct = 0, total = 0;
    for (const auto& rec : test_records) {
        if (!usable(rec, bundle, config)) continue;
        if (!rec.has_ss()) throw DataError("probe_ss: record '" + rec.id + "' has no ss labels");
        Tensor h = encode_values(bundle, rec.sequence);
        Tensor logits = head_logits(head, h);
        int rec_correct = 0;
        for (int i = 0; i < rec.length(); ++i) {
            int best = 0;
            for (int c = 1; c < 3; ++c)
                if (logits.at(i, c) > logits.at(i, best)) best = c;
            rec_correct += best == static_cast<int>(rec.ss_labels[i]);
        }
        report.per_protein.push_back(static_cast<double>(rec_correct) / rec.length());
        correct += rec_correct;
        total += rec.length();
    }
    if (total == 0) throw DataError("probe_ss: no usable test residue");
    report.value = static_cast<double>(correct) / static_cast<double>(total);
    return report;
}

}  // namespace structalign

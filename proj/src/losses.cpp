#include "structalign/losses.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace structalign {

ResidueIndexMap ResidueIndexMap::of(const Batch& batch) {
    ResidueIndexMap map;
    int flat = 0;
    for (std::size_t b = 0; b < batch.entries.size(); ++b) {
        map.record_offset.push_back(flat);
        const int L = batch.entries[b].record.length();
        for (int i = 0; i < L; ++i) map.flat_to_pos.emplace_back(static_cast<int>(b), i);
        flat += L;
    }
    return map;
}

void LossWeights::validate() const {
    if (latent < 0.0 || physical < 0.0)
        throw std::invalid_argument("loss weights must be non-negative");
    if (latent > 0.0 && physical > 0.0 && std::abs(latent + physical - 1.0) > 1e-9)
        throw std::invalid_argument(
            "loss weights: gamma_latent + gamma_physical must equal 1.0 when both tasks are on");
}

std::vector<double> a2g_losses(const Tensor& delta) {
    const int n = delta.rows();
    if (n == 0) throw std::invalid_argument("a2g_losses: empty similarity matrix");
    if (delta.cols() != n) throw std::invalid_argument("a2g_losses: matrix must be square");
    std::vector<int> diag(n);
    std::iota(diag.begin(), diag.end(), 0);
    return softmax_ce_rows_values(delta, diag);
}

std::vector<double> g2a_losses(const Tensor& delta) {
    const int n = delta.rows();
    if (n == 0) throw std::invalid_argument("g2a_losses: empty similarity matrix");
    if (delta.cols() != n) throw std::invalid_argument("g2a_losses: matrix must be square");
    Tensor t({n, n});
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) t.at(r, c) = delta.at(c, r);
    return a2g_losses(t);
}

double latent_loss(double a2g_mean, double g2a_mean) { return 0.5 * (a2g_mean + g2a_mean); }

BatchGraph::BatchGraph(Tape& tape, const ModelBundle& bundle, const Batch& batch, bool with_grad)
    : tape_(tape), batch_(batch), plm_(tape, bundle, with_grad), map_(ResidueIndexMap::of(batch)) {
    if (batch.entries.empty()) throw std::invalid_argument("batch is empty");
}

Tape::Var BatchGraph::hidden() {
    if (hidden_) return *hidden_;
    std::vector<Tape::Var> parts;
    parts.reserve(batch_.entries.size());
    for (const auto& entry : batch_.entries) {
        const auto& ids = entry.masked_ids.empty() ? entry.record.sequence : entry.masked_ids;
        parts.push_back(plm_.encode(ids));
    }
    hidden_ = tape_.concat_rows(parts);
    return *hidden_;
}

Tape::Var BatchGraph::delta() {
    if (delta_) return *delta_;
    const int dg = plm_.bundle().config.d_g;
    Tensor emb({map_.total(), dg});
    int row = 0;
    for (const auto& entry : batch_.entries) {
        if (!entry.record.has_embedding())
            throw std::invalid_argument("similarity: record '" + entry.record.id +
                                        "' has no structure embedding");
        if (entry.record.gnn_embedding.cols() != dg)
            throw std::invalid_argument("similarity: record '" + entry.record.id +
                                        "' embedding width != D_g");
        for (int i = 0; i < entry.record.length(); ++i, ++row)
            for (int c = 0; c < dg; ++c) emb.at(row, c) = entry.record.gnn_embedding.at(i, c);
    }
    Tape::Var a = plm_.project_a(hidden());
    Tape::Var g = plm_.project_g(emb);
    Tape::Var dots = tape_.matmul(a, tape_.transpose(g));
    delta_ = tape_.scale_var(dots, plm_.scale_var());
    return *delta_;
}

Tape::Var BatchGraph::mlm_vec() {
    if (mlm_vec_) return *mlm_vec_;
    std::vector<int> rows;
    std::vector<int> targets;
    for (std::size_t b = 0; b < batch_.entries.size(); ++b) {
        const auto& entry = batch_.entries[b];
        for (int pos : entry.plan.positions) {
            rows.push_back(map_.record_offset[b] + pos);
            targets.push_back(entry.record.sequence[pos]);
        }
    }
    if (rows.empty()) throw std::invalid_argument("mlm_loss: batch has no masked positions");
    Tape::Var sel = tape_.gather_rows(hidden(), rows);
    Tape::Var logits = plm_.mlm_logits(sel);
    mlm_vec_ = tape_.softmax_ce_rows(logits, targets);
    return *mlm_vec_;
}

Tape::Var BatchGraph::mlm_mean() {
    if (!mlm_mean_) mlm_mean_ = tape_.mean_all(mlm_vec());
    return *mlm_mean_;
}

Tape::Var BatchGraph::a2g_vec() {
    if (a2g_) return *a2g_;
    std::vector<int> diag(map_.total());
    std::iota(diag.begin(), diag.end(), 0);
    a2g_ = tape_.softmax_ce_rows(delta(), diag);
    return *a2g_;
}

Tape::Var BatchGraph::g2a_vec() {
    if (g2a_) return *g2a_;
    std::vector<int> diag(map_.total());
    std::iota(diag.begin(), diag.end(), 0);
    g2a_ = tape_.softmax_ce_rows(tape_.transpose(delta()), diag);
    return *g2a_;
}

Tape::Var BatchGraph::physical_vec() {
    if (physical_) return *physical_;
    const int k = plm_.bundle().config.codebook_k;
    std::vector<int> targets;
    targets.reserve(map_.total());
    for (const auto& entry : batch_.entries) {
        if (!entry.record.has_tokens())
            throw std::invalid_argument("physical_losses: record '" + entry.record.id +
                                        "' has no structure tokens");
        for (int t : entry.record.structure_tokens) {
            if (t < 0 || t >= k)
                throw std::invalid_argument("physical_losses: structure token out of range in '" +
                                            entry.record.id + "'");
            targets.push_back(t);
        }
    }
    Tape::Var logits = plm_.struct_logits(hidden());
    physical_ = tape_.softmax_ce_rows(logits, targets);
    return *physical_;
}

Tape::Var BatchGraph::overall(const LossWeights& weights, const SelectionMasks& masks) {
    weights.validate();
    const int n = map_.total();
    auto resolve = [&](const std::vector<std::uint8_t>& m) {
        if (m.empty()) return std::vector<std::uint8_t>(n, 1);
        if (static_cast<int>(m.size()) != n)
            throw std::invalid_argument("overall: selection mask length != N");
        return m;
    };

    std::vector<std::pair<double, Tape::Var>> terms;
    terms.emplace_back(1.0, mlm_mean());
    if (weights.latent > 0.0) {
        terms.emplace_back(0.5 * weights.latent, tape_.masked_mean(a2g_vec(), resolve(masks.a2g)));
        terms.emplace_back(0.5 * weights.latent, tape_.masked_mean(g2a_vec(), resolve(masks.g2a)));
    }
    if (weights.physical > 0.0)
        terms.emplace_back(weights.physical,
                           tape_.masked_mean(physical_vec(), resolve(masks.physical)));
    return tape_.weighted_sum_scalars(terms);
}

ResidueLossSet BatchGraph::residue_losses() {
    ResidueLossSet set;
    set.map = map_;
    set.a2g = tape_.val(a2g_vec()).data;
    set.g2a = tape_.val(g2a_vec()).data;
    set.physical = tape_.val(physical_vec()).data;
    return set;
}

std::pair<double, std::vector<double>> mlm_loss(const ModelBundle& bundle, const Batch& batch) {
    Tape tape;
    BatchGraph g(tape, bundle, batch, false);
    std::vector<double> per = tape.val(g.mlm_vec()).data;
    return {tape.val(g.mlm_mean()).item(), std::move(per)};
}

Tensor similarity_matrix(const ModelBundle& bundle, const Batch& batch) {
    Tape tape;
    BatchGraph g(tape, bundle, batch, false);
    return tape.val(g.delta());
}

std::vector<double> physical_losses(const ModelBundle& bundle, const Batch& batch) {
    Tape tape;
    BatchGraph g(tape, bundle, batch, false);
    return tape.val(g.physical_vec()).data;
}

std::pair<double, ResidueLossSet> overall_loss(const ModelBundle& bundle, const Batch& batch,
                                               const LossWeights& weights,
                                               const SelectionMasks& masks) {
    Tape tape;
    BatchGraph g(tape, bundle, batch, false);
    double value = tape.val(g.overall(weights, masks)).item();
    return {value, g.residue_losses()};
}

}  // namespace structalign

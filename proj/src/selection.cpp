#include "structalign/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace structalign {

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Excess: return "excess";
        case StrategyKind::LossLarge: return "loss-large";
        case StrategyKind::LossSmall: return "loss-small";
        case StrategyKind::Full: return "full";
    }
    throw std::logic_error("bad strategy kind");
}

StrategyKind strategy_from_name(const std::string& name) {
    if (name == "excess") return StrategyKind::Excess;
    if (name == "loss-large") return StrategyKind::LossLarge;
    if (name == "loss-small") return StrategyKind::LossSmall;
    if (name == "full") return StrategyKind::Full;
    throw std::invalid_argument("unknown selection strategy '" + name + "'");
}

void SelectionStrategy::validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("selection: rho must be in (0,1]");
    if (kind == StrategyKind::Full && rho != 1.0)
        throw std::invalid_argument("selection: full strategy implies rho = 1");
}

ExcessLossSet excess_losses(const ResidueLossSet& current, const ResidueLossSet& reference) {
    if (current.a2g.size() != reference.a2g.size() || current.g2a.size() != reference.g2a.size() ||
        current.physical.size() != reference.physical.size())
        throw std::invalid_argument("excess_losses: residue loss sets have different lengths");
    ExcessLossSet out;
    auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        return d;
    };
    out.a2g = diff(current.a2g, reference.a2g);
    out.g2a = diff(current.g2a, reference.g2a);
    out.physical = diff(current.physical, reference.physical);
    return out;
}

std::vector<std::uint8_t> select(const std::vector<double>& values,
                                 const SelectionStrategy& strategy) {
    strategy.validate();
    const int n = static_cast<int>(values.size());
    if (n < 1) throw std::invalid_argument("select: empty values");
    if (strategy.kind == StrategyKind::Full) return std::vector<std::uint8_t>(n, 1);

    const int keep = std::max<int>(1, static_cast<int>(std::floor(n * strategy.rho)));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const bool descending = strategy.kind != StrategyKind::LossSmall;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return descending ? values[a] > values[b] : values[a] < values[b];
        return a < b;   // ties toward the lower flat index
    });
    std::vector<std::uint8_t> mask(n, 0);
    for (int i = 0; i < keep; ++i) mask[order[i]] = 1;
    return mask;
}

ResidueLossSet reference_losses(const ModelBundle& reference, const Batch& batch) {
    const auto& cfg = reference.config;
    for (const auto& entry : batch.entries) {
        if (entry.record.has_embedding() && entry.record.gnn_embedding.cols() != cfg.d_g)
            throw std::invalid_argument("reference_losses: D_g mismatch for record '" +
                                        entry.record.id + "'");
        for (int t : entry.record.structure_tokens)
            if (t >= cfg.codebook_k)
                throw std::invalid_argument("reference_losses: K mismatch for record '" +
                                            entry.record.id + "'");
    }
    Tape tape;
    BatchGraph g(tape, reference, batch, false);
    return g.residue_losses();
}

SelectionMasks build_selection_masks(const ResidueLossSet& current, const ResidueLossSet* reference,
                                     const SelectionStrategy& strategy) {
    strategy.validate();
    SelectionMasks masks;
    if (strategy.kind == StrategyKind::Full) return masks;   // empty = all residues
    if (strategy.kind == StrategyKind::Excess) {
        if (!reference)
            throw std::invalid_argument("selection: excess strategy requires a reference model");
        ExcessLossSet ex = excess_losses(current, *reference);
        masks.a2g = select(ex.a2g, strategy);
        masks.g2a = select(ex.g2a, strategy);
        masks.physical = select(ex.physical, strategy);
    } else {
        masks.a2g = select(current.a2g, strategy);
        masks.g2a = select(current.g2a, strategy);
        masks.physical = select(current.physical, strategy);
    }
    return masks;
}

}  // namespace structalign

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "structalign/losses.hpp"

namespace structalign {

enum class StrategyKind : std::uint8_t { Excess = 0, LossLarge = 1, LossSmall = 2, Full = 3 };

std::string strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

struct SelectionStrategy {
    StrategyKind kind = StrategyKind::Excess;
    double rho = 0.8;

    void validate() const;   // rho in (0,1]; full implies rho == 1
};

struct ExcessLossSet {
    std::vector<double> a2g;
    std::vector<double> g2a;
    std::vector<double> physical;
};

// Elementwise current - reference, per family.
ExcessLossSet excess_losses(const ResidueLossSet& current, const ResidueLossSet& reference);

// Boolean mask selecting max(1, floor(N*rho)) entries. excess/loss-large
// take the largest values, loss-small the smallest, full everything; ties
// break toward the lower flat index.
std::vector<std::uint8_t> select(const std::vector<double>& values,
                                 const SelectionStrategy& strategy);

// Per-residue losses of a frozen reference bundle on the identical batch
// (same masking plan, same similarity construction). Errors when the
// reference disagrees with the batch on K or D_g.
ResidueLossSet reference_losses(const ModelBundle& reference, const Batch& batch);

// Convenience: masks for all three families given a strategy. The reference
// set is required exactly for the excess strategy.
SelectionMasks build_selection_masks(const ResidueLossSet& current, const ResidueLossSet* reference,
                                     const SelectionStrategy& strategy);

}  // namespace structalign

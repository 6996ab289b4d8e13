#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "structalign/tensor.hpp"

namespace structalign {

// Named parameters grouped by peak learning rate, mirroring the two-rate
// training protocol: "backbone" for the encoder, "heads" for everything else.
struct ParamGroup {
    std::string name;
    std::vector<std::pair<std::string, Tensor*>> params;
    double peak_lr = 1e-3;
    double weight_decay = 0.01;
};

struct Schedule {
    std::int64_t warmup_steps = 0;
    std::int64_t total_steps = 0;

    void validate() const;
};

// Linear warmup from 0 to peak over warmup_steps, then cosine decay to 0 at
// total_steps. Steps past the end clamp to 0 (with a one-time warning).
double lr_at(std::int64_t step, const Schedule& schedule, double peak_lr);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
};

struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
};

// One decoupled-weight-decay Adam step over all groups; lr per group comes
// from the schedule. grads is keyed by parameter name; missing keys are an
// error, shape mismatches are an error.
void adamw_step(std::vector<ParamGroup>& groups, const std::map<std::string, Tensor>& grads,
                AdamState& state, std::int64_t step, const Schedule& schedule,
                const AdamConfig& cfg = {});

// Same update with one explicit learning rate per group (no schedule).
void adamw_step_lr(std::vector<ParamGroup>& groups, const std::map<std::string, Tensor>& grads,
                   AdamState& state, std::int64_t step, const std::vector<double>& lrs,
                   const AdamConfig& cfg = {});

// Loss callback: returns the loss for the current parameter values; when
// grads != nullptr it must also fill analytic gradients keyed by name.
using LossFn = std::function<double(std::map<std::string, Tensor>* grads)>;

// Compares analytic gradients against central finite differences on a seeded
// sample of at most max_coords coordinates per tensor. Returns
// max |analytic - fd| / max(1, |fd|) over the sampled coordinates.
double grad_check(const LossFn& loss_fn, std::vector<ParamGroup>& params, double epsilon,
                  std::uint64_t seed, int max_coords_per_tensor = 64);

}  // namespace structalign

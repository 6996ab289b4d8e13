#include "structalign/optim.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "structalign/rng.hpp"

namespace structalign {

void Schedule::validate() const {
    if (!(warmup_steps > 0 && warmup_steps < total_steps))
        throw std::invalid_argument("schedule: requires 0 < warmup_steps < total_steps");
}

double lr_at(std::int64_t step, const Schedule& schedule, double peak_lr) {
    schedule.validate();
    if (step < 0) throw std::invalid_argument("lr_at: negative step");
    if (step > schedule.total_steps) {
        std::cerr << "warning: lr_at called with step " << step << " past total_steps "
                  << schedule.total_steps << ", clamping to 0\n";
        return 0.0;
    }
    if (step <= schedule.warmup_steps)
        return peak_lr * static_cast<double>(step) / static_cast<double>(schedule.warmup_steps);
    const double span = static_cast<double>(schedule.total_steps - schedule.warmup_steps);
    const double frac = static_cast<double>(step - schedule.warmup_steps) / span;
    return peak_lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

void adamw_step(std::vector<ParamGroup>& groups, const std::map<std::string, Tensor>& grads,
                AdamState& state, std::int64_t step, const Schedule& schedule,
                const AdamConfig& cfg) {
    std::vector<double> lrs;
    lrs.reserve(groups.size());
    for (const auto& group : groups) lrs.push_back(lr_at(step, schedule, group.peak_lr));
    adamw_step_lr(groups, grads, state, step, lrs, cfg);
}

void adamw_step_lr(std::vector<ParamGroup>& groups, const std::map<std::string, Tensor>& grads,
                   AdamState& state, std::int64_t step, const std::vector<double>& lrs,
                   const AdamConfig& cfg) {
    if (step < 1) throw std::invalid_argument("adamw_step: step must be >= 1");
    if (lrs.size() != groups.size())
        throw std::invalid_argument("adamw_step: one learning rate per group required");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& group = groups[gi];
        const double lr = lrs[gi];
        for (auto& [name, param] : group.params) {
            auto it = grads.find(name);
            if (it == grads.end()) throw std::invalid_argument("adamw_step: missing grad for " + name);
            const Tensor& g = it->second;
            if (!g.same_shape(*param))
                throw std::invalid_argument("adamw_step: grad shape mismatch for " + name);
            Tensor& m = state.m.try_emplace(name, Tensor(param->shape)).first->second;
            Tensor& v = state.v.try_emplace(name, Tensor(param->shape)).first->second;
            if (!m.same_shape(*param) || !v.same_shape(*param))
                throw std::invalid_argument("adamw_step: state shape mismatch for " + name);
            for (std::int64_t i = 0; i < param->size(); ++i) {
                double gi = g.data[i];
                m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
                v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
                double mhat = m.data[i] / bc1;
                double vhat = v.data[i] / bc2;
                param->data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) +
                                        group.weight_decay * param->data[i]);
            }
        }
    }
}

double grad_check(const LossFn& loss_fn, std::vector<ParamGroup>& params, double epsilon,
                  std::uint64_t seed, int max_coords_per_tensor) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
        throw std::invalid_argument("grad_check: epsilon outside [1e-7, 1e-3]");
    std::map<std::string, Tensor> analytic;
    double base = loss_fn(&analytic);
    if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss at base point");

    double max_rel_err = 0.0;
    for (auto& group : params) {
        for (auto& [name, param] : group.params) {
            auto it = analytic.find(name);
            if (it == analytic.end())
                throw std::runtime_error("grad_check: loss_fn produced no gradient for " + name);
            const Tensor& ag = it->second;
            if (!ag.same_shape(*param))
                throw std::runtime_error("grad_check: analytic grad shape mismatch for " + name);

            const std::int64_t n = param->size();
            Rng rng(derive_seed(seed, name));
            std::vector<std::int64_t> coords;
            if (n <= max_coords_per_tensor) {
                for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
            } else {
                for (int i = 0; i < max_coords_per_tensor; ++i)
                    coords.push_back(static_cast<std::int64_t>(
                        rng.uniform_int(0, static_cast<int>(n - 1))));
            }
            for (std::int64_t c : coords) {
                const double orig = param->data[c];
                param->data[c] = orig + epsilon;
                double plus = loss_fn(nullptr);
                param->data[c] = orig - epsilon;
                double minus = loss_fn(nullptr);
                param->data[c] = orig;
                if (!std::isfinite(plus) || !std::isfinite(minus))
                    throw std::runtime_error("grad_check: non-finite loss probing " + name + "[" +
                                             std::to_string(c) + "]");
                double fd = (plus - minus) / (2.0 * epsilon);
                double rel = std::abs(ag.data[c] - fd) / std::max(1.0, std::abs(fd));
                max_rel_err = std::max(max_rel_err, rel);
            }
        }
    }
    return max_rel_err;
}

}  // namespace structalign

#include <doctest.h>

#include <cmath>

#include "structalign/optim.hpp"

using namespace structalign;

namespace {

std::vector<ParamGroup> one_group(Tensor& param, double peak_lr, double wd) {
    ParamGroup g{"g", {{"p", &param}}, peak_lr, wd};
    return {g};
}

}  // namespace

TEST_CASE("adamw with zero gradient and zero decay is a fixed point") {
    Tensor p({3}, {0.5, -1.0, 2.0});
    auto groups = one_group(p, 0.1, 0.0);
    AdamState state;
    Schedule sched{1, 10};
    std::map<std::string, Tensor> grads{{"p", Tensor({3})}};
    adamw_step(groups, grads, state, 1, sched);
    CHECK(p.data == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("adamw single step from zero moments matches the hand-executed update") {
    Tensor p({1}, {1.0});
    auto groups = one_group(p, 0.1, 0.0);
    AdamState state;
    Schedule sched{1, 10};   // step 1 is the warmup peak: lr = 0.1
    const double g = 0.5;
    std::map<std::string, Tensor> grads{{"p", Tensor({1}, {g})}};
    AdamConfig cfg;   // betas (0.9, 0.95), eps 1e-8
    adamw_step(groups, grads, state, 1, sched, cfg);
    // hand-executed: m=(1-b1)g, v=(1-b2)g^2, mhat=g, vhat=g^2
    const double mhat = g;
    const double vhat = g * g;
    const double expected = 1.0 - 0.1 * (mhat / (std::sqrt(vhat) + cfg.eps));
    CHECK(p.data[0] == doctest::Approx(expected).epsilon(1e-15));
    // -lr * sign(g) behavior
    CHECK(p.data[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
}

TEST_CASE("adamw weight decay alone shrinks by (1 - lr*wd)") {
    Tensor p({2}, {4.0, -2.0});
    auto groups = one_group(p, 0.1, 0.01);
    AdamState state;
    Schedule sched{1, 10};
    std::map<std::string, Tensor> grads{{"p", Tensor({2})}};
    adamw_step(groups, grads, state, 1, sched);
    CHECK(p.data[0] == doctest::Approx(4.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-15));
    CHECK(p.data[1] == doctest::Approx(-2.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-15));
}

TEST_CASE("adamw rejects shape mismatches and missing grads") {
    Tensor p({2}, {1.0, 2.0});
    auto groups = one_group(p, 0.1, 0.0);
    AdamState state;
    Schedule sched{1, 10};
    std::map<std::string, Tensor> bad{{"p", Tensor({3})}};
    CHECK_THROWS(adamw_step(groups, bad, state, 1, sched));
    std::map<std::string, Tensor> missing;
    CHECK_THROWS(adamw_step(groups, missing, state, 1, sched));
}

TEST_CASE("learning rate schedule follows warmup then cosine") {
    Schedule sched{10, 30};
    const double peak = 1e-4;
    CHECK(lr_at(0, sched, peak) == 0.0);
    CHECK(lr_at(10, sched, peak) == doctest::Approx(peak).epsilon(1e-15));
    // midpoint of the decay span
    CHECK(lr_at(20, sched, peak) == doctest::Approx(peak / 2).epsilon(1e-12));
    CHECK(lr_at(30, sched, peak) == doctest::Approx(0.0));
    // clamp past the end
    CHECK(lr_at(31, sched, peak) == 0.0);
    // continuity at the warmup boundary and non-negativity everywhere
    CHECK(lr_at(9, sched, peak) == doctest::Approx(peak * 0.9).epsilon(1e-12));
    double cosine_at_boundary = peak * 0.5 * (1.0 + std::cos(0.0));
    CHECK(lr_at(10, sched, peak) == doctest::Approx(cosine_at_boundary).epsilon(1e-15));
    for (int s = 0; s <= 30; ++s) CHECK(lr_at(s, sched, peak) >= 0.0);
}

TEST_CASE("schedule validation") {
    CHECK_THROWS(Schedule{0, 10}.validate());
    CHECK_THROWS(Schedule{10, 10}.validate());
    CHECK_NOTHROW(Schedule{1, 2}.validate());
}

TEST_CASE("grad_check validates epsilon and reports non-finite losses") {
    Tensor p({1}, {1.0});
    auto groups = one_group(p, 0.1, 0.0);
    LossFn ok = [&](std::map<std::string, Tensor>* grads) {
        if (grads) (*grads)["p"] = Tensor({1}, {2.0 * p.data[0]});
        return p.data[0] * p.data[0];
    };
    CHECK_THROWS(grad_check(ok, groups, 1e-2, 0));
    LossFn bad = [&](std::map<std::string, Tensor>* grads) {
        if (grads) (*grads)["p"] = Tensor({1}, {0.0});
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS(grad_check(bad, groups, 1e-5, 0));
}

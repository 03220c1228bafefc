#include "nvi/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace nvi {

ArchitecturePlan plan_architecture_besov(long long T, int d, double alpha,
                                         const BesovPlanOptions& opt) {
    if (T < 2) throw std::invalid_argument("plan_architecture_besov: T must be >= 2");
    if (d < 1) throw std::invalid_argument("plan_architecture_besov: d must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("plan_architecture_besov: alpha must be > 0");

    const double eta = d * std::max(1.0 / opt.p - 0.25, 0.0);
    if (!(alpha > eta))
        throw std::invalid_argument(
            "plan_architecture_besov: smoothness condition alpha > d*(1/p - 1/4)_+ violated");

    const double ratio = static_cast<double>(d) / (2.0 * alpha + d);
    const double logT = std::log(static_cast<double>(T));
    const double Tpow = std::pow(static_cast<double>(T), ratio);

    ArchitecturePlan plan;
    plan.family = Family::besov_deep;
    plan.capacity = static_cast<long long>(std::max(1.0, std::ceil(opt.c * Tpow * logT * logT * logT)));
    plan.depth = static_cast<int>(std::max(1.0, std::ceil(opt.c * ratio * logT)));
    plan.width = static_cast<int>(std::max(1.0, std::ceil(opt.c * ratio * Tpow * logT)));
    plan.sparsity = static_cast<int>(std::min<long long>(plan.capacity, 1LL << 30));

    const double cap = opt.b_cap > 0.0 ? opt.b_cap : 10.0 * opt.h_cap * std::sqrt(static_cast<double>(d));
    if (eta > 0.0) {
        const double nu = (alpha - eta) / (2.0 * eta);
        plan.norm_bound = std::ceil(std::pow(static_cast<double>(plan.capacity), 1.0 / nu + 1.0 / d));
        if (!std::isfinite(plan.norm_bound) || plan.norm_bound > cap) plan.norm_bound = cap;
    } else {
        plan.norm_bound = cap;
    }
    plan.norm_bound = std::max(plan.norm_bound, 1.0);
    return plan;
}

ArchitecturePlan plan_architecture_barron(long long T, double c, double norm_bound) {
    if (T < 1) throw std::invalid_argument("plan_architecture_barron: T must be >= 1");
    ArchitecturePlan plan;
    plan.family = Family::barron_shallow;
    plan.width = static_cast<int>(std::max(1.0, std::ceil(c * std::sqrt(static_cast<double>(T)))));
    plan.depth = 2;
    plan.sparsity = 0;
    plan.norm_bound = norm_bound > 0.0 ? norm_bound : 1.0;
    plan.capacity = plan.width;
    return plan;
}

}  // namespace nvi

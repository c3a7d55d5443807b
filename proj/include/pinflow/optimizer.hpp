#pragma once

#include <cmath>
#include <map>
#include <string>

#include "pinflow/ad.hpp"

namespace pinflow {

struct AdamWConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// AdamW with decoupled weight decay: the decay shrink happens before the
/// bias-corrected adaptive update. Moments persist per parameter name.
template <typename T>
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }
    const AdamWConfig& config() const { return cfg_; }

    void step(ad::Param<T>& p) {
        if (!p.trainable) return;
        for (Eigen::Index i = 0; i < p.grad.size(); ++i)
            if (!std::isfinite(static_cast<double>(p.grad.data()[i])))
                throw TrainError("NonFiniteGradient", "non-finite gradient in " + p.name);

        Slot& s = slots_[p.name];
        if (s.t == 0) {
            s.m = ad::Mat<T>::Zero(p.value.rows(), p.value.cols());
            s.v = ad::Mat<T>::Zero(p.value.rows(), p.value.cols());
        }
        ++s.t;

        if (cfg_.weight_decay != 0.0)
            p.value -= static_cast<T>(cfg_.lr * cfg_.weight_decay) * p.value;

        s.m = static_cast<T>(cfg_.beta1) * s.m + static_cast<T>(1.0 - cfg_.beta1) * p.grad;
        s.v = static_cast<T>(cfg_.beta2) * s.v +
              static_cast<T>(1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad).eval();
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t));
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            const double mhat = static_cast<double>(s.m.data()[i]) / bc1;
            const double vhat = static_cast<double>(s.v.data()[i]) / bc2;
            p.value.data()[i] -= static_cast<T>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }

private:
    struct Slot {
        ad::Mat<T> m, v;
        long t = 0;
    };

    AdamWConfig cfg_;
    std::map<std::string, Slot> slots_;
};

}  // namespace pinflow

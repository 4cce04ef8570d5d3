#pragma once

#include "hiergnn/layers.hpp"

#include <cstddef>
#include <vector>

namespace hiergnn {

struct AdamOptions {
    double lr_base = 0.001;
    double lr_logits = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with one learning rate per parameter group. Parameters listed in
/// `frozen` are never updated.
class Adam {
public:
    Adam(ParameterSet& params, const AdamOptions& options, std::vector<std::string> frozen = {});

    /// Applies one update from the gradients currently held by the parameters.
    void step();
    void scale_learning_rates(double factor);
    std::size_t steps_taken() const { return t_; }
    const AdamOptions& options() const { return options_; }

private:
    struct Slot {
        NamedParameter* param;
        ag::Matrix m;
        ag::Matrix v;
        double lr;
    };
    AdamOptions options_;
    std::vector<Slot> slots_;
    std::size_t t_ = 0;
};

}  // namespace hiergnn

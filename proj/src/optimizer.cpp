#include "hiergnn/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace hiergnn {

Adam::Adam(ParameterSet& params, const AdamOptions& options, std::vector<std::string> frozen) : options_(options) {
    for (auto& p : params.all()) {
        if (std::find(frozen.begin(), frozen.end(), p.name) != frozen.end()) continue;
        const double lr = p.group == ParamGroup::AssignmentLogits ? options.lr_logits : options.lr_base;
        slots_.push_back({&p, ag::Matrix::Zero(p.var.rows(), p.var.cols()),
                          ag::Matrix::Zero(p.var.rows(), p.var.cols()), lr});
    }
}

void Adam::scale_learning_rates(double factor) {
    for (auto& slot : slots_) slot.lr *= factor;
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(options_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, double(t_));
    for (auto& slot : slots_) {
        if (!slot.param->var.has_grad() || slot.lr == 0.0) continue;
        const ag::Matrix g = slot.param->var.grad();
        slot.m = options_.beta1 * slot.m + (1.0 - options_.beta1) * g;
        slot.v = options_.beta2 * slot.v + (1.0 - options_.beta2) * g.cwiseProduct(g);
        const double step = slot.lr / c1;
        slot.param->var.mutable_value().array() -=
            step * slot.m.array() / ((slot.v.array() / c2).sqrt() + options_.epsilon);
    }
}

}  // namespace hiergnn

#include "channel_util.hpp"

#include <cmath>
#include <string>

namespace qmon::detail {

ChannelData prepare(const OpenSystemModel& model, const char* what, bool apply_phase) {
    model.validate();
    if (model.channels.empty()) throw ModelError(std::string(what) + ": model has no monitored channel");
    ChannelData d;
    d.H = model.H;
    for (const auto& ch : model.channels) {
        if (model.bath.beta != cplx{} && ch.rate != 0.0) {
            d.H += coherent_drive_hamiltonian(ch.op, ch.rate, model.bath.beta);
        }
    }
    const Channel& mon = model.channels.front();
    d.kappa = mon.rate;
    d.c = apply_phase ? Operator(std::exp(kI * model.theta) * mon.op) : mon.op;
    d.cd = d.c.adjoint();
    d.cdc = d.cd * d.c;
    d.eta = model.eta;
    d.unmonitored.assign(model.channels.begin() + 1, model.channels.end());
    d.unmonitored_decay = Operator::Zero(model.dim(), model.dim());
    for (const auto& ch : d.unmonitored) d.unmonitored_decay += ch.rate * ch.op.adjoint() * ch.op;
    return d;
}

Operator unmonitored_rhs(const ChannelData& d, const DensityMatrix& rho) {
    Operator out = Operator::Zero(rho.rows(), rho.cols());
    for (const auto& ch : d.unmonitored) {
        if (ch.rate != 0.0) out += ch.rate * dissipator(ch.op, rho);
    }
    return out;
}

Operator unmonitored_feed(const ChannelData& d, const DensityMatrix& rho) {
    Operator out = Operator::Zero(rho.rows(), rho.cols());
    for (const auto& ch : d.unmonitored) {
        if (ch.rate != 0.0) out += ch.rate * ch.op * rho * ch.op.adjoint();
    }
    return out;
}

DensityMatrix normalized(const DensityMatrix& rho, const char* what) {
    const double tr = rho.trace().real();
    const double scale = rho.cwiseAbs().maxCoeff();
    if (!(scale < 1e8)) {
        throw StepError(std::string(what) + ": state diverged (max entry " + std::to_string(scale) +
                        "); reduce dt or use the kraus scheme");
    }
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw StepError(std::string(what) + ": state trace collapsed to " + std::to_string(tr));
    }
    DensityMatrix out = rho / tr;
    // exact Hermitian projection keeps round-off from accumulating
    return 0.5 * (out + out.adjoint());
}

}  // namespace qmon::detail

#pragma once

#include <vector>

#include "qmon/master_equation.hpp"

namespace qmon::detail {

// Everything a trajectory stepper needs from a model, computed once.
struct ChannelData {
    Operator H;      // system Hamiltonian plus coherent drive of every channel
    double kappa = 0.0;
    Operator c;      // monitored operator, phase already applied
    Operator cd;
    Operator cdc;
    std::vector<Channel> unmonitored;
    Operator unmonitored_decay;  // sum_j k_j c_j^dag c_j
    double eta = 1.0;
};

ChannelData prepare(const OpenSystemModel& model, const char* what, bool apply_phase);

// sum_j k_j D[c_j] rho over the unmonitored channels
Operator unmonitored_rhs(const ChannelData& d, const DensityMatrix& rho);
// sum_j k_j c_j rho c_j^dag
Operator unmonitored_feed(const ChannelData& d, const DensityMatrix& rho);

inline Operator comm_h(const Operator& h, const DensityMatrix& rho) { return h * rho - rho * h; }

DensityMatrix normalized(const DensityMatrix& rho, const char* what);

}  // namespace qmon::detail

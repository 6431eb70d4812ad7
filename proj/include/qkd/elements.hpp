#pragma once

#include <cmath>
#include <utility>

#include "qkd/hilbert.hpp"

namespace qkd {

// Q-plate parameters: electrically tuned retardation delta, half-integer
// topological charge q, initial optical-axis angle alpha0 (radians).
struct QPlateParams {
    double delta = M_PI;
    double q = 0.5;
    double alpha0 = 0.0;
};

struct WaveplateParams {
    double retardance;  // pi for HWP, pi/2 for QWP
    double axis_angle;  // fast-axis orientation, radians
};

struct NoiseParams {
    // Depolarizing knob for the transmission channel, calibrated so that the
    // basis-averaged QBER equals depolarizing_p / 4.
    double depolarizing_p = 0.0;
};

// Two-dimensional subspace the depolarizer (and analysis) acts on.
enum class AnalysisSubspace {
    Logical,         // span{|L,-1>, |R,+1>}
    PolarizationL0,  // span{|R,0>, |L,0>}
};

std::pair<SpinOrbitMode, SpinOrbitMode> subspace_modes(AnalysisSubspace ss);

// Q-plate transformation:
//   |R,m> -> cos(d/2)|R,m> + i e^{-2i a0} sin(d/2) |L, m-2q>
//   |L,m> -> cos(d/2)|L,m> + i e^{+2i a0} sin(d/2) |R, m+2q>
// Source modes whose converted image falls outside the truncation are
// recorded as leaking columns; applying the operator to a state populating
// them raises a norm-violation error.
LinearOperator qplate_operator(const QPlateParams& params, int l_max = kDefaultLMax);

// Frame rotation about the propagation axis: diagonal phase e^{i(sigma+l)theta}
// with sigma(R) = -1, sigma(L) = +1. |R,+1> and |L,-1> are exactly invariant;
// linear polarization at l = 0 rotates as a physical polarization vector.
LinearOperator rotation_operator(double theta, int l_max = kDefaultLMax);

// Retarder acting on polarization, identity on OAM. Jones matrix
// R(xi) diag(1, e^{i phi}) R(-xi) expressed in the circular basis.
LinearOperator waveplate_operator(const WaveplateParams& params, int l_max = kDefaultLMax);

// Projections onto H-polarized (transmitted) and V-polarized (reflected)
// components across all OAM values. Outputs are unnormalized.
std::pair<SpinOrbitState, SpinOrbitState> pbs_split(const SpinOrbitState& state);

// (1-p) rho + p * (maximally mixed on the subspace, weighted by the state's
// support there). Support outside the subspace is kept untouched; coherences
// between inside and outside are discarded.
DensityMatrix depolarize(const DensityMatrix& rho, double p, AnalysisSubspace ss);

// Auto-detecting overload: picks the occupied subspace (logical or l = 0
// polarization) from the state's support.
DensityMatrix depolarize(const DensityMatrix& rho, double p);

} // namespace qkd

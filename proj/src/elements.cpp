#include "qkd/elements.hpp"

#include <cmath>

namespace qkd {

namespace {
constexpr Complex kI{0.0, 1.0};
} // namespace

std::pair<SpinOrbitMode, SpinOrbitMode> subspace_modes(AnalysisSubspace ss) {
    if (ss == AnalysisSubspace::Logical)
        return {SpinOrbitMode{Sam::L, -1}, SpinOrbitMode{Sam::R, +1}};
    return {SpinOrbitMode{Sam::R, 0}, SpinOrbitMode{Sam::L, 0}};
}

LinearOperator qplate_operator(const QPlateParams& params, int l_max) {
    if (!std::isfinite(params.delta) || !std::isfinite(params.alpha0))
        throw std::invalid_argument("q-plate parameters must be finite");
    const double two_q = 2.0 * params.q;
    if (std::abs(two_q - std::round(two_q)) > 1e-12)
        throw std::invalid_argument("q-plate charge must be a half-integer");
    const int shift = static_cast<int>(std::round(two_q));

    const int dim = hilbert_dim(l_max);
    const Complex c = std::cos(params.delta / 2.0);
    const Complex s = std::sin(params.delta / 2.0);
    const Complex phase_rl = kI * std::exp(-2.0 * kI * params.alpha0) * s;  // R -> L
    const Complex phase_lr = kI * std::exp(+2.0 * kI * params.alpha0) * s;  // L -> R

    Matrix m = Matrix::Zero(dim, dim);
    std::vector<int> leaks;
    for (int l = -l_max; l <= l_max; ++l) {
        const int r_col = mode_index({Sam::R, l}, l_max);
        const int l_col = mode_index({Sam::L, l}, l_max);
        m(r_col, r_col) = c;
        m(l_col, l_col) = c;
        if (std::abs(l - shift) <= l_max)
            m(mode_index({Sam::L, l - shift}, l_max), r_col) = phase_rl;
        else if (std::abs(s) > 1e-15)
            leaks.push_back(r_col);
        if (std::abs(l + shift) <= l_max)
            m(mode_index({Sam::R, l + shift}, l_max), l_col) = phase_lr;
        else if (std::abs(s) > 1e-15)
            leaks.push_back(l_col);
    }
    return LinearOperator(std::move(m), l_max, true, std::move(leaks));
}

LinearOperator rotation_operator(double theta, int l_max) {
    const int dim = hilbert_dim(l_max);
    Matrix m = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const SpinOrbitMode mode = mode_from_index(i, l_max);
        const int sigma = (mode.sam == Sam::R) ? -1 : +1;
        m(i, i) = std::exp(kI * (static_cast<double>(sigma + mode.oam) * theta));
    }
    return LinearOperator(std::move(m), l_max, true);
}

LinearOperator waveplate_operator(const WaveplateParams& params, int l_max) {
    if (!std::isfinite(params.retardance) || !std::isfinite(params.axis_angle))
        throw std::invalid_argument("waveplate parameters must be finite");

    // Jones matrix in the H/V basis.
    const double xi = params.axis_angle;
    const Complex e = std::exp(kI * params.retardance);
    Eigen::Matrix2cd jones_hv;
    const double cx = std::cos(xi), sx = std::sin(xi);
    Eigen::Matrix2d rot;
    rot << cx, -sx, sx, cx;
    Eigen::Matrix2cd ret = Eigen::Matrix2cd::Zero();
    ret(0, 0) = 1.0;
    ret(1, 1) = e;
    jones_hv = rot.cast<Complex>() * ret * rot.transpose().cast<Complex>();

    // Change to the circular basis: columns of C are |R>, |L> in H/V coords.
    Eigen::Matrix2cd basis;
    basis << Complex(1, 0), Complex(1, 0), Complex(0, -1), Complex(0, 1);
    basis *= 1.0 / std::sqrt(2.0);
    const Eigen::Matrix2cd jones_circ = basis.adjoint() * jones_hv * basis;

    const int dim = hilbert_dim(l_max);
    Matrix m = Matrix::Zero(dim, dim);
    for (int l = -l_max; l <= l_max; ++l) {
        const int r = mode_index({Sam::R, l}, l_max);
        const int ll = mode_index({Sam::L, l}, l_max);
        m(r, r) = jones_circ(0, 0);
        m(r, ll) = jones_circ(0, 1);
        m(ll, r) = jones_circ(1, 0);
        m(ll, ll) = jones_circ(1, 1);
    }
    return LinearOperator(std::move(m), l_max, true);
}

std::pair<SpinOrbitState, SpinOrbitState> pbs_split(const SpinOrbitState& state) {
    const int l_max = state.l_max();
    const int dim = state.dim();
    Matrix p_h = Matrix::Zero(dim, dim);
    for (int l = -l_max; l <= l_max; ++l) {
        const SpinOrbitState h = SpinOrbitState::polarization(Pol::H, l, l_max);
        p_h += h.amplitudes() * h.amplitudes().adjoint();
    }
    const Vector transmitted = p_h * state.amplitudes();
    const Vector reflected = state.amplitudes() - transmitted;
    return {SpinOrbitState(transmitted, l_max), SpinOrbitState(reflected, l_max)};
}

DensityMatrix depolarize(const DensityMatrix& rho, double p, AnalysisSubspace ss) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("depolarizing p out of [0,1]");
    const int l_max = rho.l_max();
    const int dim = rho.dim();
    const auto [m0, m1] = subspace_modes(ss);
    const int i0 = mode_index(m0, l_max);
    const int i1 = mode_index(m1, l_max);

    Matrix proj = Matrix::Zero(dim, dim);
    proj(i0, i0) = 1.0;
    proj(i1, i1) = 1.0;
    const Matrix inside = proj * rho.matrix() * proj;
    const double weight = inside.trace().real();
    if (weight < 1e-9)
        throw std::invalid_argument("state has no support on the declared subspace");

    const Matrix complement = Matrix::Identity(dim, dim) - proj;
    const Matrix outside = complement * rho.matrix() * complement;
    const Matrix mixed = (weight / 2.0) * proj;
    return DensityMatrix((1.0 - p) * rho.matrix() + p * (mixed + outside), l_max);
}

DensityMatrix depolarize(const DensityMatrix& rho, double p) {
    const int l_max = rho.l_max();
    const auto weight_on = [&](AnalysisSubspace ss) {
        const auto [m0, m1] = subspace_modes(ss);
        return rho.matrix()(mode_index(m0, l_max), mode_index(m0, l_max)).real() +
               rho.matrix()(mode_index(m1, l_max), mode_index(m1, l_max)).real();
    };
    const double w_log = weight_on(AnalysisSubspace::Logical);
    const double w_pol = weight_on(AnalysisSubspace::PolarizationL0);
    return depolarize(rho, p,
                      w_log >= w_pol ? AnalysisSubspace::Logical : AnalysisSubspace::PolarizationL0);
}

} // namespace qkd

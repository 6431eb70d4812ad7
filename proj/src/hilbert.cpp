#include "qkd/hilbert.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace qkd {

namespace {
constexpr Complex kI{0.0, 1.0};
constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_l_max(int l_max) {
    if (l_max < 2) throw std::invalid_argument("l_max must be >= 2");
}

void check_finite(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
            throw std::invalid_argument("non-finite amplitude");
    }
}
} // namespace

std::string to_string(Pol p) {
    switch (p) {
        case Pol::H: return "H";
        case Pol::V: return "V";
        case Pol::D: return "D";
        case Pol::A: return "A";
        case Pol::R: return "R";
        case Pol::L: return "L";
    }
    return "?";
}

Pol pol_from_string(const std::string& s) {
    if (s == "H") return Pol::H;
    if (s == "V") return Pol::V;
    if (s == "D") return Pol::D;
    if (s == "A") return Pol::A;
    if (s == "R") return Pol::R;
    if (s == "L") return Pol::L;
    throw std::invalid_argument("unknown polarization label: " + s);
}

int mode_index(SpinOrbitMode mode, int l_max) {
    check_l_max(l_max);
    if (std::abs(mode.oam) > l_max)
        throw TruncationError("OAM value " + std::to_string(mode.oam) +
                              " outside truncation |l| <= " + std::to_string(l_max));
    const int block = 2 * l_max + 1;
    return static_cast<int>(mode.sam) * block + (mode.oam + l_max);
}

SpinOrbitMode mode_from_index(int index, int l_max) {
    check_l_max(l_max);
    const int block = 2 * l_max + 1;
    if (index < 0 || index >= 2 * block) throw std::out_of_range("mode index out of range");
    return SpinOrbitMode{index < block ? Sam::R : Sam::L, index % block - l_max};
}

SpinOrbitState::SpinOrbitState(Vector amplitudes, int l_max)
    : amps_(std::move(amplitudes)), l_max_(l_max) {
    check_l_max(l_max_);
    if (amps_.size() != hilbert_dim(l_max_))
        throw DimensionError("amplitude vector length does not match l_max");
    check_finite(amps_);
}

SpinOrbitState SpinOrbitState::basis_mode(SpinOrbitMode mode, int l_max) {
    Vector v = Vector::Zero(hilbert_dim(l_max));
    v[mode_index(mode, l_max)] = 1.0;
    return SpinOrbitState(std::move(v), l_max);
}

SpinOrbitState SpinOrbitState::polarization(Pol pol, int oam, int l_max) {
    Complex r, l;
    switch (pol) {
        case Pol::R: r = 1.0; l = 0.0; break;
        case Pol::L: r = 0.0; l = 1.0; break;
        case Pol::H: r = kInvSqrt2; l = kInvSqrt2; break;
        case Pol::V: r = kI * kInvSqrt2; l = -kI * kInvSqrt2; break;
        // D = (H+V)/sqrt(2), A = (H-V)/sqrt(2)
        case Pol::D: r = 0.5 * (1.0 + kI); l = 0.5 * (1.0 - kI); break;
        case Pol::A: r = 0.5 * (1.0 - kI); l = 0.5 * (1.0 + kI); break;
    }
    Vector v = Vector::Zero(hilbert_dim(l_max));
    v[mode_index({Sam::R, oam}, l_max)] = r;
    v[mode_index({Sam::L, oam}, l_max)] = l;
    return SpinOrbitState(std::move(v), l_max);
}

SpinOrbitState SpinOrbitState::normalized() const {
    const double n = amps_.norm();
    if (n < 1e-12) throw ZeroNormError("cannot normalize a zero-norm state");
    return SpinOrbitState(amps_ / n, l_max_);
}

DensityMatrix::DensityMatrix(Matrix m, int l_max) : m_(std::move(m)), l_max_(l_max) {
    check_l_max(l_max_);
    if (m_.rows() != hilbert_dim(l_max_) || m_.cols() != hilbert_dim(l_max_))
        throw DimensionError("density matrix dimension does not match l_max");
}

DensityMatrix DensityMatrix::pure(const SpinOrbitState& psi) {
    if (psi.squared_norm() < 1e-12) throw ZeroNormError("zero-norm state");
    const Vector& a = psi.amplitudes();
    return DensityMatrix(a * a.adjoint(), psi.l_max());
}

void DensityMatrix::validate() const {
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::runtime_error("density matrix not Hermitian");
    if (std::abs(m_.trace() - Complex(1.0)) > 1e-10)
        throw std::runtime_error("density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::runtime_error("density matrix has a negative eigenvalue");
}

LinearOperator::LinearOperator(Matrix m, int l_max, bool unitary_expected,
                               std::vector<int> leaking_columns)
    : m_(std::move(m)),
      l_max_(l_max),
      unitary_expected_(unitary_expected),
      leaking_columns_(std::move(leaking_columns)) {
    check_l_max(l_max_);
    if (m_.rows() != hilbert_dim(l_max_) || m_.cols() != hilbert_dim(l_max_))
        throw DimensionError("operator dimension does not match l_max");
}

LinearOperator LinearOperator::identity(int l_max) {
    return LinearOperator(Matrix::Identity(hilbert_dim(l_max), hilbert_dim(l_max)), l_max, true);
}

double LinearOperator::unitarity_defect() const {
    const Matrix g = m_.adjoint() * m_;
    std::vector<int> retained;
    retained.reserve(g.rows());
    for (int i = 0; i < g.rows(); ++i) {
        if (std::find(leaking_columns_.begin(), leaking_columns_.end(), i) ==
            leaking_columns_.end())
            retained.push_back(i);
    }
    double defect = 0.0;
    for (int i : retained) {
        for (int j : retained) {
            const double target = (i == j) ? 1.0 : 0.0;
            defect = std::max(defect, std::abs(g(i, j) - target));
        }
    }
    return defect;
}

LinearOperator LinearOperator::compose(const LinearOperator& inner) const {
    if (dim() != inner.dim()) throw DimensionError("operator dimension mismatch in compose");
    std::vector<int> leaks = inner.leaking_columns_;
    for (int c : leaking_columns_)
        if (std::find(leaks.begin(), leaks.end(), c) == leaks.end()) leaks.push_back(c);
    return LinearOperator(m_ * inner.m_, l_max_, unitary_expected_ && inner.unitary_expected_,
                          std::move(leaks));
}

LinearOperator LinearOperator::adjoint() const {
    return LinearOperator(m_.adjoint(), l_max_, unitary_expected_, leaking_columns_);
}

Complex inner_product(const SpinOrbitState& a, const SpinOrbitState& b) {
    if (a.dim() != b.dim()) throw DimensionError("state dimension mismatch");
    return a.amplitudes().adjoint() * b.amplitudes();
}

SpinOrbitState apply(const LinearOperator& op, const SpinOrbitState& state) {
    if (op.dim() != state.dim()) throw DimensionError("operator/state dimension mismatch");
    SpinOrbitState out(op.matrix() * state.amplitudes(), state.l_max());
    if (op.unitary_expected()) {
        const double in_n = std::sqrt(state.squared_norm());
        const double out_n = std::sqrt(out.squared_norm());
        if (std::abs(out_n - in_n) > 1e-10)
            throw NormViolationError("unitary operator failed to preserve norm (truncation leakage)");
    }
    return out;
}

DensityMatrix apply(const LinearOperator& op, const DensityMatrix& rho) {
    if (op.dim() != rho.dim()) throw DimensionError("operator/state dimension mismatch");
    return DensityMatrix(op.matrix() * rho.matrix() * op.matrix().adjoint(), rho.l_max());
}

double fidelity(const DensityMatrix& rho, const SpinOrbitState& target) {
    if (rho.dim() != target.dim()) throw DimensionError("dimension mismatch in fidelity");
    if (target.squared_norm() < 1e-12) throw ZeroNormError("zero-norm target state");
    const Complex f = target.amplitudes().adjoint() * rho.matrix() * target.amplitudes();
    return f.real();
}

std::vector<double> born_probabilities(const SpinOrbitState& state,
                                       const std::vector<LinearOperator>& projectors) {
    if (state.squared_norm() < 1e-12) throw ZeroNormError("zero-norm state");
    std::vector<double> probs;
    probs.reserve(projectors.size());
    double total = 0.0;
    for (const auto& p : projectors) {
        if (p.dim() != state.dim()) throw DimensionError("projector dimension mismatch");
        const Complex v = state.amplitudes().adjoint() * p.matrix() * state.amplitudes();
        probs.push_back(std::max(0.0, v.real()));
        total += probs.back();
    }
    if (std::abs(total - state.squared_norm()) > 1e-10)
        throw IncompleteProjectorsError("projectors do not resolve the state completely");
    return probs;
}

int born_sample(const SpinOrbitState& state, const std::vector<LinearOperator>& projectors,
                SplitMix64& rng) {
    const auto probs = born_probabilities(state, projectors);
    double u = rng.uniform();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        u -= probs[i];
        if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

LinearOperator mode_projector(SpinOrbitMode mode, int l_max) {
    Matrix m = Matrix::Zero(hilbert_dim(l_max), hilbert_dim(l_max));
    const int i = mode_index(mode, l_max);
    m(i, i) = 1.0;
    return LinearOperator(std::move(m), l_max, false);
}

LinearOperator polarization_projector(Pol pol, int oam, int l_max) {
    const SpinOrbitState psi = SpinOrbitState::polarization(pol, oam, l_max);
    const Vector& a = psi.amplitudes();
    return LinearOperator(a * a.adjoint(), l_max, false);
}

} // namespace qkd

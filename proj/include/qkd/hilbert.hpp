#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kDefaultLMax = 2;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TruncationError : std::domain_error {
    using std::domain_error::domain_error;
};
struct NormViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroNormError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IncompleteProjectorsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Circular polarization handedness (SAM eigenstates).
enum class Sam { R = 0, L = 1 };

// Linear/diagonal/circular polarization labels used across preparation,
// analysis and tomography.
enum class Pol { H, V, D, A, R, L };

std::string to_string(Pol p);
Pol pol_from_string(const std::string& s);

// One (SAM, OAM) basis mode of the joint space.
struct SpinOrbitMode {
    Sam sam;
    int oam;
};

inline int hilbert_dim(int l_max) { return 2 * (2 * l_max + 1); }

// Canonical ordering: sam ascending (R before L), then OAM ascending from
// -l_max. Bijective onto [0, 2*(2*l_max+1)).
int mode_index(SpinOrbitMode mode, int l_max);
SpinOrbitMode mode_from_index(int index, int l_max);

// Pure state over the joint SAM (x) OAM space, stored in the circular basis.
//
// Circular-basis convention, used everywhere in this library:
//   |R> = (|H> - i|V>)/sqrt(2),   |L> = (|H> + i|V>)/sqrt(2)
// equivalently |H> = (|R>+|L>)/sqrt(2) and |V> = i(|R>-|L>)/sqrt(2), so the
// circular components of |V> are (i, -i)/sqrt(2).
class SpinOrbitState {
public:
    SpinOrbitState(Vector amplitudes, int l_max);

    // |sam, oam> basis mode.
    static SpinOrbitState basis_mode(SpinOrbitMode mode, int l_max = kDefaultLMax);
    // Polarization state at a fixed OAM value.
    static SpinOrbitState polarization(Pol pol, int oam = 0, int l_max = kDefaultLMax);

    int l_max() const { return l_max_; }
    int dim() const { return static_cast<int>(amps_.size()); }
    const Vector& amplitudes() const { return amps_; }
    Complex amplitude(SpinOrbitMode mode) const { return amps_[mode_index(mode, l_max_)]; }

    double squared_norm() const { return amps_.squaredNorm(); }
    SpinOrbitState normalized() const;

private:
    Vector amps_;
    int l_max_;
};

// Hermitian, trace-one, positive-semidefinite operator on the same space.
class DensityMatrix {
public:
    DensityMatrix(Matrix m, int l_max);

    static DensityMatrix pure(const SpinOrbitState& psi);

    int l_max() const { return l_max_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }

    // Throws if Hermiticity (1e-10), unit trace (1e-10) or positivity
    // (smallest eigenvalue >= -1e-9) is violated.
    void validate() const;

private:
    Matrix m_;
    int l_max_;
};

class LinearOperator {
public:
    LinearOperator(Matrix m, int l_max, bool unitary_expected,
                   std::vector<int> leaking_columns = {});

    static LinearOperator identity(int l_max);

    int l_max() const { return l_max_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    bool unitary_expected() const { return unitary_expected_; }
    // Source modes whose image was truncated away (operator not unitary there).
    const std::vector<int>& leaking_columns() const { return leaking_columns_; }

    // max |(U^dag U - I)_ij| over the retained (non-leaking) columns.
    double unitarity_defect() const;

    LinearOperator compose(const LinearOperator& inner) const;
    LinearOperator adjoint() const;

private:
    Matrix m_;
    int l_max_;
    bool unitary_expected_;
    std::vector<int> leaking_columns_;
};

// <a|b>, conjugate-linear in the first argument.
Complex inner_product(const SpinOrbitState& a, const SpinOrbitState& b);

// Matrix-vector application. When the operator is expected to be unitary and
// the input populates a leaking column, the output norm drops and a
// NormViolationError is raised (truncation leakage).
SpinOrbitState apply(const LinearOperator& op, const SpinOrbitState& state);

DensityMatrix apply(const LinearOperator& op, const DensityMatrix& rho);

// <target| rho |target>.
double fidelity(const DensityMatrix& rho, const SpinOrbitState& target);

// Samples an outcome index by the Born rule. The projector set must resolve
// the state completely: sum_i <psi|P_i|psi> = 1 within 1e-10.
int born_sample(const SpinOrbitState& state, const std::vector<LinearOperator>& projectors,
                SplitMix64& rng);

std::vector<double> born_probabilities(const SpinOrbitState& state,
                                       const std::vector<LinearOperator>& projectors);

// Rank-1 projector |mode><mode|.
LinearOperator mode_projector(SpinOrbitMode mode, int l_max);
// Projector onto a polarization state at a fixed OAM value.
LinearOperator polarization_projector(Pol pol, int oam, int l_max);

} // namespace qkd

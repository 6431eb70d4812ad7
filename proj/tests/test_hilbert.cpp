#include "doctest.h"

#include <cmath>

#include "qkd/elements.hpp"
#include "qkd/hilbert.hpp"

using namespace qkd;

namespace {

DensityMatrix logical_mixed(int l_max = kDefaultLMax) {
    const int i0 = mode_index({Sam::L, -1}, l_max);
    const int i1 = mode_index({Sam::R, +1}, l_max);
    Matrix m = Matrix::Zero(hilbert_dim(l_max), hilbert_dim(l_max));
    m(i0, i0) = 0.5;
    m(i1, i1) = 0.5;
    return DensityMatrix(std::move(m), l_max);
}

SpinOrbitState logical_zero(int l_max = kDefaultLMax) {
    return SpinOrbitState::basis_mode({Sam::L, -1}, l_max);
}

} // namespace

TEST_CASE("mode_index canonical ordering") {
    CHECK(mode_index({Sam::R, -2}, 2) == 0);
    CHECK(mode_index({Sam::L, +2}, 2) == 9);
    CHECK_THROWS_AS(mode_index({Sam::R, +3}, 2), TruncationError);

    // bijective onto [0, dim)
    std::vector<bool> seen(hilbert_dim(2), false);
    for (Sam s : {Sam::R, Sam::L}) {
        for (int l = -2; l <= 2; ++l) {
            const int i = mode_index({s, l}, 2);
            CHECK_FALSE(seen[i]);
            seen[i] = true;
            const SpinOrbitMode back = mode_from_index(i, 2);
            CHECK(back.sam == s);
            CHECK(back.oam == l);
        }
    }
}

TEST_CASE("inner_product") {
    const auto psi = SpinOrbitState::polarization(Pol::D, 0).normalized();
    CHECK(std::abs(inner_product(psi, psi) - Complex(1.0)) < 1e-12);

    const auto r1 = SpinOrbitState::basis_mode({Sam::R, 1});
    const auto lm1 = SpinOrbitState::basis_mode({Sam::L, -1});
    CHECK(std::abs(inner_product(r1, lm1)) < 1e-15);

    const auto h = SpinOrbitState::polarization(Pol::H, 0);
    const auto r = SpinOrbitState::polarization(Pol::R, 0);
    CHECK(std::abs(inner_product(h, r)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    // conjugate-linear in the first argument
    const Complex phase = std::exp(Complex(0, 0.7));
    const SpinOrbitState scaled(h.amplitudes() * phase, h.l_max());
    CHECK(std::abs(inner_product(scaled, r) - std::conj(phase) * inner_product(h, r)) < 1e-12);

    const SpinOrbitState other(Vector::Ones(hilbert_dim(3)) / std::sqrt(14.0), 3);
    CHECK_THROWS_AS(inner_product(h, other), DimensionError);
}

TEST_CASE("apply") {
    const auto psi = SpinOrbitState::polarization(Pol::V, 1);
    const auto id = LinearOperator::identity(kDefaultLMax);
    CHECK((apply(id, psi).amplitudes() - psi.amplitudes()).norm() < 1e-15);

    const LinearOperator zero(Matrix::Zero(psi.dim(), psi.dim()), kDefaultLMax, true);
    CHECK_THROWS_AS(apply(zero, psi), NormViolationError);
    const LinearOperator zero_ok(Matrix::Zero(psi.dim(), psi.dim()), kDefaultLMax, false);
    CHECK(apply(zero_ok, psi).squared_norm() == 0.0);

    const auto u = qplate_operator({1.234, 0.5, 0.3});
    const auto round_trip = u.adjoint().compose(u);
    CHECK((apply(round_trip, psi).amplitudes() - psi.amplitudes()).norm() < 1e-10);
}

TEST_CASE("fidelity") {
    const auto psi = logical_zero();
    CHECK(fidelity(DensityMatrix::pure(psi), psi) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fidelity(logical_mixed(), psi) == doctest::Approx(0.5).epsilon(1e-12));

    // rho = (1-p)|psi><psi| + p I2/2 on the logical subspace, p = 0.2
    const double p = 0.2;
    const Matrix m = (1.0 - p) * DensityMatrix::pure(psi).matrix() + p * logical_mixed().matrix();
    CHECK(fidelity(DensityMatrix(m, kDefaultLMax), psi) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("density matrix validation") {
    logical_mixed().validate();
    CHECK_THROWS(DensityMatrix(Matrix::Identity(10, 10), 2).validate());  // trace 10
}

TEST_CASE("born_sample") {
    SplitMix64 rng(42);
    const auto h = SpinOrbitState::polarization(Pol::H, 0);
    const std::vector<LinearOperator> hv = {polarization_projector(Pol::H, 0, 2),
                                            polarization_projector(Pol::V, 0, 2)};
    for (int i = 0; i < 100; ++i) CHECK(born_sample(h, hv, rng) == 0);

    const std::vector<LinearOperator> rl = {polarization_projector(Pol::R, 0, 2),
                                            polarization_projector(Pol::L, 0, 2)};
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += born_sample(h, rl, rng);
    const double sigma = std::sqrt(0.25 / n);
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 3 * sigma);

    // logical superposition against the logical projector pair
    Vector v = Vector::Zero(hilbert_dim(2));
    v[mode_index({Sam::L, -1}, 2)] = 1.0 / std::sqrt(2.0);
    v[mode_index({Sam::R, +1}, 2)] = 1.0 / std::sqrt(2.0);
    const SpinOrbitState plus_l(v, 2);
    const std::vector<LinearOperator> logical = {mode_projector({Sam::L, -1}, 2),
                                                 mode_projector({Sam::R, +1}, 2)};
    ones = 0;
    for (int i = 0; i < n; ++i) ones += born_sample(plus_l, logical, rng);
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 3 * sigma);

    // projector set that does not resolve the state
    CHECK_THROWS_AS(born_sample(h, logical, rng), IncompleteProjectorsError);
}

TEST_CASE("normalize") {
    const auto h = SpinOrbitState::polarization(Pol::H, 0);
    const SpinOrbitState scaled(h.amplitudes() * 3.7, h.l_max());
    const auto n1 = scaled.normalized();
    CHECK(std::abs(n1.squared_norm() - 1.0) < 1e-12);
    const auto n2 = n1.normalized();
    CHECK((n2.amplitudes() - n1.amplitudes()).norm() < 1e-12);

    const SpinOrbitState zero(Vector::Zero(hilbert_dim(2)), 2);
    CHECK_THROWS_AS(zero.normalized(), ZeroNormError);
    CHECK_THROWS_AS(DensityMatrix::pure(zero), ZeroNormError);
}

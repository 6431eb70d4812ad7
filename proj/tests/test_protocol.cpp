#include "doctest.h"

#include <cmath>

#include "qkd/protocol.hpp"

using namespace qkd;

namespace {

SourceParams ideal_source() {
    SourceParams s;
    s.mean_photon_mu = 1.0;
    s.g2 = 0.0;
    s.eta_det = 1.0;
    s.dark_rate = 0.0;
    return s;
}

ProtocolConfig ideal_config(std::uint64_t rounds, Encoding enc, double theta) {
    ProtocolConfig c;
    c.n_rounds = rounds;
    c.encoding = enc;
    c.theta = theta;
    c.source = ideal_source();
    return c;
}

constexpr double kDeg = M_PI / 180.0;

} // namespace

TEST_CASE("alice_prepare") {
    // (0, Y, Hybrid) -> unit overlap modulus on |L,-1>
    const auto y0 = alice_prepare(0, Basis::Y, Encoding::Hybrid);
    CHECK(std::abs(y0.amplitude({Sam::L, -1})) == doctest::Approx(1.0).epsilon(1e-12));

    const auto z0 = alice_prepare(0, Basis::Z, Encoding::PolarizationOnly);
    CHECK(fidelity(DensityMatrix::pure(z0), SpinOrbitState::polarization(Pol::H, 0)) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto z0h = alice_prepare(0, Basis::Z, Encoding::Hybrid);
    CHECK(std::norm(z0h.amplitude({Sam::L, -1})) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::norm(z0h.amplitude({Sam::R, +1})) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(alice_prepare(2, Basis::Z, Encoding::Hybrid), std::invalid_argument);
}

TEST_CASE("channel_transmit") {
    const auto psi = alice_prepare(1, Basis::Z, Encoding::PolarizationOnly);
    const auto rho = channel_transmit(psi, 0.0, {0.0});
    CHECK((rho.matrix() - DensityMatrix::pure(psi).matrix()).cwiseAbs().maxCoeff() < 1e-12);

    // hybrid state: identical density matrix for every angle
    const auto h0 = alice_prepare(0, Basis::Y, Encoding::Hybrid);
    const auto ref = channel_transmit(h0, 0.0, {0.0});
    for (double deg : {12.5, 25.0, 50.0, 75.0, 90.0, 213.0}) {
        const auto rot = channel_transmit(h0, deg * kDeg, {0.0});
        CHECK((rot.matrix() - ref.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }

    // |H,0> at theta = pi/2 -> |V,0>
    const auto h = SpinOrbitState::polarization(Pol::H, 0);
    const auto rotated = channel_transmit(h, M_PI / 2.0, {0.0});
    CHECK(fidelity(rotated, SpinOrbitState::polarization(Pol::V, 0)) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bob_measure") {
    SplitMix64 rng(8);
    const auto src = ideal_source();

    // matched bases, ideal chain: bit always equals Alice's
    for (Encoding enc : {Encoding::PolarizationOnly, Encoding::Hybrid}) {
        for (int bit = 0; bit < 2; ++bit) {
            for (Basis basis : {Basis::Z, Basis::Y}) {
                const auto rho = channel_transmit(alice_prepare(bit, basis, enc), 0.0, {0.0});
                for (int i = 0; i < 50; ++i) {
                    const auto m = bob_measure(rho, basis, enc, src, rng);
                    CHECK(m.detected);
                    CHECK(*m.bit == bit);
                }
            }
        }
    }

    // mismatched bases: uniform outcome
    const auto rho = channel_transmit(alice_prepare(0, Basis::Z, Encoding::Hybrid), 0.0, {0.0});
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += *bob_measure(rho, Basis::Y, Encoding::Hybrid, src, rng).bit;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 3 * std::sqrt(0.25 / n));

    // hybrid at 50 degrees stays error-free
    const auto rho50 =
        channel_transmit(alice_prepare(1, Basis::Y, Encoding::Hybrid), 50.0 * kDeg, {0.0});
    for (int i = 0; i < 2000; ++i)
        CHECK(*bob_measure(rho50, Basis::Y, Encoding::Hybrid, src, rng).bit == 1);
}

TEST_CASE("run_session basics") {
    ProtocolConfig bad = ideal_config(0, Encoding::Hybrid, 0.0);
    CHECK_THROWS_AS(run_session(bad), std::invalid_argument);

    const auto single = run_session(ideal_config(1, Encoding::Hybrid, 0.0));
    CHECK(single.size() == 1);

    // determinism: identical config + seed give identical records
    auto cfg = ideal_config(5000, Encoding::Hybrid, 25.0 * kDeg);
    cfg.seed = 424242;
    const auto a = run_session(cfg);
    const auto b = run_session(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].alice_basis == b[i].alice_basis);
        CHECK(a[i].alice_bit == b[i].alice_bit);
        CHECK(a[i].bob_basis == b[i].bob_basis);
        CHECK(a[i].detected == b[i].detected);
        CHECK(a[i].bob_bit == b[i].bob_bit);
        CHECK(a[i].multiphoton == b[i].multiphoton);
    }

    // bob_bit present iff detected
    for (const auto& r : a) CHECK(r.bob_bit.has_value() == r.detected);
}

TEST_CASE("run_session detected fraction tracks mu * eta") {
    ProtocolConfig cfg = ideal_config(1'000'000, Encoding::Hybrid, 0.0);
    cfg.source.mean_photon_mu = 0.0253;
    cfg.source.eta_det = 0.9;
    cfg.seed = 9;
    const auto records = run_session(cfg);
    std::uint64_t detected = 0;
    for (const auto& r : records) detected += r.detected;
    const double expected = 0.0253 * 0.9;
    const double sigma = std::sqrt(expected * (1 - expected) / cfg.n_rounds);
    CHECK(std::abs(static_cast<double>(detected) / cfg.n_rounds - expected) < 4 * sigma);
}

TEST_CASE("sift") {
    std::vector<RoundRecord> records;
    for (std::uint64_t i = 0; i < 10; ++i)
        records.push_back({i, Basis::Z, static_cast<int>(i % 2), Basis::Z, true,
                           static_cast<int>(i % 2), false});
    const auto key = sift(records);
    CHECK(key.size() == 10);

    CHECK(sift({}).size() == 0);

    // unbiased bases: retained fraction ~ 0.5 of detected rounds
    ProtocolConfig cfg = ideal_config(100'000, Encoding::Hybrid, 0.0);
    cfg.seed = 31;
    const auto session = run_session(cfg);
    std::uint64_t detected = 0;
    for (const auto& r : session) detected += r.detected;
    const auto sifted = sift(session);
    const double ratio = static_cast<double>(sifted.size()) / static_cast<double>(detected);
    CHECK(std::abs(ratio - 0.5) < 3 * std::sqrt(0.25 / static_cast<double>(detected)));
    // strictly increasing round indices
    for (std::size_t i = 1; i < sifted.round_indices.size(); ++i)
        CHECK(sifted.round_indices[i] > sifted.round_indices[i - 1]);
}

TEST_CASE("estimate_qber") {
    SiftedKey key;
    for (int i = 0; i < 100; ++i) {
        key.alice_bits.push_back(i % 2);
        key.bob_bits.push_back(i % 2);
        key.round_indices.push_back(i);
    }
    SplitMix64 rng(4);
    auto [report, remaining] = estimate_qber(key, 0.2, rng);
    CHECK(report.sample_size == 20);
    CHECK(report.qber == 0.0);
    CHECK(remaining.size() == 80);

    for (auto& b : key.bob_bits) b = 1 - b;
    auto [bad, rest] = estimate_qber(key, 0.5, rng);
    CHECK(bad.qber == 1.0);

    auto [all, none] = estimate_qber(key, 1.0, rng);
    CHECK(all.sample_size == 100);
    CHECK(none.size() == 0);

    CHECK_THROWS_AS(estimate_qber(SiftedKey{}, 0.5, rng), std::invalid_argument);
}

TEST_CASE("theoretical_qber") {
    CHECK(theoretical_qber(0.0) == 0.0);
    CHECK(theoretical_qber(M_PI / 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(theoretical_qber(25.0 * kDeg) == doctest::Approx(0.0893031).epsilon(1e-5));
}

TEST_CASE("qber_from_fidelities") {
    CHECK(qber_from_fidelities({1, 1, 1, 1}) == 0.0);
    CHECK(qber_from_fidelities({0.9596, 0.9596, 0.9596, 0.9596}) ==
          doctest::Approx(0.0404).epsilon(1e-12));
    CHECK(qber_from_fidelities({1, 1, 1, 0}) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(qber_from_fidelities({1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(qber_from_fidelities({1, 1, 1, 1.5}), std::invalid_argument);
}

TEST_CASE("secret_key_fraction") {
    CHECK(secret_key_fraction(0.0) == 1.0);
    CHECK(secret_key_fraction(0.11) < 1e-3);
    CHECK(secret_key_fraction(0.12) == 0.0);
    CHECK(secret_key_fraction(0.0404) == doctest::Approx(0.5117452).epsilon(1e-4));
    CHECK_THROWS_AS(secret_key_fraction(0.6), std::invalid_argument);
}

TEST_CASE("hybrid flatness: exact error probability is zero at all angles") {
    for (double deg : {0.0, 12.5, 25.0, 50.0, 75.0, 90.0}) {
        const double err =
            exact_mean_error_probability(Encoding::Hybrid, deg * kDeg, {0.0});
        CHECK(std::abs(err) < 1e-10);
    }
}

TEST_CASE("polarization law: exact error equals sin^2(theta)/2 on a 1-degree grid") {
    for (int deg = 0; deg <= 90; ++deg) {
        const double theta = deg * kDeg;
        const double z_err =
            exact_error_probability(Basis::Z, 0, Encoding::PolarizationOnly, theta, {0.0});
        const double y_err =
            exact_error_probability(Basis::Y, 0, Encoding::PolarizationOnly, theta, {0.0});
        const double s = std::sin(theta);
        CHECK(std::abs(z_err - s * s) < 1e-10);
        CHECK(std::abs(y_err) < 1e-10);
        const double mean = exact_mean_error_probability(Encoding::PolarizationOnly, theta, {0.0});
        CHECK(std::abs(mean - theoretical_qber(theta)) < 1e-10);
    }
}

TEST_CASE("depolarization linearity: basis-averaged QBER equals p/4") {
    for (double p : {0.0, 0.1, 0.1616, 0.5, 1.0}) {
        for (Encoding enc : {Encoding::Hybrid, Encoding::PolarizationOnly}) {
            const double err = exact_mean_error_probability(enc, 0.0, {p});
            CHECK(std::abs(err - p / 4.0) < 1e-10);
        }
        // angle-independent for hybrid states
        const double err50 = exact_mean_error_probability(Encoding::Hybrid, 50.0 * kDeg, {p});
        CHECK(std::abs(err50 - p / 4.0) < 1e-10);
    }
}

TEST_CASE("session qber matches the exact chain") {
    ProtocolConfig cfg = ideal_config(200'000, Encoding::PolarizationOnly, 30.0 * kDeg);
    cfg.seed = 5150;
    const auto key = sift(run_session(cfg));
    SplitMix64 rng(6);
    auto [report, rest] = estimate_qber(key, 1.0, rng);
    const double expected = theoretical_qber(cfg.theta);
    CHECK(std::abs(report.qber - expected) <
          3 * std::sqrt(expected * (1 - expected) / static_cast<double>(report.sample_size)));
}

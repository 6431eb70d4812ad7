#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qkd/elements.hpp"
#include "qkd/hilbert.hpp"
#include "qkd/source.hpp"

namespace qkd {

// Hybrid inserts the q = 1/2, delta = pi Q-plate at encode and decode;
// PolarizationOnly bypasses both.
enum class Encoding { PolarizationOnly, Hybrid };

// Z -> {|H>,|V>} / {|+>_L,|->_L},  Y -> {|R>,|L>} / {|0>_L,|1>_L}.
enum class Basis { Z = 0, Y = 1 };

struct ProtocolConfig {
    std::uint64_t n_rounds = 0;
    Encoding encoding = Encoding::Hybrid;
    double theta = 0.0;  // Bob platform angle, radians
    SourceParams source;
    NoiseParams noise;
    double basis_bias = 0.5;      // probability of choosing Z
    double sample_fraction = 0.1; // fraction of the sifted key spent on QBER
    std::uint64_t seed = 0;
    bool discard_multiphoton = false;

    void validate() const;
};

struct RoundRecord {
    std::uint64_t round_index;
    Basis alice_basis;
    int alice_bit;
    Basis bob_basis;
    bool detected;
    std::optional<int> bob_bit;
    bool multiphoton;
};

struct SiftedKey {
    std::vector<int> alice_bits;
    std::vector<int> bob_bits;
    std::vector<std::uint64_t> round_indices;

    std::size_t size() const { return alice_bits.size(); }
};

struct QberReport {
    std::uint64_t sample_size = 0;
    std::uint64_t error_count = 0;
    double qber = 0.0;
    double std_error = 0.0;
};

// The four BB84 preparations. Z: bit 0 -> |H>, bit 1 -> |V>; Y: bit 0 -> |R>,
// bit 1 -> |L>. With hybrid encoding the polarization qubit is pushed through
// the encode Q-plate onto the rotation-invariant logical subspace.
SpinOrbitState alice_prepare(int bit, Basis basis, Encoding encoding, int l_max = kDefaultLMax);

// Frame rotation by theta followed by the depolarizing channel acting on the
// occupied two-mode subspace. The channel mixes with weight p/2 so that the
// basis-averaged QBER equals p/4.
DensityMatrix channel_transmit(const SpinOrbitState& state, double theta,
                               const NoiseParams& noise);

struct MeasureResult {
    bool detected;
    std::optional<int> bit;
};

// Decode (hybrid only) and project onto the basis's polarization pair at
// l = 0, then pass the outcome through the detector model. A double click
// resolves to a uniformly random bit.
MeasureResult bob_measure(const DensityMatrix& rho, Basis basis, Encoding encoding,
                          const SourceParams& source, SplitMix64& rng);

std::vector<RoundRecord> run_session(const ProtocolConfig& config);

SiftedKey sift(const std::vector<RoundRecord>& records);

std::pair<QberReport, SiftedKey> estimate_qber(const SiftedKey& key, double fraction,
                                               SplitMix64& rng);

// Misalignment law for polarization-only encoding: QBER(theta) = sin^2(theta)/2.
double theoretical_qber(double theta);

// QBER = (1/4) sum_i (1 - F_i) over the four prepared states.
double qber_from_fidelities(const std::vector<double>& fidelities);

// Asymptotic BB84 secret-key fraction max(0, 1 - 2 h2(qber)); positive iff
// qber < 0.110028.
double secret_key_fraction(double qber);

// Exact per-round error probability (Born rule, no sampling) for a matched
// basis under the full prepare -> channel -> decode -> measure chain,
// conditioned on the photon reaching one of the two detectors.
double exact_error_probability(Basis basis, int bit, Encoding encoding, double theta,
                               const NoiseParams& noise, int l_max = kDefaultLMax);

// Average of exact_error_probability over both bases and bits.
double exact_mean_error_probability(Encoding encoding, double theta, const NoiseParams& noise,
                                    int l_max = kDefaultLMax);

} // namespace qkd

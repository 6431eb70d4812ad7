#include "qkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qkd {

namespace {

Pol pol_for(Basis basis, int bit) {
    if (basis == Basis::Z) return bit == 0 ? Pol::H : Pol::V;
    return bit == 0 ? Pol::R : Pol::L;
}

LinearOperator protocol_qplate(int l_max) {
    return qplate_operator(QPlateParams{M_PI, 0.5, 0.0}, l_max);
}

// Arrival probabilities on Bob's two detectors for a decoded state.
std::pair<double, double> detector_probabilities(const DensityMatrix& rho, Basis basis,
                                                 Encoding encoding) {
    DensityMatrix analyzed = rho;
    if (encoding == Encoding::Hybrid) analyzed = apply(protocol_qplate(rho.l_max()), rho);
    const auto p_bit = [&](int bit) {
        const LinearOperator proj = polarization_projector(pol_for(basis, bit), 0, rho.l_max());
        return std::max(0.0, (proj.matrix() * analyzed.matrix()).trace().real());
    };
    return {p_bit(0), p_bit(1)};
}

MeasureResult sample_clicks(double p0, double p1, int n_photons, const SourceParams& source,
                            SplitMix64& rng) {
    bool click0 = false, click1 = false;
    for (int k = 0; k < n_photons; ++k) {
        const double u = rng.uniform();
        int arm = -1;
        if (u < p0)
            arm = 0;
        else if (u < p0 + p1)
            arm = 1;
        if (arm >= 0 && rng.flip(source.eta_det)) (arm == 0 ? click0 : click1) = true;
    }
    const double p_dark = source.dark_click_probability();
    if (rng.flip(p_dark)) click0 = true;
    if (rng.flip(p_dark)) click1 = true;

    if (click0 && click1) return {true, rng.flip(0.5) ? 1 : 0};
    if (click0) return {true, 0};
    if (click1) return {true, 1};
    return {false, std::nullopt};
}

} // namespace

void ProtocolConfig::validate() const {
    if (n_rounds < 1) throw std::invalid_argument("n_rounds must be >= 1");
    if (!(basis_bias > 0.0 && basis_bias < 1.0))
        throw std::invalid_argument("basis_bias must be in (0,1)");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw std::invalid_argument("sample_fraction must be in (0,1]");
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    if (!(noise.depolarizing_p >= 0.0 && noise.depolarizing_p <= 1.0))
        throw std::invalid_argument("depolarizing_p must be in [0,1]");
    source.validate();
}

SpinOrbitState alice_prepare(int bit, Basis basis, Encoding encoding, int l_max) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("bit must be 0 or 1");
    const SpinOrbitState pol = SpinOrbitState::polarization(pol_for(basis, bit), 0, l_max);
    if (encoding == Encoding::PolarizationOnly) return pol;
    return apply(protocol_qplate(l_max), pol);
}

DensityMatrix channel_transmit(const SpinOrbitState& state, double theta,
                               const NoiseParams& noise) {
    const SpinOrbitState rotated = apply(rotation_operator(theta, state.l_max()), state);
    const DensityMatrix rho = DensityMatrix::pure(rotated);
    // Mixing weight p/2 makes the basis-averaged QBER exactly p/4.
    return depolarize(rho, noise.depolarizing_p / 2.0);
}

MeasureResult bob_measure(const DensityMatrix& rho, Basis basis, Encoding encoding,
                          const SourceParams& source, SplitMix64& rng) {
    const auto [p0, p1] = detector_probabilities(rho, basis, encoding);
    return sample_clicks(p0, p1, 1, source, rng);
}

std::vector<RoundRecord> run_session(const ProtocolConfig& config) {
    config.validate();
    const int l_max = kDefaultLMax;

    // The channel and decode chain is fixed for the whole session, so the
    // detector probabilities for the 8 (alice basis, bit, bob basis) combos
    // are computed once.
    double table[2][2][2][2];
    for (int ab = 0; ab < 2; ++ab) {
        for (int bit = 0; bit < 2; ++bit) {
            const SpinOrbitState psi =
                alice_prepare(bit, static_cast<Basis>(ab), config.encoding, l_max);
            const DensityMatrix rho = channel_transmit(psi, config.theta, config.noise);
            for (int bb = 0; bb < 2; ++bb) {
                const auto [p0, p1] =
                    detector_probabilities(rho, static_cast<Basis>(bb), config.encoding);
                table[ab][bit][bb][0] = p0;
                table[ab][bit][bb][1] = p1;
            }
        }
    }

    std::vector<RoundRecord> records;
    records.reserve(config.n_rounds);
    for (std::uint64_t i = 0; i < config.n_rounds; ++i) {
        SplitMix64 rng = substream(config.seed, i);
        const int n_photons = sample_photon_number(config.source, rng);
        const Basis alice_basis = rng.flip(config.basis_bias) ? Basis::Z : Basis::Y;
        const int alice_bit = rng.flip(0.5) ? 1 : 0;
        const Basis bob_basis = rng.flip(0.5) ? Basis::Z : Basis::Y;

        const auto* p = table[static_cast<int>(alice_basis)][alice_bit][static_cast<int>(bob_basis)];
        const MeasureResult m = sample_clicks(p[0], p[1], n_photons, config.source, rng);
        records.push_back({i, alice_basis, alice_bit, bob_basis, m.detected, m.bit,
                           n_photons >= 2});
    }
    return records;
}

SiftedKey sift(const std::vector<RoundRecord>& records) {
    SiftedKey key;
    for (const auto& r : records) {
        if (!r.detected || r.alice_basis != r.bob_basis) continue;
        key.alice_bits.push_back(r.alice_bit);
        key.bob_bits.push_back(*r.bob_bit);
        key.round_indices.push_back(r.round_index);
    }
    return key;
}

std::pair<QberReport, SiftedKey> estimate_qber(const SiftedKey& key, double fraction,
                                               SplitMix64& rng) {
    if (key.size() == 0) throw std::invalid_argument("cannot estimate QBER on an empty key");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("sample fraction must be in (0,1]");
    const std::size_t n = key.size();
    const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));

    // Partial Fisher-Yates draw of m positions without replacement.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<bool> sampled(n, false);
    std::uint64_t errors = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sampled[idx[i]] = true;
        if (key.alice_bits[idx[i]] != key.bob_bits[idx[i]]) ++errors;
    }

    QberReport report;
    report.sample_size = m;
    report.error_count = errors;
    report.qber = static_cast<double>(errors) / static_cast<double>(m);
    report.std_error = std::sqrt(report.qber * (1.0 - report.qber) / static_cast<double>(m));

    SiftedKey remaining;
    for (std::size_t i = 0; i < n; ++i) {
        if (sampled[i]) continue;
        remaining.alice_bits.push_back(key.alice_bits[i]);
        remaining.bob_bits.push_back(key.bob_bits[i]);
        remaining.round_indices.push_back(key.round_indices[i]);
    }
    return {report, remaining};
}

double theoretical_qber(double theta) {
    const double s = std::sin(theta);
    return 0.5 * s * s;
}

double qber_from_fidelities(const std::vector<double>& fidelities) {
    if (fidelities.size() != 4)
        throw std::invalid_argument("expected one fidelity per prepared state (4)");
    double sum = 0.0;
    for (double f : fidelities) {
        if (f < -1e-9 || f > 1.0 + 1e-9)
            throw std::invalid_argument("fidelity out of [0,1]");
        sum += 1.0 - f;
    }
    return sum / 4.0;
}

double secret_key_fraction(double qber) {
    if (qber < 0.0 || qber > 0.5) throw std::invalid_argument("qber must be in [0, 0.5]");
    const auto h2 = [](double q) {
        if (q <= 0.0 || q >= 1.0) return 0.0;
        return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
    };
    return std::max(0.0, 1.0 - 2.0 * h2(qber));
}

double exact_error_probability(Basis basis, int bit, Encoding encoding, double theta,
                               const NoiseParams& noise, int l_max) {
    const SpinOrbitState psi = alice_prepare(bit, basis, encoding, l_max);
    const DensityMatrix rho = channel_transmit(psi, theta, noise);
    const auto [p0, p1] = detector_probabilities(rho, basis, encoding);
    const double p_correct = bit == 0 ? p0 : p1;
    const double p_wrong = bit == 0 ? p1 : p0;
    if (p_correct + p_wrong <= 0.0) throw std::runtime_error("state never reaches the detectors");
    return p_wrong / (p_correct + p_wrong);
}

double exact_mean_error_probability(Encoding encoding, double theta, const NoiseParams& noise,
                                    int l_max) {
    double sum = 0.0;
    for (int basis = 0; basis < 2; ++basis)
        for (int bit = 0; bit < 2; ++bit)
            sum += exact_error_probability(static_cast<Basis>(basis), bit, encoding, theta, noise,
                                           l_max);
    return sum / 4.0;
}

} // namespace qkd

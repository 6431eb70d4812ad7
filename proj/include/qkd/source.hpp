#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd {

// Quantum-dot source and detection-stage parameters. Defaults follow the
// reference setup: 79 MHz repetition, ~2 MHz single-photon rate, g2(0) ~ 3%,
// 90% detector efficiency, < 10 Hz dark counts, 1 ns gate.
struct SourceParams {
    double rep_rate = 79e6;                 // pulses / s
    double mean_photon_mu = 2e6 / 79e6;     // photons per pulse at the encoder
    double g2 = 0.03;                       // second-order correlation at zero delay
    double eta_det = 0.90;                  // detector efficiency
    double dark_rate = 10.0;                // dark counts / s per detector
    double gate_seconds = 1e-9;             // detection gate

    double dark_click_probability() const { return dark_rate * gate_seconds; }
    void validate() const;
};

struct PulseEvent {
    std::uint64_t pulse_index;
    int photon_count;  // 0, 1 or 2
    int path;          // 0..3, fixed by the demux schedule
};

struct InsufficientStatisticsError : std::runtime_error {
    explicit InsufficientStatisticsError(std::uint64_t required)
        : std::runtime_error("insufficient statistics: need at least " +
                             std::to_string(required) + " pulses"),
          required_pulses(required) {}
    std::uint64_t required_pulses;
};

// Per-pulse photon-number probabilities, truncated at n = 2:
//   P(2) = g2 * mu^2 / 2,  P(1) = mu - 2 P(2),  P(0) = 1 - P(1) - P(2).
struct PhotonNumberDist {
    double p0, p1, p2;
};
PhotonNumberDist photon_number_distribution(const SourceParams& params);

int sample_photon_number(const SourceParams& params, SplitMix64& rng);

// Round-robin demultiplexer schedule (FPGA-synchronized EOM cascade).
int demux_route(std::uint64_t pulse_index);

// Independent per-detector clicks: each detector fires with probability
// 1 - (1 - eta * p_arrival) * (1 - p_dark).
std::vector<bool> detect(const std::vector<double>& arrival_prob_per_detector,
                         const SourceParams& params, SplitMix64& rng);

struct HbtResult {
    double g2_estimate;
    std::uint64_t n_pulses;
    std::uint64_t zero_delay_coincidences;
    std::uint64_t adjacent_coincidences;
};

// Simulates a Hanbury-Brown-Twiss measurement: each emitted photon is routed
// 50:50 onto two detectors; returns the ratio of zero-delay to adjacent-pulse
// coincidences. Converges to params.g2 for small mu.
HbtResult hbt_g2_estimate(std::uint64_t n_pulses, const SourceParams& params, SplitMix64& rng);

} // namespace qkd

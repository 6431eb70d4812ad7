#include "qkd/source.hpp"

#include <cmath>
#include <limits>

namespace qkd {

void SourceParams::validate() const {
    if (rep_rate < 0 || mean_photon_mu < 0 || g2 < 0 || dark_rate < 0 || gate_seconds < 0)
        throw std::invalid_argument("source rates must be non-negative");
    if (eta_det < 0.0 || eta_det > 1.0)
        throw std::invalid_argument("eta_det must be in [0,1]");
    photon_number_distribution(*this);
}

PhotonNumberDist photon_number_distribution(const SourceParams& params) {
    const double mu = params.mean_photon_mu;
    const double p2 = params.g2 * mu * mu / 2.0;
    const double p1 = mu - 2.0 * p2;
    const double p0 = 1.0 - p1 - p2;
    if (p1 < 0.0 || p2 > 1.0 || p0 < 0.0)
        throw std::invalid_argument("photon-number probabilities out of range for these parameters");
    return {p0, p1, p2};
}

int sample_photon_number(const SourceParams& params, SplitMix64& rng) {
    const PhotonNumberDist d = photon_number_distribution(params);
    const double u = rng.uniform();
    if (u < d.p2) return 2;
    if (u < d.p2 + d.p1) return 1;
    return 0;
}

int demux_route(std::uint64_t pulse_index) {
    return static_cast<int>(pulse_index % 4);
}

std::vector<bool> detect(const std::vector<double>& arrival_prob_per_detector,
                         const SourceParams& params, SplitMix64& rng) {
    const double p_dark = params.dark_click_probability();
    std::vector<bool> clicks;
    clicks.reserve(arrival_prob_per_detector.size());
    for (double p_arrival : arrival_prob_per_detector) {
        if (p_arrival < 0.0 || p_arrival > 1.0)
            throw std::invalid_argument("arrival probability out of [0,1]");
        const double p_click = 1.0 - (1.0 - params.eta_det * p_arrival) * (1.0 - p_dark);
        clicks.push_back(rng.flip(p_click));
    }
    return clicks;
}

namespace {

// Index of the next success in a Bernoulli(p) sequence starting after `from`.
std::uint64_t next_event(std::uint64_t from, double p, SplitMix64& rng) {
    if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
    if (p >= 1.0) return from + 1;
    const double u = rng.uniform();
    const double gap = std::floor(std::log1p(-u) / std::log1p(-p));
    if (gap > 1e18) return std::numeric_limits<std::uint64_t>::max();
    return from + 1 + static_cast<std::uint64_t>(gap);
}

struct Clicks {
    bool a = false;
    bool b = false;
};

} // namespace

HbtResult hbt_g2_estimate(std::uint64_t n_pulses, const SourceParams& params, SplitMix64& rng) {
    params.validate();
    const PhotonNumberDist dist = photon_number_distribution(params);
    const double q = dist.p1 + dist.p2;
    const double eta = params.eta_det;
    const double p_dark = params.dark_click_probability();

    // Per-pulse single-arm click probability, used for the statistics precheck.
    const double p_arm = (dist.p1 + 2.0 * dist.p2) * eta / 2.0 + p_dark;
    const double exp_adjacent = static_cast<double>(n_pulses) * p_arm * p_arm;
    const double p_zero = dist.p2 * 0.5 * eta * eta;
    if (exp_adjacent < 100.0) {
        const auto required = static_cast<std::uint64_t>(std::ceil(100.0 / (p_arm * p_arm)));
        throw InsufficientStatisticsError(required);
    }
    if (dist.p2 > 0.0 && static_cast<double>(n_pulses) * p_zero < 100.0) {
        const auto required = static_cast<std::uint64_t>(std::ceil(100.0 / p_zero));
        throw InsufficientStatisticsError(required);
    }

    // Only pulses with photons or dark clicks can contribute; walk those
    // sparse events directly instead of looping over every pulse.
    const double p_dark_any = 1.0 - (1.0 - p_dark) * (1.0 - p_dark);
    const std::uint64_t none = std::numeric_limits<std::uint64_t>::max();

    std::uint64_t c_zero = 0, c_adjacent = 0;
    std::uint64_t prev_index = none;
    Clicks prev{};

    std::uint64_t occ = next_event(std::uint64_t(0) - 1, q, rng);
    std::uint64_t dark = next_event(std::uint64_t(0) - 1, p_dark_any, rng);
    while (true) {
        std::uint64_t index;
        bool occupied;
        if (occ <= dark) {
            index = occ;
            occupied = true;
            if (dark == occ) dark = next_event(dark, p_dark_any, rng);
        } else {
            index = dark;
            occupied = false;
        }
        if (index >= n_pulses) break;

        Clicks cur{};
        if (occupied) {
            const int n = rng.flip(dist.p2 / q) ? 2 : 1;
            for (int k = 0; k < n; ++k) {
                const bool arm_b = rng.flip(0.5);
                if (rng.flip(eta)) (arm_b ? cur.b : cur.a) = true;
            }
            if (rng.flip(p_dark)) cur.a = true;
            if (rng.flip(p_dark)) cur.b = true;
            occ = next_event(occ, q, rng);
        } else {
            // at least one dark click, photons absent
            const bool da = rng.flip(p_dark / p_dark_any);
            cur.a = da;
            cur.b = !da || rng.flip(p_dark);
            dark = next_event(dark, p_dark_any, rng);
        }

        if (cur.a && cur.b) ++c_zero;
        if (prev_index != none && index == prev_index + 1 && prev.a && cur.b) ++c_adjacent;
        prev_index = index;
        prev = cur;
    }

    const double estimate =
        c_adjacent == 0 ? 0.0 : static_cast<double>(c_zero) / static_cast<double>(c_adjacent);
    return {estimate, n_pulses, c_zero, c_adjacent};
}

} // namespace qkd

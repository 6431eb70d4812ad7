#include "qkd/tomography.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "qkd/protocol.hpp"

namespace qkd::tomo {

namespace {
constexpr Complex kI{0.0, 1.0};

QubitOp pauli(int k) {
    QubitOp m;
    switch (k) {
        case 0: m << 0, 1, 1, 0; break;                    // sigma_x
        case 1: m << 0, -kI, kI, 0; break;                 // sigma_y
        default: m << 1, 0, 0, -1; break;                  // sigma_z
    }
    return m;
}
} // namespace

Qubit pol_ket(Pol p) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (p) {
        case Pol::H: return Qubit(1, 0);
        case Pol::V: return Qubit(0, 1);
        case Pol::D: return Qubit(s, s);
        case Pol::A: return Qubit(s, -s);
        case Pol::R: return Qubit(s, -s * kI);
        case Pol::L: return Qubit(s, s * kI);
    }
    return Qubit(1, 0);
}

QubitOp pol_projector(Pol p) {
    const Qubit k = pol_ket(p);
    return k * k.adjoint();
}

std::vector<TomographySetting> tomography_settings() {
    std::vector<TomographySetting> settings;
    for (Pol p : {Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L})
        settings.push_back({p, pol_projector(p)});
    return settings;
}

std::vector<CountRecord> simulate_counts(const QubitOp& rho,
                                         const std::vector<TomographySetting>& settings,
                                         std::uint64_t shots_per_setting, SplitMix64& rng) {
    if (shots_per_setting < 1) throw std::invalid_argument("shots_per_setting must be >= 1");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-8 ||
        std::abs(rho.trace() - Complex(1.0)) > 1e-8)
        throw std::invalid_argument("invalid density matrix for count simulation");
    std::vector<CountRecord> counts;
    counts.reserve(settings.size());
    for (const auto& s : settings) {
        const double p = std::clamp((s.projector * rho).trace().real(), 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> binom(shots_per_setting, p);
        counts.push_back({s.label, shots_per_setting, binom(rng)});
    }
    return counts;
}

QubitOp linear_inversion(const std::vector<CountRecord>& counts) {
    std::map<Pol, double> freq;
    for (const auto& c : counts) {
        if (c.shots < 1) throw std::invalid_argument("setting with zero shots");
        freq[c.setting] = static_cast<double>(c.clicks) / static_cast<double>(c.shots);
    }
    for (Pol p : {Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L})
        if (!freq.count(p)) throw std::invalid_argument("missing tomography setting " + to_string(p));

    const double rx = freq[Pol::D] - freq[Pol::A];
    const double ry = freq[Pol::L] - freq[Pol::R];  // |R> is the sigma_y = -1 eigenstate
    const double rz = freq[Pol::H] - freq[Pol::V];
    return 0.5 * (QubitOp::Identity() + rx * pauli(0) + ry * pauli(1) + rz * pauli(2));
}

double binomial_log_likelihood(const QubitOp& rho, const std::vector<CountRecord>& counts) {
    double ll = 0.0;
    for (const auto& c : counts) {
        const double p =
            std::clamp((pol_projector(c.setting) * rho).trace().real(), 1e-12, 1.0 - 1e-12);
        ll += static_cast<double>(c.clicks) * std::log(p) +
              static_cast<double>(c.shots - c.clicks) * std::log1p(-p);
    }
    return ll;
}

double qubit_fidelity(const QubitOp& rho, const Qubit& target) {
    return (target.adjoint() * rho * target)(0).real();
}

QubitOp project_to_physical(const QubitOp& rho) {
    Eigen::SelfAdjointEigenSolver<QubitOp> es(0.5 * (rho + rho.adjoint()));
    Eigen::Vector2d ev = es.eigenvalues().cwiseMax(1e-9);
    ev /= ev.sum();
    return es.eigenvectors() * ev.asDiagonal().toDenseMatrix().cast<Complex>() *
           es.eigenvectors().adjoint();
}

QubitOp extract_polarization_qubit(const DensityMatrix& rho) {
    const int l_max = rho.l_max();
    const int ir = mode_index({Sam::R, 0}, l_max);
    const int il = mode_index({Sam::L, 0}, l_max);
    QubitOp circ;
    circ << rho.matrix()(ir, ir), rho.matrix()(ir, il), rho.matrix()(il, ir),
        rho.matrix()(il, il);
    const double tr = circ.trace().real();
    if (tr < 1e-9)
        throw std::invalid_argument("no support on the l = 0 polarization subspace");
    // circular -> H/V basis change
    QubitOp basis;
    basis << Complex(1, 0), Complex(1, 0), Complex(0, -1), Complex(0, 1);
    basis *= 1.0 / std::sqrt(2.0);
    return (basis * circ * basis.adjoint()) / tr;
}

namespace {

using Params = std::array<double, 4>;

QubitOp rho_from_params(const Params& t) {
    QubitOp tri;
    tri << Complex(t[0], 0), Complex(0, 0), Complex(t[2], t[3]), Complex(t[1], 0);
    QubitOp rho = tri.adjoint() * tri;
    const double tr = rho.trace().real();
    if (tr < 1e-300) return 0.5 * QubitOp::Identity();
    return rho / tr;
}

// Lower-triangular T with T^dag T = rho (rho must be PSD).
Params params_from_rho(const QubitOp& rho) {
    QubitOp flip;
    flip << 0, 1, 1, 0;
    const QubitOp reversed = flip * rho * flip;
    Eigen::LLT<QubitOp> llt(reversed + 1e-12 * QubitOp::Identity());
    const QubitOp upper = flip * QubitOp(llt.matrixL()) * flip;  // rho = upper * upper^dag
    const QubitOp tri = upper.adjoint();
    return {tri(0, 0).real(), tri(1, 1).real(), tri(1, 0).real(), tri(1, 0).imag()};
}

struct NelderMeadRun {
    Params best;
    double value;
    int iterations;
    bool converged;
    std::vector<double> trace;
};

NelderMeadRun nelder_mead_maximize(const std::vector<CountRecord>& counts, Params start,
                                   int max_iters, double tol) {
    const auto f = [&](const Params& t) {
        return binomial_log_likelihood(rho_from_params(t), counts);
    };

    std::array<Params, 5> simplex;
    std::array<double, 5> value;
    simplex[0] = start;
    for (int i = 0; i < 4; ++i) {
        simplex[i + 1] = start;
        simplex[i + 1][i] += (std::abs(start[i]) > 1e-3) ? 0.05 * start[i] : 0.01;
    }
    for (int i = 0; i < 5; ++i) value[i] = f(simplex[i]);

    const auto order = [&] {
        std::array<int, 5> idx{0, 1, 2, 3, 4};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return value[a] > value[b]; });
        std::array<Params, 5> s;
        std::array<double, 5> v;
        for (int i = 0; i < 5; ++i) {
            s[i] = simplex[idx[i]];
            v[i] = value[idx[i]];
        }
        simplex = s;
        value = v;
    };
    order();

    NelderMeadRun run{simplex[0], value[0], 0, false, {value[0]}};
    for (int iter = 0; iter < max_iters; ++iter) {
        const double prev_best = value[0];

        Params centroid{};
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) centroid[k] += simplex[i][k] / 4.0;

        const auto lerp = [&](double c) {
            Params p;
            for (int k = 0; k < 4; ++k) p[k] = centroid[k] + c * (simplex[4][k] - centroid[k]);
            return p;
        };

        const Params reflected = lerp(-1.0);
        const double fr = f(reflected);
        if (fr > value[0]) {
            const Params expanded = lerp(-2.0);
            const double fe = f(expanded);
            if (fe > fr) {
                simplex[4] = expanded;
                value[4] = fe;
            } else {
                simplex[4] = reflected;
                value[4] = fr;
            }
        } else if (fr > value[3]) {
            simplex[4] = reflected;
            value[4] = fr;
        } else {
            const Params contracted = lerp(0.5);
            const double fc = f(contracted);
            if (fc > value[4]) {
                simplex[4] = contracted;
                value[4] = fc;
            } else {
                for (int i = 1; i < 5; ++i) {
                    for (int k = 0; k < 4; ++k)
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    value[i] = f(simplex[i]);
                }
            }
        }
        order();
        run.iterations = iter + 1;
        run.trace.push_back(value[0]);
        if (value[0] - prev_best < tol && iter > 10) {
            run.converged = true;
            break;
        }
    }
    run.best = simplex[0];
    run.value = value[0];
    return run;
}

} // namespace

TomographyResult mle_reconstruct(const std::vector<CountRecord>& counts, const MleOptions& opts) {
    std::uint64_t total_clicks = 0;
    for (const auto& c : counts) total_clicks += c.clicks;
    const QubitOp start_rho = total_clicks == 0 ? QubitOp(0.5 * QubitOp::Identity())
                                                : project_to_physical(linear_inversion(counts));
    const Params base = params_from_rho(start_rho);

    SplitMix64 rng(derive_stream_seed(opts.seed, 0x746f6d6fULL));
    std::vector<Params> starts{base};
    for (int r = 0; r < 3; ++r) {
        Params p = base;
        for (auto& x : p) x += 0.1 * (rng.uniform() - 0.5);
        starts.push_back(p);
    }

    NelderMeadRun best{};
    bool have_best = false;
    int total_iters = 0;
    for (const auto& s : starts) {
        NelderMeadRun run = nelder_mead_maximize(counts, s, opts.max_iters, opts.tol);
        total_iters += run.iterations;
        if (!have_best || run.value > best.value) {
            best = run;
            have_best = true;
        }
    }

    TomographyResult result;
    result.rho = rho_from_params(best.best);
    result.log_likelihood = best.value;
    result.iterations = total_iters;
    result.converged = best.converged;
    result.likelihood_trace = std::move(best.trace);
    return result;
}

FidelityReport state_fidelity_report(const std::vector<TomographyResult>& results,
                                     const std::vector<Qubit>& targets) {
    if (results.size() != targets.size() || results.size() != 4)
        throw std::invalid_argument("expected four reconstructions with matching targets");
    FidelityReport report;
    for (std::size_t i = 0; i < results.size(); ++i)
        report.fidelities.push_back(
            std::clamp(qubit_fidelity(results[i].rho, targets[i]), 0.0, 1.0));
    report.predicted_qber = qber_from_fidelities(report.fidelities);
    return report;
}

void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& counts) {
    out << "setting,shots,clicks\n";
    for (const auto& c : counts)
        out << to_string(c.setting) << ',' << c.shots << ',' << c.clicks << '\n';
}

std::vector<CountRecord> read_counts_csv(std::istream& in) {
    std::vector<CountRecord> counts;
    std::string line;
    if (!std::getline(in, line) || line.rfind("setting,shots,clicks", 0) != 0)
        throw std::invalid_argument("counts CSV: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string setting, shots, clicks;
        if (!std::getline(row, setting, ',') || !std::getline(row, shots, ',') ||
            !std::getline(row, clicks, ','))
            throw std::invalid_argument("counts CSV: malformed row: " + line);
        CountRecord rec{pol_from_string(setting), std::stoull(shots), std::stoull(clicks)};
        if (rec.clicks > rec.shots) throw std::invalid_argument("counts CSV: clicks > shots");
        counts.push_back(rec);
    }
    return counts;
}

} // namespace qkd::tomo

#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <vector>

#include "qkd/hilbert.hpp"

namespace qkd::tomo {

using Qubit = Eigen::Vector2cd;
using QubitOp = Eigen::Matrix2cd;

// One analysis setting: a rank-1 polarization projector on the decoded qubit,
// expressed in the H/V basis.
struct TomographySetting {
    Pol label;
    QubitOp projector;
};

struct CountRecord {
    Pol setting;
    std::uint64_t shots;
    std::uint64_t clicks;
};

struct TomographyResult {
    QubitOp rho;
    double log_likelihood;
    int iterations;
    bool converged;
    // Best log-likelihood after each accepted optimizer iteration.
    std::vector<double> likelihood_trace;
};

struct MleOptions {
    int max_iters = 5000;
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

// The six standard single-qubit settings {H, V, D, A, R, L}: three mutually
// unbiased projector pairs.
std::vector<TomographySetting> tomography_settings();

QubitOp pol_projector(Pol p);
Qubit pol_ket(Pol p);

// clicks ~ Binomial(shots, tr(P rho)) independently per setting.
std::vector<CountRecord> simulate_counts(const QubitOp& rho,
                                         const std::vector<TomographySetting>& settings,
                                         std::uint64_t shots_per_setting, SplitMix64& rng);

// Pauli-vector estimate 1/2 (I + sum_k r_k sigma_k) from frequency
// differences. Hermitian and trace one, but possibly non-physical.
QubitOp linear_inversion(const std::vector<CountRecord>& counts);

// Maximum-likelihood reconstruction over the Cholesky-parameterized physical
// set, optimized with restarted Nelder-Mead. The output is PSD with unit
// trace regardless of count noise.
TomographyResult mle_reconstruct(const std::vector<CountRecord>& counts,
                                 const MleOptions& opts = {});

double binomial_log_likelihood(const QubitOp& rho, const std::vector<CountRecord>& counts);

double qubit_fidelity(const QubitOp& rho, const Qubit& target);

// Nearest physical state: eigenvalues clipped to be non-negative, renormalized.
QubitOp project_to_physical(const QubitOp& rho);

// Polarization block at l = 0 of a full spin-orbit density matrix, converted
// to the H/V basis and renormalized by its trace.
QubitOp extract_polarization_qubit(const DensityMatrix& rho);

struct FidelityReport {
    std::vector<double> fidelities;
    double predicted_qber;
};

// Fidelity of each reconstruction to its target plus the resulting
// QBER = 1/4 sum_i (1 - F_i). Expects the four prepared states.
FidelityReport state_fidelity_report(const std::vector<TomographyResult>& results,
                                     const std::vector<Qubit>& targets);

// CSV exchange format: header "setting,shots,clicks".
void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& counts);
std::vector<CountRecord> read_counts_csv(std::istream& in);

} // namespace qkd::tomo

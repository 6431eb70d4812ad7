// Command-line front end: runs the QBER sweep, tomography, key exchange and
// HBT experiments and emits CSV/JSON artifacts for external plotting.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "qkd/protocol.hpp"
#include "qkd/tomography.hpp"

using json = nlohmann::ordered_json;
using namespace qkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;
constexpr int kExitInsufficientStats = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kDeg = M_PI / 180.0;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

SourceParams parse_source(const json& j) {
    check_keys(j, {"rep_rate", "mean_photon_mu", "g2", "eta_det", "dark_rate", "gate_seconds"},
               "source");
    SourceParams s;
    s.rep_rate = j.value("rep_rate", s.rep_rate);
    s.mean_photon_mu = j.value("mean_photon_mu", s.mean_photon_mu);
    s.g2 = j.value("g2", s.g2);
    s.eta_det = j.value("eta_det", s.eta_det);
    s.dark_rate = j.value("dark_rate", s.dark_rate);
    s.gate_seconds = j.value("gate_seconds", s.gate_seconds);
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("source: ") + e.what());
    }
    return s;
}

NoiseParams parse_noise(const json& j) {
    check_keys(j, {"depolarizing_p"}, "noise");
    NoiseParams n;
    n.depolarizing_p = j.value("depolarizing_p", 0.0);
    if (!(n.depolarizing_p >= 0.0 && n.depolarizing_p <= 1.0))
        throw ConfigError("noise: depolarizing_p must be in [0,1]");
    return n;
}

Encoding parse_encoding(const std::string& s) {
    if (s == "hybrid") return Encoding::Hybrid;
    if (s == "polarization") return Encoding::PolarizationOnly;
    throw ConfigError("unknown encoding '" + s + "' (expected hybrid|polarization)");
}

std::string encoding_name(Encoding e) {
    return e == Encoding::Hybrid ? "hybrid" : "polarization";
}

// All output is staged through a temp file so a failure never leaves a
// partial artifact behind.
void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("failed writing output file: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::vector<double> default_theta_deg() { return {0.0, 12.5, 25.0, 50.0, 75.0, 90.0}; }

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 1;
};

std::uint64_t effective_seed(const CommonArgs& args, const json& cfg) {
    if (args.seed_given) return args.seed;
    return cfg.value("seed", std::uint64_t{0});
}

// Runs one job per sweep point with at most `threads` in flight; output order
// and results are independent of the thread count.
template <typename Job>
std::vector<std::string> run_points(const std::vector<Job>& jobs, unsigned threads) {
    std::vector<std::string> rows(jobs.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = jobs[i]();
        return rows;
    }
    std::size_t next = 0;
    while (next < jobs.size()) {
        std::vector<std::pair<std::size_t, std::future<std::string>>> batch;
        for (unsigned t = 0; t < threads && next < jobs.size(); ++t, ++next)
            batch.emplace_back(next, std::async(std::launch::async, jobs[next]));
        for (auto& [idx, fut] : batch) rows[idx] = fut.get();
    }
    return rows;
}

int cmd_qber_sweep(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    check_keys(cfg,
               {"theta_deg", "encodings", "n_rounds", "source", "noise", "basis_bias",
                "sample_fraction", "seed"},
               "qber-sweep config");
    const std::vector<double> thetas = cfg.value("theta_deg", default_theta_deg());
    if (thetas.empty()) throw ConfigError("qber-sweep: theta_deg list must be non-empty");
    std::vector<Encoding> encodings;
    for (const auto& name :
         cfg.value("encodings", std::vector<std::string>{"hybrid", "polarization"}))
        encodings.push_back(parse_encoding(name));

    ProtocolConfig base;
    base.n_rounds = cfg.value("n_rounds", std::uint64_t{400'000});
    base.source = parse_source(cfg.value("source", json::object()));
    base.noise = parse_noise(cfg.value("noise", json::object()));
    base.basis_bias = cfg.value("basis_bias", 0.5);
    base.sample_fraction = cfg.value("sample_fraction", 1.0);
    base.seed = effective_seed(args, cfg);
    try {
        base.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("qber-sweep config: ") + e.what());
    }

    std::vector<std::function<std::string()>> jobs;
    std::size_t point = 0;
    for (Encoding enc : encodings) {
        for (double theta_deg : thetas) {
            ProtocolConfig pc = base;
            pc.encoding = enc;
            pc.theta = theta_deg * kDeg;
            pc.seed = derive_stream_seed(base.seed, point++);
            jobs.push_back([pc, theta_deg, enc] {
                const auto key = sift(run_session(pc));
                SplitMix64 rng = substream(pc.seed, 0xabcdefULL);
                const auto [report, rest] = estimate_qber(key, pc.sample_fraction, rng);
                const double kf = secret_key_fraction(std::min(report.qber, 0.5));
                std::ostringstream row;
                row.precision(10);
                row << theta_deg << ',' << encoding_name(enc) << ',' << report.qber << ','
                    << report.std_error << ',' << theoretical_qber(theta_deg * kDeg) << ','
                    << kf;
                return row.str();
            });
        }
    }

    const auto rows = run_points(jobs, args.threads);
    std::ostringstream out;
    out << "theta_deg,encoding,qber,std_err,theory_polarization,key_fraction\n";
    for (const auto& r : rows) out << r << '\n';
    write_file_atomic(args.out_path.empty() ? "qber_sweep.csv" : args.out_path, out.str());
    return kExitOk;
}

int cmd_tomography(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    check_keys(cfg, {"states", "theta_deg", "encodings", "shots", "noise", "seed", "max_iters",
                     "tol"},
               "tomography config");
    const std::vector<std::string> states =
        cfg.value("states", std::vector<std::string>{"H", "V", "R", "L"});
    if (states.empty()) throw ConfigError("tomography: states list must be non-empty");
    const std::vector<double> thetas = cfg.value("theta_deg", default_theta_deg());
    std::vector<Encoding> encodings;
    for (const auto& name :
         cfg.value("encodings", std::vector<std::string>{"hybrid", "polarization"}))
        encodings.push_back(parse_encoding(name));
    const auto shots = cfg.value("shots", std::uint64_t{100'000});
    if (shots < 1) throw ConfigError("tomography: shots must be >= 1");
    const NoiseParams noise = parse_noise(cfg.value("noise", json::object()));
    tomo::MleOptions mle;
    mle.max_iters = cfg.value("max_iters", mle.max_iters);
    mle.tol = cfg.value("tol", mle.tol);
    const std::uint64_t seed = effective_seed(args, cfg);

    // Prepared-state labels name the pre-encode polarization qubit.
    const auto basis_bit_for = [](const std::string& s) -> std::pair<Basis, int> {
        if (s == "H") return {Basis::Z, 0};
        if (s == "V") return {Basis::Z, 1};
        if (s == "R") return {Basis::Y, 0};
        if (s == "L") return {Basis::Y, 1};
        throw ConfigError("tomography: unknown state label '" + s + "' (expected H|V|R|L)");
    };
    for (const auto& s : states) basis_bit_for(s);

    const auto decode_qplate = qplate_operator({M_PI, 0.5, 0.0});
    const auto settings = tomo::tomography_settings();

    json results = json::array();
    std::ostringstream csv;
    csv << "state,theta_deg,encoding,fidelity\n";
    csv.precision(10);
    std::uint64_t combo = 0;
    for (Encoding enc : encodings) {
        for (const auto& state : states) {
            const auto [basis, bit] = basis_bit_for(state);
            for (double theta_deg : thetas) {
                const auto psi = alice_prepare(bit, basis, enc);
                DensityMatrix rho = channel_transmit(psi, theta_deg * kDeg, noise);
                if (enc == Encoding::Hybrid) rho = apply(decode_qplate, rho);
                const tomo::QubitOp qubit = tomo::extract_polarization_qubit(rho);

                SplitMix64 rng = substream(seed, combo++);
                const auto counts = tomo::simulate_counts(qubit, settings, shots, rng);
                tomo::MleOptions opts = mle;
                opts.seed = derive_stream_seed(seed, combo);
                const auto reconstruction = tomo::mle_reconstruct(counts, opts);
                const double f =
                    tomo::qubit_fidelity(reconstruction.rho, tomo::pol_ket(pol_from_string(state)));

                csv << state << ',' << theta_deg << ',' << encoding_name(enc) << ',' << f << '\n';
                json entry;
                entry["state"] = state;
                entry["theta_deg"] = theta_deg;
                entry["encoding"] = encoding_name(enc);
                entry["fidelity"] = f;
                entry["converged"] = reconstruction.converged;
                entry["log_likelihood"] = reconstruction.log_likelihood;
                json re = json::array(), im = json::array();
                for (int r = 0; r < 2; ++r) {
                    for (int c = 0; c < 2; ++c) {
                        re.push_back(reconstruction.rho(r, c).real());
                        im.push_back(reconstruction.rho(r, c).imag());
                    }
                }
                entry["rho_re"] = re;
                entry["rho_im"] = im;
                results.push_back(entry);
            }
        }
    }

    const std::string base = args.out_path.empty() ? "tomography" : args.out_path;
    write_file_atomic(base + ".csv", csv.str());
    write_file_atomic(base + ".json", results.dump(2) + "\n");
    return kExitOk;
}

int cmd_keygen(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    check_keys(cfg,
               {"n_rounds", "encoding", "theta_deg", "source", "noise", "basis_bias",
                "sample_fraction", "seed", "discard_multiphoton"},
               "keygen config");
    ProtocolConfig pc;
    pc.n_rounds = cfg.value("n_rounds", std::uint64_t{2'000'000});
    pc.encoding = parse_encoding(cfg.value("encoding", std::string("hybrid")));
    pc.theta = cfg.value("theta_deg", 0.0) * kDeg;
    pc.source = parse_source(cfg.value("source", json::object()));
    pc.noise = parse_noise(cfg.value("noise", json::object()));
    pc.basis_bias = cfg.value("basis_bias", 0.5);
    pc.sample_fraction = cfg.value("sample_fraction", 0.1);
    pc.seed = effective_seed(args, cfg);
    pc.discard_multiphoton = cfg.value("discard_multiphoton", false);
    try {
        pc.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("keygen config: ") + e.what());
    }

    const auto records = run_session(pc);
    std::uint64_t detected = 0, multiphoton = 0;
    for (const auto& r : records) {
        detected += r.detected;
        multiphoton += r.multiphoton;
    }
    auto key = sift(pc.discard_multiphoton ? [&] {
        std::vector<RoundRecord> kept;
        for (const auto& r : records)
            if (!r.multiphoton) kept.push_back(r);
        return kept;
    }() : records);
    if (key.size() == 0) throw std::runtime_error("keygen: empty sifted key");

    SplitMix64 rng = substream(pc.seed, 0xabcdefULL);
    const auto [report, remaining] = estimate_qber(key, pc.sample_fraction, rng);
    const bool abort = report.qber >= 0.11;
    const double kf = abort ? 0.0 : secret_key_fraction(std::min(report.qber, 0.5));

    json out;
    out["n_rounds"] = pc.n_rounds;
    out["encoding"] = encoding_name(pc.encoding);
    out["theta_deg"] = cfg.value("theta_deg", 0.0);
    out["detected_count"] = detected;
    out["multiphoton_count"] = multiphoton;
    out["sifted_length"] = key.size();
    out["qber"] = report.qber;
    out["qber_std_error"] = report.std_error;
    out["sample_size"] = report.sample_size;
    out["error_count"] = report.error_count;
    out["remaining_key_length"] = remaining.size();
    out["secret_key_fraction"] = kf;
    out["abort"] = abort;
    write_file_atomic(args.out_path.empty() ? "keygen.json" : args.out_path, out.dump(2) + "\n");
    return kExitOk;
}

int cmd_hbt(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    check_keys(cfg, {"n_pulses", "source", "seed"}, "hbt config");
    const auto n_pulses = cfg.value("n_pulses", std::uint64_t{1'000'000'000});
    const SourceParams source = parse_source(cfg.value("source", json::object()));
    SplitMix64 rng(derive_stream_seed(effective_seed(args, cfg), 0x68627421ULL));
    const auto result = hbt_g2_estimate(n_pulses, source, rng);

    json out;
    out["n_pulses"] = result.n_pulses;
    out["g2_estimate"] = result.g2_estimate;
    out["zero_delay_coincidences"] = result.zero_delay_coincidences;
    out["adjacent_coincidences"] = result.adjacent_coincidences;
    write_file_atomic(args.out_path.empty() ? "hbt.json" : args.out_path, out.dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotational-invariant BB84 simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    int (*handler)(const CommonArgs&) = nullptr;
    for (auto [name, fn, desc] :
         {std::tuple{"qber-sweep", &cmd_qber_sweep, "QBER vs platform rotation angle (CSV)"},
          std::tuple{"tomography", &cmd_tomography,
                     "state tomography with MLE reconstruction (CSV + JSON)"},
          std::tuple{"keygen", &cmd_keygen, "full BB84 key exchange report (JSON)"},
          std::tuple{"hbt", &cmd_hbt, "Hanbury-Brown-Twiss g2(0) estimate (JSON)"}}) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", args.config_path, "JSON configuration file");
        sub->add_option("--out", args.out_path, "output path");
        sub->add_option("--seed", args.seed, "master seed (overrides config)")
            ->each([&args](const std::string&) { args.seed_given = true; });
        sub->add_option("--threads", args.threads, "worker threads (speed only, never results)");
        sub->callback([&handler, fn = fn] { handler = fn; });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        return handler(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const InsufficientStatisticsError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInsufficientStats;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
}

// Monte Carlo simulator front end: one subcommand per experiment kind.

#include "rispar/errors.hpp"
#include "rispar/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

struct CliOptions {
    std::string config;
    std::string snr;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> estimators;
    std::vector<std::string> precoders;
    std::string sweep;
    bool paper_fidelity = false;
    std::optional<int> workers;
    std::optional<int> K, M, N, T, P;
    std::optional<double> kappa;
    std::optional<int> i_max;
    bool partition = false;
    std::string id;
};

void add_options(CLI::App* sub, CliOptions& o) {
    sub->add_option("--config", o.config, "JSON experiment file")->check(CLI::ExistingFile);
    sub->add_option("--snr", o.snr, "SNR grid in dB as start:step:stop");
    sub->add_option("--trials", o.trials, "Monte Carlo trials per point (default 200)");
    sub->add_option("--seed", o.seed, "base seed; trial t uses seed + t");
    sub->add_option("--out", o.out, "CSV output path (stdout when omitted)");
    sub->add_option("--estimators", o.estimators, "subset of als, vamp, genie")->delimiter(',');
    sub->add_option("--precoders", o.precoders, "subset of mrt, zf, mmse")->delimiter(',');
    sub->add_option("--sweep", o.sweep, "parameter sweep such as P=16,24,32 or N=16,32,64");
    sub->add_flag("--paper-fidelity", o.paper_fidelity, "run 2000 trials per point");
    sub->add_option("--workers", o.workers, "worker threads (default: hardware concurrency)");
    sub->add_option("--K", o.K, "base-station antennas");
    sub->add_option("--M", o.M, "users");
    sub->add_option("--N", o.N, "surface elements");
    sub->add_option("--T", o.T, "pilot slots per configuration");
    sub->add_option("--P", o.P, "training phase configurations");
    sub->add_option("--kappa", o.kappa, "ALS/VAMP stopping threshold (default 1e-5)");
    sub->add_option("--imax", o.i_max, "maximum outer iterations (default 20)");
    sub->add_flag("--partition", o.partition, "split N into groups when min(M,K) < N");
    sub->add_option("--id", o.id, "experiment id written to the CSV");
}

rispar::ExperimentSpec build_spec(const std::string& kind, const CliOptions& o) {
    rispar::ExperimentSpec spec =
        o.config.empty() ? rispar::ExperimentSpec{} : rispar::load_spec_file(o.config);
    spec.kind = rispar::parse_kind(kind);
    if (o.config.empty()) {
        spec.id = kind;
        if (spec.kind == rispar::ExperimentKind::Nmse) spec.estimators = {"als", "vamp", "genie"};
    }
    if (!o.id.empty()) spec.id = o.id;
    if (!o.snr.empty()) spec.snr_grid_db = rispar::parse_snr_range(o.snr);
    if (o.paper_fidelity) spec.cfg.trials = 2000;
    if (o.trials) spec.cfg.trials = *o.trials;
    if (o.seed) spec.cfg.seed = *o.seed;
    if (!o.out.empty()) spec.output_path = o.out;
    if (!o.estimators.empty()) spec.estimators = o.estimators;
    if (!o.precoders.empty()) spec.precoders = o.precoders;
    if (!o.sweep.empty()) spec.sweep = rispar::parse_sweep(o.sweep);
    if (o.K) spec.cfg.K = *o.K;
    if (o.M) spec.cfg.M = *o.M;
    if (o.N) spec.cfg.N = *o.N;
    if (o.T) spec.cfg.T = *o.T;
    if (o.P) spec.cfg.P = *o.P;
    if (o.kappa) spec.stop.kappa = *o.kappa;
    if (o.i_max) spec.stop.i_max = *o.i_max;
    if (o.partition) spec.partition = true;
    spec.workers = o.workers ? *o.workers
                             : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator for PARAFAC channel estimation with a reflecting surface"};
    app.require_subcommand(1);
    CliOptions opts;
    for (const char* kind : {"nmse", "crb", "sumrate"}) {
        const std::string help = std::string(kind) == "nmse"  ? "NMSE versus SNR"
                                 : std::string(kind) == "crb" ? "ALS NMSE against the CRB"
                                                              : "downlink sum rate";
        add_options(app.add_subcommand(kind, help), opts);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const std::string kind = app.get_subcommands().front()->get_name();
        const rispar::ExperimentSpec spec = build_spec(kind, opts);
        const auto rows = rispar::run_experiment(spec);
        if (spec.output_path.empty()) std::cout << rispar::format_csv(rows);
        else std::cerr << "wrote " << rows.size() << " rows to " << spec.output_path << '\n';
    } catch (const rispar::FeasibilityError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

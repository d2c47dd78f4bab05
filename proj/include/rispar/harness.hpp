#pragma once

// Seeded Monte Carlo experiments: NMSE curves, CRB comparison and downlink
// sum rate, aggregated per (SNR, sweep value) and written as CSV.
//
// Trial t of every grid point reseeds a fresh generator with seed + t and
// draws channels before noise, so all SNR points share the same channel
// realizations and the output does not depend on the number of worker threads.

#include "rispar/als.hpp"
#include "rispar/channel_model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rispar {

enum class ExperimentKind { Nmse, Crb, SumRate };

std::string kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& name);

struct Sweep {
    std::string param;  ///< "P" or "N"
    std::vector<int> values;
};

struct ExperimentSpec {
    std::string id = "experiment";
    ExperimentKind kind = ExperimentKind::Nmse;
    SystemConfig cfg;
    std::vector<double> snr_grid_db{0.0, 5.0, 10.0, 15.0, 20.0};
    std::vector<std::string> estimators{"als"};  ///< subset of {als, vamp, genie}
    std::vector<std::string> precoders{"mrt", "zf", "mmse"};
    std::optional<Sweep> sweep;
    std::string output_path;
    StoppingRule stop;
    bool partition = false;  ///< split N into sub-RIS groups when min(M,K) < N
    int workers = 1;
    double pu = 1.0;
    double phase_kappa = 1e-5;
    int phase_t_max = 200;
};

struct ResultRow {
    std::string experiment;
    std::string label;
    double snr_db = 0.0;
    std::optional<int> sweep;
    std::string metric;
    double value = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

/// Empty when the experiment can run; otherwise one message per violation.
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

/// Throws FeasibilityError listing the violations when validate_spec fails.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// Configuration for the swept value (or the base configuration).
SystemConfig config_for_sweep(const SystemConfig& base, const std::optional<Sweep>& sweep,
                              std::size_t index);

// Sub-RIS partitioned estimation: each group gets its own training round in
// which only that group's elements are switched on.

struct PartitionedTraining {
    std::vector<IndexGroup> plan;
    std::vector<ComplexMatrix> phi;  ///< per group, min(P, size) x size
    std::vector<RxTensor> rx;
};

PartitionedTraining synthesize_partitioned(const ChannelPair& ch, const SystemConfig& cfg,
                                           const std::vector<IndexGroup>& plan, Rng& rng);

using GroupEstimator = std::function<EstimateResult(const RxTensor&, const ComplexMatrix&)>;

/// Estimates each group and concatenates the Hr column blocks and Hs row
/// blocks in plan order. The default estimator is als_estimate.
EstimateResult estimate_partitioned(const std::vector<RxTensor>& rx,
                                    const std::vector<ComplexMatrix>& phi,
                                    const std::vector<IndexGroup>& plan,
                                    const StoppingRule& stop = {},
                                    const GroupEstimator& estimator = {});

inline constexpr const char* kCsvHeader = "experiment,label,snr_db,sweep,metric,value,trials,seed";

std::string format_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);

/// Parses a JSON experiment document; see README for the keys.
ExperimentSpec spec_from_json_text(const std::string& text);
ExperimentSpec load_spec_file(const std::string& path);

/// "start:step:stop" inclusive grid.
std::vector<double> parse_snr_range(const std::string& text);

/// "P=16,24,32" -> Sweep.
Sweep parse_sweep(const std::string& text);

}  // namespace rispar

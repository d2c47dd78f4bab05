#include "rispar/harness.hpp"

#include "rispar/crb.hpp"
#include "rispar/errors.hpp"
#include "rispar/precoding.hpp"
#include "rispar/vamp.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace rispar {

std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Nmse: return "nmse";
        case ExperimentKind::Crb: return "crb";
        case ExperimentKind::SumRate: return "sumrate";
    }
    return "?";
}

ExperimentKind parse_kind(const std::string& name) {
    if (name == "nmse") return ExperimentKind::Nmse;
    if (name == "crb") return ExperimentKind::Crb;
    if (name == "sumrate") return ExperimentKind::SumRate;
    throw RejectedInput("unknown experiment kind '" + name + "' (expected nmse, crb or sumrate)");
}

SystemConfig config_for_sweep(const SystemConfig& base, const std::optional<Sweep>& sweep,
                              std::size_t index) {
    SystemConfig cfg = base;
    if (!sweep) return cfg;
    const int v = sweep->values.at(index);
    if (sweep->param == "P") {
        cfg.P = v;
    } else if (sweep->param == "N") {
        cfg.N = v;
    } else {
        throw RejectedInput("sweep parameter must be P or N, got '" + sweep->param + "'");
    }
    return cfg;
}

namespace {

std::size_t sweep_count(const ExperimentSpec& spec) {
    return spec.sweep ? spec.sweep->values.size() : 1;
}

bool only_dimension_violation(const FeasibilityReport& rep) {
    return !rep.suggested_partition.empty() && rep.violations.size() == 1;
}

bool needs_partition(const SystemConfig& cfg) { return std::min(cfg.M, cfg.K) < cfg.N; }

// Per-group P and feasibility for partitioned training.
int group_p(const SystemConfig& cfg, int size) { return std::min(cfg.P, size); }

std::string check_group(const SystemConfig& cfg, const IndexGroup& g, std::size_t index) {
    SystemConfig sub = cfg;
    sub.N = g.size;
    sub.P = group_p(cfg, g.size);
    const FeasibilityReport rep = feasibility_check(sub);
    if (rep.feasible) return {};
    return "group " + std::to_string(index) + " (elements " + std::to_string(g.begin) + ".." +
           std::to_string(g.begin + g.size - 1) + "): " + rep.violations.front();
}

}  // namespace

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
    std::vector<std::string> out;
    if (spec.snr_grid_db.empty()) out.emplace_back("SNR grid is empty");
    for (std::size_t i = 1; i < spec.snr_grid_db.size(); ++i) {
        if (!(spec.snr_grid_db[i] > spec.snr_grid_db[i - 1])) {
            out.emplace_back("SNR grid must be strictly increasing");
            break;
        }
    }
    for (double s : spec.snr_grid_db) {
        if (!std::isfinite(s)) out.emplace_back("SNR grid contains a non-finite value");
    }
    if (spec.cfg.trials < 1) out.emplace_back("trials must be at least 1");
    if (spec.workers < 1) out.emplace_back("workers must be at least 1");
    if (!(spec.stop.kappa > 0.0)) out.emplace_back("kappa must be positive");
    if (spec.stop.i_max < 1) out.emplace_back("i_max must be at least 1");
    if (!(spec.pu > 0.0)) out.emplace_back("pu must be positive");

    const std::vector<std::string> known_est{"als", "vamp", "genie"};
    for (const auto& e : spec.estimators) {
        if (std::find(known_est.begin(), known_est.end(), e) == known_est.end()) {
            out.push_back("unknown estimator '" + e + "'");
        }
    }
    if (spec.estimators.empty()) out.emplace_back("no estimator selected");
    if (spec.kind == ExperimentKind::SumRate) {
        for (const auto& p : spec.precoders) {
            try {
                parse_scheme(p);
            } catch (const RejectedInput& e) {
                out.emplace_back(e.what());
            }
        }
        if (spec.precoders.empty()) out.emplace_back("no precoder selected");
        if (std::find(spec.estimators.begin(), spec.estimators.end(), "genie") !=
            spec.estimators.end()) {
            out.emplace_back("genie estimator is not available for sum-rate experiments");
        }
    }

    if (spec.sweep) {
        if (spec.sweep->param != "P" && spec.sweep->param != "N") {
            out.push_back("sweep parameter must be P or N, got '" + spec.sweep->param + "'");
            return out;
        }
        if (spec.sweep->values.empty()) out.emplace_back("sweep has no values");
    }
    for (std::size_t s = 0; s < sweep_count(spec); ++s) {
        const SystemConfig cfg = config_for_sweep(spec.cfg, spec.sweep, s);
        const std::string prefix =
            spec.sweep ? spec.sweep->param + "=" + std::to_string(spec.sweep->values[s]) + ": "
                       : std::string();
        const FeasibilityReport rep = feasibility_check(cfg);
        if (rep.feasible) continue;
        if (spec.partition && needs_partition(cfg)) {
            // Monolithic violations that partitioning does not fix are still errors.
            if (cfg.P > cfg.N) out.push_back(prefix + "P <= N violated");
            if (cfg.T < cfg.M) out.push_back(prefix + "T >= M violated");
            const auto plan = partition_plan(cfg.N, cfg.M, cfg.K);
            for (std::size_t g = 0; g < plan.size(); ++g) {
                const std::string msg = check_group(cfg, plan[g], g);
                if (!msg.empty()) out.push_back(prefix + msg);
            }
            if (std::find(spec.estimators.begin(), spec.estimators.end(), "genie") !=
                spec.estimators.end()) {
                out.push_back(prefix + "genie estimator does not support partitioning");
            }
            if (spec.kind == ExperimentKind::Crb) {
                out.push_back(prefix + "CRB experiments require min(M,K) >= N");
            }
            continue;
        }
        for (const auto& v : rep.violations) out.push_back(prefix + v);
        if (only_dimension_violation(rep) && !spec.partition) {
            out.push_back(prefix + "enable partitioned estimation to split N into groups");
        }
    }
    return out;
}

PartitionedTraining synthesize_partitioned(const ChannelPair& ch, const SystemConfig& cfg,
                                           const std::vector<IndexGroup>& plan, Rng& rng) {
    PartitionedTraining out;
    out.plan = plan;
    for (const auto& g : plan) {
        if (g.begin < 0 || g.size < 1 || g.begin + g.size > ch.hr.cols()) {
            throw RejectedInput("synthesize_partitioned: group outside the surface");
        }
        SystemConfig sub = cfg;
        sub.N = g.size;
        sub.P = group_p(cfg, g.size);
        const TrainingSet tr = gen_training(sub);
        const ChannelPair part{ch.hr.middleCols(g.begin, g.size), ch.hs.middleRows(g.begin, g.size)};
        out.rx.push_back(synthesize_rx(part, tr, sub, rng));
        out.phi.push_back(tr.phi);
    }
    return out;
}

EstimateResult estimate_partitioned(const std::vector<RxTensor>& rx,
                                    const std::vector<ComplexMatrix>& phi,
                                    const std::vector<IndexGroup>& plan, const StoppingRule& stop,
                                    const GroupEstimator& estimator) {
    if (rx.size() != plan.size() || phi.size() != plan.size() || plan.empty()) {
        throw RejectedInput("estimate_partitioned: one observation and Phi per group required");
    }
    int n_total = 0;
    for (const auto& g : plan) n_total += g.size;
    const auto k = static_cast<Eigen::Index>(rx.front().ztilde.dim_i());
    const auto m = static_cast<Eigen::Index>(rx.front().ztilde.dim_j());

    EstimateResult out;
    out.hr = ComplexMatrix(k, n_total);
    out.hs = ComplexMatrix(n_total, m);
    out.converged = true;
    int offset = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const IndexGroup& g = plan[i];
        if (g.size > std::min(k, m) || phi[i].cols() != g.size) {
            throw FeasibilityError("estimate_partitioned: group " + std::to_string(i) +
                                   " of size " + std::to_string(g.size) +
                                   " is infeasible for min(M,K) = " +
                                   std::to_string(std::min(k, m)));
        }
        EstimateResult r;
        try {
            r = estimator ? estimator(rx[i], phi[i]) : als_estimate(rx[i], phi[i], stop);
        } catch (const std::exception& e) {
            throw FeasibilityError("estimate_partitioned: group " + std::to_string(i) +
                                   " failed: " + e.what());
        }
        out.hr.middleCols(offset, g.size) = r.hr;
        out.hs.middleRows(offset, g.size) = r.hs;
        out.iterations = std::max(out.iterations, r.iterations);
        out.converged = out.converged && r.converged;
        offset += g.size;
    }
    return out;
}

namespace {

using MetricKey = std::pair<std::string, std::string>;  // label, metric
using MetricMap = std::map<MetricKey, double>;

struct Observation {
    bool partitioned = false;
    TrainingSet training;
    RxTensor rx;
    PartitionedTraining parts;
};

Observation observe(const ChannelPair& ch, const SystemConfig& cfg, bool partition, Rng& rng) {
    Observation obs;
    if (partition && needs_partition(cfg)) {
        obs.partitioned = true;
        obs.parts = synthesize_partitioned(ch, cfg, partition_plan(cfg.N, cfg.M, cfg.K), rng);
    } else {
        obs.training = gen_training(cfg);
        obs.rx = synthesize_rx(ch, obs.training, cfg, rng);
    }
    return obs;
}

EstimateResult estimate(const std::string& name, const Observation& obs, double sigma2,
                        const StoppingRule& stop) {
    GroupEstimator fn;
    if (name == "als") {
        fn = [&](const RxTensor& rx, const ComplexMatrix& phi) {
            return als_estimate(rx, phi, stop);
        };
    } else if (name == "vamp") {
        fn = [&, sigma2](const RxTensor& rx, const ComplexMatrix& phi) {
            return vamp_estimate(rx, phi, VampPriors::standard(static_cast<int>(phi.cols())),
                                 sigma2, stop);
        };
    } else {
        throw RejectedInput("estimator '" + name + "' cannot run blind");
    }
    if (obs.partitioned) return estimate_partitioned(obs.parts.rx, obs.parts.phi, obs.parts.plan, stop, fn);
    return fn(obs.rx, obs.training.phi);
}

// NMSE of an estimate after aligning its scaling to the reference. With
// free_only the first Hs column (fixed by the gauge) is excluded.
void record_nmse(MetricMap& out, const std::string& label, const EstimateResult& est,
                 const ChannelPair& reference, bool free_only) {
    const ChannelPair fixed = remove_ambiguity(est.hr, est.hs, reference);
    out[{label, "nmse_hr"}] = nmse(reference.hr, fixed.hr);
    if (free_only) {
        const Eigen::Index c = reference.hs.cols() - 1;
        out[{label, "nmse_hs"}] =
            c > 0 ? nmse(reference.hs.rightCols(c), fixed.hs.rightCols(c)) : 0.0;
    } else {
        out[{label, "nmse_hs"}] = nmse(reference.hs, fixed.hs);
    }
}

void record_genie(MetricMap& out, const Observation& obs, const ChannelPair& reference,
                  bool free_only) {
    const EstimateResult hr_only = genie_ls(obs.rx, obs.training.phi, KnownChannel::Hs, reference);
    const EstimateResult hs_only = genie_ls(obs.rx, obs.training.phi, KnownChannel::Hr, reference);
    out[{"genie", "nmse_hr"}] = nmse(reference.hr, hr_only.hr);
    if (free_only) {
        const Eigen::Index c = reference.hs.cols() - 1;
        out[{"genie", "nmse_hs"}] =
            c > 0 ? nmse(reference.hs.rightCols(c), hs_only.hs.rightCols(c)) : 0.0;
    } else {
        out[{"genie", "nmse_hs"}] = nmse(reference.hs, hs_only.hs);
    }
}

struct PerfectCsi {
    ComplexMatrix h;  ///< true cascaded channel under its own optimized phases
};

void record_rates(MetricMap& out, const ExperimentSpec& spec, const std::string& est_label,
                  const EstimateResult& est, const ChannelPair& truth, const PerfectCsi& perfect,
                  double sigma2, bool with_perfect) {
    const PhaseOptimization ph =
        optimize_phase(est.hr, est.hs, spec.phase_kappa, spec.phase_t_max);
    const ComplexMatrix h_hat = effective_channel(est.hr, est.hs, ph.phi);
    const ComplexMatrix h_true = effective_channel(truth.hr, truth.hs, ph.phi);
    for (const auto& name : spec.precoders) {
        const PrecoderSpec ps{parse_scheme(name), spec.pu, sigma2};
        const ComplexMatrix g = precoder(h_hat, ps);
        out[{name + "-" + est_label, "sum_rate"}] = rates(h_true, h_hat, g, ps).sum_rate;
        if (with_perfect) {
            const ComplexMatrix g_true = precoder(perfect.h, ps);
            out[{name + "-perfect", "sum_rate"}] = rates_perfect(perfect.h, g_true, ps).sum_rate;
        }
    }
}

// All SNR points of one (sweep value, trial) pair.
std::vector<MetricMap> run_trial(const ExperimentSpec& spec, const SystemConfig& cfg, int trial) {
    std::vector<MetricMap> out(spec.snr_grid_db.size());
    std::optional<std::pair<double, double>> unit_crb;  // bounds at sigma2 = 1
    std::optional<PerfectCsi> perfect;
    const bool free_only = spec.kind == ExperimentKind::Crb;

    for (std::size_t s = 0; s < spec.snr_grid_db.size(); ++s) {
        SystemConfig c = cfg;
        c.snr_db = spec.snr_grid_db[s];
        c.noiseless = false;
        const double sigma2 = c.noise_var();
        Rng rng(spec.cfg.seed + static_cast<std::uint64_t>(trial));
        const ChannelPair truth = gen_channels(c, rng);
        const Observation obs = observe(truth, c, spec.partition, rng);
        const ChannelPair reference = free_only ? fix_first_column(truth) : truth;

        MetricMap& m = out[s];
        for (const auto& name : spec.estimators) {
            if (name == "genie") {
                record_genie(m, obs, reference, free_only);
                continue;
            }
            const EstimateResult est = estimate(name, obs, sigma2, spec.stop);
            switch (spec.kind) {
                case ExperimentKind::Nmse:
                case ExperimentKind::Crb:
                    record_nmse(m, name, est, reference, free_only);
                    break;
                case ExperimentKind::SumRate: {
                    if (!perfect) {
                        const PhaseOptimization ph =
                            optimize_phase(truth.hr, truth.hs, spec.phase_kappa, spec.phase_t_max);
                        perfect = PerfectCsi{effective_channel(truth.hr, truth.hs, ph.phi)};
                    }
                    record_rates(m, spec, name, est, truth, *perfect, sigma2,
                                 name == spec.estimators.front());
                    break;
                }
            }
        }
        if (spec.kind == ExperimentKind::Crb) {
            if (!unit_crb) unit_crb = crb_nmse_bounds(truth, obs.training.phi, 1.0);
            m[{"crb", "crb_hr"}] = unit_crb->first * sigma2;
            m[{"crb", "crb_hs"}] = unit_crb->second * sigma2;
        }
    }
    return out;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
    const std::vector<std::string> violations = validate_spec(spec);
    if (!violations.empty()) {
        std::string msg = "experiment '" + spec.id + "' is infeasible:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw FeasibilityError(msg);
    }
    const std::size_t n_sweep = sweep_count(spec);
    const auto n_trials = static_cast<std::size_t>(spec.cfg.trials);
    const std::size_t n_jobs = n_sweep * n_trials;

    // results[sweep][trial][snr]
    std::vector<std::vector<std::vector<MetricMap>>> results(
        n_sweep, std::vector<std::vector<MetricMap>>(n_trials));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= n_jobs) return;
            const std::size_t sw = job / n_trials;
            const std::size_t tr = job % n_trials;
            try {
                results[sw][tr] = run_trial(spec, config_for_sweep(spec.cfg, spec.sweep, sw),
                                            static_cast<int>(tr));
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_jobs);
                return;
            }
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::max(1, spec.workers));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(n_workers, n_jobs); ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<ResultRow> rows;
    for (std::size_t s = 0; s < spec.snr_grid_db.size(); ++s) {
        for (std::size_t sw = 0; sw < n_sweep; ++sw) {
            std::map<MetricKey, double> sums;
            for (std::size_t tr = 0; tr < n_trials; ++tr) {
                for (const auto& [key, value] : results[sw][tr][s]) sums[key] += value;
            }
            for (const auto& [key, total] : sums) {
                ResultRow row;
                row.experiment = spec.id;
                row.label = key.first;
                row.snr_db = spec.snr_grid_db[s];
                if (spec.sweep) row.sweep = spec.sweep->values[sw];
                row.metric = key.second;
                row.value = total / static_cast<double>(n_trials);
                row.trials = spec.cfg.trials;
                row.seed = spec.cfg.seed;
                rows.push_back(std::move(row));
            }
        }
    }
    if (!spec.output_path.empty()) write_csv(rows, spec.output_path);
    return rows;
}

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.label << ',' << format_number(r.snr_db) << ','
           << (r.sweep ? std::to_string(*r.sweep) : std::string()) << ',' << r.metric << ','
           << format_number(r.value) << ',' << r.trials << ',' << r.seed << '\n';
    }
    return os.str();
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RejectedInput("cannot open '" + path + "' for writing");
    f << format_csv(rows);
    if (!f) throw RejectedInput("failed writing '" + path + "'");
}

std::vector<double> parse_snr_range(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw RejectedInput("SNR range '" + text + "': '" + item + "' is not a number");
        }
    }
    if (parts.size() != 3) throw RejectedInput("SNR range must be start:step:stop, got '" + text + "'");
    const double start = parts[0], step = parts[1], stop = parts[2];
    if (!(step > 0.0) || stop < start) {
        throw RejectedInput("SNR range '" + text + "' needs a positive step and stop >= start");
    }
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) grid.push_back(start + static_cast<double>(i) * step);
    return grid;
}

Sweep parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw RejectedInput("sweep must look like P=16,24,32, got '" + text + "'");
    }
    Sweep sw;
    sw.param = text.substr(0, eq);
    std::stringstream ss(text.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            sw.values.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw RejectedInput("sweep value '" + item + "' is not an integer");
        }
    }
    if (sw.values.empty()) throw RejectedInput("sweep '" + text + "' has no values");
    return sw;
}

ExperimentSpec spec_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw RejectedInput(std::string("experiment config: ") + e.what());
    }
    if (!j.is_object()) throw RejectedInput("experiment config must be a JSON object");
    ExperimentSpec spec;
    try {
        spec.id = j.value("id", spec.id);
        if (j.contains("kind")) spec.kind = parse_kind(j.at("kind").get<std::string>());
        spec.cfg.K = j.value("K", spec.cfg.K);
        spec.cfg.M = j.value("M", spec.cfg.M);
        spec.cfg.N = j.value("N", spec.cfg.N);
        spec.cfg.T = j.value("T", spec.cfg.T);
        spec.cfg.P = j.value("P", spec.cfg.P);
        spec.cfg.trials = j.value("trials", spec.cfg.trials);
        spec.cfg.seed = j.value("seed", spec.cfg.seed);
        if (j.contains("snr_db")) {
            const auto& s = j.at("snr_db");
            spec.snr_grid_db = s.is_string() ? parse_snr_range(s.get<std::string>())
                                             : s.get<std::vector<double>>();
        }
        if (j.contains("estimators")) spec.estimators = j.at("estimators").get<std::vector<std::string>>();
        if (j.contains("precoders")) spec.precoders = j.at("precoders").get<std::vector<std::string>>();
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.is_string()) {
                spec.sweep = parse_sweep(s.get<std::string>());
            } else {
                spec.sweep = Sweep{s.at("param").get<std::string>(),
                                   s.at("values").get<std::vector<int>>()};
            }
        }
        spec.output_path = j.value("output", spec.output_path);
        spec.stop.kappa = j.value("kappa", spec.stop.kappa);
        spec.stop.i_max = j.value("i_max", spec.stop.i_max);
        spec.partition = j.value("partition", spec.partition);
        spec.workers = j.value("workers", spec.workers);
        spec.pu = j.value("pu", spec.pu);
    } catch (const nlohmann::json::exception& e) {
        throw RejectedInput(std::string("experiment config: ") + e.what());
    }
    return spec;
}

ExperimentSpec load_spec_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw RejectedInput("cannot open experiment config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return spec_from_json_text(ss.str());
}

}  // namespace rispar

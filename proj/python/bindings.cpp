#include "rispar/als.hpp"
#include "rispar/channel_model.hpp"
#include "rispar/crb.hpp"
#include "rispar/errors.hpp"
#include "rispar/harness.hpp"
#include "rispar/precoding.hpp"
#include "rispar/vamp.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

namespace py = pybind11;
using namespace rispar;

namespace {

using CArray = py::array_t<Complex, py::array::f_style | py::array::forcecast>;

// K x M x P arrays share the column-major layout of ThreeWayTensor.
py::array_t<Complex> to_array(const ThreeWayTensor& z) {
    py::array_t<Complex, py::array::f_style> out({z.dim_i(), z.dim_j(), z.dim_k()});
    std::copy(z.data().begin(), z.data().end(), out.mutable_data());
    return out;
}

RxTensor to_rx(const CArray& a) {
    if (a.ndim() != 3) throw RejectedInput("observation must be a K x M x P array");
    RxTensor rx;
    rx.ztilde = ThreeWayTensor(a.shape(0), a.shape(1), a.shape(2));
    const Complex* src = a.data();
    for (std::size_t p = 0; p < rx.ztilde.dim_k(); ++p)
        for (std::size_t m = 0; m < rx.ztilde.dim_j(); ++m)
            for (std::size_t k = 0; k < rx.ztilde.dim_i(); ++k) rx.ztilde(k, m, p) = *src++;
    return rx;
}

py::dict estimate_dict(const EstimateResult& r) {
    py::dict d;
    d["hr"] = r.hr;
    d["hs"] = r.hs;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["residual_trace"] = r.residual_trace;
    return d;
}

SystemConfig make_config(int K, int M, int N, int T, int P, double snr_db, bool noiseless) {
    SystemConfig cfg;
    cfg.K = K;
    cfg.M = M;
    cfg.N = N;
    cfg.T = T;
    cfg.P = P;
    cfg.snr_db = snr_db;
    cfg.noiseless = noiseless;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tensor-based cascaded channel estimation for surface-assisted multi-user MISO";

    py::register_exception<FeasibilityError>(m, "FeasibilityError", PyExc_RuntimeError);
    py::register_exception<SingularityError>(m, "SingularityError", PyExc_RuntimeError);
    py::register_exception<AmbiguityError>(m, "AmbiguityError", PyExc_RuntimeError);
    py::register_exception<PrecoderInfeasible>(m, "PrecoderInfeasible", PyExc_RuntimeError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);

    m.def(
        "simulate",
        [](int K, int M, int N, int T, int P, double snr_db, bool noiseless, std::uint64_t seed) {
            const SystemConfig cfg = make_config(K, M, N, T, P, snr_db, noiseless);
            Rng rng(seed);
            const ChannelPair ch = gen_channels(cfg, rng);
            const TrainingSet tr = gen_training(cfg);
            const RxTensor rx = synthesize_rx(ch, tr, cfg, rng);
            py::dict d;
            d["hr"] = ch.hr;
            d["hs"] = ch.hs;
            d["phi"] = tr.phi;
            d["ztilde"] = to_array(rx.ztilde);
            d["noise_var"] = cfg.noise_var();
            return d;
        },
        py::arg("K"), py::arg("M"), py::arg("N"), py::arg("T"), py::arg("P"),
        py::arg("snr_db") = 10.0, py::arg("noiseless") = false, py::arg("seed") = 1,
        "Draw channels, training and the K x M x P observation after pilot removal.");

    m.def(
        "feasibility",
        [](int K, int M, int N, int T, int P) {
            const FeasibilityReport rep = feasibility_check(make_config(K, M, N, T, P, 10.0, false));
            py::list groups;
            for (const IndexGroup& g : rep.suggested_partition) groups.append(py::make_tuple(g.begin, g.size));
            py::dict d;
            d["feasible"] = rep.feasible;
            d["violations"] = rep.violations;
            d["suggested_partition"] = groups;
            return d;
        },
        py::arg("K"), py::arg("M"), py::arg("N"), py::arg("T"), py::arg("P"));

    m.def("dft_rows", &dft_rows, py::arg("rows"), py::arg("n"));
    m.def(
        "compose_tensor",
        [](const ComplexMatrix& hr, const ComplexMatrix& hs, const ComplexMatrix& phi) {
            return to_array(compose_tensor(hr, hs, phi));
        },
        py::arg("hr"), py::arg("hs"), py::arg("phi"));

    m.def(
        "als_estimate",
        [](const CArray& z, const ComplexMatrix& phi, double kappa, int i_max) {
            return estimate_dict(als_estimate(to_rx(z), phi, {kappa, i_max}));
        },
        py::arg("ztilde"), py::arg("phi"), py::arg("kappa") = 1e-5, py::arg("i_max") = 20);

    m.def(
        "vamp_estimate",
        [](const CArray& z, const ComplexMatrix& phi, double sigma2, double kappa, int i_max) {
            const int n = static_cast<int>(phi.cols());
            return estimate_dict(
                vamp_estimate(to_rx(z), phi, VampPriors::standard(n), sigma2, {kappa, i_max}));
        },
        py::arg("ztilde"), py::arg("phi"), py::arg("sigma2"), py::arg("kappa") = 1e-5,
        py::arg("i_max") = 20);

    m.def(
        "remove_ambiguity",
        [](const ComplexMatrix& hr_hat, const ComplexMatrix& hs_hat, const ComplexMatrix& hr,
           const ComplexMatrix& hs) {
            const ChannelPair f = remove_ambiguity(hr_hat, hs_hat, {hr, hs});
            return py::make_tuple(f.hr, f.hs);
        },
        py::arg("hr_hat"), py::arg("hs_hat"), py::arg("hr"), py::arg("hs"));

    m.def("nmse", &nmse, py::arg("truth"), py::arg("estimate"));

    m.def(
        "crb_nmse_bounds",
        [](const ComplexMatrix& hr, const ComplexMatrix& hs, const ComplexMatrix& phi,
           double sigma2) { return crb_nmse_bounds({hr, hs}, phi, sigma2); },
        py::arg("hr"), py::arg("hs"), py::arg("phi"), py::arg("sigma2"));

    m.def(
        "optimize_phase",
        [](const ComplexMatrix& hr, const ComplexMatrix& hs, double kappa, int t_max) {
            const PhaseOptimization opt = optimize_phase(hr, hs, kappa, t_max);
            py::dict d;
            d["phi"] = opt.phi;
            d["v"] = opt.v.v;
            d["iterations"] = opt.iterations;
            d["objective_trace"] = opt.objective_trace;
            return d;
        },
        py::arg("hr"), py::arg("hs"), py::arg("kappa") = 1e-5, py::arg("t_max") = 200);

    m.def(
        "precoder",
        [](const ComplexMatrix& h_hat, const std::string& scheme, double pu, double sigma2) {
            return precoder(h_hat, {parse_scheme(scheme), pu, sigma2});
        },
        py::arg("h_hat"), py::arg("scheme"), py::arg("pu") = 1.0, py::arg("sigma2") = 1.0);

    m.def(
        "sum_rate",
        [](const ComplexMatrix& h_true, const ComplexMatrix& h_hat, const std::string& scheme,
           double pu, double sigma2) {
            const PrecoderSpec spec{parse_scheme(scheme), pu, sigma2};
            return rates(h_true, h_hat, precoder(h_hat, spec), spec).sum_rate;
        },
        py::arg("h_true"), py::arg("h_hat"), py::arg("scheme"), py::arg("pu") = 1.0,
        py::arg("sigma2") = 1.0, "Sum rate with estimated channel knowledge.");

    m.def(
        "run_experiment_json",
        [](const std::string& text) {
            const ExperimentSpec spec = spec_from_json_text(text);
            std::vector<ResultRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_experiment(spec);
            }
            return format_csv(rows);
        },
        py::arg("config"), "Run an experiment from a JSON document and return the CSV text.");

    m.attr("CSV_HEADER") = kCsvHeader;
}

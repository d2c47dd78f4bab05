#include "rispar/channel_model.hpp"

#include "rispar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rispar {

double noise_variance_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ComplexMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    ComplexMatrix out(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            out(r, c) = Complex(re, im);
        }
    }
    return out;
}

ChannelPair gen_channels(const SystemConfig& cfg, Rng& rng) {
    if (cfg.K < 1 || cfg.M < 1 || cfg.N < 1) {
        throw RejectedInput("gen_channels: K, M and N must be positive");
    }
    ChannelPair ch;
    ch.hr = complex_gaussian(cfg.K, cfg.N, rng);
    ch.hs = complex_gaussian(cfg.N, cfg.M, rng);
    return ch;
}

ComplexMatrix dft_rows(int rows, int n) {
    ComplexMatrix out(rows, n);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < n; ++c) {
            // Reduce the exponent first so large indices keep full precision.
            const long long e = (static_cast<long long>(r) * c) % n;
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(e) / n;
            out(r, c) = std::polar(1.0, angle);
        }
    }
    return out;
}

TrainingSet gen_training(const SystemConfig& cfg) {
    if (cfg.P < 1 || cfg.N < 1 || cfg.M < 1 || cfg.T < 1) {
        throw RejectedInput("gen_training: dimensions must be positive");
    }
    if (cfg.P > cfg.N) {
        throw FeasibilityError("gen_training: P (" + std::to_string(cfg.P) + ") exceeds N (" +
                               std::to_string(cfg.N) + ")");
    }
    if (cfg.T < cfg.M) {
        throw FeasibilityError("gen_training: T (" + std::to_string(cfg.T) +
                               ") is smaller than M (" + std::to_string(cfg.M) + ")");
    }
    TrainingSet tr;
    tr.phi = dft_rows(cfg.P, cfg.N);
    tr.x = dft_rows(cfg.M, cfg.T) / std::sqrt(static_cast<double>(cfg.T));
    return tr;
}

RxTensor synthesize_rx(const ChannelPair& ch, const TrainingSet& tr, const SystemConfig& cfg,
                       Rng& rng, bool keep_raw) {
    const Eigen::Index k = ch.hr.rows();
    const Eigen::Index n = ch.hr.cols();
    const Eigen::Index m = ch.hs.cols();
    if (ch.hs.rows() != n || tr.phi.cols() != n || tr.x.rows() != m) {
        throw RejectedInput("synthesize_rx: channel and training dimensions disagree");
    }
    const double sigma2 = cfg.noise_var();
    if (sigma2 < 0.0 || !std::isfinite(sigma2)) {
        throw RejectedInput("synthesize_rx: noise variance must be finite and non-negative");
    }
    const double sigma = std::sqrt(sigma2);
    const Eigen::Index p_count = tr.phi.rows();
    const Eigen::Index t = tr.x.cols();

    RxTensor rx;
    rx.ztilde = ThreeWayTensor(k, m, p_count);
    const ComplexMatrix x_h = tr.x.adjoint();
    for (Eigen::Index p = 0; p < p_count; ++p) {
        ComplexMatrix y = ch.hr * tr.phi.row(p).transpose().asDiagonal() * ch.hs * tr.x;
        if (!cfg.noiseless) {
            y += sigma * complex_gaussian(k, t, rng);
        }
        rx.ztilde.set_slice(p, y * x_h);
        if (keep_raw) rx.raw.push_back(std::move(y));
    }
    return rx;
}

std::vector<IndexGroup> partition_plan(int n, int m, int k) {
    if (n < 1) throw RejectedInput("partition_plan: N must be positive");
    const int cap = std::min(m, k);
    if (cap < 1) throw RejectedInput("partition_plan: M and K must be positive");
    std::vector<IndexGroup> plan;
    for (int begin = 0; begin < n; begin += cap) {
        plan.push_back({begin, std::min(cap, n - begin)});
    }
    return plan;
}

FeasibilityReport feasibility_check(const SystemConfig& cfg) {
    FeasibilityReport rep;
    auto violate = [&](std::string msg) {
        rep.feasible = false;
        rep.violations.push_back(std::move(msg));
    };
    if (cfg.K < 1 || cfg.M < 1 || cfg.N < 1 || cfg.P < 1 || cfg.T < 1) {
        violate("all dimensions must be positive");
        return rep;
    }
    if (std::min(cfg.M, cfg.K) < cfg.N) {
        violate("min(M,K) >= N violated: min(" + std::to_string(cfg.M) + "," +
                std::to_string(cfg.K) + ") < " + std::to_string(cfg.N));
        rep.suggested_partition = partition_plan(cfg.N, cfg.M, cfg.K);
    }
    if (cfg.P > cfg.N) {
        violate("P <= N violated: " + std::to_string(cfg.P) + " > " + std::to_string(cfg.N));
    }
    if (cfg.T < cfg.M) {
        violate("T >= M violated: " + std::to_string(cfg.T) + " < " + std::to_string(cfg.M));
    }
    if (cfg.N >= 2) {
        const int lhs = std::min(cfg.P, cfg.N) + std::min(cfg.M, cfg.N) + std::min(cfg.K, cfg.N);
        if (lhs < 2 * cfg.N + 2) {
            violate("k-rank condition violated: " + std::to_string(lhs) + " < 2N+2 = " +
                    std::to_string(2 * cfg.N + 2));
        }
    }
    if (!cfg.noiseless && !(cfg.noise_var() > 0.0)) {
        violate("noise variance must be positive unless noiseless");
    }
    return rep;
}

}  // namespace rispar

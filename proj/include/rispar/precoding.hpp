#pragma once

// RIS phase optimization by fixed-point iteration, MRT/ZF/MMSE downlink
// precoders and per-user rates with estimated or perfect channel knowledge.

#include "rispar/tensor.hpp"

#include <string>
#include <vector>

namespace rispar {

struct PhaseVector {
    ComplexVector v;  ///< unit-modulus entries
};

struct PhaseOptimization {
    ComplexMatrix phi;  ///< N x N diagonal, diag = conj(v)
    PhaseVector v;
    int iterations = 0;
    bool zero_entry_fallback = false;  ///< unt() met a zero entry and substituted 1
    std::vector<double> objective_trace;  ///< v^H C v, starting with the initial point
};

/// C_tilde = sum_k C_k C_k^H with C_k = diag(Hr[k, :]) Hs, so that
/// v^H C_tilde v = sum_k ||Hr[k, :] diag(conj v) Hs||^2.
ComplexMatrix phase_gram(const ComplexMatrix& hr, const ComplexMatrix& hs);

/// Fixed-point iteration v <- unt(C_tilde v) from the all-ones vector.
PhaseOptimization optimize_phase(const ComplexMatrix& hr, const ComplexMatrix& hs,
                                 double kappa = 1e-5, int t_max = 200);

/// H = Hr Phi Hs (K x M).
ComplexMatrix effective_channel(const ComplexMatrix& hr, const ComplexMatrix& hs,
                                const ComplexMatrix& phi);

/// eps_k = pu * sum_i |h_hat_k^H eps_i|^2 with eps_i = [E^H]_{:, i}, E = H_hat - H.
RealVector error_power_eps(const ComplexMatrix& h_hat, const ComplexMatrix& h_true, double pu);

enum class Scheme { MRT, ZF, MMSE };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

struct PrecoderSpec {
    Scheme scheme = Scheme::MRT;
    double pu = 1.0;
    double sigma2 = 1.0;

    void validate() const;
};

/// M x K precoding matrix whose k-th column serves user k.
ComplexMatrix precoder(const ComplexMatrix& h_hat, const PrecoderSpec& spec);

struct RateReport {
    RealVector per_user_rates;
    double sum_rate = 0.0;
    RealVector eps;
};

/// Rates the system computes from its own estimates, charged with eps_k.
RateReport rates(const ComplexMatrix& h_true, const ComplexMatrix& h_hat,
                 const ComplexMatrix& g, const PrecoderSpec& spec);

/// Rates with exact channel knowledge (eps = 0).
RateReport rates_perfect(const ComplexMatrix& h_true, const ComplexMatrix& g_true,
                         const PrecoderSpec& spec);

}  // namespace rispar

#pragma once

// Cramér-Rao bound for the cascaded-channel parameters
//   theta = (rows a_1..a_K of Hr, columns b_2..b_M of Hs)
// with the first column of Hs fixed to all ones.

#include "rispar/channel_model.hpp"
#include "rispar/tensor.hpp"

namespace rispar {

/// PM x KP cross-covariance E{W1[:,k] W2[:,m]^H} between the mode-1 and
/// mode-2 unfoldings of the same noise tensor. k and m are 1-based.
ComplexMatrix noise_cross_cov(int k, int m, int K, int M, int P, double sigma2);

struct FimBlocks {
    ComplexMatrix psi1;  ///< KN x KN
    ComplexMatrix psi2;  ///< KN x (M-1)N
    ComplexMatrix psi3;  ///< (M-1)N x (M-1)N
    /// ||Hr||_F^2 and ||Hs[:, 1:]||_F^2 of the channels the FIM was built on.
    double hr_energy = 0.0;
    double hs_free_energy = 0.0;

    ComplexMatrix full() const;
};

struct CrbResult {
    ComplexMatrix crb_hr;
    ComplexMatrix crb_hs;
    double nmse_bound_hr = 0.0;
    double nmse_bound_hs = 0.0;
};

/// Tolerance on the all-ones first column of Hs accepted by build_fim.
inline constexpr double kFixingTolerance = 1e-9;

/// Requires Hs[:, 0] == 1 (renormalize with normalize_first_column first).
FimBlocks build_fim(const ChannelPair& ch, const ComplexMatrix& phi, double sigma2);

CrbResult crb_blocks(const FimBlocks& fim);

/// Rescales ch so the first column of Hs is all ones, absorbing the scale into Hr.
ChannelPair fix_first_column(const ChannelPair& ch);

/// NMSE lower bounds for one realization: renormalizes, builds the FIM and
/// inverts it. Returns {hr, hs} bounds.
std::pair<double, double> crb_nmse_bounds(const ChannelPair& ch, const ComplexMatrix& phi,
                                          double sigma2);

}  // namespace rispar

#pragma once

// Alternating least-squares estimation of the two cascaded channels from the
// pilot-removed observation tensor, plus the shared result types, the
// scaling-ambiguity fix and the NMSE metric.
//
// Per outer iteration the cost is dominated by two thin SVDs, of the PM x N
// and KP x N Khatri-Rao factors: O(N^2 P (M + K)) plus O(N^3).

#include "rispar/channel_model.hpp"
#include "rispar/tensor.hpp"

#include <utility>
#include <vector>

namespace rispar {

struct StoppingRule {
    double kappa = 1e-5;
    int i_max = 20;

    void validate() const;
};

/// Relative squared changes ||H_i - H_{i-1}||_F^2 / ||H_i||_F^2 at one iteration.
struct ChangeRecord {
    double hr = 0.0;
    double hs = 0.0;
};

struct EstimateResult {
    ComplexMatrix hr;  ///< K x N
    ComplexMatrix hs;  ///< N x M
    int iterations = 0;
    std::vector<ChangeRecord> change_trace;
    /// ||Ztilde - compose(hr, hs, Phi)||^2 after each completed iteration.
    std::vector<double> residual_trace;
    bool converged = false;
};

/// Relative singular-value cutoff of the pseudo-inverse.
inline constexpr double kPinvCutoff = 1e-12;

/// Thin SVD A = U diag(s) V^H with s descending. Tall inputs are reduced by a
/// Householder QR first so the SVD runs on the square triangular factor.
struct ThinSvd {
    ComplexMatrix u;  ///< rows x min(rows, cols)
    RealVector s;
    ComplexMatrix v;  ///< cols x min(rows, cols)
};
ThinSvd thin_svd(const ComplexMatrix& a);

/// pinv(A) * B through a thin SVD. Throws SingularityError when A has
/// a singular value at or below kPinvCutoff times the largest.
ComplexMatrix pinv_solve(const ComplexMatrix& a, const ComplexMatrix& b);

/// Dominant-eigenvector starting point. Hs0 rows are the conjugated leading
/// eigenvectors of Z2^H Z2; Hr0 columns the conjugated leading eigenvectors
/// of Z1^H Z1. Each eigenvector is phase-rotated so its largest-magnitude
/// entry is real positive.
std::pair<ComplexMatrix, ComplexMatrix> init_estimates(const RxTensor& rx, int n);

/// Hr minimising ||Z1 - khatri_rao(Hs^T, Phi) Hr^T||_F.
ComplexMatrix als_step_hr(const ComplexMatrix& z1, const ComplexMatrix& hs_prev,
                          const ComplexMatrix& phi);

/// Hs minimising ||Z2 - khatri_rao(Phi, Hr) Hs||_F.
ComplexMatrix als_step_hs(const ComplexMatrix& z2, const ComplexMatrix& hr_cur,
                          const ComplexMatrix& phi);

EstimateResult als_estimate(const RxTensor& rx, const ComplexMatrix& phi,
                            const StoppingRule& stop = {});

/// Diagonal rescaling so that the first column of Hs matches the reference:
/// lambda_n = ref.hs(n,0) / hs_hat(n,0), returns (Hr_hat Lambda^-1, Lambda Hs_hat).
ChannelPair remove_ambiguity(const ComplexMatrix& hr_hat, const ComplexMatrix& hs_hat,
                             const ChannelPair& reference);

/// Truth-free variant: rescales so the first column of Hs is all ones.
ChannelPair normalize_first_column(const ComplexMatrix& hr, const ComplexMatrix& hs);

double nmse(const ComplexMatrix& truth, const ComplexMatrix& estimate);

enum class KnownChannel { Hr, Hs };

/// One-shot LS for one channel given the other exactly; the known channel is
/// copied into the result.
EstimateResult genie_ls(const RxTensor& rx, const ComplexMatrix& phi, KnownChannel known,
                        const ChannelPair& truth);

/// Squared relative change used by the outer stopping rule.
double relative_change(const ComplexMatrix& current, const ComplexMatrix& previous);

}  // namespace rispar

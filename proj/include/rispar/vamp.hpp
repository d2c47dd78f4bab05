#pragma once

// Vector approximate message passing for the per-column linear models
//   Z1[:, k] = A1 Hr^T[:, k] + w     and     Z2[:, m] = A2 Hs[:, m] + w,
// run inside the same alternating outer loop as the ALS estimator.
//
// Each inner iteration alternates a Gaussian-prior linear denoiser with an
// LMMSE stage written in the SVD basis of the measurement matrix, so per
// column the work is O(N^2) matrix-vector products once the SVD is known.

#include "rispar/als.hpp"
#include "rispar/tensor.hpp"

namespace rispar {

struct GaussianPrior {
    ComplexVector mean;  ///< length N
    RealVector var;      ///< length N, positive

    static GaussianPrior standard(int n);  ///< zero mean, unit variance
    void validate(Eigen::Index n) const;
};

/// Transition variables of one VAMP iteration.
struct VampState {
    ComplexVector r1;
    double gamma1 = 0.0;
    ComplexVector h1;
    ComplexVector h2;
    double gamma2 = 0.0;
    double alpha = 0.0;  ///< LMMSE divergence
};

/// Thin SVD of a measurement matrix, shared by all columns of one solve.
class VampOperator {
public:
    explicit VampOperator(const ComplexMatrix& a);

    Eigen::Index cols() const noexcept { return cols_; }
    Eigen::Index rows() const noexcept { return rows_; }
    int rank() const noexcept { return rank_; }
    const ComplexMatrix& u() const noexcept { return u_; }
    const ComplexMatrix& v() const noexcept { return v_; }
    const RealVector& s() const noexcept { return s_; }

private:
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    int rank_ = 0;
    ComplexMatrix u_;  ///< rows x R
    ComplexMatrix v_;  ///< N x R
    RealVector s_;     ///< R positive singular values
};

struct VampColumnResult {
    ComplexVector mean;
    RealVector var;
    int iterations = 0;
    bool converged = false;
    VampState state;
};

VampColumnResult vamp_column(const ComplexVector& y, const VampOperator& op,
                             const GaussianPrior& prior, double sigma2,
                             const StoppingRule& stop = {});

VampColumnResult vamp_column(const ComplexVector& y, const ComplexMatrix& a,
                             const GaussianPrior& prior, double sigma2,
                             const StoppingRule& stop = {});

struct VampPriors {
    GaussianPrior hr;  ///< prior on each column of Hr^T (length N)
    GaussianPrior hs;  ///< prior on each column of Hs (length N)

    static VampPriors standard(int n);
};

/// Alternating estimation with VAMP in place of the two pseudo-inverse steps.
/// Outer termination matches als_estimate.
EstimateResult vamp_estimate(const RxTensor& rx, const ComplexMatrix& phi,
                             const VampPriors& priors, double sigma2,
                             const StoppingRule& stop = {});

}  // namespace rispar

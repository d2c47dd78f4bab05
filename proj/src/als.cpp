#include "rispar/als.hpp"

#include "rispar/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

namespace rispar {

void StoppingRule::validate() const {
    if (!(kappa > 0.0)) throw RejectedInput("stopping rule: kappa must be positive");
    if (i_max < 1) throw RejectedInput("stopping rule: i_max must be at least 1");
}

ThinSvd thin_svd(const ComplexMatrix& a) {
    ThinSvd out;
    if (a.rows() > a.cols()) {
        const Eigen::HouseholderQR<ComplexMatrix> qr(a);
        const ComplexMatrix r =
            qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
        const Eigen::BDCSVD<ComplexMatrix> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const ComplexMatrix q =
            qr.householderQ() * ComplexMatrix::Identity(a.rows(), a.cols());
        out.u = q * svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    } else {
        const Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    }
    return out;
}

ComplexMatrix pinv_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows()) {
        throw RejectedInput("pinv_solve: row counts differ");
    }
    const ThinSvd svd = thin_svd(a);
    const RealVector& s = svd.s;
    const double smallest = s.size() > 0 ? s(s.size() - 1) : 0.0;
    if (s.size() < a.cols() || s.size() == 0 || !(s(0) > 0.0) ||
        smallest <= kPinvCutoff * s(0)) {
        throw SingularityError("pinv_solve: matrix is rank deficient (smallest singular value " +
                                   std::to_string(smallest) + ")",
                               smallest);
    }
    const ComplexMatrix utb = svd.u.adjoint() * b;
    return svd.v * (s.cwiseInverse().asDiagonal() * utb);
}

namespace {

// Leading n eigenvectors (descending eigenvalue) of a Hermitian Gram matrix,
// each rotated so its largest-magnitude entry is real positive.
ComplexMatrix leading_eigenvectors(const ComplexMatrix& gram, int n) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("init_estimates: eigendecomposition failed", 0);
    }
    const ComplexMatrix& vecs = eig.eigenvectors();
    const Eigen::Index dim = gram.rows();
    ComplexMatrix out(dim, n);
    for (int j = 0; j < n; ++j) {
        ComplexVector v = vecs.col(dim - 1 - j);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        const Complex pivot = v(arg);
        if (std::abs(pivot) > 0.0) v *= std::conj(pivot) / std::abs(pivot);
        out.col(j) = v;
    }
    return out;
}

}  // namespace

std::pair<ComplexMatrix, ComplexMatrix> init_estimates(const RxTensor& rx, int n) {
    const auto k = static_cast<int>(rx.ztilde.dim_i());
    const auto m = static_cast<int>(rx.ztilde.dim_j());
    if (n < 1) throw RejectedInput("init_estimates: N must be positive");
    if (n > std::min(m, k)) {
        throw FeasibilityError("init_estimates: N (" + std::to_string(n) +
                               ") exceeds min(M,K) = " + std::to_string(std::min(m, k)));
    }
    const ComplexMatrix z1 = unfold(rx.ztilde, 1);
    const ComplexMatrix z2 = unfold(rx.ztilde, 2);
    const ComplexMatrix vr = leading_eigenvectors(z1.adjoint() * z1, n);  // K x N
    const ComplexMatrix vs = leading_eigenvectors(z2.adjoint() * z2, n);  // M x N
    return {vr.conjugate(), vs.adjoint()};
}

ComplexMatrix als_step_hr(const ComplexMatrix& z1, const ComplexMatrix& hs_prev,
                          const ComplexMatrix& phi) {
    const ComplexMatrix a1 = khatri_rao(hs_prev.transpose(), phi);
    if (a1.rows() != z1.rows()) {
        throw RejectedInput("als_step_hr: Z1 has " + std::to_string(z1.rows()) +
                            " rows, expected P*M = " + std::to_string(a1.rows()));
    }
    try {
        return pinv_solve(a1, z1).transpose();
    } catch (const SingularityError& e) {
        throw SingularityError(std::string("als_step_hr: ") + e.what(),
                               e.smallest_singular_value());
    }
}

ComplexMatrix als_step_hs(const ComplexMatrix& z2, const ComplexMatrix& hr_cur,
                          const ComplexMatrix& phi) {
    const ComplexMatrix a2 = khatri_rao(phi, hr_cur);
    if (a2.rows() != z2.rows()) {
        throw RejectedInput("als_step_hs: Z2 has " + std::to_string(z2.rows()) +
                            " rows, expected K*P = " + std::to_string(a2.rows()));
    }
    try {
        return pinv_solve(a2, z2);
    } catch (const SingularityError& e) {
        throw SingularityError(std::string("als_step_hs: ") + e.what(),
                               e.smallest_singular_value());
    }
}

double relative_change(const ComplexMatrix& current, const ComplexMatrix& previous) {
    const double denom = current.squaredNorm();
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return (current - previous).squaredNorm() / denom;
}

EstimateResult als_estimate(const RxTensor& rx, const ComplexMatrix& phi,
                            const StoppingRule& stop) {
    stop.validate();
    const auto n = static_cast<int>(phi.cols());
    if (static_cast<std::size_t>(phi.rows()) != rx.ztilde.dim_k()) {
        throw RejectedInput("als_estimate: Phi row count does not match P");
    }
    const ComplexMatrix z1 = unfold(rx.ztilde, 1);
    const ComplexMatrix z2 = unfold(rx.ztilde, 2);

    EstimateResult res;
    std::tie(res.hr, res.hs) = init_estimates(rx, n);

    for (int i = 1; i <= stop.i_max; ++i) {
        ComplexMatrix hr_next;
        ComplexMatrix hs_next;
        try {
            hr_next = als_step_hr(z1, res.hs, phi);
            hs_next = als_step_hs(z2, hr_next, phi);
        } catch (const SingularityError& e) {
            throw SingularityError(std::string(e.what()) + " at iteration " + std::to_string(i),
                                   e.smallest_singular_value());
        }
        const ChangeRecord change{relative_change(hr_next, res.hr),
                                  relative_change(hs_next, res.hs)};
        res.hr = std::move(hr_next);
        res.hs = std::move(hs_next);
        res.iterations = i;
        res.change_trace.push_back(change);
        res.residual_trace.push_back(
            (z2 - khatri_rao(phi, res.hr) * res.hs).squaredNorm());
        if (change.hr <= stop.kappa && change.hs <= stop.kappa) {
            res.converged = true;
            break;
        }
    }
    return res;
}

ChannelPair remove_ambiguity(const ComplexMatrix& hr_hat, const ComplexMatrix& hs_hat,
                             const ChannelPair& reference) {
    const Eigen::Index n = hs_hat.rows();
    if (hr_hat.cols() != n || reference.hs.rows() != n || hs_hat.cols() < 1 ||
        reference.hs.cols() < 1) {
        throw RejectedInput("remove_ambiguity: dimension mismatch");
    }
    ComplexVector lambda(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex denom = hs_hat(i, 0);
        if (std::abs(denom) < 1e-12) {
            throw AmbiguityError("remove_ambiguity: first-column entry " + std::to_string(i) +
                                 " of the estimate is (near) zero");
        }
        lambda(i) = reference.hs(i, 0) / denom;
    }
    ChannelPair out;
    out.hr = hr_hat * lambda.cwiseInverse().asDiagonal();
    out.hs = lambda.asDiagonal() * hs_hat;
    return out;
}

ChannelPair normalize_first_column(const ComplexMatrix& hr, const ComplexMatrix& hs) {
    ChannelPair ones;
    ones.hs = ComplexMatrix::Ones(hs.rows(), 1);
    return remove_ambiguity(hr, hs, ones);
}

double nmse(const ComplexMatrix& truth, const ComplexMatrix& estimate) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
        throw RejectedInput("nmse: dimension mismatch");
    }
    const double denom = truth.squaredNorm();
    if (!(denom > 0.0)) throw RejectedInput("nmse: reference has zero norm");
    return (truth - estimate).squaredNorm() / denom;
}

EstimateResult genie_ls(const RxTensor& rx, const ComplexMatrix& phi, KnownChannel known,
                        const ChannelPair& truth) {
    EstimateResult res;
    if (known == KnownChannel::Hs) {
        res.hr = als_step_hr(unfold(rx.ztilde, 1), truth.hs, phi);
        res.hs = truth.hs;
    } else {
        res.hr = truth.hr;
        res.hs = als_step_hs(unfold(rx.ztilde, 2), truth.hr, phi);
    }
    res.iterations = 1;
    res.converged = true;
    return res;
}

}  // namespace rispar

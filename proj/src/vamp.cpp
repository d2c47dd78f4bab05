#include "rispar/vamp.hpp"

#include "rispar/errors.hpp"

#include <cmath>
#include <string>

namespace rispar {

GaussianPrior GaussianPrior::standard(int n) {
    return {ComplexVector::Zero(n), RealVector::Ones(n)};
}

void GaussianPrior::validate(Eigen::Index n) const {
    if (mean.size() != n || var.size() != n) {
        throw RejectedInput("GaussianPrior: expected length " + std::to_string(n));
    }
    if (!(var.array() > 0.0).all() || !var.allFinite() || !mean.allFinite()) {
        throw RejectedInput("GaussianPrior: variances must be finite and positive");
    }
}

VampPriors VampPriors::standard(int n) {
    return {GaussianPrior::standard(n), GaussianPrior::standard(n)};
}

VampOperator::VampOperator(const ComplexMatrix& a) : rows_(a.rows()), cols_(a.cols()) {
    require_finite(a, "VAMP measurement matrix");
    const ThinSvd svd = thin_svd(a);
    const RealVector& s = svd.s;
    const double top = s.size() > 0 ? s(0) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > kPinvCutoff * top) ++rank_;
    }
    u_ = svd.u.leftCols(rank_);
    v_ = svd.v.leftCols(rank_);
    s_ = s.head(rank_);
}

namespace {

// ytilde = sigma^-2 S U^H y in the R-dimensional singular basis.
ComplexVector project_observation(const VampOperator& op, const ComplexVector& y,
                                  double inv_sigma2) {
    return inv_sigma2 * (op.s().asDiagonal() * (op.u().adjoint() * y));
}

VampColumnResult run_column(const ComplexVector& ytilde, const VampOperator& op,
                            const GaussianPrior& prior, double sigma2,
                            const StoppingRule& stop) {
    const Eigen::Index n = op.cols();
    const double inv_sigma2 = 1.0 / sigma2;
    const RealVector prior_precision = prior.var.cwiseInverse();
    const ComplexVector prior_info = prior.mean.cwiseProduct(prior_precision.cast<Complex>());
    // LMMSE stage diagonal before adding gamma2.
    const RealVector s2 = inv_sigma2 * op.s().cwiseAbs2();
    const auto null_dims = static_cast<double>(n - op.rank());

    VampColumnResult out;
    VampState& st = out.state;
    st.r1 = prior.mean;
    st.gamma1 = 1.0 / prior.var.mean();

    for (int p = 1; p <= stop.i_max; ++p) {
        // Denoiser: posterior of the Gaussian prior given r1 ~ CN(h, 1/gamma1).
        const RealVector eta = prior_precision.array() + st.gamma1;
        st.h1 = (prior_info + st.gamma1 * st.r1).cwiseQuotient(eta.cast<Complex>());
        const double alpha1 = st.gamma1 * eta.cwiseInverse().mean();
        const double eta1 = st.gamma1 / alpha1;
        st.gamma2 = eta1 - st.gamma1;
        if (!(st.gamma2 > 0.0) || !std::isfinite(st.gamma2)) {
            throw NumericalFailure("vamp_column: gamma2 collapsed at iteration " +
                                       std::to_string(p),
                                   p);
        }
        const ComplexVector r2 = (eta1 * st.h1 - st.gamma1 * st.r1) / st.gamma2;

        // LMMSE stage in the singular basis; the null space keeps r2.
        const RealVector d = (s2.array() + st.gamma2).inverse();
        const ComplexVector vr2 = op.v().adjoint() * r2;
        st.h2 = op.v() * d.cast<Complex>().cwiseProduct(ytilde + st.gamma2 * vr2);
        if (null_dims > 0.0) st.h2 += r2 - op.v() * vr2;
        st.alpha = st.gamma2 * (d.sum() + null_dims / st.gamma2) / static_cast<double>(n);
        if (!(st.alpha > 0.0 && st.alpha < 1.0)) {
            throw NumericalFailure("vamp_column: divergence left (0,1) at iteration " +
                                       std::to_string(p),
                                   p);
        }
        const ComplexVector r1_next = (st.h2 - st.alpha * r2) / (1.0 - st.alpha);
        const double gamma1_next = st.gamma2 * (1.0 - st.alpha) / st.alpha;
        if (!(gamma1_next > 0.0) || !std::isfinite(gamma1_next) || !r1_next.allFinite()) {
            throw NumericalFailure("vamp_column: gamma1 collapsed at iteration " +
                                       std::to_string(p),
                                   p);
        }
        const double change = (r1_next - st.r1).squaredNorm();
        const double scale = st.r1.squaredNorm();
        st.r1 = r1_next;
        st.gamma1 = gamma1_next;
        out.iterations = p;
        if (change < stop.kappa * scale || change == 0.0) {
            out.converged = true;
            break;
        }
    }

    // Posterior from the last LMMSE stage.
    const RealVector d = (s2.array() + st.gamma2).inverse();
    out.mean = st.h2;
    out.var = RealVector(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const RealVector w = op.v().row(i).cwiseAbs2().transpose();
        out.var(i) = w.dot(d) + std::max(0.0, 1.0 - w.sum()) / st.gamma2;
    }
    return out;
}

void check_column_inputs(const ComplexVector& y, const VampOperator& op,
                         const GaussianPrior& prior, double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw RejectedInput("vamp_column: sigma2 must be positive");
    }
    if (y.size() != op.rows()) {
        throw RejectedInput("vamp_column: observation length does not match the operator");
    }
    prior.validate(op.cols());
}

}  // namespace

VampColumnResult vamp_column(const ComplexVector& y, const VampOperator& op,
                             const GaussianPrior& prior, double sigma2,
                             const StoppingRule& stop) {
    stop.validate();
    check_column_inputs(y, op, prior, sigma2);
    return run_column(project_observation(op, y, 1.0 / sigma2), op, prior, sigma2, stop);
}

VampColumnResult vamp_column(const ComplexVector& y, const ComplexMatrix& a,
                             const GaussianPrior& prior, double sigma2,
                             const StoppingRule& stop) {
    return vamp_column(y, VampOperator(a), prior, sigma2, stop);
}

namespace {

// Solves every column of `obs` against the shared operator; returns N x C means.
ComplexMatrix solve_columns(const ComplexMatrix& obs, const ComplexMatrix& a,
                            const GaussianPrior& prior, double sigma2,
                            const StoppingRule& stop) {
    const VampOperator op(a);
    const ComplexMatrix ytilde = (1.0 / sigma2) * (op.s().asDiagonal() * (op.u().adjoint() * obs));
    ComplexMatrix out(a.cols(), obs.cols());
    for (Eigen::Index c = 0; c < obs.cols(); ++c) {
        out.col(c) = run_column(ytilde.col(c), op, prior, sigma2, stop).mean;
    }
    return out;
}

}  // namespace

EstimateResult vamp_estimate(const RxTensor& rx, const ComplexMatrix& phi,
                             const VampPriors& priors, double sigma2,
                             const StoppingRule& stop) {
    stop.validate();
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw RejectedInput("vamp_estimate: sigma2 must be positive");
    }
    const auto n = static_cast<int>(phi.cols());
    if (static_cast<std::size_t>(phi.rows()) != rx.ztilde.dim_k()) {
        throw RejectedInput("vamp_estimate: Phi row count does not match P");
    }
    priors.hr.validate(n);
    priors.hs.validate(n);
    const ComplexMatrix z1 = unfold(rx.ztilde, 1);
    const ComplexMatrix z2 = unfold(rx.ztilde, 2);

    EstimateResult res;
    std::tie(res.hr, res.hs) = init_estimates(rx, n);

    for (int i = 1; i <= stop.i_max; ++i) {
        ComplexMatrix hr_next =
            solve_columns(z1, khatri_rao(res.hs.transpose(), phi), priors.hr, sigma2, stop)
                .transpose();
        ComplexMatrix hs_next =
            solve_columns(z2, khatri_rao(phi, hr_next), priors.hs, sigma2, stop);
        const ChangeRecord change{relative_change(hr_next, res.hr),
                                  relative_change(hs_next, res.hs)};
        res.hr = std::move(hr_next);
        res.hs = std::move(hs_next);
        res.iterations = i;
        res.change_trace.push_back(change);
        res.residual_trace.push_back((z2 - khatri_rao(phi, res.hr) * res.hs).squaredNorm());
        if (!std::isfinite(change.hr) || !std::isfinite(change.hs)) {
            throw NumericalFailure("vamp_estimate: non-finite change at outer iteration " +
                                       std::to_string(i),
                                   i);
        }
        if (change.hr <= stop.kappa && change.hs <= stop.kappa) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace rispar

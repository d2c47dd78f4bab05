#include "rispar/crb.hpp"

#include "rispar/als.hpp"
#include "rispar/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace rispar {

ComplexMatrix noise_cross_cov(int k, int m, int K, int M, int P, double sigma2) {
    if (K < 1 || M < 1 || P < 1) throw RejectedInput("noise_cross_cov: sizes must be positive");
    if (k < 1 || k > K || m < 1 || m > M) {
        throw RejectedInput("noise_cross_cov: index out of range");
    }
    ComplexMatrix c = ComplexMatrix::Zero(static_cast<Eigen::Index>(P) * M,
                                          static_cast<Eigen::Index>(K) * P);
    for (int p = 1; p <= P; ++p) {
        c((m - 1) * P + p - 1, (p - 1) * K + k - 1) = sigma2;
    }
    return c;
}

ComplexMatrix FimBlocks::full() const {
    const Eigen::Index a = psi1.rows();
    const Eigen::Index b = psi3.rows();
    ComplexMatrix out(a + b, a + b);
    out.topLeftCorner(a, a) = psi1;
    out.topRightCorner(a, b) = psi2;
    out.bottomLeftCorner(b, a) = psi2.adjoint();
    out.bottomRightCorner(b, b) = psi3;
    return out;
}

FimBlocks build_fim(const ChannelPair& ch, const ComplexMatrix& phi, double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw RejectedInput("build_fim: sigma2 must be positive");
    }
    const Eigen::Index k_count = ch.hr.rows();
    const Eigen::Index n = ch.hr.cols();
    const Eigen::Index m_count = ch.hs.cols();
    if (ch.hs.rows() != n || phi.cols() != n || m_count < 1) {
        throw RejectedInput("build_fim: dimension mismatch");
    }
    if ((ch.hs.col(0).array() - Complex(1.0, 0.0)).abs().maxCoeff() > kFixingTolerance) {
        throw RejectedInput(
            "build_fim: first column of Hs must be all ones; renormalize with fix_first_column");
    }
    const double w = 1.0 / sigma2;
    const ComplexMatrix a1 = khatri_rao(ch.hs.transpose(), phi);
    const ComplexMatrix a2 = khatri_rao(phi, ch.hr);
    const ComplexMatrix g1 = w * (a1.adjoint() * a1);
    const ComplexMatrix g2 = w * (a2.adjoint() * a2);
    const ComplexMatrix gram_phi = phi.adjoint() * phi;
    const Eigen::Index free_cols = m_count - 1;

    FimBlocks fim;
    fim.psi1 = ComplexMatrix::Zero(k_count * n, k_count * n);
    fim.psi3 = ComplexMatrix::Zero(free_cols * n, free_cols * n);
    fim.psi2 = ComplexMatrix(k_count * n, free_cols * n);
    for (Eigen::Index k = 0; k < k_count; ++k) fim.psi1.block(k * n, k * n, n, n) = g1;
    for (Eigen::Index m = 0; m < free_cols; ++m) fim.psi3.block(m * n, m * n, n, n) = g2;
    // Block (k, m): sigma^-2 diag(conj Hs[:, m]) (Phi^H Phi) diag(Hr[k, :]).
    for (Eigen::Index m = 0; m < free_cols; ++m) {
        const ComplexMatrix left = w * (ch.hs.col(m + 1).conjugate().asDiagonal() * gram_phi);
        for (Eigen::Index k = 0; k < k_count; ++k) {
            fim.psi2.block(k * n, m * n, n, n) = left * ch.hr.row(k).transpose().asDiagonal();
        }
    }
    fim.hr_energy = ch.hr.squaredNorm();
    fim.hs_free_energy = free_cols > 0 ? ch.hs.rightCols(free_cols).squaredNorm() : 0.0;
    return fim;
}

namespace {

ComplexMatrix hermitian_inverse(const ComplexMatrix& a, const char* what) {
    const ComplexMatrix sym = 0.5 * (a + a.adjoint());
    Eigen::LLT<ComplexMatrix> llt(sym);
    const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
    if (llt.info() != Eigen::Success || !(rcond > 1e-14)) {
        throw SingularityError(std::string("crb_blocks: ") + what +
                                   " is singular or indefinite (reciprocal condition " +
                                   std::to_string(rcond) + ")",
                               rcond);
    }
    return llt.solve(ComplexMatrix::Identity(a.rows(), a.cols()));
}

}  // namespace

CrbResult crb_blocks(const FimBlocks& fim) {
    CrbResult out;
    const Eigen::Index a = fim.psi1.rows();
    const Eigen::Index b = fim.psi3.rows();
    if (fim.psi2.rows() != a || fim.psi2.cols() != b) {
        throw RejectedInput("crb_blocks: block dimensions disagree");
    }
    if (b == 0) {
        out.crb_hr = hermitian_inverse(fim.psi1, "Psi1");
        out.crb_hs = ComplexMatrix(0, 0);
    } else {
        const ComplexMatrix psi1_inv = hermitian_inverse(fim.psi1, "Psi1");
        const ComplexMatrix psi3_inv = hermitian_inverse(fim.psi3, "Psi3");
        out.crb_hr = hermitian_inverse(fim.psi1 - fim.psi2 * psi3_inv * fim.psi2.adjoint(),
                                       "Schur complement of Psi3");
        out.crb_hs = hermitian_inverse(fim.psi3 - fim.psi2.adjoint() * psi1_inv * fim.psi2,
                                       "Schur complement of Psi1");
    }
    if (fim.hr_energy > 0.0) out.nmse_bound_hr = out.crb_hr.trace().real() / fim.hr_energy;
    if (fim.hs_free_energy > 0.0) out.nmse_bound_hs = out.crb_hs.trace().real() / fim.hs_free_energy;
    return out;
}

ChannelPair fix_first_column(const ChannelPair& ch) {
    return normalize_first_column(ch.hr, ch.hs);
}

std::pair<double, double> crb_nmse_bounds(const ChannelPair& ch, const ComplexMatrix& phi,
                                          double sigma2) {
    const CrbResult r = crb_blocks(build_fim(fix_first_column(ch), phi, sigma2));
    return {r.nmse_bound_hr, r.nmse_bound_hs};
}

}  // namespace rispar

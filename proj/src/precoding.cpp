#include "rispar/precoding.hpp"

#include "rispar/errors.hpp"

#include <Eigen/LU>

#include <cmath>

namespace rispar {

ComplexMatrix phase_gram(const ComplexMatrix& hr, const ComplexMatrix& hs) {
    if (hr.cols() != hs.rows()) throw RejectedInput("phase_gram: Hr and Hs do not conform");
    const Eigen::Index n = hs.rows();
    ComplexMatrix c = ComplexMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < hr.rows(); ++k) {
        const ComplexMatrix ck = hr.row(k).transpose().asDiagonal() * hs;
        c.noalias() += ck * ck.adjoint();
    }
    return c;
}

namespace {

double quadratic_form(const ComplexMatrix& c, const ComplexVector& v) {
    return v.dot(c * v).real();
}

}  // namespace

PhaseOptimization optimize_phase(const ComplexMatrix& hr, const ComplexMatrix& hs, double kappa,
                                 int t_max) {
    if (t_max < 1) throw RejectedInput("optimize_phase: t_max must be at least 1");
    if (hr.size() == 0 || hs.size() == 0 || hr.squaredNorm() == 0.0 || hs.squaredNorm() == 0.0) {
        throw RejectedInput("optimize_phase: channels must be nonzero");
    }
    const ComplexMatrix c = phase_gram(hr, hs);
    const Eigen::Index n = c.rows();

    PhaseOptimization out;
    ComplexVector v = ComplexVector::Ones(n);
    ComplexVector cv = c * v;
    out.objective_trace.push_back(v.dot(cv).real());
    for (int t = 1; t <= t_max; ++t) {
        ComplexVector next(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mag = std::abs(cv(i));
            if (mag > 0.0) {
                next(i) = cv(i) / mag;
            } else {
                next(i) = Complex(1.0, 0.0);
                out.zero_entry_fallback = true;
            }
        }
        const ComplexVector cv_next = c * next;
        const double gain = cv_next.lpNorm<1>() - cv.lpNorm<1>();
        v = std::move(next);
        cv = cv_next;
        out.iterations = t;
        out.objective_trace.push_back(quadratic_form(c, v));
        if (gain <= kappa) break;
    }
    out.v.v = v;
    out.phi = v.conjugate().asDiagonal();
    return out;
}

ComplexMatrix effective_channel(const ComplexMatrix& hr, const ComplexMatrix& hs,
                                const ComplexMatrix& phi) {
    if (hr.cols() != phi.rows() || phi.cols() != hs.rows()) {
        throw RejectedInput("effective_channel: dimension mismatch");
    }
    return hr * phi * hs;
}

RealVector error_power_eps(const ComplexMatrix& h_hat, const ComplexMatrix& h_true, double pu) {
    if (h_hat.rows() != h_true.rows() || h_hat.cols() != h_true.cols()) {
        throw RejectedInput("error_power_eps: dimension mismatch");
    }
    const ComplexMatrix e = h_hat - h_true;
    return pu * (h_hat * e.adjoint()).rowwise().squaredNorm();
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::MRT: return "mrt";
        case Scheme::ZF: return "zf";
        case Scheme::MMSE: return "mmse";
    }
    return "?";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "mrt") return Scheme::MRT;
    if (name == "zf") return Scheme::ZF;
    if (name == "mmse") return Scheme::MMSE;
    throw RejectedInput("unknown precoder '" + name + "' (expected mrt, zf or mmse)");
}

void PrecoderSpec::validate() const {
    if (!(pu > 0.0) || !std::isfinite(pu)) throw RejectedInput("PrecoderSpec: pu must be positive");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw RejectedInput("PrecoderSpec: sigma2 must be positive");
    }
}

namespace {

ComplexMatrix checked_inverse(const ComplexMatrix& a, const char* what) {
    Eigen::FullPivLU<ComplexMatrix> lu(a);
    if (!lu.isInvertible() || !(lu.rcond() > 1e-13)) {
        throw PrecoderInfeasible(std::string("precoder: ") + what + " is singular");
    }
    return lu.inverse();
}

}  // namespace

ComplexMatrix precoder(const ComplexMatrix& h_hat, const PrecoderSpec& spec) {
    spec.validate();
    const Eigen::Index k = h_hat.rows();
    const Eigen::Index m = h_hat.cols();
    const ComplexMatrix hh = h_hat.adjoint();
    switch (spec.scheme) {
        case Scheme::MRT:
            return hh;
        case Scheme::ZF:
            if (k > m) {
                throw PrecoderInfeasible("precoder: ZF needs K <= M (K=" + std::to_string(k) +
                                         ", M=" + std::to_string(m) + ")");
            }
            return hh * checked_inverse(h_hat * hh, "H H^H");
        case Scheme::MMSE: {
            const double reg = spec.sigma2 / spec.pu;
            if (k <= m) {
                return hh * checked_inverse(h_hat * hh + reg * ComplexMatrix::Identity(k, k),
                                            "regularized H H^H");
            }
            return checked_inverse(hh * h_hat + reg * ComplexMatrix::Identity(m, m),
                                   "regularized H^H H") *
                   hh;
        }
    }
    throw RejectedInput("precoder: unknown scheme");
}

namespace {

RateReport rate_report(const ComplexMatrix& h, const ComplexMatrix& g, const RealVector& eps,
                       const PrecoderSpec& spec) {
    spec.validate();
    const Eigen::Index k_count = h.rows();
    if (g.rows() != h.cols() || g.cols() != k_count) {
        throw RejectedInput("rates: precoder must be M x K");
    }
    RateReport rep;
    rep.eps = eps;
    rep.per_user_rates = RealVector(k_count);
    const ComplexMatrix hg = h * g;
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const double interference = hg.row(k).squaredNorm() - std::norm(hg(k, k));
        double sinr = 0.0;
        switch (spec.scheme) {
            case Scheme::MRT:
                sinr = spec.pu * h.row(k).squaredNorm() /
                       (spec.pu * interference + eps(k) + spec.sigma2);
                break;
            case Scheme::ZF:
                sinr = spec.pu / (eps(k) + spec.sigma2);
                break;
            case Scheme::MMSE:
                sinr = spec.pu * std::norm(hg(k, k)) /
                       (spec.pu * interference + eps(k) + spec.sigma2);
                break;
        }
        rep.per_user_rates(k) = std::log2(1.0 + sinr);
    }
    rep.sum_rate = rep.per_user_rates.sum();
    return rep;
}

}  // namespace

RateReport rates(const ComplexMatrix& h_true, const ComplexMatrix& h_hat, const ComplexMatrix& g,
                 const PrecoderSpec& spec) {
    return rate_report(h_hat, g, error_power_eps(h_hat, h_true, spec.pu), spec);
}

RateReport rates_perfect(const ComplexMatrix& h_true, const ComplexMatrix& g_true,
                         const PrecoderSpec& spec) {
    return rate_report(h_true, g_true, RealVector::Zero(h_true.rows()), spec);
}

}  // namespace rispar

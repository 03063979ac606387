#include "npts/conjugate.hpp"

#include <cmath>
#include <numbers>

namespace npts {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_shape(double alpha, double beta)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("NIG alpha must be positive and finite");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("NIG beta must be positive and finite");
}

} // namespace

void check_context_dim(long dim)
{
    if (dim < 1 || dim > kMaxContextDim)
        throw std::invalid_argument("context dimension must be in [1, " + std::to_string(kMaxContextDim)
                                    + "], got " + std::to_string(dim));
}

NIGHyper NIGHyper::from_covariance(Vector u, const Matrix& cov, double alpha, double beta)
{
    check_shape(alpha, beta);
    const auto d = u.size();
    check_context_dim(d);
    if (cov.rows() != d || cov.cols() != d)
        throw std::invalid_argument("NIG covariance shape does not match mean");
    if (!cov.isApprox(cov.transpose()))
        throw std::invalid_argument("NIG covariance must be symmetric");
    Eigen::LLT<Matrix> cov_llt(cov);
    if (cov_llt.info() != Eigen::Success)
        throw std::invalid_argument("NIG covariance must be positive definite");

    Matrix precision = cov_llt.solve(Matrix::Identity(d, d));
    precision = 0.5 * (precision + precision.transpose());
    return from_precision(std::move(u), std::move(precision), alpha, beta);
}

NIGHyper NIGHyper::from_precision(Vector u, Matrix precision, double alpha, double beta)
{
    check_shape(alpha, beta);
    check_context_dim(u.size());
    if (precision.rows() != u.size() || precision.cols() != u.size())
        throw std::invalid_argument("NIG precision shape does not match mean");

    NIGHyper h;
    h.u_ = std::move(u);
    h.precision_ = std::move(precision);
    h.alpha_ = alpha;
    h.beta_ = beta;
    Eigen::LLT<Matrix> llt(h.precision_);
    if (llt.info() != Eigen::Success)
        throw NumericalError("NIG precision is not positive definite");
    h.precision_chol_ = llt.matrixL();
    h.finish();
    return h;
}

NIGHyper NIGHyper::isotropic(int dim, double mean, double cov_scale, double alpha, double beta)
{
    check_context_dim(dim);
    if (!(cov_scale > 0.0))
        throw std::invalid_argument("prior covariance scale must be positive");
    return from_precision(Vector::Constant(dim, mean), Matrix::Identity(dim, dim) / cov_scale,
                          alpha, beta);
}

void NIGHyper::finish()
{
    log_det_cov_ = -2.0 * precision_chol_.diagonal().array().log().sum();
    predictive_log_norm_ = std::lgamma(alpha_ + 0.5) - std::lgamma(alpha_)
                           - 0.5 * std::log(2.0 * alpha_ * std::numbers::pi);
}

Matrix NIGHyper::cov() const
{
    const auto d = dim();
    // V = L^{-T} L^{-1}
    Matrix linv = precision_chol_.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
    Matrix v = linv.transpose() * linv;
    return v;
}

double NIGHyper::quad_cov(const Vector& x) const
{
    Vector z = precision_chol_.triangularView<Eigen::Lower>().solve(x);
    return z.squaredNorm();
}

ComponentStats ComponentStats::empty(int dim)
{
    check_context_dim(dim);
    ComponentStats s;
    s.gram = Matrix::Zero(dim, dim);
    s.cross = Vector::Zero(dim);
    return s;
}

ComponentStats ComponentStats::from_batch(const DataMatrix& xs, const DataVector& ys)
{
    if (xs.cols() != ys.size())
        throw std::invalid_argument("context block must have one column per reward");
    check_context_dim(xs.rows());
    ComponentStats s;
    s.count = ys.size();
    s.gram.noalias() = xs * xs.transpose();
    s.cross.noalias() = xs * ys;
    s.energy = ys.squaredNorm();
    return s;
}

void ComponentStats::add(const Vector& x, double y)
{
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    cross.noalias() += y * x;
    energy += y * y;
    ++count;
}

void ComponentStats::remove(const Vector& x, double y)
{
    if (count <= 0)
        throw std::logic_error("cannot remove an observation from empty component statistics");
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x, -1.0);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    cross.noalias() -= y * x;
    energy -= y * y;
    --count;
    if (count == 0) {
        // drop accumulated round-off so an emptied component is exactly empty
        gram.setZero();
        cross.setZero();
        energy = 0.0;
    }
}

ComponentStats accumulate(ComponentStats stats, const Vector& x, double y, Direction direction)
{
    if (direction == Direction::add)
        stats.add(x, y);
    else
        stats.remove(x, y);
    return stats;
}

double StudentT::log_pdf(double y) const
{
    const double z = (y - loc) * (y - loc) / (dof * scale2);
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof)
           - 0.5 * std::log(dof * std::numbers::pi * scale2) - 0.5 * (dof + 1.0) * std::log1p(z);
}

NIGHyper posterior_update(const NIGHyper& prior, const ComponentStats& stats)
{
    if (stats.count == 0)
        return prior;
    if (stats.dim() != prior.dim())
        throw std::invalid_argument("statistics dimension does not match prior");

    NIGHyper h;
    h.precision_ = prior.precision_ + stats.gram;
    Eigen::LLT<Matrix> llt(h.precision_);
    if (llt.info() != Eigen::Success)
        throw NumericalError("posterior precision is not positive definite");

    const Vector prior_shift = prior.precision_ * prior.u_;
    const Vector rhs = stats.cross + prior_shift;
    h.u_ = llt.solve(rhs);

    h.alpha_ = prior.alpha_ + 0.5 * static_cast<double>(stats.count);
    // u^T V^{-1} u = u^T rhs
    h.beta_ = prior.beta_ + 0.5 * (stats.energy + prior.u_.dot(prior_shift) - h.u_.dot(rhs));
    if (!(h.beta_ > 0.0) || !std::isfinite(h.beta_))
        throw NumericalError("posterior beta is not positive");

    h.precision_chol_ = llt.matrixL();
    h.finish();
    return h;
}

GaussianLinearParams sample_params(const NIGHyper& hyper, Rng& rng)
{
    std::gamma_distribution<double> gamma(hyper.alpha(), 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    GaussianLinearParams p;
    p.sigma2 = hyper.beta() / gamma(rng);

    Vector z(hyper.dim());
    for (auto& v : z)
        v = normal(rng);
    // L^{-T} z has covariance (L L^T)^{-1} = V
    hyper.precision_chol().triangularView<Eigen::Lower>().transpose().solveInPlace(z);
    p.w = hyper.u() + std::sqrt(p.sigma2) * z;
    return p;
}

StudentT predictive(const NIGHyper& hyper, const Vector& x)
{
    if (x.size() != hyper.dim())
        throw std::invalid_argument("context dimension does not match hyperparameters");
    StudentT t;
    t.dof = 2.0 * hyper.alpha();
    t.loc = x.dot(hyper.u());
    t.scale2 = hyper.beta() / hyper.alpha() * (1.0 + hyper.quad_cov(x));
    return t;
}

double log_predictive(const NIGHyper& hyper, const Vector& x, double y)
{
    const StudentT t = predictive(hyper, x);
    const double z = (y - t.loc) * (y - t.loc) / (t.dof * t.scale2);
    return hyper.predictive_log_norm() - 0.5 * std::log(t.scale2)
           - (hyper.alpha() + 0.5) * std::log1p(z);
}

double log_marginal_block(const NIGHyper& prior, const DataMatrix& xs, const DataVector& ys)
{
    if (xs.cols() != ys.size())
        throw std::invalid_argument("context block must have one column per reward");
    const auto n = ys.size();
    if (n == 0)
        return 0.0;
    if (xs.rows() != prior.dim())
        throw std::invalid_argument("context dimension does not match prior");

    const double alpha = prior.alpha();
    const double omega = 2.0 * prior.beta();
    const DataMatrix cov = prior.cov();
    DataMatrix psi = DataMatrix::Identity(n, n);
    psi.noalias() += xs.transpose() * cov * xs;
    Eigen::LLT<DataMatrix> llt(psi);
    if (llt.info() != Eigen::Success)
        throw NumericalError("matrix-t row scale is not positive definite");

    const DataVector resid = ys - xs.transpose() * DataVector(prior.u());
    const double quad = resid.dot(llt.solve(resid));
    const double log_det_psi = 2.0 * DataMatrix(llt.matrixL()).diagonal().array().log().sum();
    const double half_n = 0.5 * static_cast<double>(n);

    return std::lgamma(alpha + half_n) - std::lgamma(alpha) - half_n * std::log(std::numbers::pi * omega)
           - 0.5 * log_det_psi - (alpha + half_n) * std::log1p(quad / omega);
}

double log_evidence(const NIGHyper& prior, const NIGHyper& posterior, long count)
{
    if (count == 0)
        return 0.0;
    const double n = static_cast<double>(count);
    return -0.5 * n * kLogTwoPi + 0.5 * (posterior.log_det_cov() - prior.log_det_cov())
           + prior.alpha() * std::log(prior.beta()) - posterior.alpha() * std::log(posterior.beta())
           + std::lgamma(posterior.alpha()) - std::lgamma(prior.alpha());
}

double log_evidence(const NIGHyper& prior, const ComponentStats& stats)
{
    return log_evidence(prior, posterior_update(prior, stats), stats.count);
}

} // namespace npts

#pragma once

// Conjugate Normal-inverse-Gamma machinery for one Gaussian linear-regression
// mixture component:  y | x, w, s2 ~ N(x^T w, s2),  w | s2 ~ N(u, s2 V),
// s2 ~ InvGamma(alpha, beta).

#include <Eigen/Dense>

#include <random>
#include <stdexcept>

namespace npts {

/// Largest supported context dimension. Context-sized vectors and matrices
/// live inline (no heap) up to this bound.
inline constexpr int kMaxContextDim = 16;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxContextDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxContextDim, kMaxContextDim>;
/// Observation blocks (one column per observation) are unbounded.
using DataMatrix = Eigen::MatrixXd;
using DataVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Throws std::invalid_argument unless 1 <= dim <= kMaxContextDim.
void check_context_dim(long dim);

/// Raised when accumulated statistics no longer describe a valid posterior.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Normal-inverse-Gamma hyperparameters. Immutable once built; the precision
/// V^{-1} and its Cholesky factor are stored, V itself is derived on demand.
class NIGHyper {
public:
    /// Build from the covariance shape V. Throws std::invalid_argument when V
    /// is not symmetric positive definite or alpha/beta are not positive.
    static NIGHyper from_covariance(Vector u, const Matrix& cov, double alpha, double beta);
    /// Build from the precision V^{-1}. Throws NumericalError if not SPD.
    static NIGHyper from_precision(Vector u, Matrix precision, double alpha, double beta);
    /// u = mean * 1, V = scale * I.
    static NIGHyper isotropic(int dim, double mean, double cov_scale, double alpha, double beta);

    int dim() const { return static_cast<int>(u_.size()); }
    const Vector& u() const { return u_; }
    const Matrix& precision() const { return precision_; }
    /// V, computed from the Cholesky factor.
    Matrix cov() const;
    /// x^T V x without forming V.
    double quad_cov(const Vector& x) const;
    /// Lower Cholesky factor L of V^{-1} = L L^T.
    const Matrix& precision_chol() const { return precision_chol_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double log_det_cov() const { return log_det_cov_; }

    /// log Gamma(alpha + 1/2) - log Gamma(alpha) - 1/2 log(2 alpha pi), the
    /// x-independent part of the Student-t predictive normalizer.
    double predictive_log_norm() const { return predictive_log_norm_; }

private:
    friend NIGHyper posterior_update(const NIGHyper& prior, const struct ComponentStats& stats);

    NIGHyper() = default;
    void finish(); // fills log_det_cov_ and predictive_log_norm_ from precision_chol_

    Vector u_;
    Matrix precision_;
    Matrix precision_chol_;
    double alpha_ = 1.0;
    double beta_ = 1.0;
    double log_det_cov_ = 0.0;
    double predictive_log_norm_ = 0.0;
};

/// Sufficient statistics of the observations assigned to one component.
struct ComponentStats {
    long count = 0;
    Matrix gram;    // sum x x^T
    Vector cross;   // sum x y
    double energy = 0.0; // sum y^2

    static ComponentStats empty(int dim);
    /// Columns of `xs` are contexts, one per entry of `ys`.
    static ComponentStats from_batch(const DataMatrix& xs, const DataVector& ys);

    int dim() const { return static_cast<int>(cross.size()); }

    void add(const Vector& x, double y);
    /// Throws std::logic_error when count is already zero.
    void remove(const Vector& x, double y);
};

enum class Direction { add, remove };

ComponentStats accumulate(ComponentStats stats, const Vector& x, double y, Direction direction);

struct GaussianLinearParams {
    Vector w;
    double sigma2 = 1.0;
};

/// Student-t predictive parameters: degrees of freedom, location, squared scale.
struct StudentT {
    double dof = 0.0;
    double loc = 0.0;
    double scale2 = 0.0;

    double log_pdf(double y) const;
};

/// Posterior hyperparameters after conditioning `prior` on `stats`.
/// Returns `prior` unchanged when stats.count == 0. Throws NumericalError when
/// the accumulated precision is not positive definite or beta is not positive.
NIGHyper posterior_update(const NIGHyper& prior, const ComponentStats& stats);

/// sigma2 ~ InvGamma(alpha, beta), w ~ N(u, sigma2 V).
GaussianLinearParams sample_params(const NIGHyper& hyper, Rng& rng);

StudentT predictive(const NIGHyper& hyper, const Vector& x);

/// log of the Student-t predictive density of y at context x.
double log_predictive(const NIGHyper& hyper, const Vector& x, double y);

/// Matrix-t log density of the block Y (one entry per column of X) under
/// `prior`, computed directly from the n x n scale matrix I + X^T V X.
double log_marginal_block(const NIGHyper& prior, const DataMatrix& xs, const DataVector& ys);

/// Same quantity as log_marginal_block, computed from sufficient statistics
/// and the matching posterior in O(d^3).
double log_evidence(const NIGHyper& prior, const NIGHyper& posterior, long count);
double log_evidence(const NIGHyper& prior, const ComponentStats& stats);

} // namespace npts

#include "polyrec/oracle.hpp"

#include <Eigen/Eigenvalues>

#include "polyrec/errors.hpp"

namespace polyrec::oracle {

namespace {

void require_symmetric(const Matrix& p) {
    const double scale = p.size() > 0 ? p.cwiseAbs().maxCoeff() : 0.0;
    if (max_asymmetry(p) > 1e-12 * std::max(1.0, scale)) {
        throw DataError("matrix is not symmetric within tolerance");
    }
}

}  // namespace

Matrix laplacian(const Matrix& p) {
    if (p.rows() != p.cols()) {
        throw DataError("laplacian needs a square matrix");
    }
    require_symmetric(p);
    return Matrix::Identity(p.rows(), p.cols()) - p;
}

Matrix laplacian(const SimilarityGraph& graph) {
    return laplacian(graph.dense());
}

SpectralDecomposition eigendecompose(const Matrix& symmetric, std::int64_t size_cap) {
    if (symmetric.rows() != symmetric.cols()) {
        throw DataError("eigendecompose needs a square matrix");
    }
    if (symmetric.rows() > size_cap) {
        throw CapacityError("oracle eigendecomposition refused: size " +
                            std::to_string(symmetric.rows()) + " exceeds cap " +
                            std::to_string(size_cap) + " (test-scale component)");
    }
    require_symmetric(symmetric);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
    if (solver.info() != Eigen::Success) {
        throw DataError("eigendecomposition failed to converge");
    }
    SpectralDecomposition d;
    d.eigenvalues = solver.eigenvalues();
    d.eigenvectors = solver.eigenvectors();
    return d;
}

Vector spectral_filter_apply(const SpectralDecomposition& decomposition,
                             const std::function<double(double)>& response, const Vector& x) {
    if (x.size() != decomposition.eigenvectors.rows()) {
        throw DataError("signal length does not match the decomposition");
    }
    Vector hat = decomposition.eigenvectors.transpose() * x;  // graph Fourier transform
    for (Eigen::Index i = 0; i < hat.size(); ++i) {
        hat(i) *= response(decomposition.eigenvalues(i));
    }
    return decomposition.eigenvectors * hat;
}

Matrix spectral_filter_matrix(const SpectralDecomposition& decomposition,
                              const std::function<double(double)>& response) {
    Vector gains(decomposition.eigenvalues.size());
    for (Eigen::Index i = 0; i < gains.size(); ++i) {
        gains(i) = response(decomposition.eigenvalues(i));
    }
    return decomposition.eigenvectors * gains.asDiagonal() *
           decomposition.eigenvectors.transpose();
}

double smoothness(const Vector& x, const Matrix& laplacian) {
    if (x.size() != laplacian.rows() || laplacian.rows() != laplacian.cols()) {
        throw DataError("smoothness: dimension mismatch");
    }
    return x.dot(laplacian * x);
}

}  // namespace polyrec::oracle

#ifndef CHAPLYGIN_LIE_KERNEL_HPP
#define CHAPLYGIN_LIE_KERNEL_HPP

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace chaplygin {

class StreamRng;

/// Dimension of so(n).
constexpr int algebra_dim(int n) { return n * (n - 1) / 2; }
/// Dimension of the stabilizer algebra so(n-1) of e_n.
constexpr int stabilizer_dim(int n) { return (n - 1) * (n - 2) / 2; }

/// Index pairs (i, j), i < j, of the adapted orthonormal basis E_ij - E_ji.
/// The stabilizer block comes first in lexicographic order over indices
/// < n-1, followed by the pairs (a, n-1) for a = 0..n-2.
std::vector<std::pair<int, int>> basis_pairs(int n);

/// Element of so(n) stored by its coordinates in the adapted orthonormal
/// basis. The inner product <u,v> = 1/2 tr(u^T v) is the Euclidean dot
/// product of coordinate vectors.
class AlgebraVector {
public:
    AlgebraVector() = default;
    /// Zero element of so(n).
    explicit AlgebraVector(int n);
    AlgebraVector(int n, Eigen::VectorXd coords);

    /// Orthogonal projection of an arbitrary n x n matrix onto so(n).
    static AlgebraVector from_matrix(const Eigen::MatrixXd& m);

    int n() const { return n_; }
    int dim() const { return static_cast<int>(coords_.size()); }
    const Eigen::VectorXd& coords() const { return coords_; }
    double operator[](int k) const { return coords_[k]; }

    Eigen::MatrixXd matrix() const;
    double norm() const { return coords_.norm(); }

    AlgebraVector& operator+=(const AlgebraVector& o);
    AlgebraVector& operator-=(const AlgebraVector& o);
    AlgebraVector& operator*=(double a);

    friend AlgebraVector operator+(AlgebraVector a, const AlgebraVector& b) { return a += b; }
    friend AlgebraVector operator-(AlgebraVector a, const AlgebraVector& b) { return a -= b; }
    friend AlgebraVector operator*(double k, AlgebraVector a) { return a *= k; }
    friend AlgebraVector operator*(AlgebraVector a, double k) { return a *= k; }
    friend AlgebraVector operator-(AlgebraVector a) { return a *= -1.0; }

private:
    int n_ = 0;
    Eigen::VectorXd coords_;
};

/// Rotation in SO(n). Construction checks orthogonality and orientation;
/// the defect ||s^T s - 1||_F is cached.
class GroupPoint {
public:
    static constexpr double kMaxDefect = 1e-9;

    GroupPoint() = default;
    /// Throws std::invalid_argument unless m is orthogonal to kMaxDefect
    /// with det(m) > 0.
    explicit GroupPoint(Eigen::MatrixXd m);

    static GroupPoint identity(int n);

    int n() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const { return m_; }
    double orth_defect() const { return defect_; }
    double operator()(int i, int j) const { return m_(i, j); }

    GroupPoint inverse() const;
    friend GroupPoint operator*(const GroupPoint& a, const GroupPoint& b);

private:
    Eigen::MatrixXd m_;
    double defect_ = 0.0;
};

double orthogonality_defect(const Eigen::MatrixXd& m);

/// Orthonormal system adapted to so(n) = h + h_perp with h = so(n-1), the
/// stabilizer of e_n. Y spans h, Z spans h_perp, Z_a = E_{a n} - E_{n a}.
struct BasisSet {
    int n = 0;
    std::vector<AlgebraVector> Y;
    std::vector<AlgebraVector> Z;
    /// structure[i][j] = coordinates of [B_i, B_j] in the (Y, Z) ordering.
    std::vector<std::vector<Eigen::VectorXd>> structure;

    int dim() const { return algebra_dim(n); }
    /// Basis element by global index in the (Y, Z) ordering.
    const AlgebraVector& element(int k) const;
};

/// Throws std::invalid_argument for n < 3.
BasisSet build_basis(int n);

double inner(const AlgebraVector& u, const AlgebraVector& v);
AlgebraVector bracket(const AlgebraVector& u, const AlgebraVector& v);
/// s u s^T.
AlgebraVector Ad(const GroupPoint& s, const AlgebraVector& u);

AlgebraVector project_h(const AlgebraVector& u);
AlgebraVector project_hperp(const AlgebraVector& u);

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
GroupPoint exp_map(const AlgebraVector& u);
/// Same as exp_map without the GroupPoint checks; works on any square matrix.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// Thrown by log_map outside the principal-branch safety region.
class LogDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Safety region of log_map: ||s - 1||_2 < kLogSafetyRadius.
constexpr double kLogSafetyRadius = 1.0;

/// Increments a with ||a|| below this bound keep every rotation angle of
/// exp(a) under pi/3, so ||exp(a) - 1||_2 < kLogSafetyRadius.
constexpr double kIncrementSafetyBound = 1.0471975511965976;

/// Raised by integrators when a group increment leaves the exp/log safety
/// region; the caller must shrink the step size.
class StepRejected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws StepRejected when ||a|| >= kIncrementSafetyBound.
void check_increment(const AlgebraVector& a);

/// Principal logarithm by inverse scaling and squaring. Throws
/// LogDomainError when ||s - 1||_2 >= 1.
AlgebraVector log_map(const GroupPoint& s);

/// Haar-distributed rotation from the QR factorization of a Gaussian matrix.
GroupPoint random_group_point(int n, StreamRng& rng);
/// Haar-distributed element of O(m) or SO(m) as a plain matrix.
Eigen::MatrixXd random_orthogonal(int m, StreamRng& rng, bool special);
/// Random element of the stabilizer subgroup SO(n-1) x {1}.
GroupPoint random_stabilizer_point(int n, StreamRng& rng);
AlgebraVector random_algebra_vector(int n, StreamRng& rng, double scale = 1.0);

/// Nearest rotation (polar factor) of the matrix of s.
GroupPoint reorthonormalize(const GroupPoint& s);
/// Nearest rotation of an arbitrary nonsingular matrix.
Eigen::MatrixXd nearest_rotation(const Eigen::MatrixXd& m);

}  // namespace chaplygin

#endif  // CHAPLYGIN_LIE_KERNEL_HPP

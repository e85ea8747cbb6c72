#include "chaplygin/lie_kernel.hpp"

#include <cmath>
#include <string>

#include "chaplygin/rng.hpp"

namespace chaplygin {

namespace {

void require_same_dim(const AlgebraVector& u, const AlgebraVector& v, const char* what) {
    if (u.n() != v.n()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (n=" +
                                    std::to_string(u.n()) + " vs n=" + std::to_string(v.n()) + ")");
    }
}

double norm1(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// Taylor degree used after scaling to ||A||_1 <= kScaleTarget; the
// truncation term is below 1e-18 in relative size.
constexpr int kTaylorDegree = 12;
constexpr double kScaleTarget = 0.25;

Eigen::MatrixXd sqrtm_denman_beavers(const Eigen::MatrixXd& x) {
    const auto n = x.rows();
    Eigen::MatrixXd y = x;
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
    for (int it = 0; it < 60; ++it) {
        const Eigen::MatrixXd y_next = 0.5 * (y + z.inverse());
        const Eigen::MatrixXd z_next = 0.5 * (z + y.inverse());
        const double change = (y_next - y).norm();
        y = y_next;
        z = z_next;
        if (change < 1e-15 * std::max(1.0, y.norm())) break;
    }
    return y;
}

}  // namespace

std::vector<std::pair<int, int>> basis_pairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(algebra_dim(n)));
    for (int i = 0; i < n - 1; ++i)
        for (int j = i + 1; j < n - 1; ++j) pairs.emplace_back(i, j);
    for (int a = 0; a < n - 1; ++a) pairs.emplace_back(a, n - 1);
    return pairs;
}

// ---------------------------------------------------------------- AlgebraVector

AlgebraVector::AlgebraVector(int n) : n_(n), coords_(Eigen::VectorXd::Zero(algebra_dim(n))) {}

AlgebraVector::AlgebraVector(int n, Eigen::VectorXd coords) : n_(n), coords_(std::move(coords)) {
    if (coords_.size() != algebra_dim(n)) {
        throw std::invalid_argument("AlgebraVector: expected " + std::to_string(algebra_dim(n)) +
                                    " coordinates for n=" + std::to_string(n) + ", got " +
                                    std::to_string(coords_.size()));
    }
}

AlgebraVector AlgebraVector::from_matrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("AlgebraVector::from_matrix: not square");
    const int n = static_cast<int>(m.rows());
    Eigen::VectorXd c(algebra_dim(n));
    int k = 0;
    for (const auto& [i, j] : basis_pairs(n)) c[k++] = 0.5 * (m(i, j) - m(j, i));
    return AlgebraVector(n, std::move(c));
}

Eigen::MatrixXd AlgebraVector::matrix() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    int k = 0;
    for (const auto& [i, j] : basis_pairs(n_)) {
        m(i, j) = coords_[k];
        m(j, i) = -coords_[k];
        ++k;
    }
    return m;
}

AlgebraVector& AlgebraVector::operator+=(const AlgebraVector& o) {
    require_same_dim(*this, o, "AlgebraVector::operator+=");
    coords_ += o.coords_;
    return *this;
}

AlgebraVector& AlgebraVector::operator-=(const AlgebraVector& o) {
    require_same_dim(*this, o, "AlgebraVector::operator-=");
    coords_ -= o.coords_;
    return *this;
}

AlgebraVector& AlgebraVector::operator*=(double a) {
    coords_ *= a;
    return *this;
}

// ---------------------------------------------------------------- GroupPoint

double orthogonality_defect(const Eigen::MatrixXd& m) {
    return (m.transpose() * m - Eigen::MatrixXd::Identity(m.cols(), m.cols())).norm();
}

GroupPoint::GroupPoint(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("GroupPoint: matrix is not square");
    defect_ = orthogonality_defect(m_);
    if (!(defect_ < kMaxDefect)) {
        throw std::invalid_argument("GroupPoint: orthogonality defect " + std::to_string(defect_) +
                                    " exceeds tolerance");
    }
    if (m_.determinant() <= 0.0) throw std::invalid_argument("GroupPoint: determinant is not +1");
}

GroupPoint GroupPoint::identity(int n) { return GroupPoint(Eigen::MatrixXd::Identity(n, n)); }

GroupPoint GroupPoint::inverse() const { return GroupPoint(m_.transpose()); }

GroupPoint operator*(const GroupPoint& a, const GroupPoint& b) {
    if (a.n() != b.n()) throw std::invalid_argument("GroupPoint product: dimension mismatch");
    return GroupPoint(a.m_ * b.m_);
}

// ---------------------------------------------------------------- basis

const AlgebraVector& BasisSet::element(int k) const {
    const int ny = static_cast<int>(Y.size());
    return k < ny ? Y[static_cast<std::size_t>(k)] : Z[static_cast<std::size_t>(k - ny)];
}

BasisSet build_basis(int n) {
    if (n < 3) throw std::invalid_argument("build_basis: n must be >= 3, got " + std::to_string(n));
    BasisSet b;
    b.n = n;
    const int m = algebra_dim(n);
    const int k = stabilizer_dim(n);
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd c = Eigen::VectorXd::Unit(m, i);
        if (i < k)
            b.Y.emplace_back(n, std::move(c));
        else
            b.Z.emplace_back(n, std::move(c));
    }
    b.structure.assign(static_cast<std::size_t>(m), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(m)));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            b.structure[i][j] = bracket(b.element(i), b.element(j)).coords();
    return b;
}

// ---------------------------------------------------------------- algebra ops

double inner(const AlgebraVector& u, const AlgebraVector& v) {
    require_same_dim(u, v, "inner");
    return u.coords().dot(v.coords());
}

AlgebraVector bracket(const AlgebraVector& u, const AlgebraVector& v) {
    require_same_dim(u, v, "bracket");
    const Eigen::MatrixXd a = u.matrix();
    const Eigen::MatrixXd b = v.matrix();
    return AlgebraVector::from_matrix(a * b - b * a);
}

AlgebraVector Ad(const GroupPoint& s, const AlgebraVector& u) {
    if (s.n() != u.n()) throw std::invalid_argument("Ad: dimension mismatch");
    return AlgebraVector::from_matrix(s.matrix() * u.matrix() * s.matrix().transpose());
}

AlgebraVector project_h(const AlgebraVector& u) {
    Eigen::VectorXd c = u.coords();
    c.tail(u.n() - 1).setZero();
    return AlgebraVector(u.n(), std::move(c));
}

AlgebraVector project_hperp(const AlgebraVector& u) {
    Eigen::VectorXd c = u.coords();
    c.head(stabilizer_dim(u.n())).setZero();
    return AlgebraVector(u.n(), std::move(c));
}

// ---------------------------------------------------------------- exp / log

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    const auto n = a.rows();
    const double nrm = norm1(a);
    int squarings = 0;
    if (nrm > kScaleTarget) squarings = static_cast<int>(std::ceil(std::log2(nrm / kScaleTarget)));
    const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd r = id;
    for (int k = kTaylorDegree; k >= 1; --k) r = id + (scaled * r) / static_cast<double>(k);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

void check_increment(const AlgebraVector& a) {
    const double nrm = a.norm();
    if (!(nrm < kIncrementSafetyBound)) {
        throw StepRejected("group increment of norm " + std::to_string(nrm) +
                           " leaves the exp/log safety region; reduce the step size");
    }
}

GroupPoint exp_map(const AlgebraVector& u) { return GroupPoint(expm(u.matrix())); }

AlgebraVector log_map(const GroupPoint& s) {
    const auto n = s.n();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd dev = s.matrix() - id;
    const double dist = Eigen::JacobiSVD<Eigen::MatrixXd>(dev).singularValues()(0);
    if (!(dist < kLogSafetyRadius)) {
        throw LogDomainError("log_map: ||s - 1||_2 = " + std::to_string(dist) +
                             " outside the principal-branch safety region");
    }
    Eigen::MatrixXd x = s.matrix();
    int roots = 0;
    while ((x - id).norm() > 0.25 && roots < 20) {
        x = sqrtm_denman_beavers(x);
        ++roots;
    }
    // log X = 2 atanh(Y), Y = (X - 1)(X + 1)^{-1}.
    const Eigen::MatrixXd y = (x + id).partialPivLu().solve(x - id);
    const Eigen::MatrixXd y2 = y * y;
    Eigen::MatrixXd term = y;
    Eigen::MatrixXd sum = y;
    for (int j = 3; j < 80; j += 2) {
        term = term * y2;
        const Eigen::MatrixXd add = term / static_cast<double>(j);
        sum += add;
        if (add.norm() < 1e-18) break;
    }
    return AlgebraVector::from_matrix(2.0 * std::ldexp(1.0, roots) * sum);
}

// ---------------------------------------------------------------- random / polar

Eigen::MatrixXd random_orthogonal(int m, StreamRng& rng, bool special) {
    Eigen::MatrixXd g(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (int j = 0; j < m; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    if (special && q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
}

GroupPoint random_group_point(int n, StreamRng& rng) {
    return GroupPoint(random_orthogonal(n, rng, true));
}

GroupPoint random_stabilizer_point(int n, StreamRng& rng) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    m.topLeftCorner(n - 1, n - 1) = random_orthogonal(n - 1, rng, true);
    return GroupPoint(std::move(m));
}

AlgebraVector random_algebra_vector(int n, StreamRng& rng, double scale) {
    Eigen::VectorXd c(algebra_dim(n));
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = scale * rng.normal();
    return AlgebraVector(n, std::move(c));
}

Eigen::MatrixXd nearest_rotation(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd u = svd.matrixU();
    const Eigen::MatrixXd& v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(u.cols() - 1) *= -1.0;
    return u * v.transpose();
}

GroupPoint reorthonormalize(const GroupPoint& s) { return GroupPoint(nearest_rotation(s.matrix())); }

}  // namespace chaplygin

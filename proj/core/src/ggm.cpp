#include "qoq/verify.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qoq::verify {

namespace {

using Mat = Eigen::MatrixXcd;
const cplx I1{0.0, 1.0};

// 1-based generic constructors; X(j,j) = 2E_jj and Y(j,j) = 0 by the same formulas.
struct Ggm {
    int d;
    Mat e(int j, int k) const
    {
        Mat m = Mat::Zero(d, d);
        m(j - 1, k - 1) = 1.0;
        return m;
    }
    Mat x(int j, int k) const { return e(j, k) + e(k, j); }
    Mat y(int j, int k) const { return -I1 * e(j, k) + I1 * e(k, j); }
    Mat z(int j) const
    {
        Mat m = Mat::Zero(d, d);
        for (int k = 1; k < j; ++k) m(k - 1, k - 1) = 1.0;
        m(j - 1, j - 1) = -(j - 1.0);
        return std::sqrt(2.0 / (j * (j - 1.0))) * m;
    }
};

double delta(int a, int b) { return a == b ? 1.0 : 0.0; }

Mat comm(const Mat& a, const Mat& b) { return a * b - b * a; }

} // namespace

std::vector<Eigen::MatrixXcd> GgmBasis::all() const
{
    std::vector<Eigen::MatrixXcd> out = z_type;
    out.insert(out.end(), x_type.begin(), x_type.end());
    out.insert(out.end(), y_type.begin(), y_type.end());
    return out;
}

GgmBasis ggm_basis(int d)
{
    if (d < 2) throw std::invalid_argument("ggm_basis: d must be >= 2");
    const Ggm g{d};
    GgmBasis b;
    b.d = d;
    for (int j = 2; j <= d; ++j) b.z_type.push_back(g.z(j));
    for (int j = 1; j <= d; ++j)
        for (int k = j + 1; k <= d; ++k) {
            b.pairs.emplace_back(j, k);
            b.x_type.push_back(g.x(j, k));
            b.y_type.push_back(g.y(j, k));
        }
    return b;
}

CommutatorReport ggm_commutator_check(const GgmBasis& basis, double tol)
{
    const int d = basis.d;
    const Ggm g{d};
    CommutatorReport rep;
    auto record = [&](const char* family, const Mat& lhs, const Mat& rhs, std::initializer_list<int> idx) {
        const double v = (lhs - rhs).cwiseAbs().maxCoeff();
        ++rep.relations_checked;
        rep.max_violation = std::max(rep.max_violation, v);
        if (v > tol) {
            rep.ok = false;
            std::ostringstream os;
            os << family << " (";
            bool first = true;
            for (int i : idx) {
                os << (first ? "" : ",") << i;
                first = false;
            }
            os << ") violation " << v;
            rep.violations.push_back(os.str());
        }
    };

    for (int j = 2; j <= d; ++j)
        for (int k = 2; k <= d; ++k) record("[Z,Z]", comm(g.z(j), g.z(k)), Mat::Zero(d, d), {j, k});

    for (int j = 2; j <= d; ++j) {
        const double c = std::sqrt(2.0 / (j * (j - 1.0)));
        for (const auto& [l, m] : basis.pairs) {
            Mat sy = Mat::Zero(d, d), sx = Mat::Zero(d, d);
            for (int k = 1; k < j; ++k) {
                sy += delta(k, m) * g.y(k, l) + delta(l, k) * g.y(k, m);
                sx += delta(m, k) * g.x(k, l) - delta(l, k) * g.x(m, k);
            }
            sy -= (j - 1.0) * (delta(m, j) * g.y(j, l) + delta(l, j) * g.y(j, m));
            sx -= (j - 1.0) * (delta(m, j) * g.x(j, l) - delta(l, j) * g.x(m, j));
            record("[Z,X]", comm(g.z(j), g.x(l, m)), I1 * c * sy, {j, l, m});
            record("[Z,Y]", comm(g.z(j), g.y(l, m)), I1 * c * sx, {j, l, m});
        }
    }

    for (const auto& [j, k] : basis.pairs)
        for (const auto& [l, m] : basis.pairs) {
            const Mat xx = I1 * (delta(k, l) * g.y(j, m) + delta(j, l) * g.y(k, m) + delta(m, j) * g.y(k, l) +
                                 delta(m, k) * g.y(j, l));
            record("[X,X]", comm(g.x(j, k), g.x(l, m)), xx, {j, k, l, m});

            const Mat yy = -I1 * (delta(k, l) * g.y(j, m) - delta(k, m) * g.y(j, l) - delta(j, l) * g.y(k, m) +
                                  delta(j, m) * g.y(k, l));
            const Mat lhs_yy = comm(g.y(j, k), g.y(l, m));
            record("[Y,Y]", lhs_yy, yy, {j, k, l, m});
            const Mat yy_real = -delta(k, l) * g.x(j, m) + delta(j, l) * g.x(k, m) + delta(m, j) * g.x(k, l) -
                                delta(m, k) * g.x(j, l);
            if ((lhs_yy - yy_real).cwiseAbs().maxCoeff() > tol) ++rep.yy_real_form_violations;

            const Mat xy = I1 * (delta(k, m) * g.x(j, l) - delta(j, l) * g.x(k, m) + delta(m, j) * g.x(k, l) -
                                 delta(l, k) * g.x(m, j));
            record("[X,Y]", comm(g.x(j, k), g.y(l, m)), xy, {j, k, l, m});
        }
    return rep;
}

int lie_closure_dimension(const std::vector<Eigen::MatrixXcd>& generators, double rel_tol)
{
    std::vector<Mat> basis;
    auto add = [&](const Mat& m) {
        const double scale = m.norm();
        if (scale < 1e-300) return;
        Mat v = m;
        for (int pass = 0; pass < 2; ++pass)
            for (const Mat& q : basis) v -= (q.adjoint() * v).trace().real() * q;
        const double nv = v.norm();
        if (nv > rel_tol * scale) basis.push_back(v / nv);
    };
    for (const Mat& g : generators) {
        if (g.rows() != g.cols()) throw std::invalid_argument("lie_closure_dimension: generators must be square");
        if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.norm()))
            throw std::invalid_argument("lie_closure_dimension: generators must be Hermitian");
        add(g);
    }
    if (basis.empty()) return 0;
    const std::size_t cap = static_cast<std::size_t>(basis.front().rows() * basis.front().rows());
    for (std::size_t p = 0; p < basis.size() && basis.size() < cap; ++p)
        for (std::size_t q = 0; q < p && basis.size() < cap; ++q) add(I1 * comm(basis[p], basis[q]));
    return static_cast<int>(basis.size());
}

std::vector<Eigen::MatrixXcd> qo_generators(int n)
{
    if (n < 1) throw std::invalid_argument("qo_generators: n must be >= 1");
    const int d = 2 * (n + 1);
    Mat cx = Mat::Zero(d, d), cy = Mat::Zero(d, d), sx = Mat::Zero(d, d), sy = Mat::Zero(d, d);
    for (int j = 0; j <= n; ++j) {
        const int a = 2 * j, b = 2 * j + 1;
        cx(a, b) = cx(b, a) = 1.0;
        cy(a, b) = -I1;
        cy(b, a) = I1;
    }
    for (int j = 1; j <= n; ++j) {
        const int a = 2 * j, b = 2 * j - 1;
        const double w = std::sqrt(static_cast<double>(j));
        sx(a, b) = sx(b, a) = w;
        sy(a, b) = -I1 * w;
        sy(b, a) = I1 * w;
    }
    // Truncation drops the |1,n> coupling, so the bare sideband generator is not
    // realizable on its own; closing-angle pulses are. Conjugating the carrier
    // generators by them adds the boundary directions the truncation loses.
    std::vector<Mat> out{cx, cy, sx, sy};
    const QOQuditDims dims{n, 1};
    for (const double phi : {0.0, rot::pi / 2}) {
        const Mat u = apply_sequence(std::vector<Pulse>{Pulse::sideband(closing_angle(n), phi)}, dims)
                          .matrix.topLeftCorner(d, d);
        out.push_back(u * cx * u.adjoint());
        out.push_back(u * cy * u.adjoint());
    }
    return out;
}

} // namespace qoq::verify

#include "qoq/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace qoq::synth {

using rot::pi;
using rot::su2_from_axis_angle;

namespace {

constexpr double kIdentityTol = 1e-10;
constexpr double kAngleFloor = 1e-6;

Vec3 inplane_axis(double phi) { return {std::cos(phi), std::sin(phi), 0.0}; }

std::vector<Pulse> concat(std::initializer_list<const std::vector<Pulse>*> parts)
{
    std::vector<Pulse> out;
    std::size_t total = 0;
    for (const auto* p : parts) total += p->size();
    out.reserve(total);
    for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    return out;
}

std::vector<Pulse> repeat(const std::vector<Pulse>& p, int times)
{
    std::vector<Pulse> out;
    out.reserve(p.size() * static_cast<std::size_t>(std::max(times, 0)));
    for (int i = 0; i < times; ++i) out.insert(out.end(), p.begin(), p.end());
    return out;
}

double canonical_angle(double su2_angle) { return std::min(su2_angle, 2.0 * pi - su2_angle); }

int repetitions_for(double theta)
{
    if (theta < kAngleFloor) return std::numeric_limits<int>::max() / 4;
    return std::max(0, static_cast<int>(std::ceil(pi / theta - 1e-12)) - 1);
}

std::vector<Su2Matrix> track_blocks(const std::vector<Pulse>& pulses, int count)
{
    std::vector<Su2Matrix> blocks;
    blocks.reserve(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j) blocks.push_back(sideband_block_product(pulses, j));
    return blocks;
}

Su2Matrix power(const Su2Matrix& m, int e)
{
    Su2Matrix out = Su2Matrix::Identity();
    for (int i = 0; i < e; ++i) out = m * out;
    return out;
}

void refresh_k(SynthesisState& s)
{
    const rot::AxisAngle aa = rot::axis_angle_of(s.block(s.k));
    s.k_axis = aa.axis;
    s.k_angle = aa.angle;
}

Vec3 perpendicular_to(const Vec3& v)
{
    Vec3 e = v.cross(Vec3::UnitZ());
    if (e.norm() < 1e-9) e = v.cross(Vec3::UnitX());
    return e.normalized();
}

// Rotation carrying k onto t, twisted by psi about t.
Su2Matrix carry_axis(const Vec3& k, const Vec3& t, double psi)
{
    const Vec3 c = k.cross(t);
    Su2Matrix base;
    if (c.norm() < 1e-12)
        base = k.dot(t) > 0 ? Su2Matrix(Su2Matrix::Identity()) : su2_from_axis_angle(perpendicular_to(k), pi);
    else
        base = su2_from_axis_angle(c.normalized(), -std::acos(std::clamp(k.dot(t), -1.0, 1.0)));
    return su2_from_axis_angle(t, psi) * base;
}

struct TargetAxes {
    Vec3 alpha;
    Vec3 beta;
};

double beta_bound(double theta, int l)
{
    const double c = std::cos(0.5 * theta);
    const double sl = std::sin(0.5 * l * theta);
    return std::sqrt(std::max(0.0, 1.0 - c * c / (sl * sl)));
}

// su2(beta, l theta) su2(alpha, theta) = sign^{l+1} X (or Y) for the k block.
TargetAxes target_axes(double theta, int l, int sign, ElementarySigma sigma, double bfree)
{
    TargetAxes ax;
    const bool flip = ((l + 1) % 2 == 1) && sign < 0;
    if (l == 0) {
        ax.alpha = sigma == ElementarySigma::X ? Vec3::UnitX() : Vec3::UnitY();
        ax.beta = ax.alpha;
    } else {
        const double c = std::cos(0.5 * theta);
        const double s = std::sin(0.5 * theta);
        const double sl = std::sin(0.5 * l * theta);
        const double cl = std::cos(0.5 * l * theta);
        const double r = std::sqrt(std::max(0.0, sl * sl * (1.0 - bfree * bfree) - c * c));
        if (sigma == ElementarySigma::X) {
            ax.alpha = Vec3(cl / s, r / s, -bfree * sl / s);
            ax.beta = Vec3(c / sl, bfree, r / sl);
        } else {
            ax.alpha = Vec3(-r / s, cl / s, bfree * sl / s);
            ax.beta = Vec3(bfree, c / sl, r / sl);
        }
        ax.alpha.normalize();
        ax.beta.normalize();
    }
    if (flip) {
        ax.alpha.x() = -ax.alpha.x();
        ax.alpha.y() = -ax.alpha.y();
        ax.beta.x() = -ax.beta.x();
        ax.beta.y() = -ax.beta.y();
    }
    return ax;
}

struct FinalParams {
    double psi1 = 0.0, f1 = 0.0, psi2 = 0.0, f2 = 0.0;
    double bfree = 0.0;
};

struct FinalPieces {
    std::vector<Pulse> c1, c2;
    TargetAxes axes;
};

FinalPieces final_pieces(const Vec3& kaxis, double theta, int l, int sign, ElementarySigma sigma, int k,
                         const FinalParams& p)
{
    FinalPieces out;
    out.axes = target_axes(theta, l, sign, sigma, p.bfree);
    if (l > 0)
        out.c1 = conjugator_pulses(carry_axis(kaxis, out.axes.beta, p.psi1), k, p.f1);
    out.c2 = conjugator_pulses(carry_axis(kaxis, out.axes.alpha, p.psi2), k, p.f2);
    return out;
}

Su2Matrix final_block(const Su2Matrix& omega, const FinalPieces& pc, int l, int j)
{
    const Su2Matrix c1 = sideband_block_product(pc.c1, j);
    const Su2Matrix c2 = sideband_block_product(pc.c2, j);
    return c1 * power(omega, l) * c1.adjoint() * c2 * omega * c2.adjoint();
}

struct ClosureFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    Vec3 kaxis;
    double theta;
    int l, sign, k, b;
    ElementarySigma sigma;
    double bmax;
    Su2Matrix omega_b;

    int inputs() const { return 5; }
    int values() const { return 5; }

    FinalParams params(const Eigen::VectorXd& x) const
    {
        return {x[0], x[1], x[2], x[3], bmax * std::sin(x[4])};
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const
    {
        const FinalPieces pc = final_pieces(kaxis, theta, l, sign, sigma, k, params(x));
        const Su2Matrix fb = final_block(omega_b, pc, l, b);
        f.setZero(5);
        f[0] = fb(0, 1).real();
        f[1] = fb(0, 1).imag();
        f[2] = fb(0, 0).imag();
        return 0;
    }
};

std::vector<Pulse> build_final(const std::vector<Pulse>& u, const FinalPieces& pc, int l)
{
    const std::vector<Pulse> c2inv = inverse(pc.c2);
    std::vector<Pulse> out = concat({&c2inv, &u, &pc.c2});
    if (l > 0) {
        const std::vector<Pulse> c1inv = inverse(pc.c1);
        const std::vector<Pulse> ul = repeat(u, l);
        out = concat({&out, &c1inv, &ul, &pc.c1});
    }
    return out;
}

// -I on the k block as [C1 W^a C1^dagger][C2 W^b C2^dagger] W^c.
struct MinusIdentityPlan {
    int a = 0, b = 0, c = 0;
};

struct MinusIdentityParams {
    double twist = 0.0, psi1 = 0.0, f1 = 0.0, psi2 = 0.0, f2 = 0.0;
};

struct MinusIdentityPieces {
    std::vector<Pulse> c1, c2;
    Vec3 alpha, beta;
};

// Axes with sign^{a+b+c} su2(alpha, a theta) su2(beta, b theta) su2(k, c theta) = -I, if any exist.
bool minus_identity_axes(const Vec3& k, double theta, int sign, const MinusIdentityPlan& plan, double twist,
                         Vec3& alpha, Vec3& beta)
{
    const double A = plan.a * theta, B = plan.b * theta, C = plan.c * theta;
    const bool odd = (plan.a + plan.b + plan.c) % 2 == 1;
    // su2(alpha, A) su2(beta, B) must equal su2(k, G).
    const double G = (odd && sign < 0) ? -C : 2.0 * pi - C;
    const double cA = std::cos(0.5 * A), sA = std::sin(0.5 * A);
    const double cB = std::cos(0.5 * B), sB = std::sin(0.5 * B);
    const double sG = std::sin(0.5 * G);
    if (std::abs(sA * sB) < 1e-9 || std::abs(sG) < 1e-9) return false;
    const double d = (cA * cB - std::cos(0.5 * G)) / (sA * sB);
    if (std::abs(d) > 1.0 - 1e-9) return false;

    const Vec3 e1 = perpendicular_to(k);
    const Vec3 e2 = k.cross(e1);
    const Vec3 a0 = e1;
    const Vec3 b0 = d * e1 + std::sqrt(1.0 - d * d) * e2;
    const Vec3 v0 = (sA * cB * a0 + cA * sB * b0 - sA * sB * a0.cross(b0)).normalized();
    const Vec3 want = sG > 0 ? k : Vec3(-k);
    const Vec3 ax = v0.cross(want);
    rot::So3Matrix r = rot::So3Matrix::Identity();
    if (ax.norm() > 1e-12)
        r = rot::rodrigues(ax.normalized(), std::acos(std::clamp(v0.dot(want), -1.0, 1.0)));
    else if (v0.dot(want) < 0)
        r = rot::rodrigues(perpendicular_to(v0), pi);
    r = rot::rodrigues(k, twist) * r;
    alpha = (r * a0).normalized();
    beta = (r * b0).normalized();
    return true;
}

MinusIdentityPieces minus_identity_pieces(const Vec3& k_axis, double theta, int sign, int k,
                                          const MinusIdentityPlan& plan, const MinusIdentityParams& p)
{
    MinusIdentityPieces out;
    if (!minus_identity_axes(k_axis, theta, sign, plan, p.twist, out.alpha, out.beta))
        throw SynthesisError("-I final step: infeasible repetition plan");
    out.c1 = conjugator_pulses(carry_axis(k_axis, out.alpha, p.psi1), k, p.f1);
    out.c2 = conjugator_pulses(carry_axis(k_axis, out.beta, p.psi2), k, p.f2);
    return out;
}

Su2Matrix minus_identity_block(const Su2Matrix& omega, const MinusIdentityPieces& pc, const MinusIdentityPlan& plan,
                               int j)
{
    const Su2Matrix c1 = sideband_block_product(pc.c1, j);
    const Su2Matrix c2 = sideband_block_product(pc.c2, j);
    return c1 * power(omega, plan.a) * c1.adjoint() * c2 * power(omega, plan.b) * c2.adjoint() * power(omega, plan.c);
}

std::vector<Pulse> build_minus_identity(const std::vector<Pulse>& u, const MinusIdentityPieces& pc,
                                        const MinusIdentityPlan& plan)
{
    const std::vector<Pulse> uc = repeat(u, plan.c), ub = repeat(u, plan.b), ua = repeat(u, plan.a);
    const std::vector<Pulse> c2inv = inverse(pc.c2), c1inv = inverse(pc.c1);
    return concat({&uc, &c2inv, &ub, &pc.c2, &c1inv, &ua, &pc.c1});
}

struct MinusIdentityClosure {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    Vec3 kaxis;
    double theta;
    int sign, k, b;
    MinusIdentityPlan plan;
    Su2Matrix omega_b;

    int inputs() const { return 5; }
    int values() const { return 5; }

    static MinusIdentityParams params(const Eigen::VectorXd& x) { return {x[0], x[1], x[2], x[3], x[4]}; }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const
    {
        const MinusIdentityPieces pc = minus_identity_pieces(kaxis, theta, sign, k, plan, params(x));
        const Su2Matrix fb = minus_identity_block(omega_b, pc, plan, b);
        f.setZero(5);
        f[0] = fb(0, 1).real();
        f[1] = fb(0, 1).imag();
        f[2] = fb(0, 0).imag();
        return 0;
    }
};

// Feasible plans with a + b + c = total, most balanced first.
std::vector<MinusIdentityPlan> minus_identity_plans(double theta, int sign, int total, const Vec3& k)
{
    std::vector<MinusIdentityPlan> out;
    for (int c = 1; c <= total - 2; ++c)
        for (int a = 1; a + c < total; ++a) {
            const MinusIdentityPlan p{a, total - a - c, c};
            Vec3 al, be;
            if (minus_identity_axes(k, theta, sign, p, 0.0, al, be)) out.push_back(p);
        }
    std::stable_sort(out.begin(), out.end(), [](const MinusIdentityPlan& x, const MinusIdentityPlan& y) {
        const auto spread = [](const MinusIdentityPlan& p) {
            return std::max({p.a, p.b, p.c}) - std::min({p.a, p.b, p.c});
        };
        return spread(x) < spread(y);
    });
    return out;
}

// Closes close_block when asked; the first feasible plan is kept otherwise.
FinalStepResult minus_identity_step(const SynthesisState& state, const rot::SignedRotation& sr, int close_block)
{
    const int k = state.k;
    const bool closable = close_block > 0 && close_block <= state.tracked();
    const int first = 3;
    const int last = first + 4 * (repetitions_for(sr.angle) + 1) + 4;

    std::optional<std::tuple<MinusIdentityPlan, MinusIdentityParams, MinusIdentityPieces>> chosen;
    bool closed = false;
    for (int total = first; total <= last && !closed; ++total) {
        const std::vector<MinusIdentityPlan> plans = minus_identity_plans(sr.angle, sr.sign, total, sr.axis);
        for (const MinusIdentityPlan& plan : plans) {
            MinusIdentityPieces pieces = minus_identity_pieces(sr.axis, sr.angle, sr.sign, k, plan, {});
            if (!chosen) chosen.emplace(plan, MinusIdentityParams{}, pieces);
            if (!closable) break;
            const Su2Matrix& ob = state.block(close_block);
            if (rot::distance_to_pm_identity(minus_identity_block(ob, pieces, plan, close_block)) < 1e-12) {
                chosen.emplace(plan, MinusIdentityParams{}, std::move(pieces));
                closed = true;
                break;
            }
            MinusIdentityClosure fn{sr.axis, sr.angle, sr.sign, k, close_block, plan, ob};
            Eigen::NumericalDiff<MinusIdentityClosure> nd(fn);
            // Five-digit base-3 grid over (twist, psi1, f1, psi2, f2).
            const double grid[3] = {0.3, 2.0, 4.2};
            for (int code = 0; code < 243 && !closed; ++code) {
                Eigen::VectorXd x(5);
                for (int i = 0, c = code; i < 5; ++i, c /= 3) x[i] = grid[c % 3];
                Eigen::LevenbergMarquardt<Eigen::NumericalDiff<MinusIdentityClosure>> lm(nd);
                lm.parameters.ftol = 1e-15;
                lm.parameters.xtol = 1e-15;
                lm.parameters.maxfev = 2000;
                lm.minimize(x);
                const MinusIdentityParams p = MinusIdentityClosure::params(x);
                MinusIdentityPieces cand = minus_identity_pieces(sr.axis, sr.angle, sr.sign, k, plan, p);
                if (rot::distance_to_pm_identity(minus_identity_block(ob, cand, plan, close_block)) < 1e-12) {
                    chosen.emplace(plan, p, std::move(cand));
                    closed = true;
                }
            }
            if (closed) break;
        }
        if (chosen && !closable) break;
        // One extra repetition is tried for closure before giving up on it.
        if (chosen && total > std::get<0>(*chosen).a + std::get<0>(*chosen).b + std::get<0>(*chosen).c) break;
    }
    if (!chosen) throw SynthesisError("final_step: no repetition plan reaches -I on the k block");

    const auto& [plan, params, pieces] = *chosen;
    FinalStepResult res;
    res.theta_k = sr.angle;
    res.l = plan.a + plan.b + plan.c - 1;
    res.alpha = pieces.alpha;
    res.beta = pieces.beta;
    res.pulses = build_minus_identity(state.sequence, pieces, plan);
    for (int j = 1; j <= state.tracked(); ++j)
        res.blocks.push_back(minus_identity_block(state.block(j), pieces, plan, j));
    if ((res.blocks[static_cast<std::size_t>(k - 1)] + Su2Matrix::Identity()).cwiseAbs().maxCoeff() > 1e-8)
        throw SynthesisError("final_step: k block misses -I");
    if (closable && rot::distance_to_pm_identity(res.blocks[static_cast<std::size_t>(close_block - 1)]) < 1e-12)
        res.closed_block = close_block;
    return res;
}

bool perfect_square(int v)
{
    const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
    return r * r == v;
}

} // namespace

const char* to_string(ElementarySigma s)
{
    switch (s) {
    case ElementarySigma::X: return "X";
    case ElementarySigma::Y: return "Y";
    case ElementarySigma::MinusI: return "-I";
    }
    return "?";
}

ElementarySigma sigma_from_string(const std::string& s)
{
    if (s == "X" || s == "x") return ElementarySigma::X;
    if (s == "Y" || s == "y") return ElementarySigma::Y;
    if (s == "-I" || s == "minusI" || s == "MinusI" || s == "mI") return ElementarySigma::MinusI;
    throw std::invalid_argument("unknown elementary sigma '" + s + "' (expected X, Y or -I)");
}

Su2Matrix sigma_matrix(ElementarySigma s)
{
    switch (s) {
    case ElementarySigma::X: return su2_from_axis_angle(Vec3::UnitX(), pi);
    case ElementarySigma::Y: return su2_from_axis_angle(Vec3::UnitY(), pi);
    case ElementarySigma::MinusI: return -Su2Matrix::Identity();
    }
    return Su2Matrix::Identity();
}

std::vector<int> SynthesisState::uncleaned() const
{
    std::vector<int> out;
    for (int m = 1; m <= range_max; ++m)
        if (m != k && !cleaned.count(m)) out.push_back(m);
    return out;
}

std::vector<Pulse> conjugator_pulses(const Su2Matrix& g, int j, double free_angle)
{
    const rot::AxisAngle aa = rot::axis_angle_of(g);
    if (aa.axis_arbitrary) return {};
    const rot::XyRotationPair pair = rot::decompose_to_xy_plane(aa, free_angle);
    std::vector<Pulse> out;
    const double scale = 1.0 / std::sqrt(static_cast<double>(j));
    for (const rot::AxisAngle* f : {&pair.second, &pair.first})
        if (std::abs(f->angle) > 1e-15)
            out.push_back(Pulse::sideband(f->angle * scale, std::atan2(f->axis.y(), f->axis.x())));
    return out;
}

std::vector<rot::AxisAngle> exact_inplane_factors(const Su2Matrix& w, double free_angle)
{
    const rot::AxisAngle aa = rot::axis_angle_of(w);
    if (aa.axis_arbitrary) {
        if (aa.angle == 0.0) return {};
        return {rot::AxisAngle{Vec3::UnitX(), 2.0 * pi, false}};
    }
    const rot::XyRotationPair pair = rot::decompose_to_xy_plane(aa, free_angle);
    std::vector<rot::AxisAngle> f{pair.first};
    if (std::abs(pair.second.angle) > 1e-15) f.push_back(pair.second);
    Su2Matrix prod = Su2Matrix::Identity();
    for (const auto& a : f) prod = prod * su2_from_axis_angle(a);
    if ((prod + w).cwiseAbs().maxCoeff() < (prod - w).cwiseAbs().maxCoeff())
        f.front().angle += 2.0 * pi;
    return f;
}

bool mu_admissible(int k, int mu)
{
    if (mu < 1 || mu == k) return false;
    return !(k % mu == 0 && perfect_square(k / mu));
}

double base_case_angle(int k, int mu1, int mu2)
{
    const double r1 = std::sqrt(static_cast<double>(k) / mu1);
    const double r2 = std::sqrt(static_cast<double>(k) / mu2);
    const double s1 = std::sin(pi * r1);
    const double c1 = std::cos(pi * r1);
    return 2.0 * std::acos(std::clamp(c1 * c1 - std::cos(pi * r2) * s1 * s1, -1.0, 1.0));
}

StepPrediction predict_step(const Vec3& k_axis, double k_angle, const std::vector<Pulse>& conjugator, int k)
{
    if (conjugator.size() > 2)
        throw std::invalid_argument("predict_step: conjugator must have at most two pulses");
    // Block product is su2(a, A) su2(b, B) with the later pulse on the left.
    const double sk = std::sqrt(static_cast<double>(k));
    Vec3 a = Vec3::UnitX(), b = Vec3::UnitX();
    double A = 0.0, B = 0.0;
    if (conjugator.size() == 2) {
        a = inplane_axis(conjugator[1].phi);
        A = sk * conjugator[1].theta;
        b = inplane_axis(conjugator[0].phi);
        B = sk * conjugator[0].theta;
    } else if (conjugator.size() == 1) {
        a = inplane_axis(conjugator[0].phi);
        A = sk * conjugator[0].theta;
    }
    StepPrediction p;
    const double ca = std::cos(0.5 * A), sa = std::sin(0.5 * A);
    const double cb = std::cos(0.5 * B), sb = std::sin(0.5 * B);
    const double c = ca * cb - a.dot(b) * sa * sb;
    p.theta_ab = 2.0 * std::acos(std::clamp(c, -1.0, 1.0));
    const Vec3 v = sa * cb * a + ca * sb * b - sa * sb * a.cross(b);
    p.r_ab = v.norm() > 1e-300 ? Vec3(v.normalized()) : Vec3(Vec3::UnitX());
    const double kr = k_axis.dot(p.r_ab);
    p.k_dot_kab = kr * kr + (1.0 - kr * kr) * std::cos(p.theta_ab);
    const double ch = std::cos(0.5 * k_angle), sh = std::sin(0.5 * k_angle);
    p.next_angle = 2.0 * std::acos(std::clamp(ch * ch - p.k_dot_kab * sh * sh, -1.0, 1.0));
    return p;
}

std::vector<Pulse> base_case_pulses(int mu1, int mu2)
{
    const double a = 2.0 * pi / std::sqrt(static_cast<double>(mu1));
    const double b = pi / std::sqrt(static_cast<double>(mu2));
    return {Pulse::sideband(-b, 0.5 * pi), Pulse::sideband(a, 0.0), Pulse::sideband(b, 0.5 * pi),
            Pulse::sideband(a, 0.0)};
}

SynthesisState base_case(int n, int k, const CleaningOptions& opts, int range_max)
{
    if (range_max < 0) range_max = opts.clean_boundary ? n + 1 : n;
    if (n < 1 || k < 1 || k > n + 1 || range_max > n + 1)
        throw std::invalid_argument("base_case: need n >= 1, 1 <= k <= n+1, range within n+1");
    std::vector<int> range;
    for (int m = 1; m <= range_max; ++m)
        if (m != k) range.push_back(m);
    if (range.size() < 2)
        throw std::invalid_argument("base_case: cleaning range needs at least two subspaces");

    const int track = std::max(range_max, k) + 1;
    const bool closure_wanted = opts.clean_boundary && range_max == n && k <= n;

    std::vector<std::pair<int, int>> pairs;
    if (opts.mu_pair) {
        const auto [m1, m2] = *opts.mu_pair;
        if (m1 == m2) throw SynthesisError("base_case: mu1 and mu2 must differ");
        for (int m : {m1, m2})
            if (!mu_admissible(k, m)) {
                std::ostringstream os;
                os << "base_case: mu=" << m << " violates the constraint that sqrt(k/mu) is not an integer (k=" << k
                   << ")";
                throw SynthesisError(os.str());
            }
        pairs.push_back(*opts.mu_pair);
    } else {
        for (int m1 : range)
            for (int m2 : range)
                if (m1 != m2 && mu_admissible(k, m1) && mu_admissible(k, m2)) pairs.emplace_back(m1, m2);
    }
    if (pairs.empty())
        throw SynthesisError("base_case: no admissible (mu1, mu2) pair in the cleaning range");

    struct Candidate {
        double cost;
        double angle;
        std::pair<int, int> mu;
        std::vector<Su2Matrix> blocks;
    };
    std::optional<Candidate> best;
    int trivial = 0;
    for (const auto& mu : pairs) {
        const std::vector<Pulse> seq = base_case_pulses(mu.first, mu.second);
        std::vector<Su2Matrix> blocks = track_blocks(seq, track);
        if (rot::distance_to_pm_identity(blocks[k - 1]) < 1e-9) {
            ++trivial;
            continue;
        }
        int remaining = 0;
        for (int m : range)
            if (rot::distance_to_pm_identity(blocks[m - 1]) >= kIdentityTol) ++remaining;
        const double angle = rot::rotation_angle(blocks[k - 1]);
        double u = 8.0 * std::pow(2.0, remaining) - 4.0;
        const double turn = opts.final_turn > pi + 1e-9 ? opts.final_turn : pi;
        const int l = remaining == 0 ? std::max(0, static_cast<int>(std::ceil(turn / canonical_angle(angle) - 1e-12)) - 1)
                                     : 1;
        // The X/Y final step only closes the boundary at l = 1; the -I step tries at any l.
        const bool closes = l <= 1 || turn > pi;
        if (closure_wanted && !closes && rot::distance_to_pm_identity(blocks[n]) >= kIdentityTol) u = 2.0 * u + 4.0;
        const double cost = (l + 1.0) * u + 8.0;
        if (!best || cost < best->cost - 0.5 || (std::abs(cost - best->cost) < 0.5 && angle > best->angle + 1e-12))
            best = Candidate{cost, angle, mu, std::move(blocks)};
    }
    if (!best) {
        std::ostringstream os;
        os << "base_case: all " << trivial << " admissible (mu1, mu2) pairs leave the k block at +-I";
        throw SynthesisError(os.str());
    }

    SynthesisState s;
    s.n = n;
    s.k = k;
    s.range_max = range_max;
    s.mu = best->mu;
    s.sequence = base_case_pulses(best->mu.first, best->mu.second);
    s.blocks = std::move(best->blocks);
    for (int m : range) {
        const Su2Matrix& blk = s.block(m);
        if ((blk - Su2Matrix::Identity()).cwiseAbs().maxCoeff() < kIdentityTol) {
            s.cleaned.insert(m);
        } else if ((blk + Su2Matrix::Identity()).cwiseAbs().maxCoeff() < kIdentityTol) {
            s.cleaned.insert(m);
            s.block_phase[m] = -1;
        }
    }
    refresh_k(s);
    return s;
}

SynthesisState clean_step(const SynthesisState& state, int mu, const StepParams& params)
{
    if (mu < 1 || mu > state.range_max || mu == state.k || state.cleaned.count(mu))
        throw std::invalid_argument("clean_step: mu is not an uncleaned subspace of the range");
    SynthesisState s = state;
    StepRecord rec;
    rec.mu = mu;
    rec.params = params;
    const Su2Matrix& om = s.block(mu);
    if (rot::distance_to_pm_identity(om) < kIdentityTol) {
        s.cleaned.insert(mu);
        if ((om + Su2Matrix::Identity()).cwiseAbs().maxCoeff() < kIdentityTol) s.block_phase[mu] = -1;
        rec.skipped = true;
        rec.predicted_angle = rec.simulated_angle = s.k_angle;
        s.steps.push_back(rec);
        return s;
    }
    const Vec3 m = rot::signed_rotation_of(om).axis;
    const Vec3 e1 = perpendicular_to(m);
    const Vec3 e2 = m.cross(e1);
    const Vec3 perp = std::cos(params.perp_angle) * e1 + std::sin(params.perp_angle) * e2;
    const std::vector<Pulse> c = conjugator_pulses(su2_from_axis_angle(perp.normalized(), pi), mu, params.free_angle);

    rec.predicted_angle = predict_step(s.k_axis, s.k_angle, c, s.k).next_angle;

    const std::vector<Pulse> cinv = inverse(c);
    s.sequence = concat({&cinv, &state.sequence, &c, &state.sequence});
    for (int j = 1; j <= s.tracked(); ++j) {
        const Su2Matrix cj = sideband_block_product(c, j);
        Su2Matrix& bj = s.blocks[static_cast<std::size_t>(j - 1)];
        bj = bj * cj * bj * cj.adjoint();
    }
    s.cleaned.insert(mu);
    refresh_k(s);
    rec.simulated_angle = s.k_angle;
    s.steps.push_back(rec);
    return s;
}

HeuristicChoice cleaning_order_heuristic(const SynthesisState& state, int t_floor, int grid)
{
    const std::vector<int> unc = state.uncleaned();
    if (unc.empty()) throw std::invalid_argument("cleaning_order_heuristic: nothing left to clean");
    grid = std::max(grid, 1);
    for (int mu : unc)
        if (rot::distance_to_pm_identity(state.block(mu)) < kIdentityTol)
            return {mu, {}, canonical_angle(state.k_angle), true};

    const double floor = pi / std::max(t_floor, 1);
    std::vector<HeuristicChoice> per_mu;
    for (int mu : unc) {
        const Vec3 m = rot::signed_rotation_of(state.block(mu)).axis;
        const Vec3 e1 = perpendicular_to(m);
        const Vec3 e2 = m.cross(e1);
        HeuristicChoice best{mu, {}, -1.0, true};
        for (int i = 0; i < grid; ++i) {
            const double psi = pi * i / grid;
            const Vec3 perp = (std::cos(psi) * e1 + std::sin(psi) * e2).normalized();
            const Su2Matrix g = su2_from_axis_angle(perp, pi);
            for (int q = 0; q < grid; ++q) {
                const double f = 2.0 * pi * q / grid;
                const std::vector<Pulse> c = conjugator_pulses(g, mu, f);
                const double a = canonical_angle(predict_step(state.k_axis, state.k_angle, c, state.k).next_angle);
                if (a > best.predicted_angle + 1e-12) best = {mu, {psi, f}, a, true};
            }
        }
        per_mu.push_back(best);
    }
    const HeuristicChoice* pick = nullptr;
    for (const auto& c : per_mu)
        if (c.predicted_angle >= floor - 1e-12 && (!pick || c.predicted_angle > pick->predicted_angle + 1e-12))
            pick = &c;
    if (pick) return *pick;
    HeuristicChoice fallback = per_mu.front();
    fallback.floor_met = false;
    return fallback;
}

FinalStepResult final_step(const SynthesisState& state, ElementarySigma sigma, const CleaningOptions& opts,
                           int close_block)
{
    if (!state.uncleaned().empty())
        throw SynthesisError("final_step: cleaning range still has uncleaned subspaces");
    const int k = state.k;
    const rot::SignedRotation sr = rot::signed_rotation_of(state.block(k));
    if (sr.angle < kAngleFloor)
        throw SynthesisError("final_step: k-block rotation angle below the numeric floor; rerun base_case with a "
                             "different mu pair");
    if (sigma == ElementarySigma::MinusI) return minus_identity_step(state, sr, close_block);
    FinalStepResult res;
    res.theta_k = sr.angle;
    res.l = repetitions_for(sr.angle);
    const int l = res.l;

    FinalParams params;
    if (l > 0) {
        const double bmax = beta_bound(sr.angle, l);
        if (std::abs(opts.beta_free) > bmax + 1e-12)
            throw std::invalid_argument("final_step: free beta parameter outside its admissible interval");
        params.bfree = std::clamp(opts.beta_free, -bmax, bmax);
    }
    FinalPieces pieces = final_pieces(sr.axis, sr.angle, l, sr.sign, sigma, k, params);

    const bool want_close = close_block > 0 && close_block <= state.tracked() &&
                            rot::distance_to_pm_identity(final_block(state.block(close_block), pieces, l,
                                                                     close_block)) >= 1e-12;
    if (want_close && l == 1) {
        ClosureFunctor fn;
        fn.kaxis = sr.axis;
        fn.theta = sr.angle;
        fn.l = l;
        fn.sign = sr.sign;
        fn.k = k;
        fn.b = close_block;
        fn.sigma = sigma;
        fn.bmax = beta_bound(sr.angle, l);
        fn.omega_b = state.block(close_block);
        Eigen::NumericalDiff<ClosureFunctor> nd(fn);
        const double psis[2] = {0.3, 2.0}, fs[2] = {0.5, 2.5}, ts[2] = {0.2, -0.9};
        bool solved = false;
        for (int mask = 0; mask < 32 && !solved; ++mask) {
            Eigen::VectorXd x(5);
            x << psis[mask & 1], fs[(mask >> 1) & 1], psis[(mask >> 2) & 1], fs[(mask >> 3) & 1], ts[(mask >> 4) & 1];
            Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ClosureFunctor>> lm(nd);
            lm.parameters.ftol = 1e-15;
            lm.parameters.xtol = 1e-15;
            lm.parameters.maxfev = 2000;
            lm.minimize(x);
            const FinalParams p = fn.params(x);
            FinalPieces cand = final_pieces(sr.axis, sr.angle, l, sr.sign, sigma, k, p);
            if (rot::distance_to_pm_identity(final_block(fn.omega_b, cand, l, close_block)) < 1e-12) {
                pieces = std::move(cand);
                params = p;
                solved = true;
            }
        }
    }

    res.alpha = pieces.axes.alpha;
    res.beta = pieces.axes.beta;
    res.beta_free = params.bfree;
    res.pulses = build_final(state.sequence, pieces, l);
    for (int j = 1; j <= state.tracked(); ++j) res.blocks.push_back(final_block(state.block(j), pieces, l, j));

    const Su2Matrix target = sigma_matrix(sigma);
    if ((res.blocks[static_cast<std::size_t>(k - 1)] - target).cwiseAbs().maxCoeff() > 1e-8)
        throw SynthesisError("final_step: k block misses the target");
    if (close_block > 0 && close_block <= state.tracked() &&
        rot::distance_to_pm_identity(res.blocks[static_cast<std::size_t>(close_block - 1)]) < 1e-12)
        res.closed_block = close_block;
    return res;
}

PulseSequence direct_small_n(int n, int k, ElementarySigma sigma)
{
    if (n < 1 || n > 2) throw std::invalid_argument("direct_small_n: n must be 1 or 2");
    if (k < 1 || k > n) throw std::invalid_argument("direct_small_n: k must lie in 1..n");
    PulseSequence seq;
    seq.n = n;
    if (sigma == ElementarySigma::MinusI) {
        PulseSequence x = direct_small_n(n, k, ElementarySigma::X);
        seq.pulses = repeat(x.pulses, 2);
        seq.tag = "direct n=" + std::to_string(n) + " k=" + std::to_string(k) + " sigma=-I";
        return seq;
    }
    if (n == 1) {
        seq.pulses = {Pulse::sideband(pi, 0.0)};
    } else if (k == 1) {
        const double phi1 = std::acos(1.0 / std::tan(pi / std::sqrt(2.0)));
        seq.pulses = {Pulse::sideband(-0.5 * pi, 0.0), Pulse::sideband(std::sqrt(2.0) * pi, phi1),
                      Pulse::sideband(0.5 * pi, 0.0), Pulse::sideband(std::sqrt(2.0) * pi, phi1)};
    } else {
        const double phi2 = std::acos(1.0 / std::tan(std::sqrt(2.0) * pi));
        const double q = pi / (2.0 * std::sqrt(2.0));
        seq.pulses = {Pulse::sideband(-q, 0.0), Pulse::sideband(2.0 * pi, phi2), Pulse::sideband(q, 0.0),
                      Pulse::sideband(2.0 * pi, phi2)};
    }
    if (sigma == ElementarySigma::Y)
        for (Pulse& p : seq.pulses) p.phi = canonical_phi(p.phi + 0.5 * pi);
    seq.tag = "direct n=" + std::to_string(n) + " k=" + std::to_string(k) + " sigma=" + to_string(sigma);
    return seq;
}

namespace {

ElementaryResult run_core(int n, int k, int range_max, ElementarySigma sigma, const CleaningOptions& opts,
                          int close_block)
{
    ElementaryResult res;
    const int top = std::max(range_max, k);
    if (top <= 2) {
        res.sequence = direct_small_n(top, k, sigma);
        res.route = "direct";
        return res;
    }
    CleaningOptions base_opts = opts;
    base_opts.final_turn = sigma == ElementarySigma::MinusI ? 2.0 * pi : pi;
    SynthesisState s = base_case(n, k, base_opts, range_max);
    res.mu = s.mu;
    std::size_t step = 0;
    std::vector<int> order = opts.order;
    while (!s.uncleaned().empty()) {
        int mu = 0;
        StepParams params;
        bool have_params = false;
        for (auto it = order.begin(); it != order.end(); ++it) {
            if (*it != k && *it >= 1 && *it <= s.range_max && !s.cleaned.count(*it)) {
                mu = *it;
                order.erase(order.begin(), it + 1);
                break;
            }
        }
        if (mu == 0) {
            const HeuristicChoice c = cleaning_order_heuristic(s, opts.t_floor, opts.search_grid);
            if (!c.floor_met)
                s.warnings.push_back("no subspace keeps the k-block angle above pi/t_floor; cleaning mu=" +
                                     std::to_string(c.mu) + " by index order");
            mu = c.mu;
            params = c.params;
            have_params = true;
        }
        if (step < opts.free_angles.size()) {
            params.free_angle = opts.free_angles[step];
        } else if (!have_params) {
            // Explicit order without angles: search the grid for this mu only.
            SynthesisState probe = s;
            for (int m : s.uncleaned())
                if (m != mu) probe.cleaned.insert(m);
            params = cleaning_order_heuristic(probe, opts.t_floor, opts.search_grid).params;
        }
        s = clean_step(s, mu, params);
        ++step;
    }
    FinalStepResult fin = final_step(s, sigma, opts, close_block);
    res.sequence.pulses = std::move(fin.pulses);
    res.l = fin.l;
    res.cleaning_steps = static_cast<int>(s.steps.size());
    res.route = "recursive";
    res.boundary_closed = close_block > 0 && fin.closed_block == close_block;
    res.warnings = s.warnings;
    return res;
}

// Returns the recorded sign of every block (+1 on block k).
std::vector<int> check_blocks(const std::vector<Pulse>& pulses, int k, int upto, ElementarySigma sigma, double tol)
{
    const Su2Matrix target = sigma_matrix(sigma);
    std::vector<int> signs;
    for (int j = 1; j <= upto; ++j) {
        const Su2Matrix b = sideband_block_product(pulses, j);
        const double err = j == k ? (b - target).cwiseAbs().maxCoeff() : rot::distance_to_pm_identity(b);
        if (err > tol) {
            std::ostringstream os;
            os << "elementary synthesis self-check failed on block " << j << " (error " << err << ")";
            throw SynthesisError(os.str());
        }
        signs.push_back(j != k && b.trace().real() < 0.0 ? -1 : 1);
    }
    return signs;
}

std::string elementary_tag(int n, int k, ElementarySigma sigma)
{
    return "elementary n=" + std::to_string(n) + " k=" + std::to_string(k) + " sigma=" + to_string(sigma);
}

} // namespace

ElementaryResult synthesize_elementary_detailed(int n, int k, ElementarySigma sigma, const CleaningOptions& opts)
{
    if (n < 1 || k < 1 || k > n) throw std::invalid_argument("synthesize_elementary: need 1 <= k <= n");
    ElementaryResult r;
    if (!opts.clean_boundary) {
        r = run_core(n, k, n, sigma, opts, 0);
    } else {
        bool done = false;
        if (opts.close_boundary_in_final_step && std::max(n, k) >= 3) {
            r = run_core(n, k, n, sigma, opts, n + 1);
            done = r.boundary_closed;
        }
        if (!done) {
            r = run_core(n, k, n + 1, sigma, opts, 0);
            if (r.route == "recursive") r.route = "recursive+boundary-step";
            r.boundary_closed = true;
        }
    }
    r.sequence.n = n;
    r.sequence.tag = elementary_tag(n, k, sigma);
    r.block_signs = check_blocks(r.sequence.pulses, k, opts.clean_boundary ? n + 1 : n, sigma, 1e-8);
    return r;
}

PulseSequence synthesize_elementary(int n, int k, ElementarySigma sigma, const CleaningOptions& opts)
{
    return synthesize_elementary_detailed(n, k, sigma, opts).sequence;
}

PulseSequence synthesize_boundary_elementary(int n, ElementarySigma sigma)
{
    if (n < 1) throw std::invalid_argument("synthesize_boundary_elementary: n must be >= 1");
    PulseSequence seq;
    if (sigma == ElementarySigma::MinusI) {
        // Squaring X leaves +I on blocks 1..n, which sign patterns rely on.
        seq = synthesize_boundary_elementary(n, ElementarySigma::X);
        seq.pulses = repeat(seq.pulses, 2);
    } else {
        CleaningOptions opts;
        opts.clean_boundary = false;
        seq = run_core(n, n + 1, n, sigma, opts, 0).sequence;
    }
    seq.n = n;
    seq.tag = "boundary n=" + std::to_string(n) + " sigma=" + to_string(sigma);
    check_blocks(seq.pulses, n + 1, n + 1, sigma, 1e-8);
    return seq;
}

} // namespace qoq::synth

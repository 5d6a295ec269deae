#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "armspace/errors.hpp"
#include "armspace/rng.hpp"
#include "armspace/types.hpp"

namespace armspace {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Wraps an angle into (-pi, pi].
inline double wrap_pi(double angle) {
    double a = std::remainder(angle, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

/// Wraps an angle into [0, 2*pi). Applied only at dataset-emit boundaries;
/// solver iterations work on unwrapped angles.
inline double wrap_2pi(double angle) {
    double a = std::fmod(angle, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-10) {
    const Mat3 orth = r * r.transpose() - Mat3::Identity();
    return orth.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

inline Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << 1, 0, 0,
         0, c, -s,
         0, s, c;
    return r;
}

inline Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << c, 0, s,
         0, 1, 0,
         -s, 0, c;
    return r;
}

inline Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return r;
}

/// ZYX convention: yaw about z applied last, roll about x first.
inline Mat3 rpy_to_rotation(double roll, double pitch, double yaw) {
    return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

inline Mat3 rpy_to_rotation(const Vec3& rpy) { return rpy_to_rotation(rpy[0], rpy[1], rpy[2]); }

/// Inverse of rpy_to_rotation. At the pitch = +-pi/2 singularity roll is set
/// to zero and the remaining freedom is folded into yaw.
inline Vec3 rotation_to_rpy(const Mat3& r) {
    Vec3 rpy;
    const double sy = -r(2, 0);
    if (std::abs(sy) >= 1.0 - 1e-12) {
        rpy[1] = sy > 0 ? kPi / 2 : -kPi / 2;
        rpy[0] = 0.0;
        rpy[2] = std::atan2(-r(0, 1), r(1, 1));
    } else {
        rpy[1] = std::asin(sy);
        rpy[0] = std::atan2(r(2, 1), r(2, 2));
        rpy[2] = std::atan2(r(1, 0), r(0, 0));
    }
    return rpy;
}

/// Rigid transform in SE(3).
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return Pose{}; }

    Pose operator*(const Pose& rhs) const {
        return Pose{rotation * rhs.rotation, translation + rotation * rhs.translation};
    }

    Pose inverse() const {
        return Pose{rotation.transpose(), -(rotation.transpose() * translation)};
    }

    Mat4 homogeneous() const {
        Mat4 t = Mat4::Identity();
        t.topLeftCorner<3, 3>() = rotation;
        t.topRightCorner<3, 1>() = translation;
        return t;
    }
};

/// One standard Denavit-Hartenberg link; joints are all revolute, so theta
/// is the joint variable and theta_offset a constant addend.
struct DHLink {
    double d = 0.0;
    double a = 0.0;
    double alpha = 0.0;
    double theta_offset = 0.0;
};

struct DynamicsParams {
    double mass = 0.0;
    Vec3 com = Vec3::Zero();
    Vec3 inertia_diag = Vec3::Zero();
    double viscous_friction = 0.0;
    Vec2 coulomb_friction = Vec2::Zero();  // (positive, negative)
    double gear_ratio = 0.0;
    double motor_inertia = 0.0;
};

struct Manipulator {
    std::vector<DHLink> links;
    std::vector<DynamicsParams> dynamics;  // empty, or one entry per link

    int dof() const { return static_cast<int>(links.size()); }
    bool has_dynamics() const { return !dynamics.empty(); }
};

inline void check_joint_dim(const Manipulator& m, const JointVec& q) {
    if (q.size() != m.dof())
        throw DimensionMismatch("joint vector has " + std::to_string(q.size()) +
                                " entries, manipulator has " + std::to_string(m.dof()) +
                                " links");
}

/// Elementary transform Rz(theta) Tz(d) Tx(a) Rx(alpha) of one standard-DH link.
inline Pose link_transform(const DHLink& link, double q) {
    const double theta = q + link.theta_offset;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ca = std::cos(link.alpha), sa = std::sin(link.alpha);
    Pose t;
    t.rotation << ct, -st * ca, st * sa,
                  st, ct * ca, -ct * sa,
                  0, sa, ca;
    t.translation << link.a * ct, link.a * st, link.d;
    return t;
}

inline Pose fkine(const Manipulator& m, const JointVec& q) {
    check_joint_dim(m, q);
    Pose t;
    for (int i = 0; i < m.dof(); ++i) t = t * link_transform(m.links[i], q[i]);
    return t;
}

inline Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0, -w[2], w[1],
         w[2], 0, -w[0],
         -w[1], w[0], 0;
    return s;
}

/// Axial vector of the antisymmetric part of s. No symmetry check; used
/// where the input is only approximately skew (finite differences).
inline Vec3 axial(const Mat3& s) {
    return 0.5 * Vec3(s(2, 1) - s(1, 2), s(0, 2) - s(2, 0), s(1, 0) - s(0, 1));
}

/// Inverse of skew. Throws NotSkewSymmetric when |s + s^T| exceeds tol
/// elementwise.
inline Vec3 vex(const Mat3& s, double tol = 1e-8) {
    if ((s + s.transpose()).cwiseAbs().maxCoeff() > tol)
        throw NotSkewSymmetric("matrix is not skew-symmetric within tolerance");
    return axial(s);
}

/// Finite-difference spatial Jacobian in the world frame. Column i stacks
/// the forward position difference over h and the axial vector of
/// (R(q + h e_i) - R(q)) / h * R(q)^T.
inline Jacobian jacobian_fd(const Manipulator& m, const JointVec& q, double h = 1e-9) {
    check_joint_dim(m, q);
    if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
    const int n = m.dof();
    const Pose base = fkine(m, q);
    Jacobian j(6, n);
    JointVec qp = q;
    for (int i = 0; i < n; ++i) {
        qp[i] = q[i] + h;
        const Pose bumped = fkine(m, qp);
        qp[i] = q[i];
        j.block<3, 1>(0, i) = (bumped.translation - base.translation) / h;
        const Mat3 s = ((bumped.rotation - base.rotation) / h) * base.rotation.transpose();
        j.block<3, 1>(3, i) = axial(s);
    }
    if (!j.allFinite()) throw NonFinite("finite-difference Jacobian overflowed");
    return j;
}

/// Geometric Jacobian in the world frame: column i is
/// [z_{i-1} x (p_e - p_{i-1}); z_{i-1}].
inline Jacobian jacob0(const Manipulator& m, const JointVec& q) {
    check_joint_dim(m, q);
    const int n = m.dof();
    std::vector<Vec3> axis(static_cast<std::size_t>(n));
    std::vector<Vec3> origin(static_cast<std::size_t>(n));
    Mat3 r = Mat3::Identity();
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < n; ++i) {
        axis[static_cast<std::size_t>(i)] = r.col(2);
        origin[static_cast<std::size_t>(i)] = p;
        const Pose a = link_transform(m.links[i], q[i]);
        p += r * a.translation;
        r *= a.rotation;
    }
    Jacobian j(6, n);
    for (int i = 0; i < n; ++i) {
        const Vec3& z = axis[static_cast<std::size_t>(i)];
        j.block<3, 1>(0, i) = z.cross(p - origin[static_cast<std::size_t>(i)]);
        j.block<3, 1>(3, i) = z;
    }
    return j;
}

/// Jacobian expressed in the end-effector frame:
/// blockdiag(R^T, R^T) * jacob0 with R = fkine(m, q).rotation.
inline Jacobian jacobe(const Manipulator& m, const JointVec& q) {
    const Jacobian j0 = jacob0(m, q);
    const Mat3 rt = fkine(m, q).rotation.transpose();
    Jacobian j(6, m.dof());
    j.topRows<3>() = rt * j0.topRows<3>();
    j.bottomRows<3>() = rt * j0.bottomRows<3>();
    return j;
}

/// Task-space error [target.t - current.t; axial(target.R * current.R^T)].
/// A rotation error of exactly pi has a vanishing axial part; pi_ambiguous
/// is set instead of silently resolving the direction.
inline Vec6 pose_error(const Pose& current, const Pose& target, bool* pi_ambiguous = nullptr) {
    Vec6 e;
    e.head<3>() = target.translation - current.translation;
    const Mat3 rel = target.rotation * current.rotation.transpose();
    e.tail<3>() = axial(rel);
    if (pi_ambiguous != nullptr)
        *pi_ambiguous = rel.trace() < -1.0 + 1e-6 && e.tail<3>().norm() < 1e-6;
    return e;
}

struct IkineOptions {
    int plim = 50;
    double cutoff = 0.03;
    double lambda = 0.1;
    std::vector<double>* residual_trace = nullptr;
};

struct IkineResult {
    JointVec q;
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// Damped least squares: q <- q + (J^T J + lambda I)^-1 J^T e until
/// ||e||_2 < cutoff or plim iterations. lambda starts at options.lambda and
/// adapts by halving after improving steps and doubling otherwise. A
/// non-factorizable normal matrix doubles lambda and retries up to 8 times
/// before SingularUpdate.
inline IkineResult ikine_num(const Manipulator& m, const Pose& target, const JointVec& q0,
                             const IkineOptions& options = {}) {
    check_joint_dim(m, q0);
    if (options.plim < 1) throw DomainError("plim must be >= 1");
    if (!(options.cutoff > 0.0)) throw DomainError("cutoff must be positive");

    const int n = m.dof();
    IkineResult result;
    result.q = q0;
    double lambda = options.lambda;

    double residual = pose_error(fkine(m, result.q), target).norm();
    if (options.residual_trace) options.residual_trace->push_back(residual);
    result.residual = residual;
    if (residual < options.cutoff) {
        result.converged = true;
        return result;
    }

    Eigen::MatrixXd normal(n, n);
    for (int iter = 1; iter <= options.plim; ++iter) {
        const Jacobian j = jacob0(m, result.q);
        const Vec6 e = pose_error(fkine(m, result.q), target);

        JointVec step;
        double damping = lambda;
        bool solved = false;
        for (int attempt = 0; attempt <= 8; ++attempt) {
            normal = j.transpose() * j;
            normal.diagonal().array() += damping;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
            if (ldlt.info() == Eigen::Success) {
                step = ldlt.solve(j.transpose() * e);
                if (step.allFinite()) {
                    solved = true;
                    break;
                }
            }
            damping *= 2.0;
        }
        if (!solved) throw SingularUpdate("damped normal matrix is numerically singular");

        result.q += step;
        const double next_residual = pose_error(fkine(m, result.q), target).norm();
        if (options.residual_trace) options.residual_trace->push_back(next_residual);
        lambda = next_residual < residual ? std::max(lambda * 0.5, 1e-12)
                                          : std::min(lambda * 2.0, 1e8);
        residual = next_residual;
        result.residual = residual;
        result.iterations = iter;
        if (residual < options.cutoff) {
            result.converged = true;
            break;
        }
    }
    return result;
}

enum class BranchPolicy {
    first_hit,  // stop at the first converging start
    min_norm,   // run every start, keep the converged q of minimal wrapped norm
};

struct MultiStartOptions {
    IkineOptions ik;
    int random_starts = 8;
    BranchPolicy policy = BranchPolicy::first_hit;
};

/// Multi-start IK: the zero configuration first, then random_starts draws
/// from U[0, 2pi)^n. Deterministic given the seed.
inline IkineResult ikine_multistart(const Manipulator& m, const Pose& target, std::uint64_t seed,
                                    const MultiStartOptions& options = {}) {
    const int n = m.dof();
    Rng rng(seed);

    IkineResult best;
    double best_branch_norm = std::numeric_limits<double>::infinity();
    for (int start = 0; start <= options.random_starts; ++start) {
        JointVec q0 = JointVec::Zero(n);
        if (start > 0)
            for (int i = 0; i < n; ++i) q0[i] = rng.uniform(0.0, 2.0 * kPi);

        const IkineResult attempt = ikine_num(m, target, q0, options.ik);
        if (attempt.converged) {
            if (options.policy == BranchPolicy::first_hit) return attempt;
            JointVec wrapped = attempt.q;
            for (int i = 0; i < n; ++i) wrapped[i] = wrap_pi(wrapped[i]);
            const double branch_norm = wrapped.norm();
            if (!best.converged || branch_norm < best_branch_norm) {
                best = attempt;
                best_branch_norm = branch_norm;
            }
        } else if (!best.converged && attempt.residual < best.residual) {
            best = attempt;
        }
    }
    return best;
}

}  // namespace armspace

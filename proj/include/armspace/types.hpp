#pragma once

#include <Eigen/Dense>

namespace armspace {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using JointVec = Eigen::VectorXd;

/// 6xN spatial Jacobian, rows ordered (vx, vy, vz, wx, wy, wz).
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Row-major dynamic matrix; the storage convention for datasets and
/// network activations (one sample per row).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace armspace

#pragma once

// Planar model of the inverted five-bar linkage that carries the skin contact
// point.  Two servo-driven proximal links are grounded on the x axis at x = 0
// and x = base_separation; two equal coupler links meet at the end effector.
// x runs along the forearm, y points toward the skin.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace glide {

template <typename Scalar>
using PlanarPoint = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct JointAngles {
  Scalar theta1{0};
  Scalar theta2{0};

  friend bool operator==(const JointAngles&, const JointAngles&) = default;
};

/// Logical output of the mechanism: where the contact sits along the forearm
/// and how hard it presses.
template <typename Scalar>
struct ContactState {
  Scalar position_mm{0};
  Scalar force_n{0};

  friend bool operator==(const ContactState&, const ContactState&) = default;
};

template <typename Scalar>
struct LinkageParams {
  Scalar base_separation_mm{100};
  Scalar proximal_len_mm{50};
  Scalar distal_len_mm{100};
  Scalar travel_len_mm{100};
  Scalar rest_height_mm{60};
  Scalar skin_stiffness_n_per_mm{0.5};
  Scalar max_force_n{2};
  Scalar theta_min_rad{-std::numbers::pi_v<Scalar>};
  Scalar theta_max_rad{0};
};

enum class KinematicsErrc {
  InvalidGeometry,
  OutOfRange,
  Unreachable,
  Degenerate,
  OutOfWorkspace,
};

inline const char* to_string(KinematicsErrc code) {
  switch (code) {
    case KinematicsErrc::InvalidGeometry: return "InvalidGeometry";
    case KinematicsErrc::OutOfRange: return "OutOfRange";
    case KinematicsErrc::Unreachable: return "Unreachable";
    case KinematicsErrc::Degenerate: return "Degenerate";
    case KinematicsErrc::OutOfWorkspace: return "OutOfWorkspace";
  }
  return "Unknown";
}

class KinematicsError : public std::runtime_error {
 public:
  KinematicsError(KinematicsErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  KinematicsErrc code() const noexcept { return code_; }

 private:
  KinematicsErrc code_;
};

enum class MotionKind { None, Slippage, Force, Mixed };

inline const char* to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::None: return "none";
    case MotionKind::Slippage: return "slippage";
    case MotionKind::Force: return "force";
    case MotionKind::Mixed: return "mixed";
  }
  return "unknown";
}

template <typename Scalar>
struct IkSolution {
  JointAngles<Scalar> angles;
  Scalar condition_number{1};
  bool near_singular{false};
};

template <typename Scalar>
class LinkageGeometry;

template <typename Scalar>
IkSolution<Scalar> inverse_kinematics(const LinkageGeometry<Scalar>& geom, const PlanarPoint<Scalar>& p);

template <typename Scalar>
PlanarPoint<Scalar> forward_kinematics(const LinkageGeometry<Scalar>& geom, const JointAngles<Scalar>& q);

/// Validated linkage dimensions.  Construction rejects non-positive lengths and
/// geometries whose contact workspace [0, L] x [y0 - Fmax/k, y0] is not fully
/// reachable on the working assembly mode.
template <typename Scalar>
class LinkageGeometry {
 public:
  using Params = LinkageParams<Scalar>;

  LinkageGeometry() : LinkageGeometry(Params{}) {}
  explicit LinkageGeometry(const Params& params);

  const Params& params() const { return p_; }

  Scalar base_separation() const { return p_.base_separation_mm; }
  Scalar proximal_len() const { return p_.proximal_len_mm; }
  Scalar distal_len() const { return p_.distal_len_mm; }
  Scalar travel_len() const { return p_.travel_len_mm; }
  Scalar rest_height() const { return p_.rest_height_mm; }
  Scalar stiffness() const { return p_.skin_stiffness_n_per_mm; }
  Scalar max_force() const { return p_.max_force_n; }
  Scalar theta_min() const { return p_.theta_min_rad; }
  Scalar theta_max() const { return p_.theta_max_rad; }

  /// Lowest contact-plane height, reached at full force.
  Scalar min_height() const { return p_.rest_height_mm - p_.max_force_n / p_.skin_stiffness_n_per_mm; }

  PlanarPoint<Scalar> base(int side) const {
    return side == 0 ? PlanarPoint<Scalar>(0, 0) : PlanarPoint<Scalar>(p_.base_separation_mm, 0);
  }

  bool in_servo_range(Scalar theta) const {
    const Scalar eps = Scalar(1e-12);
    return theta >= p_.theta_min_rad - eps && theta <= p_.theta_max_rad + eps;
  }
  bool in_servo_range(const JointAngles<Scalar>& q) const {
    return in_servo_range(q.theta1) && in_servo_range(q.theta2);
  }

 private:
  Params p_;
};

namespace detail {

template <typename Scalar>
PlanarPoint<Scalar> knee(const LinkageGeometry<Scalar>& geom, int side, Scalar theta) {
  return geom.base(side) + geom.proximal_len() * PlanarPoint<Scalar>(std::cos(theta), std::sin(theta));
}

template <typename Scalar>
PlanarPoint<Scalar> knee_derivative(const LinkageGeometry<Scalar>& geom, Scalar theta) {
  return geom.proximal_len() * PlanarPoint<Scalar>(-std::sin(theta), std::cos(theta));
}

// Shift theta by multiples of 2*pi so it lands in the servo range, if possible.
template <typename Scalar>
bool wrap_into_range(const LinkageGeometry<Scalar>& geom, Scalar& theta) {
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  for (Scalar shift : {Scalar(0), two_pi, -two_pi}) {
    if (geom.in_servo_range(theta + shift)) {
      theta += shift;
      return true;
    }
  }
  return false;
}

template <typename Scalar>
Scalar side_angle(const LinkageGeometry<Scalar>& geom, int side, const PlanarPoint<Scalar>& p) {
  const Scalar a = geom.proximal_len();
  const Scalar b = geom.distal_len();
  const PlanarPoint<Scalar> base = geom.base(side);
  const PlanarPoint<Scalar> v = p - base;
  const Scalar dist = v.norm();
  if (!(dist <= a + b) || dist < std::abs(a - b) || dist == Scalar(0)) {
    throw KinematicsError(KinematicsErrc::OutOfWorkspace, "contact point out of reach of side " + std::to_string(side + 1));
  }
  const Scalar along = (a * a - b * b + dist * dist) / (2 * dist);
  const Scalar off = std::sqrt(std::max(a * a - along * along, Scalar(0)));
  const PlanarPoint<Scalar> u = v / dist;
  const PlanarPoint<Scalar> n(-u.y(), u.x());
  const PlanarPoint<Scalar> k_plus = base + along * u + off * n;
  const PlanarPoint<Scalar> k_minus = base + along * u - off * n;
  // Elbows away from the skin.  Between the bases that is the clockwise knee
  // on side 1 and the counterclockwise one on side 2; fixing the orientation
  // rather than comparing heights keeps the branch continuous right above a
  // base, where the two knees are level.
  const PlanarPoint<Scalar>& k = side == 0 ? k_minus : k_plus;
  return std::atan2(k.y() - base.y(), k.x() - base.x());
}

}  // namespace detail

/// End effector position for the given servo angles.  Of the two coupler
/// circle intersections the larger-y one (pressing toward the skin) is taken.
template <typename Scalar>
PlanarPoint<Scalar> forward_kinematics(const LinkageGeometry<Scalar>& geom, const JointAngles<Scalar>& q) {
  if (!geom.in_servo_range(q)) {
    throw KinematicsError(KinematicsErrc::OutOfRange, "joint angles outside servo range");
  }
  const PlanarPoint<Scalar> k1 = detail::knee(geom, 0, q.theta1);
  const PlanarPoint<Scalar> k2 = detail::knee(geom, 1, q.theta2);
  const PlanarPoint<Scalar> v = k2 - k1;
  const Scalar dist = v.norm();
  const Scalar b = geom.distal_len();
  if (dist < Scalar(1e-9) * b) {
    throw KinematicsError(KinematicsErrc::Degenerate, "knee points coincide");
  }
  if (dist > 2 * b) {
    throw KinematicsError(KinematicsErrc::Unreachable, "coupler circles do not intersect");
  }
  const PlanarPoint<Scalar> mid = k1 + v / 2;
  const Scalar h = std::sqrt(std::max(b * b - dist * dist / 4, Scalar(0)));
  const PlanarPoint<Scalar> n = PlanarPoint<Scalar>(-v.y(), v.x()) / dist;
  const PlanarPoint<Scalar> p1 = mid + h * n;
  const PlanarPoint<Scalar> p2 = mid - h * n;
  return p2.y() > p1.y() ? p2 : p1;
}

/// d(contact point)/d(theta).  Infinite entries at a forward singularity.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> jacobian(const LinkageGeometry<Scalar>& geom, const JointAngles<Scalar>& q,
                                     const PlanarPoint<Scalar>& p) {
  const PlanarPoint<Scalar> r1 = p - detail::knee(geom, 0, q.theta1);
  const PlanarPoint<Scalar> r2 = p - detail::knee(geom, 1, q.theta2);
  Eigen::Matrix<Scalar, 2, 2> constraint;
  constraint.row(0) = r1.transpose();
  constraint.row(1) = r2.transpose();
  const Eigen::Matrix<Scalar, 2, 1> drive(r1.dot(detail::knee_derivative(geom, q.theta1)),
                                          r2.dot(detail::knee_derivative(geom, q.theta2)));
  const Scalar det = constraint.determinant();
  if (std::abs(det) <= std::numeric_limits<Scalar>::epsilon() * r1.squaredNorm()) {
    return Eigen::Matrix<Scalar, 2, 2>::Constant(std::numeric_limits<Scalar>::infinity());
  }
  return constraint.inverse() * drive.asDiagonal();
}

template <typename Scalar>
Scalar condition_number(const Eigen::Matrix<Scalar, 2, 2>& m) {
  if (!m.allFinite()) return std::numeric_limits<Scalar>::infinity();
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, 2, 2>> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(1) == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return sv(0) / sv(1);
}

inline constexpr double kSingularityThreshold = 1e6;

/// Servo angles placing the end effector at p.  Each knee takes the lower
/// elbow solution (for 0 < x < d), so the result is a pure function of p.
template <typename Scalar>
IkSolution<Scalar> inverse_kinematics(const LinkageGeometry<Scalar>& geom, const PlanarPoint<Scalar>& p) {
  if (!p.allFinite()) {
    throw KinematicsError(KinematicsErrc::OutOfWorkspace, "non-finite contact point");
  }
  IkSolution<Scalar> sol;
  sol.angles.theta1 = detail::side_angle(geom, 0, p);
  sol.angles.theta2 = detail::side_angle(geom, 1, p);
  if (!detail::wrap_into_range(geom, sol.angles.theta1) || !detail::wrap_into_range(geom, sol.angles.theta2)) {
    throw KinematicsError(KinematicsErrc::OutOfWorkspace, "solution outside servo range");
  }
  // The chosen knees must reproduce p as the working (larger-y) intersection.
  PlanarPoint<Scalar> check;
  try {
    check = forward_kinematics(geom, sol.angles);
  } catch (const KinematicsError&) {
    throw KinematicsError(KinematicsErrc::OutOfWorkspace, "no solution on the working assembly mode");
  }
  const Scalar tol = std::max(Scalar(1e-6), Scalar(1000) * std::numeric_limits<Scalar>::epsilon() *
                                                 (geom.proximal_len() + geom.distal_len()));
  if ((check - p).norm() > tol) {
    throw KinematicsError(KinematicsErrc::OutOfWorkspace, "no solution on the working assembly mode");
  }
  sol.condition_number = condition_number(jacobian(geom, sol.angles, p));
  sol.near_singular = !(sol.condition_number <= Scalar(kSingularityThreshold));
  return sol;
}

/// Linear spring skin model: deeper press, larger force.
template <typename Scalar>
PlanarPoint<Scalar> contact_to_point(const LinkageGeometry<Scalar>& geom, const ContactState<Scalar>& c) {
  return PlanarPoint<Scalar>(c.position_mm, geom.rest_height() - c.force_n / geom.stiffness());
}

/// Inverse of contact_to_point, force clamped to [0, max_force].
template <typename Scalar>
ContactState<Scalar> point_to_contact(const LinkageGeometry<Scalar>& geom, const PlanarPoint<Scalar>& p) {
  const Scalar force = (geom.rest_height() - p.y()) * geom.stiffness();
  return {p.x(), std::clamp(force, Scalar(0), geom.max_force())};
}

template <typename Scalar>
bool contact_in_bounds(const LinkageGeometry<Scalar>& geom, const ContactState<Scalar>& c) {
  return c.position_mm >= 0 && c.position_mm <= geom.travel_len() && c.force_n >= 0 && c.force_n <= geom.max_force();
}

template <typename Scalar>
JointAngles<Scalar> contact_to_angles(const LinkageGeometry<Scalar>& geom, const ContactState<Scalar>& c) {
  return inverse_kinematics(geom, contact_to_point(geom, c)).angles;
}

/// Same-direction servo motion slides the contact, opposite-direction motion
/// presses it.  Deltas within the deadband count as no motion.
template <typename Scalar>
MotionKind classify_motion(const JointAngles<Scalar>& prev, const JointAngles<Scalar>& next,
                           Scalar deadband_rad = Scalar(1e-4)) {
  const Scalar d1 = next.theta1 - prev.theta1;
  const Scalar d2 = next.theta2 - prev.theta2;
  const bool still1 = std::abs(d1) <= deadband_rad;
  const bool still2 = std::abs(d2) <= deadband_rad;
  if (still1 && still2) return MotionKind::None;
  if (still1 || still2) return MotionKind::Mixed;
  return (d1 > 0) == (d2 > 0) ? MotionKind::Slippage : MotionKind::Force;
}

template <typename Scalar>
LinkageGeometry<Scalar>::LinkageGeometry(const Params& params) : p_(params) {
  const bool positive = p_.base_separation_mm > 0 && p_.proximal_len_mm > 0 && p_.distal_len_mm > 0 &&
                        p_.travel_len_mm > 0 && p_.rest_height_mm > 0 && p_.skin_stiffness_n_per_mm > 0 &&
                        p_.max_force_n > 0;
  if (!positive) {
    throw KinematicsError(KinematicsErrc::InvalidGeometry, "lengths, stiffness and force cap must be positive");
  }
  if (!(p_.theta_min_rad < p_.theta_max_rad)) {
    throw KinematicsError(KinematicsErrc::InvalidGeometry, "empty servo range");
  }
  constexpr int kCols = 21;
  constexpr int kRows = 5;
  for (int i = 0; i < kCols; ++i) {
    for (int j = 0; j < kRows; ++j) {
      const PlanarPoint<Scalar> p(p_.travel_len_mm * Scalar(i) / (kCols - 1),
                                  min_height() + (p_.rest_height_mm - min_height()) * Scalar(j) / (kRows - 1));
      try {
        inverse_kinematics(*this, p);
      } catch (const KinematicsError&) {
        throw KinematicsError(KinematicsErrc::InvalidGeometry,
                              "contact workspace not reachable at x=" + std::to_string(double(p.x())) +
                                  " y=" + std::to_string(double(p.y())));
      }
    }
  }
}

using PlanarPointd = PlanarPoint<double>;
using JointAnglesd = JointAngles<double>;
using ContactStated = ContactState<double>;
using LinkageParamsd = LinkageParams<double>;
using LinkageGeometryd = LinkageGeometry<double>;
using IkSolutiond = IkSolution<double>;

}  // namespace glide

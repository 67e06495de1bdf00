#pragma once

#include <array>
#include <complex>
#include <string>
#include <variant>

#include <Eigen/Dense>

namespace dircon {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;
/// A point of the unit sphere. Unit length is a contract of every producer,
/// not a separate type, so sphere points stay usable in Eigen expressions.
using UnitVec3 = Vec3;

/// det[a; b; c], the mixed product a . (b x c).
template <typename DerivedA, typename DerivedB, typename DerivedC>
typename DerivedA::Scalar mixed_product(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b,
                                        const Eigen::MatrixBase<DerivedC>& c) {
  return a.dot(b.cross(c));
}

template <typename DerivedA, typename DerivedB>
Vector3<typename DerivedA::Scalar> cross(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  return a.cross(b);
}

/// Geodesic (great-circle) distance between two unit vectors.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar geodesic_distance(
    const Eigen::MatrixBase<DerivedA>& a,
    const Eigen::MatrixBase<DerivedB>& b) {
  using std::atan2;
  return atan2(a.cross(b).norm(), a.dot(b));
}

/// Flips v so its largest-magnitude component is positive.
template <typename Derived>
Vector3<typename Derived::Scalar> canonical_sign(
    const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return v(idx) < 0 ? Vector3<typename Derived::Scalar>(-v)
                    : Vector3<typename Derived::Scalar>(v);
}

/// Roots of the monic cubic t^3 + c2 t^2 + c1 t + c0.
struct CubicRoots {
  /// Discriminant sign: true for three real roots (possibly repeated).
  bool all_real = true;
  /// all_real: the roots in ascending order. Otherwise real[0] is the real
  /// root and real[1], real[2] repeat the real part of the pair.
  std::array<double, 3> real{};
  /// Imaginary part (> 0) of the upper root of the conjugate pair.
  double imag = 0.0;
  /// How many of the three roots equal real[i] (within root tolerance).
  std::array<int, 3> multiplicity{1, 1, 1};

  std::array<std::complex<double>, 3> as_complex() const;
};

CubicRoots solve_cubic(double c2, double c1, double c0);

struct RealDistinct {
  std::array<double, 3> lambda{};  // strictly ascending
  std::array<UnitVec3, 3> e{};     // canonical sign
};

struct ComplexPair {
  double lambda_r = 0.0;
  double re_c = 0.0;
  double im_c = 0.0;  // > 0
  UnitVec3 e_r = UnitVec3::UnitX();
  /// Orthonormal basis of the invariant plane of the pair.
  UnitVec3 p1 = UnitVec3::UnitY();
  UnitVec3 p2 = UnitVec3::UnitZ();
  /// Real and imaginary parts of the eigenvector for re_c + i im_c, with the
  /// phase chosen so they are orthogonal; jordan_re has unit length. In the
  /// basis (e_r, jordan_re, jordan_im) the matrix is the real Jordan form
  /// [[lambda_r,0,0],[0,re_c,im_c],[0,-im_c,re_c]].
  Vec3 jordan_re = Vec3::UnitY();
  Vec3 jordan_im = Vec3::UnitZ();
};

struct Degenerate {
  std::string reason;
};

using Spectrum = std::variant<RealDistinct, ComplexPair, Degenerate>;

inline bool is_degenerate(const Spectrum& s) {
  return std::holds_alternative<Degenerate>(s);
}

/// Default relative eigenvalue-gap threshold; the absolute threshold is
/// eps_spec * ||m||_F.
inline constexpr double kDefaultEpsSpec = 1e-7;

/// Classifies the eigenstructure of m. eps_spec is relative to ||m||_F.
Spectrum eigen_decompose(const Mat3& m, double eps_spec = kDefaultEpsSpec);

/// Largest residual of the invariants a non-degenerate spectrum must satisfy,
/// divided by ||m||_F (0 for Degenerate).
double spectrum_residual(const Mat3& m, const Spectrum& s);

/// Skew-symmetric generator of rotation about `axis`: skew(a) x = a x x.
Mat3 skew(const Vec3& axis);

/// Rotation by `angle` radians about the unit `axis`.
Mat3 rotation(const Vec3& axis, double angle);

}  // namespace dircon

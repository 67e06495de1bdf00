#include "dircon/linalg3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Geometry>

namespace dircon {

namespace {

double eval_monic(double c2, double c1, double c0, double t) {
  return ((t + c2) * t + c1) * t + c0;
}

// One Newton step, kept only when it shrinks the residual.
double newton_polish(double c2, double c1, double c0, double t) {
  const double f = eval_monic(c2, c1, c0, t);
  const double df = (3.0 * t + 2.0 * c2) * t + c1;
  if (df == 0.0 || !std::isfinite(df)) return t;
  const double t1 = t - f / df;
  return std::abs(eval_monic(c2, c1, c0, t1)) < std::abs(f) ? t1 : t;
}

double root_tolerance(const std::array<double, 3>& r) {
  double big = 1.0;
  for (double x : r) big = std::max(big, std::abs(x));
  return 1e-6 * big;
}

template <typename Scalar>
Vector3<Scalar> plain_cross(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
          a(0) * b(1) - a(1) * b(0)};
}

// Null vector of a rank-2 matrix: the largest cross product of two rows, then
// one inverse-iteration step kept when it lowers the residual. The cross
// product is bilinear (no conjugation), which is what M v = 0 needs for
// complex M.
template <typename Scalar>
std::optional<Vector3<Scalar>> null_vector(const Matrix3<Scalar>& shifted) {
  using Vec = Vector3<Scalar>;
  const Vec r0 = shifted.row(0).transpose();
  const Vec r1 = shifted.row(1).transpose();
  const Vec r2 = shifted.row(2).transpose();
  const std::array<Vec, 3> candidates = {plain_cross(r0, r1), plain_cross(r0, r2),
                                         plain_cross(r1, r2)};
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (candidates[i].norm() > candidates[best].norm()) best = i;
  }
  const double len = candidates[best].norm();
  if (!(len > 1e-300) || !std::isfinite(len)) return std::nullopt;
  Vec v = candidates[best] / Scalar(len);

  Eigen::FullPivLU<Matrix3<Scalar>> lu(shifted);
  if (lu.isInvertible()) {
    Vec w = lu.solve(v);
    const double wn = w.norm();
    if (std::isfinite(wn) && wn > 0.0) {
      w /= Scalar(wn);
      if ((shifted * w).norm() < (shifted * v).norm()) v = w;
    }
  }
  return v;
}

}  // namespace

std::array<std::complex<double>, 3> CubicRoots::as_complex() const {
  if (all_real) return {real[0], real[1], real[2]};
  return {std::complex<double>(real[0], 0.0),
          std::complex<double>(real[1], imag),
          std::complex<double>(real[2], -imag)};
}

CubicRoots solve_cubic(double c2, double c1, double c0) {
  // Depressed form y^3 + p y + q with t = y - c2/3.
  const double shift = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double half_q = q / 2.0;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  CubicRoots out;
  if (disc <= 0.0) {
    if (p == 0.0) {
      out.real = {-shift, -shift, -shift};
    } else {
      const double r = std::sqrt(-third_p);
      const double arg = std::clamp(-half_q / (r * r * r), -1.0, 1.0);
      const double theta = std::acos(arg) / 3.0;
      constexpr double kTwoThirdsPi = 2.0 * std::numbers::pi / 3.0;
      for (int k = 0; k < 3; ++k) {
        out.real[k] = 2.0 * r * std::cos(theta - kTwoThirdsPi * k) - shift;
      }
    }
    for (double& t : out.real) t = newton_polish(c2, c1, c0, t);
    std::sort(out.real.begin(), out.real.end());
  } else {
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-half_q - std::copysign(sq, half_q));
    const double y = u - third_p / u;
    const double r = newton_polish(c2, c1, c0, y - shift);
    // Deflate to t^2 + b t + c.
    const double b = c2 + r;
    const double c = c1 + r * b;
    const double im2 = c - b * b / 4.0;
    const double re = -b / 2.0;
    const double im = std::sqrt(std::max(im2, 0.0));
    out.real = {r, re, re};
    if (im <= root_tolerance(out.real)) {
      // Discriminant is numerically zero: a real double root.
      std::sort(out.real.begin(), out.real.end());
    } else {
      out.all_real = false;
      out.imag = im;
      return out;
    }
  }
  const double tol = root_tolerance(out.real);
  for (int i = 0; i < 3; ++i) {
    out.multiplicity[i] = 0;
    for (int j = 0; j < 3; ++j) {
      if (std::abs(out.real[i] - out.real[j]) <= tol) ++out.multiplicity[i];
    }
  }
  return out;
}

Spectrum eigen_decompose(const Mat3& m, double eps_spec) {
  if (!m.allFinite()) return Degenerate{"non-finite matrix entries"};
  const double norm = m.norm();
  if (norm == 0.0) return Degenerate{"zero matrix"};
  const double gap_tol = eps_spec * norm;

  const double c2 = -m.trace();
  const double c1 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) +
                    m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                    m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double c0 = -m.determinant();
  const CubicRoots roots = solve_cubic(c2, c1, c0);

  Spectrum result;
  if (roots.all_real) {
    const auto& l = roots.real;
    if (l[1] - l[0] < gap_tol || l[2] - l[1] < gap_tol) {
      return Degenerate{"real eigenvalue gap below eps_spec"};
    }
    RealDistinct rd;
    rd.lambda = l;
    for (int i = 0; i < 3; ++i) {
      const auto v = null_vector<double>(m - l[i] * Mat3::Identity());
      if (!v) return Degenerate{"eigenvector not resolvable"};
      rd.e[i] = canonical_sign(*v);
    }
    result = rd;
  } else {
    const double lr = roots.real[0];
    const double re = roots.real[1];
    const double im = roots.imag;
    if (2.0 * im < gap_tol || std::hypot(lr - re, im) < gap_tol) {
      return Degenerate{"complex eigenvalue gap below eps_spec"};
    }
    ComplexPair cp;
    cp.lambda_r = lr;
    cp.re_c = re;
    cp.im_c = im;
    const auto er = null_vector<double>(m - lr * Mat3::Identity());
    if (!er) return Degenerate{"real eigenvector not resolvable"};
    cp.e_r = canonical_sign(*er);

    using C = std::complex<double>;
    const Eigen::Matrix3cd shifted =
        m.cast<C>() - C(re, im) * Eigen::Matrix3cd::Identity();
    const auto w = null_vector<C>(shifted);
    if (!w) return Degenerate{"complex eigenvector not resolvable"};
    Vec3 wr = w->real();
    Vec3 wi = w->imag();
    // Rotate the phase until Re and Im parts are orthogonal.
    const double phi =
        0.5 * std::atan2(-2.0 * wr.dot(wi), wr.squaredNorm() - wi.squaredNorm());
    const Vec3 a = std::cos(phi) * wr - std::sin(phi) * wi;
    const Vec3 b = std::sin(phi) * wr + std::cos(phi) * wi;
    const double an = a.norm();
    const double bn = b.norm();
    if (!(an > 1e-300) || !(bn > 1e-300)) {
      return Degenerate{"invariant plane not resolvable"};
    }
    const double flip = canonical_sign(a) == a ? 1.0 : -1.0;
    cp.jordan_re = flip * a / an;
    cp.jordan_im = flip * b / an;
    cp.p1 = cp.jordan_re;
    cp.p2 = cp.jordan_im / cp.jordan_im.norm();
    result = cp;
  }
  if (spectrum_residual(m, result) > 1e-9) {
    return Degenerate{"eigenvector residual above tolerance"};
  }
  return result;
}

double spectrum_residual(const Mat3& m, const Spectrum& s) {
  const double norm = m.norm();
  if (norm == 0.0) return 0.0;
  if (const auto* rd = std::get_if<RealDistinct>(&s)) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, (m * rd->e[i] - rd->lambda[i] * rd->e[i]).norm());
    }
    return worst / norm;
  }
  if (const auto* cp = std::get_if<ComplexPair>(&s)) {
    double worst = (m * cp->e_r - cp->lambda_r * cp->e_r).norm();
    const Mat3 proj = cp->p1 * cp->p1.transpose() + cp->p2 * cp->p2.transpose();
    for (const Vec3& p : {cp->p1, cp->p2}) {
      const Vec3 image = m * p;
      worst = std::max(worst, (image - proj * image).norm());
    }
    return worst / norm;
  }
  return 0.0;
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  // clang-format off
  s <<    0.0, -a(2),  a(1),
         a(2),   0.0, -a(0),
        -a(1),  a(0),   0.0;
  // clang-format on
  return s;
}

Mat3 rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace dircon

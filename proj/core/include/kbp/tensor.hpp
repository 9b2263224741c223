#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kbp {

using Complex = std::complex<double>;
using LegId = std::string;
using MatrixC = Eigen::MatrixXcd;

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// Decade window for the largest stored entry: [10^low_exp, 10^high_exp].
struct MantissaWindow {
  int low_exp = -3;
  int high_exp = 3;
};

struct ScaledScalar {
  Complex mantissa{0.0, 0.0};
  long exponent = 0;

  static ScaledScalar from(Complex value, long exponent = 0);

  Complex value() const;
  double abs() const { return std::abs(value()); }
  double log10_abs() const;
  bool is_zero() const { return mantissa == Complex(0.0, 0.0); }

  friend ScaledScalar operator*(const ScaledScalar& a, const ScaledScalar& b);
  friend ScaledScalar operator/(const ScaledScalar& a, const ScaledScalar& b);
  friend ScaledScalar operator+(const ScaledScalar& a, const ScaledScalar& b);
  ScaledScalar conj() const { return {std::conj(mantissa), exponent}; }
};

class Tensor {
 public:
  Tensor();
  Tensor(std::vector<LegId> legs, std::vector<std::size_t> dims);
  Tensor(std::vector<LegId> legs, std::vector<std::size_t> dims,
         std::vector<Complex> data, long scale_exp = 0);

  static Tensor scalar(Complex value, long scale_exp = 0);
  // Entries drawn from a standard complex normal distribution.
  static Tensor random(std::vector<LegId> legs, std::vector<std::size_t> dims,
                       std::mt19937_64& rng, bool real = false);
  static Tensor identity(const LegId& a, const LegId& b, std::size_t dim);

  std::size_t rank() const { return legs_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<LegId>& legs() const { return legs_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(const LegId& leg) const;
  std::size_t position(const LegId& leg) const;
  bool has_leg(const LegId& leg) const;

  std::span<const Complex> data() const { return data_; }
  std::span<Complex> data() { return data_; }
  std::vector<Complex>& storage() { return data_; }
  long scale_exp() const { return scale_exp_; }
  void set_scale_exp(long e) { scale_exp_ = e; }

  Complex& at(std::initializer_list<std::size_t> index);
  Complex at(std::initializer_list<std::size_t> index) const;
  Complex& at(std::span<const std::size_t> index);
  Complex at(std::span<const std::size_t> index) const;

  Tensor permuted(const std::vector<LegId>& order) const;
  Tensor renamed(const LegId& from, const LegId& to) const;
  Tensor renamed(const std::map<LegId, LegId>& mapping) const;
  Tensor conj() const;
  Tensor scaled(Complex factor) const;
  // Entries multiplied by 10^scale_exp (may overflow for extreme scales).
  Tensor with_scale_folded() const;

  double max_abs() const;
  // Frobenius norm of the stored mantissa data, scale_exp excluded.
  double norm() const;
  ScaledScalar norm_scaled() const;
  // Value of a rank-0 tensor.
  ScaledScalar to_scalar() const;

  // Row-major reshape into (prod row_legs) x (prod remaining legs); remaining legs keep order.
  MatrixC matrix(const std::vector<LegId>& row_legs) const;
  static Tensor from_matrix(const MatrixC& m, std::vector<LegId> legs,
                            std::vector<std::size_t> dims, long scale_exp = 0);

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  std::vector<LegId> legs_;
  std::vector<std::size_t> dims_;
  std::vector<Complex> data_;
  long scale_exp_ = 0;
};

std::size_t product(const std::vector<std::size_t>& dims);

Tensor contract(const Tensor& a, const std::vector<LegId>& legs_a, const Tensor& b,
                const std::vector<LegId>& legs_b, MantissaWindow window = {});

Tensor fuse_legs(const Tensor& t, const std::vector<LegId>& group, const LegId& new_leg);
Tensor split_leg(const Tensor& t, const LegId& leg, const std::vector<LegId>& new_legs,
                 const std::vector<std::size_t>& new_dims);

// t == left * diag(singular_values) * right * 10^scale_exp, up to truncation_error
// (measured in the units of singular_values).
struct Decomposition {
  Tensor left;
  std::vector<double> singular_values;
  Tensor right;
  double truncation_error = 0.0;
  long scale_exp = 0;

  Tensor left_times_s() const;
  Tensor s_times_right() const;
};

inline constexpr double kSvdRelativeCutoff = 1e-14;

Decomposition svd_split(const Tensor& t, const std::vector<LegId>& left_legs, std::size_t chi,
                        const LegId& new_leg, double relative_cutoff = kSvdRelativeCutoff);

enum class QrSide { Left, Right };

// Left: (Q, R) with Q isometric over left_legs. Right: (L, Q) with Q isometric over the rest.
std::pair<Tensor, Tensor> qr_split(const Tensor& t, const std::vector<LegId>& left_legs,
                                   QrSide side, const LegId& new_leg);

Tensor renormalize(const Tensor& t, MantissaWindow window = {});

// Frobenius inner product <a|b> over legs matched by name.
ScaledScalar inner(const Tensor& a, const Tensor& b);

}  // namespace kbp

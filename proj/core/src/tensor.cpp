#include "kbp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kbp/error.hpp"

namespace kbp {

namespace {

using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

long decade(double x) { return static_cast<long>(std::floor(std::log10(x))); }

double pow10(long e) { return std::pow(10.0, static_cast<double>(e)); }

std::string join(const std::vector<LegId>& legs) {
  std::string out;
  for (const auto& l : legs) {
    if (!out.empty()) out += ",";
    out += l;
  }
  return "(" + out + ")";
}

void check_unique(const std::vector<LegId>& legs) {
  std::set<LegId> seen;
  for (const auto& l : legs) {
    if (!seen.insert(l).second) throw NameCollision("duplicate leg '" + l + "' in " + join(legs));
  }
}

}  // namespace

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

// ScaledScalar -------------------------------------------------------------

ScaledScalar ScaledScalar::from(Complex value, long exponent) {
  double a = std::abs(value);
  if (a == 0.0 || !std::isfinite(a)) return {a == 0.0 ? Complex(0.0) : value, a == 0.0 ? 0 : exponent};
  long shift = decade(a);
  Complex m = value / pow10(shift);
  // Guard against rounding at decade boundaries.
  if (std::abs(m) >= 10.0) {
    m /= 10.0;
    ++shift;
  } else if (std::abs(m) < 1.0) {
    m *= 10.0;
    --shift;
  }
  return {m, exponent + shift};
}

Complex ScaledScalar::value() const { return mantissa * pow10(exponent); }

double ScaledScalar::log10_abs() const {
  if (is_zero()) return -std::numeric_limits<double>::infinity();
  return std::log10(std::abs(mantissa)) + static_cast<double>(exponent);
}

ScaledScalar operator*(const ScaledScalar& a, const ScaledScalar& b) {
  return ScaledScalar::from(a.mantissa * b.mantissa, a.exponent + b.exponent);
}

ScaledScalar operator/(const ScaledScalar& a, const ScaledScalar& b) {
  return ScaledScalar::from(a.mantissa / b.mantissa, a.exponent - b.exponent);
}

ScaledScalar operator+(const ScaledScalar& a, const ScaledScalar& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  long e = std::max(a.exponent, b.exponent);
  Complex v = a.mantissa * pow10(a.exponent - e) + b.mantissa * pow10(b.exponent - e);
  return ScaledScalar::from(v, e);
}

// Tensor --------------------------------------------------------------------

Tensor::Tensor() : data_(1, Complex(0.0)) {}

Tensor::Tensor(std::vector<LegId> legs, std::vector<std::size_t> dims)
    : legs_(std::move(legs)), dims_(std::move(dims)) {
  if (legs_.size() != dims_.size()) throw DimensionMismatch("legs and dims differ in length");
  check_unique(legs_);
  for (auto d : dims_) {
    if (d == 0) throw DimensionMismatch("zero extent in " + join(legs_));
  }
  data_.assign(product(dims_), Complex(0.0));
}

Tensor::Tensor(std::vector<LegId> legs, std::vector<std::size_t> dims,
               std::vector<Complex> data, long scale_exp)
    : legs_(std::move(legs)), dims_(std::move(dims)), data_(std::move(data)), scale_exp_(scale_exp) {
  if (legs_.size() != dims_.size()) throw DimensionMismatch("legs and dims differ in length");
  check_unique(legs_);
  if (product(dims_) != data_.size()) {
    throw DimensionMismatch("data size " + std::to_string(data_.size()) +
                            " does not match dims of " + join(legs_));
  }
}

Tensor Tensor::scalar(Complex value, long scale_exp) {
  Tensor t;
  t.data_[0] = value;
  t.scale_exp_ = scale_exp;
  return t;
}

Tensor Tensor::random(std::vector<LegId> legs, std::vector<std::size_t> dims,
                      std::mt19937_64& rng, bool real) {
  Tensor t(std::move(legs), std::move(dims));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& x : t.data_) {
    double re = normal(rng);
    double im = real ? 0.0 : normal(rng);
    x = Complex(re, im);
  }
  return t;
}

Tensor Tensor::identity(const LegId& a, const LegId& b, std::size_t dim) {
  Tensor t({a, b}, {dim, dim});
  for (std::size_t i = 0; i < dim; ++i) t.data_[i * dim + i] = 1.0;
  return t;
}

std::size_t Tensor::position(const LegId& leg) const {
  auto it = std::find(legs_.begin(), legs_.end(), leg);
  if (it == legs_.end()) throw UnknownLeg("'" + leg + "' not in " + join(legs_));
  return static_cast<std::size_t>(it - legs_.begin());
}

std::size_t Tensor::dim(const LegId& leg) const { return dims_[position(leg)]; }

bool Tensor::has_leg(const LegId& leg) const {
  return std::find(legs_.begin(), legs_.end(), leg) != legs_.end();
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw DimensionMismatch("index rank mismatch");
  std::size_t off = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (index[k] >= dims_[k]) throw DimensionMismatch("index out of range");
    off = off * dims_[k] + index[k];
  }
  return off;
}

Complex& Tensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}
Complex Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}
Complex& Tensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
Complex Tensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

Tensor Tensor::permuted(const std::vector<LegId>& order) const {
  const std::size_t r = rank();
  if (order.size() != r) throw DimensionMismatch("permutation " + join(order) + " of " + join(legs_));
  std::vector<std::size_t> perm(r);
  std::vector<bool> used(r, false);
  for (std::size_t k = 0; k < r; ++k) {
    perm[k] = position(order[k]);
    if (used[perm[k]]) throw NameCollision("repeated leg in permutation " + join(order));
    used[perm[k]] = true;
  }
  bool identity = true;
  for (std::size_t k = 0; k < r; ++k) identity = identity && perm[k] == k;
  if (identity) return *this;

  std::vector<std::size_t> old_strides(r, 1);
  for (std::size_t k = r; k-- > 1;) old_strides[k - 1] = old_strides[k] * dims_[k];

  std::vector<std::size_t> new_dims(r), strides(r);
  for (std::size_t k = 0; k < r; ++k) {
    new_dims[k] = dims_[perm[k]];
    strides[k] = old_strides[perm[k]];
  }

  Tensor out;
  out.legs_ = order;
  out.dims_ = new_dims;
  out.scale_exp_ = scale_exp_;
  out.data_.resize(data_.size());

  // Drop trailing unit extents are harmless; iterate with the innermost loop explicit.
  const std::size_t inner = new_dims[r - 1];
  const std::size_t inner_stride = strides[r - 1];
  const std::size_t outer = data_.size() / inner;
  std::vector<std::size_t> idx(r, 0);
  std::size_t src = 0;
  Complex* dst = out.data_.data();
  const Complex* in = data_.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const Complex* s = in + src;
    for (std::size_t i = 0; i < inner; ++i) dst[i] = s[i * inner_stride];
    dst += inner;
    for (std::size_t k = r - 1; k-- > 0;) {
      ++idx[k];
      src += strides[k];
      if (idx[k] < new_dims[k]) break;
      src -= strides[k] * new_dims[k];
      idx[k] = 0;
    }
  }
  return out;
}

Tensor Tensor::renamed(const LegId& from, const LegId& to) const {
  Tensor out = *this;
  out.legs_[position(from)] = to;
  check_unique(out.legs_);
  return out;
}

Tensor Tensor::renamed(const std::map<LegId, LegId>& mapping) const {
  Tensor out = *this;
  for (auto& l : out.legs_) {
    auto it = mapping.find(l);
    if (it != mapping.end()) l = it->second;
  }
  check_unique(out.legs_);
  return out;
}

Tensor Tensor::conj() const {
  Tensor out = *this;
  for (auto& x : out.data_) x = std::conj(x);
  return out;
}

Tensor Tensor::scaled(Complex factor) const {
  Tensor out = *this;
  for (auto& x : out.data_) x *= factor;
  return out;
}

Tensor Tensor::with_scale_folded() const {
  Tensor out = *this;
  if (scale_exp_ != 0) {
    double f = pow10(scale_exp_);
    for (auto& x : out.data_) x *= f;
    out.scale_exp_ = 0;
  }
  return out;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (const auto& x : data_) m = std::max(m, std::abs(x));
  return m;
}

double Tensor::norm() const {
  double s = 0.0;
  for (const auto& x : data_) s += std::norm(x);
  return std::sqrt(s);
}

ScaledScalar Tensor::norm_scaled() const { return ScaledScalar::from(norm(), scale_exp_); }

ScaledScalar Tensor::to_scalar() const {
  if (rank() != 0) throw DimensionMismatch("to_scalar on tensor of rank " + std::to_string(rank()));
  return ScaledScalar::from(data_[0], scale_exp_);
}

MatrixC Tensor::matrix(const std::vector<LegId>& row_legs) const {
  std::vector<LegId> order = row_legs;
  std::size_t rows = 1;
  for (const auto& l : row_legs) rows *= dim(l);
  for (const auto& l : legs_) {
    if (std::find(row_legs.begin(), row_legs.end(), l) == row_legs.end()) order.push_back(l);
  }
  Tensor p = permuted(order);
  std::size_t cols = rows == 0 ? 0 : p.size() / rows;
  return Eigen::Map<const RowMatrix>(p.data_.data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
}

Tensor Tensor::from_matrix(const MatrixC& m, std::vector<LegId> legs, std::vector<std::size_t> dims,
                           long scale_exp) {
  Tensor t(std::move(legs), std::move(dims));
  if (static_cast<std::size_t>(m.size()) != t.size()) throw DimensionMismatch("matrix size vs dims");
  Eigen::Map<RowMatrix>(t.data_.data(), m.rows(), m.cols()) = m;
  t.scale_exp_ = scale_exp;
  return t;
}

// Free functions ----------------------------------------------------------

Tensor renormalize(const Tensor& t, MantissaWindow window) {
  double m = t.max_abs();
  if (m == 0.0) {
    Tensor out = t;
    out.set_scale_exp(0);
    return out;
  }
  if (!std::isfinite(m)) return t;
  if (m >= pow10(window.low_exp) && m <= pow10(window.high_exp)) return t;
  long shift = decade(m);
  Tensor out = t.scaled(1.0 / pow10(shift));
  out.set_scale_exp(t.scale_exp() + shift);
  return out;
}

Tensor contract(const Tensor& a, const std::vector<LegId>& legs_a, const Tensor& b,
                const std::vector<LegId>& legs_b, MantissaWindow window) {
  if (legs_a.size() != legs_b.size()) {
    throw DimensionMismatch("contract leg lists " + join(legs_a) + " and " + join(legs_b));
  }
  std::size_t inner = 1;
  for (std::size_t k = 0; k < legs_a.size(); ++k) {
    std::size_t da = a.dim(legs_a[k]);
    std::size_t db = b.dim(legs_b[k]);
    if (da != db) {
      throw DimensionMismatch("leg '" + legs_a[k] + "' (" + std::to_string(da) + ") vs '" +
                              legs_b[k] + "' (" + std::to_string(db) + ")");
    }
    inner *= da;
  }
  auto contains = [](const std::vector<LegId>& v, const LegId& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  std::vector<LegId> free_a, free_b, out_legs;
  std::vector<std::size_t> out_dims;
  std::size_t rows = 1, cols = 1;
  for (std::size_t k = 0; k < a.rank(); ++k) {
    if (!contains(legs_a, a.legs()[k])) {
      free_a.push_back(a.legs()[k]);
      out_dims.push_back(a.dims()[k]);
      rows *= a.dims()[k];
    }
  }
  for (std::size_t k = 0; k < b.rank(); ++k) {
    if (!contains(legs_b, b.legs()[k])) {
      free_b.push_back(b.legs()[k]);
      out_dims.push_back(b.dims()[k]);
      cols *= b.dims()[k];
    }
  }
  out_legs = free_a;
  for (const auto& l : free_b) {
    if (contains(free_a, l)) throw NameCollision("surviving leg '" + l + "' appears in both operands");
    out_legs.push_back(l);
  }

  std::vector<LegId> order_a = free_a;
  order_a.insert(order_a.end(), legs_a.begin(), legs_a.end());
  std::vector<LegId> order_b = legs_b;
  order_b.insert(order_b.end(), free_b.begin(), free_b.end());
  Tensor pa = a.permuted(order_a);
  Tensor pb = b.permuted(order_b);

  std::vector<Complex> out(rows * cols);
  Eigen::Map<const RowMatrix> ma(pa.data().data(), static_cast<Eigen::Index>(rows),
                                 static_cast<Eigen::Index>(inner));
  Eigen::Map<const RowMatrix> mb(pb.data().data(), static_cast<Eigen::Index>(inner),
                                 static_cast<Eigen::Index>(cols));
  Eigen::Map<RowMatrix> mc(out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  mc.noalias() = ma * mb;

  Tensor result(std::move(out_legs), std::move(out_dims), std::move(out), a.scale_exp() + b.scale_exp());
  return renormalize(result, window);
}

Tensor fuse_legs(const Tensor& t, const std::vector<LegId>& group, const LegId& new_leg) {
  if (group.empty()) throw UnknownLeg("empty fuse group");
  std::size_t first = t.rank();
  for (const auto& g : group) first = std::min(first, t.position(g));
  std::vector<LegId> order;
  std::vector<LegId> legs;
  std::vector<std::size_t> dims;
  std::size_t fused = 1;
  for (const auto& g : group) fused *= t.dim(g);
  for (std::size_t k = 0; k < t.rank(); ++k) {
    const auto& l = t.legs()[k];
    bool in_group = std::find(group.begin(), group.end(), l) != group.end();
    if (k == first) {
      order.insert(order.end(), group.begin(), group.end());
      legs.push_back(new_leg);
      dims.push_back(fused);
    }
    if (!in_group) {
      order.push_back(l);
      legs.push_back(l);
      dims.push_back(t.dims()[k]);
    }
  }
  Tensor p = t.permuted(order);
  return Tensor(std::move(legs), std::move(dims), std::move(p.storage()), t.scale_exp());
}

Tensor split_leg(const Tensor& t, const LegId& leg, const std::vector<LegId>& new_legs,
                 const std::vector<std::size_t>& new_dims) {
  std::size_t pos = t.position(leg);
  if (new_legs.size() != new_dims.size() || product(new_dims) != t.dims()[pos]) {
    throw DimensionMismatch("split of '" + leg + "' into " + join(new_legs));
  }
  std::vector<LegId> legs;
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < t.rank(); ++k) {
    if (k == pos) {
      legs.insert(legs.end(), new_legs.begin(), new_legs.end());
      dims.insert(dims.end(), new_dims.begin(), new_dims.end());
    } else {
      legs.push_back(t.legs()[k]);
      dims.push_back(t.dims()[k]);
    }
  }
  std::vector<Complex> data(t.data().begin(), t.data().end());
  return Tensor(std::move(legs), std::move(dims), std::move(data), t.scale_exp());
}

namespace {

struct Bipartition {
  std::vector<LegId> left, right;
  std::vector<std::size_t> left_dims, right_dims;
  std::size_t rows = 1, cols = 1;
};

Bipartition bipartition(const Tensor& t, const std::vector<LegId>& left_legs) {
  Bipartition b;
  if (left_legs.empty() || left_legs.size() >= t.rank()) {
    throw DimensionMismatch("left legs " + join(left_legs) + " must be a proper subset of " + join(t.legs()));
  }
  b.left = left_legs;
  for (const auto& l : left_legs) {
    b.left_dims.push_back(t.dim(l));
    b.rows *= b.left_dims.back();
  }
  for (std::size_t k = 0; k < t.rank(); ++k) {
    if (std::find(left_legs.begin(), left_legs.end(), t.legs()[k]) == left_legs.end()) {
      b.right.push_back(t.legs()[k]);
      b.right_dims.push_back(t.dims()[k]);
      b.cols *= t.dims()[k];
    }
  }
  return b;
}

void check_finite(const Tensor& t) {
  for (const auto& x : t.data()) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
      throw DecompositionFailure("non-finite entry in " + join(t.legs()));
    }
  }
}

}  // namespace

Tensor Decomposition::left_times_s() const {
  Tensor out = left;
  const std::size_t k = singular_values.size();
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= singular_values[i % k];
  out.set_scale_exp(scale_exp);
  return renormalize(out);
}

Tensor Decomposition::s_times_right() const {
  Tensor out = right;
  const std::size_t k = singular_values.size();
  const std::size_t stride = out.size() / k;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= singular_values[i / stride];
  out.set_scale_exp(scale_exp);
  return renormalize(out);
}

Decomposition svd_split(const Tensor& t, const std::vector<LegId>& left_legs, std::size_t chi,
                        const LegId& new_leg, double relative_cutoff) {
  if (chi == 0) throw DimensionMismatch("chi must be positive");
  check_finite(t);
  Bipartition bp = bipartition(t, left_legs);
  MatrixC m = t.matrix(left_legs);

  MatrixC u, v;
  Eigen::VectorXd s;
  if (std::min(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<MatrixC> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  } else {
    Eigen::BDCSVD<MatrixC> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  }
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) throw DecompositionFailure("SVD did not converge");
  }

  const std::size_t full = static_cast<std::size_t>(s.size());
  const double smax = full > 0 ? s[0] : 0.0;
  std::size_t rank = 0;
  while (rank < full && s[static_cast<Eigen::Index>(rank)] > relative_cutoff * smax) ++rank;
  std::size_t keep = std::max<std::size_t>(1, std::min(chi, rank));

  Decomposition d;
  d.scale_exp = t.scale_exp();
  double discarded = 0.0;
  for (std::size_t i = keep; i < full; ++i) discarded += s[static_cast<Eigen::Index>(i)] * s[static_cast<Eigen::Index>(i)];
  d.truncation_error = std::sqrt(discarded);
  d.singular_values.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) d.singular_values[i] = s[static_cast<Eigen::Index>(i)];

  auto left_legs_out = bp.left;
  left_legs_out.push_back(new_leg);
  auto left_dims_out = bp.left_dims;
  left_dims_out.push_back(keep);
  d.left = Tensor::from_matrix(u.leftCols(static_cast<Eigen::Index>(keep)), left_legs_out, left_dims_out);

  std::vector<LegId> right_legs_out{new_leg};
  right_legs_out.insert(right_legs_out.end(), bp.right.begin(), bp.right.end());
  std::vector<std::size_t> right_dims_out{keep};
  right_dims_out.insert(right_dims_out.end(), bp.right_dims.begin(), bp.right_dims.end());
  d.right = Tensor::from_matrix(v.leftCols(static_cast<Eigen::Index>(keep)).adjoint(), right_legs_out,
                                right_dims_out);
  return d;
}

std::pair<Tensor, Tensor> qr_split(const Tensor& t, const std::vector<LegId>& left_legs, QrSide side,
                                   const LegId& new_leg) {
  check_finite(t);
  Bipartition bp = bipartition(t, left_legs);
  MatrixC m = t.matrix(left_legs);
  // LQ of m is the adjoint of QR of m^dagger.
  MatrixC a = side == QrSide::Left ? m : MatrixC(m.adjoint());
  const Eigen::Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<MatrixC> qr(a);
  MatrixC q = qr.householderQ() * MatrixC::Identity(a.rows(), k);
  MatrixC r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i) {
    Complex diag = r(i, i);
    double mag = std::abs(diag);
    if (mag > 0.0) {
      Complex phase = diag / mag;
      r.row(i) *= std::conj(phase);
      q.col(i) *= phase;
    }
  }
  const std::size_t ku = static_cast<std::size_t>(k);
  auto first_legs = bp.left;
  first_legs.push_back(new_leg);
  auto first_dims = bp.left_dims;
  first_dims.push_back(ku);
  std::vector<LegId> second_legs{new_leg};
  second_legs.insert(second_legs.end(), bp.right.begin(), bp.right.end());
  std::vector<std::size_t> second_dims{ku};
  second_dims.insert(second_dims.end(), bp.right_dims.begin(), bp.right_dims.end());
  if (side == QrSide::Left) {
    return {Tensor::from_matrix(q, first_legs, first_dims),
            renormalize(Tensor::from_matrix(r, second_legs, second_dims, t.scale_exp()))};
  }
  return {renormalize(Tensor::from_matrix(r.adjoint(), first_legs, first_dims, t.scale_exp())),
          Tensor::from_matrix(q.adjoint(), second_legs, second_dims)};
}

ScaledScalar inner(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank()) throw DimensionMismatch("inner of tensors with different rank");
  Tensor pb = b.permuted(a.legs());
  if (pb.dims() != a.dims()) throw DimensionMismatch("inner of tensors with different dims");
  Complex s = 0.0;
  auto da = a.data();
  auto db = pb.data();
  for (std::size_t i = 0; i < da.size(); ++i) s += std::conj(da[i]) * db[i];
  return ScaledScalar::from(s, a.scale_exp() + b.scale_exp());
}

}  // namespace kbp

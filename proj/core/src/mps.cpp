#include "kbp/mps.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "kbp/error.hpp"

namespace kbp {

namespace {

using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SliceMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

const std::vector<LegId> kSiteLegs{"l", "p", "r"};

Tensor as_site(const Tensor& t) {
  if (t.rank() != 3 || !t.has_leg("l") || !t.has_leg("p") || !t.has_leg("r")) {
    throw DimensionMismatch("chain site must carry legs (l,p,r)");
  }
  return t.permuted(kSiteLegs);
}

// Slice p of a site (l,p,r) viewed as an l x r matrix.
SliceMap slice(const Tensor& site, std::size_t p) {
  const auto& d = site.dims();
  return SliceMap(site.data().data() + p * d[2], static_cast<Eigen::Index>(d[0]),
                  static_cast<Eigen::Index>(d[2]), Eigen::OuterStride<>(static_cast<Eigen::Index>(d[1] * d[2])));
}

Tensor swap_lr(const Tensor& t) {
  return t.renamed(std::map<LegId, LegId>{{"l", "r"}, {"r", "l"}}).permuted(kSiteLegs);
}

ScaledScalar sqrt_scaled(const ScaledScalar& s) {
  double m = std::abs(s.mantissa);
  long e = s.exponent;
  if (e % 2 != 0) {
    m *= 10.0;
    --e;
  }
  return ScaledScalar::from(std::sqrt(m), e / 2);
}

}  // namespace

// MPS ------------------------------------------------------------------------

MPS::MPS(std::vector<Tensor> sites, long scale_exp) : scale_exp_(scale_exp) {
  sites_.reserve(sites.size());
  for (auto& s : sites) {
    Tensor t = as_site(s);
    scale_exp_ += t.scale_exp();
    t.set_scale_exp(0);
    sites_.push_back(std::move(t));
  }
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) {
    if (sites_[i].dim("r") != sites_[i + 1].dim("l")) {
      throw DimensionMismatch("bond " + std::to_string(i) + " extents disagree");
    }
  }
  if (!sites_.empty() && (sites_.front().dim("l") != 1 || sites_.back().dim("r") != 1)) {
    throw DimensionMismatch("open chain ends must have extent 1");
  }
}

MPS MPS::random(const std::vector<std::size_t>& phys_dims, std::size_t bond, std::mt19937_64& rng) {
  std::vector<Tensor> sites;
  const std::size_t n = phys_dims.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t l = i == 0 ? 1 : bond;
    std::size_t r = i + 1 == n ? 1 : bond;
    sites.push_back(Tensor::random(kSiteLegs, {l, phys_dims[i], r}, rng));
  }
  return MPS(std::move(sites));
}

MPS MPS::product(const std::vector<std::vector<Complex>>& states) {
  std::vector<Tensor> sites;
  for (const auto& s : states) sites.emplace_back(kSiteLegs, std::vector<std::size_t>{1, s.size(), 1}, s);
  return MPS(std::move(sites));
}

void MPS::set_site(std::size_t i, Tensor t) {
  Tensor s = as_site(t);
  scale_exp_ += s.scale_exp();
  s.set_scale_exp(0);
  sites_.at(i) = std::move(s);
  center_.reset();
}

std::size_t MPS::max_bond() const {
  std::size_t m = 1;
  for (std::size_t i = 0; i + 1 < sites_.size(); ++i) m = std::max(m, bond_dim(i));
  return m;
}

MPS MPS::reversed() const {
  std::vector<Tensor> sites;
  for (auto it = sites_.rbegin(); it != sites_.rend(); ++it) sites.push_back(swap_lr(*it));
  MPS out(std::move(sites), scale_exp_);
  if (center_) out.center_ = sites_.size() - 1 - *center_;
  return out;
}

MPS MPS::conj() const {
  MPS out = *this;
  for (auto& s : out.sites_) s = s.conj();
  return out;
}

MPS MPS::scaled(Complex factor) const {
  MPS out = *this;
  if (!out.sites_.empty()) out.set_site(0, renormalize(out.sites_[0].scaled(factor)));
  out.center_ = center_ && *center_ == 0 ? center_ : std::nullopt;
  return out;
}

// PeriodicMPS ------------------------------------------------------------------

PeriodicMPS::PeriodicMPS(std::vector<Tensor> sites, long scale_exp) : scale_exp_(scale_exp) {
  for (auto& s : sites) {
    Tensor t = as_site(s);
    scale_exp_ += t.scale_exp();
    t.set_scale_exp(0);
    sites_.push_back(std::move(t));
  }
  const std::size_t n = sites_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (sites_[i].dim("r") != sites_[(i + 1) % n].dim("l")) {
      throw DimensionMismatch("ring bond " + std::to_string(i) + " extents disagree");
    }
  }
}

std::size_t PeriodicMPS::max_bond() const {
  std::size_t m = 1;
  for (const auto& s : sites_) m = std::max(m, s.dim("r"));
  return m;
}

PeriodicMPS PeriodicMPS::rotated(std::size_t k) const {
  std::vector<Tensor> sites(sites_.begin(), sites_.end());
  if (!sites.empty()) std::rotate(sites.begin(), sites.begin() + static_cast<long>(k % sites.size()), sites.end());
  return PeriodicMPS(std::move(sites), scale_exp_);
}

PeriodicMPS PeriodicMPS::reversed() const {
  std::vector<Tensor> sites;
  for (auto it = sites_.rbegin(); it != sites_.rend(); ++it) sites.push_back(swap_lr(*it));
  return PeriodicMPS(std::move(sites), scale_exp_);
}

Tensor PeriodicMPS::to_dense() const {
  if (sites_.empty()) throw EmptyCore("ring has no sites");
  Tensor acc = sites_[0].renamed(std::map<LegId, LegId>{{"l", "L"}, {"p", "p0"}});
  for (std::size_t i = 1; i < sites_.size(); ++i) {
    acc = contract(acc, {"r"}, sites_[i].renamed("p", "p" + std::to_string(i)), {"l"});
  }
  Tensor id = Tensor::identity("a", "b", acc.dim("L"));
  Tensor out = contract(acc, {"L", "r"}, id, {"a", "b"});
  out.set_scale_exp(out.scale_exp() + scale_exp_);
  return out;
}

// Chain algorithms -------------------------------------------------------------

MPS canonicalize(const MPS& m, std::size_t center) {
  const std::size_t n = m.length();
  if (center >= n) throw DimensionMismatch("centre beyond chain length");
  std::vector<Tensor> sites = m.sites();
  long scale = m.scale_exp();
  auto fold = [&scale](Tensor t) {
    scale += t.scale_exp();
    t.set_scale_exp(0);
    return t;
  };
  for (std::size_t i = 0; i < center; ++i) {
    Decomposition d = svd_split(sites[i], {"l", "p"}, kUnlimited, "k");
    sites[i] = d.left.renamed("k", "r");
    Tensor carry = d.s_times_right();
    sites[i + 1] = fold(contract(carry, {"r"}, sites[i + 1], {"l"}).renamed("k", "l"));
  }
  for (std::size_t i = n - 1; i > center; --i) {
    Decomposition d = svd_split(sites[i], {"l"}, kUnlimited, "k");
    sites[i] = d.right.renamed("k", "l");
    Tensor carry = d.left_times_s();
    sites[i - 1] = fold(contract(sites[i - 1], {"r"}, carry, {"l"}).renamed("k", "r"));
  }
  sites[center] = fold(renormalize(sites[center]));
  MPS out(std::move(sites), scale);
  out.set_center(center);
  return out;
}

CompressResult compress(const MPS& m, std::size_t chi) {
  const std::size_t n = m.length();
  if (n == 0) return {m, 0.0};
  MPS c = canonicalize(m, n - 1);
  std::vector<Tensor> sites = c.sites();
  long scale = c.scale_exp();
  double err2 = 0.0;
  for (std::size_t i = n - 1; i > 0; --i) {
    Decomposition d = svd_split(sites[i], {"l"}, chi, "k");
    double kept = 0.0;
    for (double s : d.singular_values) kept += s * s;
    double total = kept + d.truncation_error * d.truncation_error;
    if (total > 0.0) err2 += d.truncation_error * d.truncation_error / total;
    sites[i] = d.right.renamed("k", "l");
    Tensor next = contract(sites[i - 1], {"r"}, d.left_times_s(), {"l"}).renamed("k", "r");
    scale += next.scale_exp();
    next.set_scale_exp(0);
    sites[i - 1] = std::move(next);
  }
  MPS out(std::move(sites), scale);
  out.set_center(0);
  return {std::move(out), std::sqrt(err2)};
}

MPS add(const MPS& a, const MPS& b, Complex wa, Complex wb) {
  const std::size_t n = a.length();
  if (n != b.length() || n == 0) throw DimensionMismatch("add of chains with different lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (a.phys_dim(i) != b.phys_dim(i)) throw DimensionMismatch("add: physical extents differ at site " + std::to_string(i));
  }
  long e = std::max(a.scale_exp(), b.scale_exp());
  wa *= std::pow(10.0, static_cast<double>(a.scale_exp() - e));
  wb *= std::pow(10.0, static_cast<double>(b.scale_exp() - e));

  std::vector<Tensor> sites;
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& A = a.site(i);
    const Tensor& B = b.site(i);
    const std::size_t P = A.dim("p");
    const std::size_t la = A.dim("l"), ra = A.dim("r"), lb = B.dim("l"), rb = B.dim("r");
    const bool first = i == 0, last = i + 1 == n;
    std::size_t L = first ? 1 : la + lb;
    std::size_t R = last ? 1 : ra + rb;
    Tensor S(kSiteLegs, {L, P, R});
    auto out = S.data();
    Complex fa = first ? wa : 1.0;
    Complex fb = first ? wb : 1.0;
    auto put = [&](const Tensor& X, std::size_t lx, std::size_t rx, std::size_t loff, std::size_t roff, Complex f) {
      auto in = X.data();
      for (std::size_t l = 0; l < lx; ++l)
        for (std::size_t p = 0; p < P; ++p)
          for (std::size_t r = 0; r < rx; ++r)
            out[((l + loff) * P + p) * R + r + roff] += f * in[(l * P + p) * rx + r];
    };
    put(A, la, ra, 0, 0, fa);
    put(B, lb, rb, first ? 0 : la, last ? 0 : ra, fb);
    sites.push_back(std::move(S));
  }
  return MPS(std::move(sites), e);
}

ScaledScalar inner(const MPS& a, const MPS& b) {
  const std::size_t n = a.length();
  if (n != b.length()) throw DimensionMismatch("inner of chains with different lengths");
  MatrixC E = MatrixC::Ones(1, 1);
  long scale = a.scale_exp() + b.scale_exp();
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& A = a.site(i);
    const Tensor& B = b.site(i);
    const std::size_t P = A.dim("p");
    if (P != B.dim("p")) throw DimensionMismatch("inner: physical extents differ");
    MatrixC next = MatrixC::Zero(static_cast<Eigen::Index>(A.dim("r")), static_cast<Eigen::Index>(B.dim("r")));
    for (std::size_t p = 0; p < P; ++p) {
      MatrixC tmp = E * slice(B, p);
      next.noalias() += slice(A, p).adjoint() * tmp;
    }
    double mx = next.cwiseAbs().maxCoeff();
    if (mx > 0.0 && (mx > 1e3 || mx < 1e-3)) {
      long shift = static_cast<long>(std::floor(std::log10(mx)));
      next /= std::pow(10.0, static_cast<double>(shift));
      scale += shift;
    }
    E = std::move(next);
  }
  return ScaledScalar::from(E(0, 0), scale);
}

ScaledScalar norm(const MPS& m) { return sqrt_scaled(inner(m, m)); }

MPS normalized(const MPS& m) {
  MPS c = canonicalize(m, 0);
  double nrm = c.site(0).norm();
  if (nrm == 0.0) throw DecompositionFailure("cannot normalize a zero chain");
  std::vector<Tensor> sites = c.sites();
  sites[0] = sites[0].scaled(1.0 / nrm);
  MPS out(std::move(sites), 0);
  out.set_center(0);
  return out;
}

double distance(const MPS& a, const MPS& b, DistanceOptions options) {
  MPS na = options.normalize ? normalized(a) : a;
  MPS nb = options.normalize ? normalized(b) : b;
  Complex phase = 1.0;
  if (options.align_phase) {
    Complex ov = inner(nb, na).value();
    if (std::abs(ov) > 0.0) phase = ov / std::abs(ov);
  }
  MPS diff = add(na, nb, 1.0, -phase);
  MPS c = canonicalize(diff, 0);
  return c.site(0).norm() * std::pow(10.0, static_cast<double>(c.scale_exp()));
}

MPS adjoint_operator(const MPS& m, const PhysSplits& splits) {
  if (!splits.empty() && splits.size() != m.length()) throw DimensionMismatch("one (ket, bra) split per site");
  std::vector<Tensor> sites;
  for (std::size_t i = 0; i < m.length(); ++i) {
    const Tensor& s = m.site(i);
    std::size_t P = s.dim("p");
    std::size_t dk, db;
    if (splits.empty()) {
      dk = db = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(P))));
    } else {
      std::tie(dk, db) = splits[i];
    }
    if (dk * db != P) throw DimensionMismatch("physical extent " + std::to_string(P) + " does not split as ket x bra");
    Tensor t = split_leg(s, "p", {"k", "b"}, {dk, db}).permuted({"l", "b", "k", "r"});
    sites.push_back(fuse_legs(t, {"b", "k"}, "p").conj());
  }
  return MPS(std::move(sites), m.scale_exp());
}

MPS hermitize(const MPS& m, const PhysSplits& splits) {
  MPS sum = add(m, adjoint_operator(m, splits), 0.5, 0.5);
  return compress(sum, m.max_bond()).mps;
}

PeriodicMPS zipper_close(const MPS& top, const MPS& bottom, std::size_t head, std::size_t tail) {
  const std::size_t nt = top.length(), nb = bottom.length();
  if (head + tail > nt || head + tail > nb) throw DimensionMismatch("overlap exceeds chain length");
  if (head + tail == nt && head + tail == nb) throw EmptyCore("overlap covers both chains");

  auto check_pair = [](const Tensor& x, const Tensor& y) {
    if (x.dim("p") != y.dim("p")) throw DimensionMismatch("zipper: paired physical extents differ");
  };

  // E_tail joins top's right cut (leg t) to bottom's left cut (leg b).
  Tensor e_tail({"t", "b"}, {1, 1}, {Complex(1.0)});
  for (std::size_t i = 0; i < tail; ++i) {
    const Tensor& T = top.site(nt - 1 - i);
    const Tensor& B = bottom.site(i);
    check_pair(T, B);
    Tensor x = contract(T, {"r"}, e_tail, {"t"});
    e_tail = contract(x, {"p", "b"}, B, {"p", "l"}).renamed(std::map<LegId, LegId>{{"l", "t"}, {"r", "b"}});
  }
  // E_head joins bottom's right cut (leg b) to top's left cut (leg t).
  Tensor e_head({"b", "t"}, {1, 1}, {Complex(1.0)});
  for (std::size_t i = 0; i < head; ++i) {
    const Tensor& T = top.site(i);
    const Tensor& B = bottom.site(nb - 1 - i);
    check_pair(T, B);
    Tensor x = contract(B, {"r"}, e_head, {"b"});
    e_head = contract(x, {"p", "t"}, T, {"p", "l"}).renamed(std::map<LegId, LegId>{{"l", "b"}, {"r", "t"}});
  }

  std::vector<Tensor> top_part(top.sites().begin() + static_cast<long>(head),
                               top.sites().begin() + static_cast<long>(nt - tail));
  std::vector<Tensor> bottom_part(bottom.sites().begin() + static_cast<long>(tail),
                                  bottom.sites().begin() + static_cast<long>(nb - head));
  long scale = top.scale_exp() + bottom.scale_exp();

  if (!top_part.empty() && !bottom_part.empty()) {
    bottom_part.front() = contract(e_tail, {"b"}, bottom_part.front(), {"l"}).renamed("t", "l");
    top_part.front() = contract(e_head, {"t"}, top_part.front(), {"l"}).renamed("b", "l");
  } else if (bottom_part.empty()) {
    Tensor c = contract(e_tail, {"b"}, e_head.renamed("t", "t2"), {"b"});
    top_part.front() = contract(c, {"t2"}, top_part.front(), {"l"}).renamed("t", "l");
  } else {
    Tensor c = contract(e_head, {"t"}, e_tail.renamed("b", "b2"), {"t"});
    bottom_part.front() = contract(c, {"b2"}, bottom_part.front(), {"l"}).renamed("b", "l");
  }

  std::vector<Tensor> ring = std::move(top_part);
  for (auto& s : bottom_part) ring.push_back(std::move(s));
  return PeriodicMPS(std::move(ring), scale);
}

Tensor to_dense(const MPS& m) {
  if (m.empty()) throw DimensionMismatch("empty chain");
  Tensor acc = m.site(0).renamed(std::map<LegId, LegId>{{"l", "L"}, {"p", "p0"}});
  for (std::size_t i = 1; i < m.length(); ++i) {
    acc = contract(acc, {"r"}, m.site(i).renamed("p", "p" + std::to_string(i)), {"l"});
  }
  Tensor one_l({"L"}, {1}, {Complex(1.0)});
  Tensor one_r({"r"}, {1}, {Complex(1.0)});
  acc = contract(acc, {"L"}, one_l, {"L"});
  acc = contract(acc, {"r"}, one_r, {"r"});
  acc.set_scale_exp(acc.scale_exp() + m.scale_exp());
  return acc;
}

}  // namespace kbp

#pragma once

#include <optional>
#include <random>
#include <vector>

#include "kbp/tensor.hpp"

namespace kbp {

// Site tensors carry legs ("l", "p", "r"); the outer bonds of an open chain have extent 1.
// Site tensors are stored with scale_exp 0; the chain-wide exponent lives in scale_exp().
class MPS {
 public:
  MPS() = default;
  explicit MPS(std::vector<Tensor> sites, long scale_exp = 0);

  static MPS random(const std::vector<std::size_t>& phys_dims, std::size_t bond, std::mt19937_64& rng);
  static MPS product(const std::vector<std::vector<Complex>>& states);

  std::size_t length() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  const Tensor& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<Tensor>& sites() const { return sites_; }
  void set_site(std::size_t i, Tensor t);
  long scale_exp() const { return scale_exp_; }
  void set_scale_exp(long e) { scale_exp_ = e; }
  std::optional<std::size_t> center() const { return center_; }
  void set_center(std::optional<std::size_t> c) { center_ = c; }

  std::size_t phys_dim(std::size_t i) const { return sites_.at(i).dim("p"); }
  // Extent of the bond between site i and i+1.
  std::size_t bond_dim(std::size_t i) const { return sites_.at(i).dim("r"); }
  std::size_t max_bond() const;

  MPS reversed() const;
  MPS conj() const;
  MPS scaled(Complex factor) const;

 private:
  std::vector<Tensor> sites_;
  long scale_exp_ = 0;
  std::optional<std::size_t> center_;
};

// Cyclic chain: site i's "r" joins site i+1's "l", the last "r" joins the first "l".
class PeriodicMPS {
 public:
  PeriodicMPS() = default;
  explicit PeriodicMPS(std::vector<Tensor> sites, long scale_exp = 0);

  std::size_t length() const { return sites_.size(); }
  const Tensor& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<Tensor>& sites() const { return sites_; }
  std::vector<Tensor>& mutable_sites() { return sites_; }
  long scale_exp() const { return scale_exp_; }
  void set_scale_exp(long e) { scale_exp_ = e; }
  std::size_t max_bond() const;

  // Cyclic shift so that old site k becomes site 0.
  PeriodicMPS rotated(std::size_t k) const;
  // Reverse traversal direction (swaps "l" and "r").
  PeriodicMPS reversed() const;

  // Trace over the ring bonds; legs "p0".."p{n-1}".
  Tensor to_dense() const;

 private:
  std::vector<Tensor> sites_;
  long scale_exp_ = 0;
};

// Sites [0, c) left-orthonormal, (c, n) right-orthonormal; the norm sits in site c and scale_exp.
MPS canonicalize(const MPS& m, std::size_t center);

struct CompressResult {
  MPS mps;
  double error = 0.0;  // relative 2-norm of discarded weights
};
CompressResult compress(const MPS& m, std::size_t chi);

// Direct sum wa*a + wb*b.
MPS add(const MPS& a, const MPS& b, Complex wa = 1.0, Complex wb = 1.0);

ScaledScalar inner(const MPS& a, const MPS& b);
ScaledScalar norm(const MPS& m);
// Unit 2-norm, scale_exp 0, centre at site 0.
MPS normalized(const MPS& m);

struct DistanceOptions {
  bool normalize = true;    // compare a/|a| with b/|b|
  bool align_phase = true;  // multiply b by the phase of <b|a>
};

// || a - b ||_2 under the chosen normalization and phase convention.
double distance(const MPS& a, const MPS& b, DistanceOptions options = {});

// Physical legs hold fused (ket, bra) pairs, ket-major. `splits` gives (ket, bra) extents per
// site; empty means square splits. Returns (A + A^dagger)/2 compressed back to the input's
// largest bond.
using PhysSplits = std::vector<std::pair<std::size_t, std::size_t>>;
MPS adjoint_operator(const MPS& m, const PhysSplits& splits = {});
MPS hermitize(const MPS& m, const PhysSplits& splits = {});

// Closes two boundary chains into a ring. The first `head` sites of top pair with the
// last `head` sites of bottom in reverse order; the last `tail` sites of top pair with the
// first `tail` sites of bottom in reverse order. The ring lists the unpaired top sites
// followed by the unpaired bottom sites.
PeriodicMPS zipper_close(const MPS& top, const MPS& bottom, std::size_t head, std::size_t tail);

// Dense state with legs "p0".."p{n-1}".
Tensor to_dense(const MPS& m);

}  // namespace kbp

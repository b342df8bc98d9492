#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace logicmp {

using Shape = std::vector<std::size_t>;
using Extents = std::map<char, std::size_t>;

/// Dense row-major array of doubles. A rank-0 tensor holds exactly one value.
class DenseTensor {
 public:
  DenseTensor() : data_(1, 0.0) {}
  explicit DenseTensor(Shape shape, double fill = 0.0);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor scalar(double value) { return DenseTensor(Shape{}, value); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;

  std::vector<std::size_t> strides() const;
  bool all_finite() const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

/// Subscripts of an Einstein summation, e.g. "ab,bc->ac".
///
/// Letters are `a`-`z`. A letter repeated inside one input selects that
/// input's diagonal; an output letter that no input carries is broadcast
/// (its extent must be supplied separately).
struct EinsumSpec {
  std::vector<std::string> inputs;
  std::string output;

  static EinsumSpec parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const EinsumSpec&, const EinsumSpec&) = default;
};

/// Extent of every letter in `spec`, inferred from `inputs` and completed by
/// `declared` for broadcast-only output letters. Throws DataError on
/// inconsistent extents or an output letter with no known extent.
Extents infer_extents(const EinsumSpec& spec, std::span<const DenseTensor> inputs, const Extents& declared = {});

/// Single-shot evaluation: one loop nest over every distinct letter.
/// Cost is the product of all extents; planner::execute is the fast path.
DenseTensor einsum(const EinsumSpec& spec, std::span<const DenseTensor> inputs, const Extents& declared = {});

/// Pairwise contraction kernel. `out` may only use letters carried by `lhs` or
/// `rhs`; letters absent from `out` are summed. Repeated letters inside an
/// operand select its diagonal. Internally maps onto a batched matrix product.
DenseTensor contract(std::string_view lhs_sub, const DenseTensor& lhs, std::string_view rhs_sub, const DenseTensor& rhs,
                     std::string_view out);

/// Row-major batched product c[b,i,j] += sum_k a[b,i,k] * b[b,k,j].
/// The three buffers must not overlap.
void gemm_batched(std::size_t nb, std::size_t ni, std::size_t nk, std::size_t nj, const double* a, const double* b,
                  double* c);

/// Unary reshaping: diagonal extraction, summation and permutation in one
/// pass. `out` letters must be distinct and drawn from `sub`.
DenseTensor reduce(std::string_view sub, const DenseTensor& t, std::string_view out);

/// Expand `t` (indexed by `sub`) to `out`, replicating along letters that
/// `sub` lacks. `out` must contain every letter of `sub`.
DenseTensor broadcast(std::string_view sub, const DenseTensor& t, std::string_view out, const Extents& extents);

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> axes);

/// Fix `axis` at `position`, dropping that axis.
DenseTensor slice_fixed(const DenseTensor& t, std::size_t axis, std::size_t position);

// Pointwise operations.
DenseTensor add(const DenseTensor& a, const DenseTensor& b);
DenseTensor sub_from_one(const DenseTensor& t);
DenseTensor scale(const DenseTensor& t, double factor);
DenseTensor exp(const DenseTensor& t);
/// Numerically stable softmax over the last axis.
DenseTensor softmax_lastaxis(const DenseTensor& t);

/// Text dump: `shape: d1 d2 ...` followed by row-major values, 17 significant digits.
void write_tensor(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor(std::istream& is);

}  // namespace logicmp

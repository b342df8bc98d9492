#include "logicmp/tensor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "logicmp/error.hpp"

namespace logicmp {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw DataError("tensor data length " + std::to_string(data_.size()) + " does not match shape volume " +
                    std::to_string(element_count(shape_)));
  }
}

std::vector<std::size_t> DenseTensor::strides() const {
  std::vector<std::size_t> s(shape_.size(), 1);
  for (std::size_t i = shape_.size(); i-- > 1;) s[i - 1] = s[i] * shape_[i];
  return s;
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw DataError("index rank does not match tensor rank");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (index[i] >= shape_[i]) throw DataError("index out of range");
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

double& DenseTensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
double DenseTensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

bool DenseTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

// Visits every point of a box, keeping one running linear offset per operand.
struct Walk {
  std::vector<std::size_t> extents;
  std::vector<std::vector<std::size_t>> strides;  // [operand][dimension]
};

template <class Visit>
void for_each_point(const Walk& w, Visit&& visit) {
  const std::size_t ndim = w.extents.size();
  const std::size_t nops = w.strides.size();
  for (std::size_t e : w.extents) {
    if (e == 0) return;
  }
  std::vector<std::size_t> offsets(nops, 0);
  if (ndim == 0) {
    visit(offsets.data());
    return;
  }
  std::vector<std::size_t> counter(ndim, 0);
  const std::size_t last = ndim - 1;
  const std::size_t inner = w.extents[last];
  std::vector<std::size_t> inner_stride(nops);
  for (std::size_t k = 0; k < nops; ++k) inner_stride[k] = w.strides[k][last];
  std::vector<std::size_t> cursor(nops);
  while (true) {
    std::copy(offsets.begin(), offsets.end(), cursor.begin());
    for (std::size_t i = 0; i < inner; ++i) {
      visit(cursor.data());
      for (std::size_t k = 0; k < nops; ++k) cursor[k] += inner_stride[k];
    }
    std::size_t d = last;
    while (true) {
      if (d == 0) return;
      --d;
      if (++counter[d] < w.extents[d]) {
        for (std::size_t k = 0; k < nops; ++k) offsets[k] += w.strides[k][d];
        break;
      }
      counter[d] = 0;
      for (std::size_t k = 0; k < nops; ++k) offsets[k] -= w.strides[k][d] * (w.extents[d] - 1);
    }
  }
}

void check_letters(std::string_view sub) {
  for (char c : sub) {
    if (c < 'a' || c > 'z') throw DataError(std::string("invalid einsum letter '") + c + "'");
  }
}

bool has_duplicates(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.find(s[i], i + 1) != std::string_view::npos) return true;
  }
  return false;
}

std::string distinct_letters(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (out.find(c) == std::string::npos) out.push_back(c);
  }
  return out;
}

void bind_extents(std::string_view sub, const DenseTensor& t, Extents& extents) {
  if (sub.size() != t.rank()) {
    throw DataError("subscript '" + std::string(sub) + "' has " + std::to_string(sub.size()) +
                    " letters but operand has rank " + std::to_string(t.rank()));
  }
  for (std::size_t i = 0; i < sub.size(); ++i) {
    auto [it, inserted] = extents.emplace(sub[i], t.extent(i));
    if (!inserted && it->second != t.extent(i)) {
      throw DataError(std::string("inconsistent extent for index '") + sub[i] + "': " + std::to_string(it->second) +
                      " vs " + std::to_string(t.extent(i)));
    }
  }
}

// Stride of each letter of `letters` inside a tensor indexed by `sub`;
// repeated letters accumulate (diagonal access), absent letters get 0.
std::vector<std::size_t> letter_strides(std::string_view letters, std::string_view sub, const DenseTensor& t) {
  const auto s = t.strides();
  std::vector<std::size_t> out(letters.size(), 0);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    out[letters.find(sub[i])] += s[i];
  }
  return out;
}

std::vector<std::size_t> letter_strides_of_shape(std::string_view letters, std::string_view sub, const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  std::vector<std::size_t> out(letters.size(), 0);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    auto pos = letters.find(sub[i]);
    if (pos != std::string_view::npos) out[pos] += s[i];
  }
  return out;
}

Shape shape_of(std::string_view sub, const Extents& extents) {
  Shape shape;
  shape.reserve(sub.size());
  for (char c : sub) shape.push_back(extents.at(c));
  return shape;
}

std::string split_front(std::string_view& rest, char sep) {
  auto pos = rest.find(sep);
  std::string head(rest.substr(0, pos));
  rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
  return head;
}

}  // namespace

EinsumSpec EinsumSpec::parse(std::string_view text) {
  std::string compact;
  for (char c : text) {
    if (c != ' ' && c != '\t') compact.push_back(c);
  }
  auto arrow = compact.find("->");
  if (arrow == std::string::npos) throw DataError("einsum spec '" + std::string(text) + "' lacks '->'");
  EinsumSpec spec;
  spec.output = compact.substr(arrow + 2);
  std::string_view lhs = std::string_view(compact).substr(0, arrow);
  if (!lhs.empty()) {
    while (true) {
      bool last = lhs.find(',') == std::string_view::npos;
      spec.inputs.push_back(split_front(lhs, ','));
      if (last) break;
    }
  }
  for (const auto& in : spec.inputs) check_letters(in);
  check_letters(spec.output);
  if (has_duplicates(spec.output)) throw DataError("einsum output '" + spec.output + "' repeats a letter");
  return spec;
}

std::string EinsumSpec::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i) s.push_back(',');
    s += inputs[i];
  }
  return s + "->" + output;
}

Extents infer_extents(const EinsumSpec& spec, std::span<const DenseTensor> inputs, const Extents& declared) {
  if (spec.inputs.size() != inputs.size()) {
    throw DataError("einsum spec names " + std::to_string(spec.inputs.size()) + " operands but " +
                    std::to_string(inputs.size()) + " were given");
  }
  Extents extents;
  for (std::size_t k = 0; k < inputs.size(); ++k) bind_extents(spec.inputs[k], inputs[k], extents);
  for (char c : spec.output) {
    if (extents.count(c)) continue;
    auto it = declared.find(c);
    if (it == declared.end()) throw DataError(std::string("output index '") + c + "' has no declared extent");
    extents.emplace(c, it->second);
  }
  return extents;
}

DenseTensor einsum(const EinsumSpec& spec, std::span<const DenseTensor> inputs, const Extents& declared) {
  const Extents extents = infer_extents(spec, inputs, declared);
  std::string letters;
  for (const auto& in : spec.inputs) letters += distinct_letters(in);
  letters = distinct_letters(letters);

  std::string core;  // output letters carried by some input
  for (char c : spec.output) {
    if (letters.find(c) != std::string::npos) core.push_back(c);
  }
  DenseTensor out(shape_of(core, extents), 0.0);

  Walk walk;
  walk.extents = shape_of(letters, extents);
  for (std::size_t k = 0; k < inputs.size(); ++k) walk.strides.push_back(letter_strides(letters, spec.inputs[k], inputs[k]));
  walk.strides.push_back(letter_strides_of_shape(letters, core, out.shape()));

  const std::size_t n = inputs.size();
  std::vector<const double*> base(n);
  for (std::size_t k = 0; k < n; ++k) base[k] = inputs[k].data().data();
  double* dst = out.data().data();
  for_each_point(walk, [&](const std::size_t* off) {
    double prod = 1.0;
    for (std::size_t k = 0; k < n; ++k) prod *= base[k][off[k]];
    dst[off[n]] += prod;
  });
  if (core == spec.output) return out;
  return broadcast(core, out, spec.output, extents);
}

DenseTensor reduce(std::string_view sub, const DenseTensor& t, std::string_view out) {
  check_letters(sub);
  check_letters(out);
  if (has_duplicates(out)) throw DataError("reduce output '" + std::string(out) + "' repeats a letter");
  Extents extents;
  bind_extents(sub, t, extents);
  for (char c : out) {
    if (!extents.count(c)) throw DataError(std::string("reduce output letter '") + c + "' not in operand");
  }
  const std::string letters = distinct_letters(sub);
  DenseTensor result(shape_of(out, extents), 0.0);
  Walk walk;
  walk.extents = shape_of(letters, extents);
  walk.strides.push_back(letter_strides(letters, sub, t));
  walk.strides.push_back(letter_strides_of_shape(letters, out, result.shape()));
  const double* src = t.data().data();
  double* dst = result.data().data();
  for_each_point(walk, [&](const std::size_t* off) { dst[off[1]] += src[off[0]]; });
  return result;
}

DenseTensor broadcast(std::string_view sub, const DenseTensor& t, std::string_view out, const Extents& extents) {
  if (has_duplicates(sub) || has_duplicates(out)) throw DataError("broadcast subscripts must not repeat letters");
  Extents all = extents;
  bind_extents(sub, t, all);
  for (char c : sub) {
    if (out.find(c) == std::string_view::npos) throw DataError(std::string("broadcast drops letter '") + c + "'");
  }
  for (char c : out) {
    if (!all.count(c)) throw DataError(std::string("no extent for broadcast letter '") + c + "'");
  }
  DenseTensor result(shape_of(out, all), 0.0);
  Walk walk;
  walk.extents = result.shape();
  walk.strides.push_back(letter_strides_of_shape(out, sub, t.shape()));
  walk.strides.push_back(result.strides());
  const double* src = t.data().data();
  double* dst = result.data().data();
  for_each_point(walk, [&](const std::size_t* off) { dst[off[1]] = src[off[0]]; });
  return result;
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> axes) {
  if (axes.size() != t.rank()) throw DataError("permutation rank mismatch");
  std::vector<bool> seen(axes.size(), false);
  Shape shape(axes.size());
  const auto src_strides = t.strides();
  std::vector<std::size_t> strides(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] >= axes.size() || seen[axes[i]]) throw DataError("invalid permutation");
    seen[axes[i]] = true;
    shape[i] = t.extent(axes[i]);
    strides[i] = src_strides[axes[i]];
  }
  DenseTensor result(shape, 0.0);
  Walk walk{shape, {strides, result.strides()}};
  const double* src = t.data().data();
  double* dst = result.data().data();
  for_each_point(walk, [&](const std::size_t* off) { dst[off[1]] = src[off[0]]; });
  return result;
}

void gemm_batched(std::size_t nb, std::size_t ni, std::size_t nk, std::size_t nj, const double* __restrict pa,
                  const double* __restrict pb, double* __restrict pc) {
  // Blocks of kWidth output columns stay in registers across the k loop.
  constexpr std::size_t kWidth = 8;
  const std::size_t blocked = nj - nj % kWidth;
  for (std::size_t bi = 0; bi < nb; ++bi) {
    const double* __restrict ab = pa + bi * ni * nk;
    const double* __restrict bb = pb + bi * nk * nj;
    double* __restrict cb = pc + bi * ni * nj;
    for (std::size_t i = 0; i < ni; ++i) {
      double* __restrict crow = cb + i * nj;
      const double* __restrict arow = ab + i * nk;
      for (std::size_t j = 0; j < blocked; j += kWidth) {
        double acc[kWidth];
        for (std::size_t w = 0; w < kWidth; ++w) acc[w] = crow[j + w];
        for (std::size_t k = 0; k < nk; ++k) {
          const double av = arow[k];
          const double* __restrict brow = bb + k * nj + j;
          for (std::size_t w = 0; w < kWidth; ++w) acc[w] += av * brow[w];
        }
        for (std::size_t w = 0; w < kWidth; ++w) crow[j + w] = acc[w];
      }
      for (std::size_t k = 0; k < nk; ++k) {
        const double av = arow[k];
        const double* __restrict brow = bb + k * nj;
        for (std::size_t j = blocked; j < nj; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

DenseTensor contract(std::string_view lhs_sub, const DenseTensor& lhs, std::string_view rhs_sub, const DenseTensor& rhs,
                     std::string_view out) {
  check_letters(lhs_sub);
  check_letters(rhs_sub);
  check_letters(out);
  if (has_duplicates(out)) throw DataError("contract output '" + std::string(out) + "' repeats a letter");
  Extents extents;
  bind_extents(lhs_sub, lhs, extents);
  bind_extents(rhs_sub, rhs, extents);
  for (char c : out) {
    if (!extents.count(c)) throw DataError(std::string("contract output letter '") + c + "' not in either operand");
  }

  auto in = [](std::string_view s, char c) { return s.find(c) != std::string_view::npos; };

  // Drop diagonals and letters nobody else needs before the product.
  auto keep_for = [&](std::string_view own, std::string_view other) {
    std::string keep;
    for (char c : distinct_letters(own)) {
      if (in(other, c) || in(out, c)) keep.push_back(c);
    }
    return keep;
  };
  std::string l_sub = keep_for(lhs_sub, rhs_sub);
  std::string r_sub = keep_for(rhs_sub, lhs_sub);
  DenseTensor l_tmp, r_tmp;
  const DenseTensor* l = &lhs;
  const DenseTensor* r = &rhs;
  if (l_sub != lhs_sub) {
    l_tmp = reduce(lhs_sub, lhs, l_sub);
    l = &l_tmp;
  }
  if (r_sub != rhs_sub) {
    r_tmp = reduce(rhs_sub, rhs, r_sub);
    r = &r_tmp;
  }

  std::string batch, left_free, right_free, summed;
  for (char c : out) {
    if (in(l_sub, c) && in(r_sub, c)) {
      batch.push_back(c);
    } else if (in(l_sub, c)) {
      left_free.push_back(c);
    } else {
      right_free.push_back(c);
    }
  }
  for (char c : l_sub) {
    if (in(r_sub, c) && !in(out, c)) summed.push_back(c);
  }
  // Prefer the operand order that lands directly in `out` layout.
  if (batch + left_free + right_free != out && batch + right_free + left_free == std::string(out)) {
    std::swap(l, r);
    std::swap(l_sub, r_sub);
    std::swap(left_free, right_free);
  }

  auto arrange = [&](const DenseTensor* t, const std::string& sub, const std::string& target, DenseTensor& storage) {
    if (sub == target) return t;
    std::vector<std::size_t> axes;
    for (char c : target) axes.push_back(sub.find(c));
    storage = permute(*t, axes);
    return static_cast<const DenseTensor*>(&storage);
  };
  DenseTensor l_perm, r_perm;
  const DenseTensor* a = arrange(l, l_sub, batch + left_free + summed, l_perm);
  const DenseTensor* b = arrange(r, r_sub, batch + summed + right_free, r_perm);

  auto volume = [&](const std::string& s) {
    std::size_t v = 1;
    for (char c : s) v *= extents.at(c);
    return v;
  };
  const std::size_t nb = volume(batch), ni = volume(left_free), nk = volume(summed), nj = volume(right_free);

  const std::string natural = batch + left_free + right_free;
  DenseTensor result(shape_of(natural, extents), 0.0);
  gemm_batched(nb, ni, nk, nj, a->data().data(), b->data().data(), result.data().data());
  if (natural == out) return result;
  std::vector<std::size_t> axes;
  for (char c : out) axes.push_back(natural.find(c));
  return permute(result, axes);
}

DenseTensor slice_fixed(const DenseTensor& t, std::size_t axis, std::size_t position) {
  if (axis >= t.rank()) throw DataError("slice axis " + std::to_string(axis) + " out of range");
  if (position >= t.extent(axis)) {
    throw DataError("slice position " + std::to_string(position) + " out of range for extent " +
                    std::to_string(t.extent(axis)));
  }
  Shape shape = t.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= t.extent(i);
  for (std::size_t i = axis + 1; i < t.rank(); ++i) inner *= t.extent(i);
  const std::size_t n = t.extent(axis);
  std::vector<double> data(outer * inner);
  const auto src = t.data();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((o * n + position) * inner), inner,
                data.begin() + static_cast<std::ptrdiff_t>(o * inner));
  }
  return DenseTensor(std::move(shape), std::move(data));
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw DataError("add: shape mismatch");
  DenseTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

DenseTensor sub_from_one(const DenseTensor& t) {
  DenseTensor out = t;
  for (double& v : out.data()) v = 1.0 - v;
  return out;
}

DenseTensor scale(const DenseTensor& t, double factor) {
  DenseTensor out = t;
  for (double& v : out.data()) v *= factor;
  return out;
}

DenseTensor exp(const DenseTensor& t) {
  DenseTensor out = t;
  for (double& v : out.data()) v = std::exp(v);
  return out;
}

DenseTensor softmax_lastaxis(const DenseTensor& t) {
  if (t.rank() == 0 || t.extent(t.rank() - 1) == 0) throw DataError("softmax needs a non-empty last axis");
  const std::size_t d = t.extent(t.rank() - 1);
  DenseTensor out = t;
  auto data = out.data();
  for (std::size_t base = 0; base < data.size(); base += d) {
    double hi = data[base];
    for (std::size_t k = 1; k < d; ++k) hi = std::max(hi, data[base + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      data[base + k] = std::exp(data[base + k] - hi);
      z += data[base + k];
    }
    for (std::size_t k = 0; k < d; ++k) data[base + k] /= z;
  }
  return out;
}

void write_tensor(std::ostream& os, const DenseTensor& t) {
  os << "shape:";
  for (std::size_t e : t.shape()) os << ' ' << e;
  os << '\n';
  char buf[64];
  for (double v : t.data()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << '\n';
  }
}

DenseTensor read_tensor(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("shape:", 0) != 0) throw DataError("tensor dump lacks 'shape:' header");
  std::istringstream hs(header.substr(6));
  Shape shape;
  std::size_t e;
  while (hs >> e) shape.push_back(e);
  if (!hs.eof()) throw DataError("malformed tensor shape header");
  std::vector<double> data;
  data.reserve(element_count(shape));
  std::string token;
  while (is >> token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) throw DataError("malformed tensor value '" + token + "'");
    data.push_back(v);
  }
  return DenseTensor(std::move(shape), std::move(data));
}

}  // namespace logicmp

/* Copyright 2026 The FreeMark Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FREEMARK_NUMERIC_HPP
#define FREEMARK_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freemark/binary_io.hpp"
#include "freemark/error.hpp"

namespace freemark {

// ---------------------------------------------------------------------------
// Dense containers
// ---------------------------------------------------------------------------

inline void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, std::string(what) + " contains NaN/Inf");
}

class RealVector {
 public:
  RealVector() = default;
  explicit RealVector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  explicit RealVector(std::vector<double> values) : data_(std::move(values)) {
    check_finite(data_, "vector");
  }
  RealVector(std::initializer_list<double> values) : RealVector(std::vector<double>(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
  }

  friend bool operator==(const RealVector&, const RealVector&) = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorCode::kDimensionMismatch,
            "matrix data length != rows*cols");
    check_finite(data_, "matrix");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      require(r.size() == cols_, ErrorCode::kDimensionMismatch, "ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite(data_, "matrix");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n, std::uint8_t fill = 0) : bits_(n, fill) { validate(); }
  explicit BitVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) { validate(); }
  BitVector(std::initializer_list<int> bits) {
    for (int b : bits) bits_.push_back(static_cast<std::uint8_t>(b));
    validate();
  }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  BitVector complement() const {
    BitVector out(*this);
    for (auto& b : out.bits_) b ^= 1;
    return out;
  }

  /// MSB-first packing, zero padding in the last byte.
  Bytes pack() const {
    Bytes out((bits_.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return out;
  }
  static BitVector unpack(std::span<const std::uint8_t> packed, std::size_t n) {
    require(packed.size() == (n + 7) / 8, ErrorCode::kFormat, "packed bit length mismatch");
    BitVector out(n);
    for (std::size_t i = 0; i < n; ++i) out.bits_[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
    if (n % 8 != 0 && (packed.back() & (0xffu >> (n % 8))) != 0)
      fail(ErrorCode::kFormat, "nonzero padding bits");
    return out;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  void validate() const {
    for (auto b : bits_)
      if (b > 1) fail(ErrorCode::kInvalidArgument, "bit vector entries must be 0 or 1");
  }

  std::vector<std::uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// Scalar nonlinearity
// ---------------------------------------------------------------------------

/// Logistic function. The negative branch uses e^x / (1 + e^x) so large
/// negative inputs do not overflow exp(-x).
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Thresholded sigmoid: 1 when sigmoid(x) >= 0.5. Decided on the sign of x
/// directly; sigmoid rounds to exactly 0.5 for tiny negative x.
inline std::uint8_t delta(double x) { return x >= 0.0 ? 1 : 0; }

inline BitVector delta(const RealVector& v) {
  std::vector<std::uint8_t> bits(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) bits[i] = delta(v[i]);
  return BitVector(std::move(bits));
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline RealVector matvec(const Matrix& a, const RealVector& v) {
  if (a.cols() != v.size())
    fail(ErrorCode::kDimensionMismatch, "matvec: A has " + std::to_string(a.cols()) +
                                            " columns but v has length " + std::to_string(v.size()));
  RealVector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  check_finite(out.values(), "matvec result");
  return out;
}

/// alpha * x - y
inline RealVector axpby(double alpha, const RealVector& x, const RealVector& y) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch, "axpby length mismatch");
  RealVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] - y[i];
  check_finite(out.values(), "axpby result");
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "dot length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// ---------------------------------------------------------------------------
// Bit error rate
// ---------------------------------------------------------------------------

inline std::size_t hamming(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size())
    fail(ErrorCode::kLengthMismatch, "bit vectors of length " + std::to_string(a.size()) + " and " +
                                         std::to_string(b.size()));
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

inline double ber(const BitVector& b, const BitVector& bhat) {
  if (b.empty() && bhat.empty()) fail(ErrorCode::kEmptyInput, "BER of empty vectors");
  std::size_t mismatches = hamming(b, bhat);
  return static_cast<double>(mismatches) / static_cast<double>(b.size());
}

// ---------------------------------------------------------------------------
// Seeded random streams
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer, used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream. std::mt19937_64's output sequence is fixed by
/// the standard; the uniform, integer and Gaussian transforms are implemented
/// here because the standard distributions are implementation-defined.
///
/// Gaussian samples use the Box-Muller transform on two 53-bit uniforms
/// (u1 in (0,1], u2 in [0,1)), emitting the cosine branch first and caching the
/// sine branch for the next call.
class Rng {
 public:
  static constexpr const char* kAlgorithmId = "mt19937_64+boxmuller/1";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent stream for a sub-task, keyed by `stream`.
  Rng split(std::uint64_t stream) const { return Rng(mix64(seed_ ^ mix64(stream + 1))); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    require(n > 0, ErrorCode::kInvalidArgument, "Rng::below(0)");
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline RealVector sample_gaussian_vector(Rng& rng, std::size_t len, double stddev = 1.0) {
  require(len > 0, ErrorCode::kInvalidArgument, "sample_gaussian_vector: len must be > 0");
  RealVector out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = stddev * rng.gaussian();
  return out;
}

inline Matrix sample_gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev = 1.0) {
  require(rows > 0 && cols > 0, ErrorCode::kInvalidArgument, "sample_gaussian_matrix: empty shape");
  Matrix out(rows, cols);
  for (double& v : out.values()) v = stddev * rng.gaussian();
  return out;
}

inline BitVector sample_bits(Rng& rng, std::size_t len) {
  require(len > 0, ErrorCode::kInvalidArgument, "sample_bits: len must be > 0");
  std::vector<std::uint8_t> bits(len);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  return BitVector(std::move(bits));
}

// ---------------------------------------------------------------------------
// Tensor serialization
//
//   magic "FMNC" | u16 version | u8 dtype | u8 ndims | u64 dims[ndims] | data
//
// f64 data is raw little-endian IEEE-754; bit data is packed MSB-first.
// ---------------------------------------------------------------------------

namespace tensor_format {
inline constexpr std::string_view kMagic = "FMNC";
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kF64 = 1;
inline constexpr std::uint8_t kBit = 2;

inline std::vector<std::uint64_t> read_header(ByteReader& in, std::uint8_t dtype, std::uint8_t ndims) {
  in.expect(kMagic);
  if (auto v = in.u16(); v != kVersion) fail(ErrorCode::kFormat, "unsupported tensor version " + std::to_string(v));
  if (in.u8() != dtype) fail(ErrorCode::kFormat, "unexpected tensor dtype");
  if (in.u8() != ndims) fail(ErrorCode::kFormat, "unexpected tensor rank");
  std::vector<std::uint64_t> dims(ndims);
  for (auto& d : dims) d = in.u64();
  return dims;
}

inline void write_header(ByteWriter& out, std::uint8_t dtype, std::initializer_list<std::uint64_t> dims) {
  out.raw(kMagic);
  out.u16(kVersion);
  out.u8(dtype);
  out.u8(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) out.u64(d);
}

inline std::vector<double> read_f64s(ByteReader& in, std::uint64_t count) {
  if (count > in.remaining() / 8) fail(ErrorCode::kFormat, "tensor data truncated");
  std::vector<double> v(static_cast<std::size_t>(count));
  for (auto& x : v) x = in.f64();
  return v;
}
}  // namespace tensor_format

inline void write(ByteWriter& out, const Matrix& m) {
  tensor_format::write_header(out, tensor_format::kF64, {m.rows(), m.cols()});
  for (double v : m.values()) out.f64(v);
}

inline void write(ByteWriter& out, const RealVector& v) {
  tensor_format::write_header(out, tensor_format::kF64, {v.size()});
  for (double x : v.values()) out.f64(x);
}

inline void write(ByteWriter& out, const BitVector& b) {
  tensor_format::write_header(out, tensor_format::kBit, {b.size()});
  out.raw(b.pack());
}

inline Matrix read_matrix(ByteReader& in) {
  auto dims = tensor_format::read_header(in, tensor_format::kF64, 2);
  if (dims[1] != 0 && dims[0] > in.remaining() / 8 / dims[1]) fail(ErrorCode::kFormat, "matrix data truncated");
  auto data = tensor_format::read_f64s(in, dims[0] * dims[1]);
  return Matrix(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]), std::move(data));
}

inline RealVector read_real_vector(ByteReader& in) {
  auto dims = tensor_format::read_header(in, tensor_format::kF64, 1);
  return RealVector(tensor_format::read_f64s(in, dims[0]));
}

inline BitVector read_bit_vector(ByteReader& in) {
  auto dims = tensor_format::read_header(in, tensor_format::kBit, 1);
  auto n = in.checked_len((dims[0] + 7) / 8);
  return BitVector::unpack(in.raw(n), static_cast<std::size_t>(dims[0]));
}

template <typename T>
Bytes serialize(const T& value) {
  ByteWriter w;
  write(w, value);
  return std::move(w).take();
}

}  // namespace freemark

#endif  // FREEMARK_NUMERIC_HPP

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "freemark/numeric.hpp"
#include "freemark/sha256.hpp"

namespace freemark {
namespace {

// Reference values below were evaluated with 40-digit arithmetic.
TEST(Sigmoid, MatchesHighPrecisionReference) {
  EXPECT_NEAR(sigmoid(2.0), 0.88079707797788244406, 2.3e-16);
  EXPECT_NEAR(sigmoid(-30.0), 9.3576229688392989538e-14, 1e-27);
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
}

TEST(Softplus, MatchesHighPrecisionReference) {
  EXPECT_NEAR(softplus(1.0), 1.313261687518222834, 1e-15);
  EXPECT_NEAR(softplus(-40.0), 4.2483542552915889863e-18, 1e-30);
  EXPECT_NEAR(softplus(40.0), 40.0, 1e-12);
  EXPECT_TRUE(std::isfinite(softplus(1000.0)));
}

TEST(Delta, ZeroMapsToOne) {
  EXPECT_EQ(delta(0.0), 1);
  EXPECT_EQ(delta(-0.0), 1);
  EXPECT_EQ(delta(1e-300), 1);
  EXPECT_EQ(delta(-1e-300), 0);
  EXPECT_EQ(delta(RealVector{-1.0, 0.0, 2.0}), (BitVector{0, 1, 1}));
}

TEST(Delta, AgreesWithSigmoidThreshold) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.gaussian() * 10.0;
    EXPECT_EQ(delta(x), sigmoid(x) >= 0.5 ? 1 : 0) << x;
  }
}

TEST(Matvec, SmallExample) {
  Matrix a{{1, 2}, {3, 4}};
  EXPECT_EQ(matvec(a, RealVector{1, 1}), (RealVector{3, 7}));
  EXPECT_EQ(matvec(Matrix::identity(3), RealVector{5, -6, 7}), (RealVector{5, -6, 7}));
}

TEST(Matvec, RejectsShapeMismatch) {
  Matrix a{{1, 2}, {3, 4}};
  try {
    (void)matvec(a, RealVector{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Axpby, ScalesFirstAndSubtractsSecond) {
  EXPECT_EQ(axpby(2.0, RealVector{1, 2}, RealVector{0.5, 5}), (RealVector{1.5, -1}));
  EXPECT_THROW((void)axpby(1.0, RealVector{1}, RealVector{1, 2}), Error);
}

TEST(Ber, Examples) {
  EXPECT_EQ(ber(BitVector{1, 0, 1, 1}, BitVector{1, 0, 1, 1}), 0.0);
  EXPECT_EQ(ber(BitVector{1, 0, 1, 1}, BitVector{0, 1, 0, 0}), 1.0);
  EXPECT_EQ(ber(BitVector{1, 0, 1, 1}, BitVector{1, 1, 1, 1}), 0.25);
}

TEST(Ber, Errors) {
  try {
    (void)ber(BitVector{1, 0}, BitVector{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  try {
    (void)ber(BitVector{}, BitVector{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

// Every pair of bit patterns of length n, n = 1..N, against a count taken
// from the integer XOR popcount.
void exhaustive_ber(unsigned n) {
  for (std::uint32_t x = 0; x < (1u << n); ++x) {
    BitVector a(n);
    for (unsigned i = 0; i < n; ++i) a.set(i, (x >> i) & 1u);
    for (std::uint32_t y = 0; y < (1u << n); y += (n > 10 ? 37 : 1)) {
      BitVector b(n);
      for (unsigned i = 0; i < n; ++i) b.set(i, (y >> i) & 1u);
      unsigned count = static_cast<unsigned>(__builtin_popcount(x ^ y));
      ASSERT_EQ(hamming(a, b), count);
      ASSERT_EQ(ber(a, b), static_cast<double>(count) / n);
    }
  }
}

TEST(Ber, ExhaustiveAgainstPopcountUpTo10) {
  for (unsigned n = 1; n <= 10; ++n) exhaustive_ber(n);
}

TEST(Ber, StridedAgainstPopcountUpTo16) {
  for (unsigned n = 11; n <= 16; ++n) exhaustive_ber(n);
}

TEST(BerProperties, SymmetricBoundedComplement) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 1 + rng.below(600);
    BitVector a = sample_bits(rng, n), b = sample_bits(rng, n), c = sample_bits(rng, n);
    EXPECT_EQ(ber(a, b), ber(b, a));
    EXPECT_GE(ber(a, b), 0.0);
    EXPECT_LE(ber(a, b), 1.0);
    EXPECT_EQ(ber(a, a), 0.0);
    EXPECT_EQ(ber(a, a.complement()), 1.0);
    EXPECT_LE(hamming(a, c), hamming(a, b) + hamming(b, c));
  }
}

TEST(BitVector, PackIsMsbFirst) {
  BitVector b{1, 0, 0, 0, 0, 0, 0, 1, 1, 1};
  auto packed = b.pack();
  ASSERT_EQ(packed.size(), 2u);
  EXPECT_EQ(packed[0], 0x81);
  EXPECT_EQ(packed[1], 0xC0);
  EXPECT_EQ(BitVector::unpack(packed, 10), b);
}

TEST(BitVector, UnpackRejectsNonzeroPadding) {
  std::vector<std::uint8_t> packed{0xC1};
  EXPECT_THROW((void)BitVector::unpack(packed, 2), Error);
}

TEST(BitVector, RejectsNonBinaryValues) { EXPECT_THROW(BitVector(std::vector<std::uint8_t>{0, 2}), Error); }

TEST(CompensatedSum, RecoversCancelledTerms) {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(compensated_sum(v), 2.0);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(42), d(42);
  for (int i = 0; i < 101; ++i) ASSERT_EQ(c.gaussian(), d.gaussian());
}

TEST(Rng, UsesMt19937_64) {
  // The 10000th output of mt19937_64 seeded with 5489 is fixed by the C++
  // standard.
  Rng r(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = r.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, SplitStreamsDiffer) {
  Rng root(1);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 64; ++s) firsts.insert(root.split(s).next_u64());
  EXPECT_EQ(firsts.size(), 64u);
  EXPECT_EQ(root.split(3).seed(), Rng(1).split(3).seed());
}

TEST(Rng, UniformRange) {
  Rng r(9);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BelowIsUnbiasedOnSmallRange) {
  Rng r(10);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[r.below(6)];
  // chi-square with 5 degrees of freedom; 20.5 is the 0.999 quantile
  double chi = 0.0;
  for (int c : counts) chi += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
  EXPECT_LT(chi, 20.5);
}

TEST(Rng, GaussianMoments) {
  Rng r(12);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.gaussian();
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(13);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(TensorFormat, RoundTrips) {
  Rng r(14);
  Matrix m = sample_gaussian_matrix(r, 3, 5);
  RealVector v = sample_gaussian_vector(r, 7);
  BitVector b = sample_bits(r, 13);
  ByteWriter w;
  write(w, m);
  write(w, v);
  write(w, b);
  ByteReader in(w.bytes());
  EXPECT_EQ(read_matrix(in), m);
  EXPECT_EQ(read_real_vector(in), v);
  EXPECT_EQ(read_bit_vector(in), b);
  EXPECT_TRUE(in.done());
}

TEST(TensorFormat, LittleEndianHeader) {
  auto bytes = serialize(RealVector{1.0});
  ASSERT_EQ(bytes.size(), 4u + 2 + 1 + 1 + 8 + 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FMNC");
  EXPECT_EQ(bytes[4], 1);  // version, low byte first
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[8], 1);  // dim 0 = 1
  EXPECT_EQ(bytes[23], 0x3F);  // 1.0 = 0x3FF0000000000000, top byte last
}

TEST(TensorFormat, RejectsTruncationAndWrongDtype) {
  Rng r(1);
  auto bytes = serialize(sample_gaussian_matrix(r, 4, 4));
  bytes.resize(bytes.size() - 1);
  ByteReader in(bytes);
  EXPECT_THROW((void)read_matrix(in), Error);
  auto bits = serialize(BitVector{1, 0, 1});
  ByteReader in2(bits);
  EXPECT_THROW((void)read_real_vector(in2), Error);
}

TEST(RealVector, RejectsNonFinite) {
  EXPECT_THROW(RealVector(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}), Error);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(to_hex(sha256(std::string_view(""))), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(sha256(std::string_view("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto d = sha256(std::string_view("abc"));
  EXPECT_EQ(digest_from_hex(to_hex(d)), d);
}

}  // namespace
}  // namespace freemark

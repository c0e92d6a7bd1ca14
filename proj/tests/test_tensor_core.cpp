// Copyright 2026 The ATEN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aten/io.hpp"
#include "aten/ops.hpp"
#include "support/oracles.hpp"

namespace aten {
namespace {

using testing::naive_conv2d;
using testing::random_tensor;

TEST(Tensor, DimsAndDataLengthAgree) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(shape_numel(t.dims()), 24);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ContractViolation);
}

TEST(Tensor, BitwiseEqualityDistinguishesShapeAndPayload) {
  Tensor a({1, 2, 2}, {1, 2, 3, 4});
  EXPECT_TRUE(a.bitwise_equal(a.reshaped({4})) == false);
  EXPECT_TRUE(a.bitwise_equal(Tensor({1, 2, 2}, {1, 2, 3, 4})));
  EXPECT_FALSE(a.bitwise_equal(Tensor({1, 2, 2}, {1, 2, 3, 5})));
}

TEST(Conv2d, OnesKernelOnOnesInputCountsNeighbours) {
  const Tensor ones = Tensor::ones({1, 3, 3});
  const Tensor kernel = Tensor::ones({1, 1, 3, 3});
  ConvGeometry g;
  g.pad = 1;
  const Tensor out = conv2d(ones, kernel, nullptr, g);
  const Tensor oracle = naive_conv2d(ones, kernel, nullptr, 1, 1, 1);
  EXPECT_TRUE(out.bitwise_equal(oracle));
  const std::vector<double> expected{4, 6, 4, 6, 9, 6, 4, 6, 4};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(out[i], expected[i]);
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({3, 5, 6}, rng);
  Tensor k({3, 3, 3, 3});
  for (int c = 0; c < 3; ++c) k[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0;
  EXPECT_TRUE(conv2d(x, k, nullptr, ConvGeometry{}).bitwise_equal(x));
}

TEST(Conv2d, ZeroInputZeroBiasGivesZero) {
  std::mt19937_64 rng(2);
  const Tensor w = random_tensor({4, 2, 3, 3}, rng);
  const Tensor b({4});
  const Tensor out = conv2d(Tensor({2, 7, 7}), w, &b, ConvGeometry{});
  EXPECT_EQ(max_abs(out), 0.0);
}

TEST(Conv2d, MatchesNaiveLoopsAcrossGeometries) {
  std::mt19937_64 rng(3);
  for (int stride : {1, 2})
    for (int dilation : {1, 2, 3})
      for (int k : {1, 3}) {
        const Tensor x = random_tensor({3, 9, 8}, rng);
        const Tensor w = random_tensor({2, 3, k, k}, rng);
        const Tensor b = random_tensor({2}, rng);
        ConvGeometry g;
        g.stride = stride;
        g.dilation = dilation;
        const Tensor out = conv2d(x, w, &b, g);
        const Tensor ref = naive_conv2d(x, w, &b, stride, dilation, dilation * (k - 1) / 2);
        ASSERT_EQ(out.dims(), ref.dims());
        EXPECT_LT(max_abs_diff(out, ref), 1e-12) << stride << " " << dilation << " " << k;
      }
}

TEST(Conv2d, OutputExtentFormula) {
  ConvGeometry g;
  g.stride = 2;
  g.pad = 1;
  EXPECT_EQ(conv_output_extent(9, 3, g), 5);
  g.dilation = 2;
  g.pad = 0;
  EXPECT_EQ(conv_output_extent(9, 3, g), 3);
  EXPECT_EQ(conv_output_extent(16, 3, ConvGeometry{}), 16);
}

TEST(Conv2d, RejectsMismatchAndNonFinite) {
  EXPECT_THROW(conv2d(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3}), nullptr, ConvGeometry{}),
               ContractViolation);
  Tensor x({1, 4, 4});
  x[3] = std::nan("");
  EXPECT_THROW(conv2d(x, Tensor({1, 1, 3, 3}), nullptr, ConvGeometry{}), ContractViolation);
}

TEST(BilinearSample, IdentityGridIsExact) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({2, 5, 7}, rng);
  EXPECT_TRUE(bilinear_sample(x, identity_grid(5, 7)).bitwise_equal(x));
}

TEST(BilinearSample, RampShiftedByHalfPixel) {
  Tensor ramp({1, 4, 6});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) ramp.at(0, y, x) = x;
  Tensor coords = identity_grid(4, 6);
  for (int i = 0; i < 24; ++i) coords[i] += 0.5;
  const Tensor out = bilinear_sample(ramp, coords);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_DOUBLE_EQ(out.at(0, y, x), x + 0.5);
}

TEST(BilinearSample, ConstantImageStaysConstant) {
  std::mt19937_64 rng(5);
  const Tensor c = Tensor::full({1, 5, 5}, 0.7);
  const Tensor coords = random_tensor({2, 5, 5}, rng, -3.0, 8.0);
  const Tensor out = bilinear_sample(c, coords);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], 0.7, 1e-15);
}

TEST(BilinearSample, MatchesPointOracleWithClamping) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({2, 6, 5}, rng);
  const Tensor coords = random_tensor({2, 4, 3}, rng, -2.0, 7.0);
  const Tensor out = bilinear_sample(x, coords);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 12; ++i)
      EXPECT_NEAR(out[c * 12 + i], testing::naive_bilinear(x, c, coords[i], coords[12 + i]),
                  1e-12);
}

TEST(BilinearSample, RejectsBadCoords) {
  EXPECT_THROW(bilinear_sample(Tensor({1, 4, 4}), Tensor({3, 4, 4})), ContractViolation);
}

TEST(Activations, ScalarIdentities) {
  EXPECT_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_EQ(aten::tanh(Tensor::scalar(0.0)).item(), 0.0);
  std::mt19937_64 rng(7);
  const Tensor t = random_tensor({2, 3, 3}, rng);
  EXPECT_TRUE(mul(t, Tensor::ones(t.dims())).bitwise_equal(t));
  EXPECT_TRUE(add(t, Tensor::zeros(t.dims())).bitwise_equal(t));
  EXPECT_EQ(max_abs(sub(t, t)), 0.0);
}

TEST(Upsample, FactorOneIsIdentity) {
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor({2, 3, 4}, rng);
  EXPECT_TRUE(upsample_bilinear(x, 1).bitwise_equal(x));
  EXPECT_THROW(upsample_bilinear(x, 0), ContractViolation);
}

TEST(Upsample, ConstantStaysConstant) {
  const Tensor out = upsample_bilinear(Tensor::full({1, 3, 3}, 2.5), 4);
  ASSERT_EQ(out.dims(), (Shape{1, 12, 12}));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out[i], 2.5);
}

TEST(Upsample, TwoByTwoMatchesReferenceResampler) {
  const Tensor x({1, 2, 2}, {0, 1, 2, 3});
  const Tensor out = upsample_bilinear(x, 2);
  const Tensor ref = testing::naive_resize(x, 4, 4);
  EXPECT_LT(max_abs_diff(out, ref), 1e-15);
  // Hand values of the first row: positions -0.25, 0.25, 0.75, 1.25 clamp to [0,1].
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 1), 0.25);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 2), 0.75);
  // The map is x + 2y, so interpolation is exact at (0.25, 0.25).
  EXPECT_DOUBLE_EQ(out.at(0, 1, 1), 0.75);
}

TEST(Resize, MatchesReferenceForArbitrarySizes) {
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor({2, 5, 7}, rng);
  EXPECT_LT(max_abs_diff(resize_bilinear(x, 14, 3), testing::naive_resize(x, 14, 3)), 1e-12);
}

TEST(AvgPool, BlockMeans) {
  const Tensor x({1, 2, 4}, {1, 3, 5, 7, 1, 3, 5, 7});
  const Tensor out = avg_pool(x, 2);
  ASSERT_EQ(out.dims(), (Shape{1, 1, 2}));
  EXPECT_EQ(out[0], 2.0);
  EXPECT_EQ(out[1], 6.0);
}

TEST(Io, T1RoundTripOfFloatValues) {
  const Tensor t({2, 1, 3}, {0.5, -1.25, 3.0, 0.0, 1e-3f, 7.75});
  const Tensor back = decode_t1(encode_t1(t));
  EXPECT_TRUE(back.bitwise_equal(t));
}

TEST(Io, T1RejectsCorruptHeader) {
  std::vector<std::uint8_t> bytes = encode_t1(Tensor({1, 2, 2}));
  bytes[0] = 'X';
  EXPECT_THROW(decode_t1(bytes), DataError);
  bytes = encode_t1(Tensor({1, 2, 2}));
  bytes.pop_back();
  EXPECT_THROW(decode_t1(bytes), DataError);
}

TEST(Io, PgmRoundTrip) {
  testing::TempDir dir("pgm");
  LabelMap m(3, 5);
  for (std::size_t i = 0; i < m.size(); ++i) m.pixels[i] = static_cast<std::uint8_t>(i * 17);
  write_pgm(dir.path() / "m.pgm", m);
  EXPECT_EQ(read_pgm(dir.path() / "m.pgm"), m);
  EXPECT_THROW(read_pgm(dir.path() / "missing.pgm"), DataError);
}

}  // namespace
}  // namespace aten

#include "pdiff/random.hpp"

#include <gtest/gtest.h>

namespace pdiff {
namespace {

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(PhiloxTest, KnownAnswerZero) {
  const Philox4x32 gen(0u, 0u);
  const Philox4x32::Block out = gen({0u, 0u, 0u, 0u});
  EXPECT_EQ(out, (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(PhiloxTest, KnownAnswerAllOnes) {
  const Philox4x32 gen(0xffffffffu, 0xffffffffu);
  const Philox4x32::Block out = gen({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(PhiloxTest, KnownAnswerPiDigits) {
  const Philox4x32 gen(0xa4093822u, 0x299f31d0u);
  const Philox4x32::Block out = gen({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  EXPECT_EQ(out, (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(UniformStreamTest, ReproducibleAndInRange) {
  UniformStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double va = a.next(), vb = b.next(), vc = c.next();
    EXPECT_EQ(va, vb);
    EXPECT_GE(va, 0.0);
    EXPECT_LT(va, 1.0);
    differs = differs || va != vc;
  }
  EXPECT_TRUE(differs);
}

TEST(UniformStreamTest, StartOffsetSkipsWholeCounters) {
  UniformStream full(9, 0), skipped(9, 0, 5);
  for (int i = 0; i < 10; ++i) full.next();
  for (int i = 0; i < 10; ++i) EXPECT_EQ(full.next(), skipped.next());
}

TEST(UniformStreamTest, MeanIsNearOneHalf) {
  UniformStream s(1, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += s.next();
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

}  // namespace
}  // namespace pdiff

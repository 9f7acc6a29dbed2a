#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "svext/rng.hpp"

namespace {

using svext::Philox;
using svext::RngSeed;
using svext::Stream;

TEST(Philox, SameSeedSameSequence) {
  Philox a(RngSeed{42, 7}), b(RngSeed{42, 7});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Philox, StreamsAndMastersDiffer) {
  Philox a(RngSeed{42, 7}), b(RngSeed{42, 8}), c(RngSeed{43, 7});
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    same_ab += x == y;
    same_ac += x == z;
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(Philox, PositionSkipsAhead) {
  Philox seq(RngSeed{1, 2});
  for (int i = 0; i < 10; ++i) seq();  // 5 blocks of two words
  Philox jumped(RngSeed{1, 2}, 5);
  EXPECT_EQ(seq(), jumped());
}

TEST(Substream, DistinctChildren) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t k = 0; k < 10000; ++k) ids.insert(svext::substream(RngSeed{0, 3}, k).stream_id);
  EXPECT_EQ(ids.size(), 10000u);
  EXPECT_EQ(svext::substream(RngSeed{9, 3}, 4).master_seed, 9u);
}

TEST(Stream, UniformIsOpenUnitInterval) {
  Stream s(RngSeed{5, 0});
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Stream, GammaMeanMatchesShape) {
  for (double shape : {0.4, 1.0, 2.5}) {
    Stream s(RngSeed{6, 0});
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += s.gamma(shape);
    EXPECT_NEAR(sum / n, shape, 5.0 * std::sqrt(shape / n)) << "shape " << shape;
  }
}

}  // namespace

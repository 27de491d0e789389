#include "pdiff/verify.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pdiff {
namespace {

const std::vector<std::string> kXY = {"x1", "x2"};

SemiAlgebraicSet Disk(double r2) {
  return SemiAlgebraicSet({parse_polynomial(std::to_string(r2) + " - x1^2 - x2^2", kXY)});
}

Box Square(double h) { return Box{Eigen::Vector2d(-h, -h), Eigen::Vector2d(h, h)}; }

TEST(SampleSetTest, PointsLieInSetAndAreDeterministic) {
  const SemiAlgebraicSet b = Disk(0.25);
  const auto s = sample_set(b, Square(0.5), 500, 9);
  const auto t = sample_set(b, Square(0.5), 500, 9);
  ASSERT_EQ(s.size(), 500u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_TRUE(contains(b, s[i]));
    EXPECT_EQ(s[i], t[i]);
  }
  EXPECT_NE(sample_set(b, Square(0.5), 1, 10)[0], s[0]);
}

TEST(SampleSetTest, ThrowsWhenSetMissesBox) {
  const SemiAlgebraicSet far({parse_polynomial("0.01 - (x1 - 5)^2 - x2^2", kXY)});
  EXPECT_THROW(sample_set(far, Square(1.0), 10, 1), std::runtime_error);
}

TEST(BruteForceTest, DiskCases) {
  const SemiAlgebraicSet a = Disk(4.0);
  const auto z = sample_set(Disk(0.25), Square(0.5), 1000, 1);
  EXPECT_TRUE(brute_force_pdiff_membership(a, Eigen::Vector2d(1.4, 0.0), z));
  EXPECT_FALSE(brute_force_pdiff_membership(a, Eigen::Vector2d(1.6, 0.0), z));
  EXPECT_FALSE(brute_force_pdiff_membership(a, Eigen::Vector2d(2.5, 0.0), z));
}

TEST(BruteForceTest, BowtieNeckIsNotInTheDifference) {
  const SemiAlgebraicSet bowtie({parse_polynomial("0.1 - x1^4 - x2^4 + 10*x1^2 - x2^2", kXY)});
  const auto z = sample_set(Disk(1.0), Square(1.0), 1000, 1);
  EXPECT_TRUE(contains(bowtie, Eigen::Vector2d(0.0, 0.0)));
  EXPECT_FALSE(brute_force_pdiff_membership(bowtie, Eigen::Vector2d(0.0, 0.0), z));
}

class VerifyDiskTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new ProblemSpec(testing_util::LoadSpec("disk.json"));
    result_ = new PdiffResult(compute_pdiff(*spec_));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete spec_;
  }
  static ProblemSpec* spec_;
  static PdiffResult* result_;
};

ProblemSpec* VerifyDiskTest::spec_ = nullptr;
PdiffResult* VerifyDiskTest::result_ = nullptr;

TEST_F(VerifyDiskTest, SoundAndTight) {
  ASSERT_TRUE(result_->sound);
  const VerificationReport r = verify_result(result_->c_polys, *spec_, default_verification_options(2));
  EXPECT_EQ(r.n_grid, 160000);
  EXPECT_EQ(r.n_z_samples, 1000);
  EXPECT_EQ(r.soundness_violations, 0);
  EXPECT_EQ(r.n_c_not_brute, 0);
  EXPECT_GE(r.area_ratio, 0.95);
  EXPECT_LE(r.area_ratio, 1.0);
  EXPECT_NEAR(r.conservatism, 1.0 - r.area_ratio, 1e-12);
  // Finitely many z make the brute-force set slightly larger than the
  // radius-1.5 disk.
  EXPECT_NEAR(r.area_brute, M_PI * 2.25, 0.1);
  EXPECT_GE(r.worst_margin, -r.sound_slack);
}

TEST_F(VerifyDiskTest, CorruptedCIsFlagged) {
  std::vector<Polynomiald> bad = result_->c_polys;
  bad[0] += Polynomiald::Constant(2, 0.5);
  VerificationOptions vo = default_verification_options(2);
  vo.resolution = {200};
  const VerificationReport r = verify_result(bad, *spec_, vo);
  EXPECT_GT(r.soundness_violations, 0);
  EXPECT_GT(r.n_c_not_brute, 0);
  EXPECT_LT(r.worst_margin, 0.0);
}

TEST_F(VerifyDiskTest, SameSeedIsDeterministic) {
  VerificationOptions vo = default_verification_options(2, 5);
  vo.resolution = {120};
  vo.n_z = 300;
  const VerificationReport a = verify_result(result_->c_polys, *spec_, vo);
  const VerificationReport b = verify_result(result_->c_polys, *spec_, vo);
  EXPECT_EQ(a.n_in_c, b.n_in_c);
  EXPECT_EQ(a.n_in_brute, b.n_in_brute);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.seed, 5u);
}

TEST(VerifyTest, EmptyCHasNoViolations) {
  const ProblemSpec spec = testing_util::LoadSpec("disk.json");
  VerificationOptions vo = default_verification_options(2);
  vo.resolution = {50};
  const VerificationReport r = verify_result({Polynomiald::Constant(2, -1.0)}, spec, vo);
  EXPECT_EQ(r.n_in_c, 0);
  EXPECT_EQ(r.soundness_violations, 0);
  EXPECT_DOUBLE_EQ(r.conservatism, 1.0);
  EXPECT_TRUE(std::isinf(r.worst_margin));
}

TEST(VerifyTest, HigherDegreeIsNoWorse) {
  ProblemSpec spec = testing_util::LoadSpec("disk.json");
  VerificationOptions vo = default_verification_options(2);
  vo.resolution = {200};
  vo.n_z = 400;
  const auto weights = box_integral_weights(spec.region, monomial_basis(2, 6));
  double prev_conservatism = 2.0, prev_objective = -std::numeric_limits<double>::infinity();
  for (int d : {2, 4, 6}) {
    spec.deg_c = d;
    const PdiffResult r = compute_pdiff(spec);
    ASSERT_TRUE(r.sound) << "deg_c " << d;
    const double objective = weights.apply(r.c_polys[0]);
    const VerificationReport v = verify_result(r.c_polys, spec, vo);
    EXPECT_EQ(v.soundness_violations, 0);
    EXPECT_GE(objective, prev_objective - 1e-6 * std::abs(objective)) << "deg_c " << d;
    EXPECT_LE(v.conservatism, prev_conservatism + 1e-9) << "deg_c " << d;
    prev_objective = objective;
    prev_conservatism = v.conservatism;
  }
}

TEST(VerifyTest, DefaultOptionsByDimension) {
  const VerificationOptions two = default_verification_options(2), three = default_verification_options(3);
  EXPECT_EQ(two.resolution, std::vector<int>{400});
  EXPECT_EQ(two.n_z, 1000);
  EXPECT_EQ(three.resolution, std::vector<int>{60});
  EXPECT_EQ(three.n_z, 200);
}

}  // namespace
}  // namespace pdiff

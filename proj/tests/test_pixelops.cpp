#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "mdm/error.hpp"
#include "mdm/pixelops.hpp"
#include "support.hpp"

using namespace mdm;

namespace {

struct OpCounts {
  int squarings = 0;
  int multiplies = 0;
};

struct Counted {
  double v;
  OpCounts* ops;
  friend Counted operator*(const Counted& a, const Counted& b) {
    if (&a == &b) {
      ++a.ops->squarings;
    } else {
      ++a.ops->multiplies;
    }
    return {a.v * b.v, a.ops};
  }
};

double block_mean_oracle(const GrayImage& img, std::size_t m, std::size_t ox, std::size_t oy) {
  long double s = 0.0L;
  for (std::size_t y = oy * m; y < (oy + 1) * m; ++y) {
    for (std::size_t x = ox * m; x < (ox + 1) * m; ++x) s += img.at(x, y);
  }
  return static_cast<double>(s / (m * m));
}

}  // namespace

TEST_CASE("downsample_factor") {
  CHECK(downsample_factor(384, 512).value() == 2);
  CHECK(downsample_factor(1080, 1920).value() == 2);
  CHECK(downsample_factor(2160, 3840).value() == 4);
  CHECK(downsample_factor(1, 1).value() == 2);
  // 768/512 = 1.5 rounds half away from zero.
  CHECK(downsample_factor(768, 4000).value() == 2);
  CHECK(downsample_factor(1280, 4000).value() == 3);  // 2.5 -> 3
  CHECK_THROWS_AS(DownsampleFactor(1), Error);
}

TEST_CASE("downsample block means") {
  GrayImage checker(2, 2, {0, 1, 1, 0});
  auto one = downsample(checker, DownsampleFactor(2));
  CHECK(one.width() == 1);
  CHECK(one.height() == 1);
  CHECK(one.pixels()[0] == 0.5);

  GrayImage flat(4, 4, std::vector<double>(16, 0.3));
  auto half = downsample(flat, DownsampleFactor(2));
  CHECK(half.width() == 2);
  for (double v : half.pixels()) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

  std::vector<double> ramp(25);
  for (std::size_t i = 0; i < 25; ++i) ramp[i] = i / 24.0;
  GrayImage r5(5, 5, ramp);
  auto r2 = downsample(r5, DownsampleFactor(2));
  REQUIRE(r2.width() == 2);
  REQUIRE(r2.height() == 2);
  for (std::size_t y = 0; y < 2; ++y) {
    for (std::size_t x = 0; x < 2; ++x) {
      CHECK(r2.at(x, y) == doctest::Approx(block_mean_oracle(r5, 2, x, y)).epsilon(1e-15));
    }
  }

  GrayImage thin(5, 1, {0, 0, 0, 0, 0});
  try {
    downsample(thin, DownsampleFactor(2));
    FAIL("expected DegenerateOutput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateOutput);
  }
}

TEST_CASE("downsample matches nested-loop oracle on random images and factors") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t w = 3 + rng() % 40, h = 3 + rng() % 40;
    std::size_t m = 2 + rng() % 3;
    if (w < m || h < m) continue;
    auto img = test::random_image(rng, w, h);
    auto out = downsample(img, DownsampleFactor(static_cast<int>(m)));
    REQUIRE(out.width() == w / m);
    REQUIRE(out.height() == h / m);
    for (std::size_t y = 0; y < out.height(); ++y)
      for (std::size_t x = 0; x < out.width(); ++x)
        CHECK(std::abs(out.at(x, y) - block_mean_oracle(img, m, x, y)) <= 1e-15);
    for (double v : out.pixels()) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("downsample of all-white stays exactly 1") {
  GrayImage white(9, 9, std::vector<double>(81, 1.0));
  auto reduced = downsample(white, DownsampleFactor(3));
  for (double v : reduced.pixels()) CHECK(v == 1.0);
}

TEST_CASE("complement") {
  CHECK(complement(GrayImage(1, 1, {0.0})).pixels()[0] == 1.0);
  std::mt19937_64 rng(3);
  auto img = test::random_image(rng, 17, 9);
  // 1 - x rounds for x < 0.5, so the involution holds to one rounding in general
  // and exactly on dyadic intensities.
  auto twice = complement(complement(img));
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(std::abs(twice.pixels()[i] - img.pixels()[i]) <= std::numeric_limits<double>::epsilon() / 2);
  std::vector<double> dyadic(256);
  for (std::size_t i = 0; i < 256; ++i) dyadic[i] = i / 256.0;
  GrayImage d(16, 16, dyadic);
  CHECK(complement(complement(d)) == d);

  long double m = 0, mc = 0;
  auto c = complement(img);
  for (double v : img.pixels()) m += v;
  for (double v : c.pixels()) mc += v;
  CHECK(std::abs(double(mc / c.size()) - (1.0 - double(m / img.size()))) <= 1e-12);
}

TEST_CASE("downsample commutes with complement") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto img = test::random_image(rng, 20 + trial, 13 + trial);
    auto a = complement(downsample(img, DownsampleFactor(2)));
    auto b = downsample(complement(img), DownsampleFactor(2));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.pixels()[i] - b.pixels()[i]) <= 1e-12);
  }
}

TEST_CASE("fast_pow values") {
  CHECK(fast_pow(2.0, 10) == 1024.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    double x = u(rng);
    CHECK(fast_pow(x, 1) == x);
    unsigned k = 2 + static_cast<unsigned>(rng() % 127);
    const double naive = static_cast<double>(test::naive_pow(x, static_cast<int>(k)));
    if (naive < std::numeric_limits<double>::min()) continue;  // subnormal results
    const double ulp = std::nextafter(naive, 2.0) - naive;
    // Each squaring doubles the relative error carried so far, so the error
    // grows linearly in k: 4 ulp holds below k = 8, k ulp bounds the rest.
    const double allowed = std::max(4.0, static_cast<double>(k));
    CHECK(std::abs(fast_pow(x, k) - naive) <= allowed * ulp);
  }
}

TEST_CASE("fast_pow operation count") {
  for (unsigned k = 1; k <= 200; ++k) {
    OpCounts ops;
    Counted x{1.0, &ops};
    (void)fast_pow(x, k);
    CHECK(ops.squarings == std::bit_width(k) - 1);
    CHECK(ops.multiplies == std::popcount(k) - 1);
  }
}

TEST_CASE("power_law") {
  std::mt19937_64 rng(2);
  auto img = test::random_image(rng, 6, 4);
  CHECK(power_law(img, 1) == img);
  CHECK(power_law(GrayImage(1, 1, {1.0}), 37).pixels()[0] == 1.0);
  CHECK(power_law(GrayImage(1, 1, {0.5}), 8).pixels()[0] == 0.00390625);
  CHECK_THROWS_AS(power_law(img, 0), Error);

  // Monotone: sorted input stays sorted after the transform.
  for (int q : {2, 3, 8, 16}) {
    auto t = power_law(img, q);
    for (std::size_t i = 0; i < img.size(); ++i)
      for (std::size_t j = 0; j < img.size(); ++j)
        if (img.pixels()[i] <= img.pixels()[j]) CHECK(t.pixels()[i] <= t.pixels()[j]);
  }
}

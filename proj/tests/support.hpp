#pragma once

// Test-only helpers: random fixtures and naive oracles that deliberately do not
// reuse any library code path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mdm/image.hpp"

namespace mdm::test {

inline std::filesystem::path data_dir() { return MDM_TEST_DATA_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mdm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline GrayImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> px(w * h);
  for (auto& v : px) v = u(rng);
  return GrayImage(w, h, std::move(px));
}

// Random 8-bit-representable image.
inline GrayImage random_levels_image(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<double> px(w * h);
  for (auto& v : px) v = u(rng) / 255.0;
  return GrayImage(w, h, std::move(px));
}

inline long double naive_pow(long double x, int k) {
  long double r = 1.0L;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Direct-summation deviation in extended precision, no rescaling.
inline long double oracle_deviation(const std::vector<long double>& v, int rho) {
  long double mean = 0.0L;
  for (auto x : v) mean += x;
  mean /= static_cast<long double>(v.size());
  long double acc = 0.0L;
  for (auto x : v) acc += naive_pow(std::fabs(x - mean), rho);
  acc /= static_cast<long double>(v.size());
  if (acc == 0.0L) return 0.0L;
  return std::pow(acc, 1.0L / rho);
}

inline long double oracle_mdm(const GrayImage& img, int rho, int q, bool complemented = false) {
  std::vector<long double> t;
  t.reserve(img.size());
  for (double x : img.pixels()) {
    long double v = complemented ? 1.0L - static_cast<long double>(x) : x;
    t.push_back(naive_pow(v, q));
  }
  return std::pow(oracle_deviation(t, rho), 0.25L);
}

inline double oracle_entropy(const GrayImage& img) {
  std::map<long, std::size_t> counts;
  for (double x : img.pixels()) ++counts[std::lround(x * 255.0)];
  long double h = 0.0L;
  const long double n = static_cast<long double>(img.size());
  for (auto [level, c] : counts) {
    long double p = c / n;
    h -= p * std::log2(p);
  }
  return static_cast<double>(h);
}

inline double population_sd(std::span<const double> v) {
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  return static_cast<double>(std::sqrt(ss / v.size()));
}

inline double mean_abs_deviation(std::span<const double> v) {
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= v.size();
  long double s = 0.0L;
  for (double x : v) s += std::fabs(x - mean);
  return static_cast<double>(s / v.size());
}

inline double relative_error(double got, long double want) {
  if (want == 0.0L) return std::fabs(got);
  return static_cast<double>(std::fabs((static_cast<long double>(got) - want) / want));
}

}  // namespace mdm::test

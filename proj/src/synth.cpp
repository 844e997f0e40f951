#include "mdm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <cstdio>
#include <random>

#include "mdm/error.hpp"
#include "mdm/parallel.hpp"

namespace mdm {

namespace {

std::string kind_name(DistortionKind k) {
  switch (k) {
    case DistortionKind::GammaTransfer:
      return "gamma";
    case DistortionKind::MeanShift:
      return "meanshift";
    case DistortionKind::Other:
      break;
  }
  throw Error(Errc::InvalidArgument, "synth only generates gamma and meanshift");
}

constexpr double kSourceSpread = 0.44;

}  // namespace

DistortionSpec DistortionSpec::gamma(double g) {
  if (!(g > 0.0) || !std::isfinite(g)) throw Error(Errc::InvalidArgument, "gamma exponent must be > 0");
  return {DistortionKind::GammaTransfer, g};
}

DistortionSpec DistortionSpec::mean_shift(double delta) {
  if (!(delta >= -1.0 && delta <= 1.0)) throw Error(Errc::InvalidArgument, "mean shift must be in [-1,1]");
  return {DistortionKind::MeanShift, delta};
}

double DistortionSpec::severity() const {
  return kind == DistortionKind::GammaTransfer ? std::abs(std::log(param)) : std::abs(param);
}

GrayImage apply_distortion(const GrayImage& img, const DistortionSpec& spec) {
  std::vector<double> out(img.pixels().begin(), img.pixels().end());
  if (spec.kind == DistortionKind::GammaTransfer) {
    if (spec.param != 1.0) {
      for (auto& v : out) v = std::pow(v, spec.param);
    }
  } else if (spec.kind == DistortionKind::MeanShift) {
    for (auto& v : out) v = std::clamp(v + spec.param, 0.0, 1.0);
  } else {
    throw Error(Errc::InvalidArgument, "unknown distortion kind");
  }
  return GrayImage(img.width(), img.height(), std::move(out), GrayImage::Unchecked{});
}

double pseudo_mos(double severity) {
  if (!(severity >= 0.0)) throw Error(Errc::InvalidArgument, "severity must be >= 0");
  return 1.0 + 8.0 / (1.0 + severity);
}

GrayImage procedural_source(std::uint64_t seed, std::size_t w, std::size_t h) {
  if (w == 0 || h == 0) throw Error(Errc::ZeroDimension, "source image needs nonzero size");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  struct Wave {
    double fx, fy, phase;
  };
  std::vector<Wave> waves(8);
  for (auto& wv : waves) wv = {1.0 + 5.0 * u(rng), 1.0 + 5.0 * u(rng), two_pi * u(rng)};
  std::normal_distribution<double> grain(0.0, 0.03);

  std::vector<double> px(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = static_cast<double>(x) / static_cast<double>(w);
      const double sy = static_cast<double>(y) / static_cast<double>(h);
      double s = 0.0;
      for (const auto& wv : waves) s += std::sin(two_pi * (wv.fx * sx + wv.fy * sy) + wv.phase);
      px[y * w + x] = s;
    }
  }
  for (auto& v : px) v += grain(rng);

  // Rank-remap onto one shared mid-gray distribution: contents differ in
  // layout only, not in histogram.
  std::vector<std::size_t> order(px.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return px[i] < px[j]; });
  const auto n = static_cast<double>(px.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double t = 2.0 * (static_cast<double>(r) + 0.5) / n - 1.0;
    px[order[r]] = 0.5 + kSourceSpread * std::copysign(std::pow(std::abs(t), 1.8), t);
  }
  return GrayImage(w, h, std::move(px));
}

DatasetManifest make_dataset(std::span<const SourceImage> sources, std::span<const KindLevels> plan,
                             std::uint64_t seed, const std::filesystem::path& out_dir, int jobs) {
  if (sources.size() < 2) throw Error(Errc::TooFewContents, "need at least 2 source images");
  if (plan.empty()) throw Error(Errc::InvalidArgument, "no distortion kinds given");
  std::size_t per_source = 0;
  for (const auto& kl : plan) {
    kind_name(kl.kind);
    if (kl.levels.empty()) throw Error(Errc::InvalidArgument, "severity levels must be nonempty");
    for (double s : kl.levels) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw Error(Errc::InvalidArgument, "severity levels must be >= 0");
    }
    per_source += kl.levels.size();
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.base_dir = out_dir;
  m.records.resize(sources.size() * per_source);
  std::vector<DistortionSpec> specs(m.records.size());

  std::size_t idx = 0;
  for (std::size_t si = 0; si < sources.size(); ++si) {
    for (std::size_t ki = 0; ki < plan.size(); ++ki) {
      const auto kind = plan[ki].kind;
      for (std::size_t li = 0; li < plan[ki].levels.size(); ++li, ++idx) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(si), static_cast<std::uint32_t>(ki),
                          static_cast<std::uint32_t>(li)};
        std::mt19937_64 rng(seq);
        const double sign = (rng() & 1u) ? 1.0 : -1.0;
        const double s = plan[ki].levels[li];
        specs[idx] = kind == DistortionKind::GammaTransfer ? DistortionSpec::gamma(std::exp(sign * s))
                                                           : DistortionSpec::mean_shift(std::clamp(sign * s, -1.0, 1.0));
        auto& r = m.records[idx];
        r.image_path = "content_" + sources[si].content_id + "_" + kind_name(kind) + "_" + std::to_string(li) + ".pgm";
        r.mos = pseudo_mos(s);
        r.distortion = kind == DistortionKind::GammaTransfer ? Distortion::gamma() : Distortion::mean_shift();
        r.content_id = sources[si].content_id;
        r.severity = s;
      }
    }
  }

  parallel_for(m.records.size(), jobs, [&](std::size_t i) {
    save_pgm(apply_distortion(sources[i / per_source].image, specs[i]), out_dir / m.records[i].image_path);
  });
  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

DatasetManifest make_dataset(std::span<const SourceImage> sources, std::span<const DistortionKind> kinds,
                             std::span<const double> levels, std::uint64_t seed, const std::filesystem::path& out_dir,
                             int jobs) {
  std::vector<KindLevels> plan;
  for (auto k : kinds) plan.push_back({k, {levels.begin(), levels.end()}});
  return make_dataset(sources, plan, seed, out_dir, jobs);
}

DatasetManifest make_synthetic_dataset(const SynthOptions& o, const std::filesystem::path& out_dir) {
  if (o.contents < 2) throw Error(Errc::TooFewContents, "need at least 2 contents");
  std::vector<SourceImage> sources;
  for (std::size_t i = 0; i < o.contents; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%03zu", i);
    sources.push_back({id, procedural_source(o.seed * 1000003u + i, o.width, o.height)});
  }
  const KindLevels plan[] = {{DistortionKind::GammaTransfer, o.gamma_levels},
                             {DistortionKind::MeanShift, o.shift_levels}};
  return make_dataset(sources, plan, o.seed, out_dir, o.jobs);
}

}  // namespace mdm

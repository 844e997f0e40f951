#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <ostream>
#include <random>
#include <regex>

#include "mdm/error.hpp"
#include "mdm/eval.hpp"
#include "mdm/features.hpp"
#include "mdm/imgio.hpp"
#include "mdm/model_selection.hpp"
#include "mdm/stats.hpp"
#include "mdm/svm.hpp"
#include "mdm/synth.hpp"
#include "mdm/text.hpp"

namespace mdm::cli {

namespace {

struct FeatureFlags {
  int rho = 64;
  int q = 8;
  bool no_downsample = false;

  MdmParams params() const {
    MdmParams p{rho, q};
    p.validate();
    return p;
  }
};

void add_feature_flags(CLI::App* cmd, FeatureFlags& f) {
  cmd->add_option("--rho", f.rho, "Minkowski order")->capture_default_str();
  cmd->add_option("--q", f.q, "power-law exponent")->capture_default_str();
  cmd->add_flag("--no-downsample", f.no_downsample, "skip block-mean downsampling");
}

struct SplitFlags {
  double train_frac = 0.8;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
};

void add_split_flags(CLI::App* cmd, SplitFlags& s) {
  cmd->add_option("--train-frac", s.train_frac, "fraction of contents used for training")->capture_default_str();
  cmd->add_option("--reps", s.reps, "number of random splits")->capture_default_str();
  cmd->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
}

struct GridFlags {
  std::vector<double> c = SvrGrid{}.c;
  std::vector<double> gamma = SvrGrid{}.gamma;
  std::vector<double> epsilon = SvrGrid{}.epsilon;
  int folds = 5;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g, bool with_epsilon) {
  cmd->add_option("--c", g.c, "box constraint grid, comma separated")->delimiter(',')->capture_default_str();
  cmd->add_option("--gamma", g.gamma, "RBF gamma grid, comma separated")->delimiter(',')->capture_default_str();
  if (with_epsilon) {
    cmd->add_option("--epsilon", g.epsilon, "SVR tube grid on [0,1]-scaled MOS")->delimiter(',')->capture_default_str();
  }
  cmd->add_option("--folds", g.folds, "content-disjoint CV folds")->capture_default_str();
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::IoError:
    case Errc::UnsupportedFormat:
    case Errc::CorruptFile:
    case Errc::ZeroDimension:
      return kIo;
    case Errc::InvalidArgument:
    case Errc::BadSizeSpec:
      return kUsage;
    default:
      return kData;
  }
}

struct Sample {
  std::vector<FeatureVector> x;
  std::vector<double> mos;
  std::vector<std::string> labels;
  std::vector<std::string> ids;
};

Sample load_samples(const DatasetManifest& m, const FeatureFlags& ff, int jobs) {
  Sample s;
  s.x = extract_features(m, ff.params(), !ff.no_downsample, jobs);
  for (const auto& r : m.records) {
    s.mos.push_back(r.mos);
    s.labels.push_back(r.distortion.label());
    s.ids.push_back(r.content_id);
  }
  return s;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& spec) {
  static const std::regex re(R"(^\s*(\d{1,6})[xX](\d{1,6})\s*$)");
  std::smatch mt;
  if (!std::regex_match(spec, mt, re)) throw Error(Errc::BadSizeSpec, "size must look like <W>x<H>: '" + spec + "'");
  const auto w = std::stoul(mt[1]);
  const auto h = std::stoul(mt[2]);
  if (w == 0 || h == 0) throw Error(Errc::BadSizeSpec, "size must be nonzero: '" + spec + "'");
  return {w, h};
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(Errc::IoError, "cannot write " + path.string());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrast-distortion image quality metric: features, SVR/SVC models and evaluation."};
  app.name(args.empty() ? "mdm" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.footer("File formats: see FORMATS.md. Exit codes: 0 ok, 1 usage, 2 I/O, 3 model/data.");

  int jobs = 1;

  // score
  auto* score = app.add_subcommand("score", "print the three features of one image (and a model prediction)");
  std::string score_image, score_model;
  FeatureFlags score_ff;
  score->add_option("image", score_image, "PGM or PNG image")->required();
  add_feature_flags(score, score_ff);
  score->add_option("--model", score_model, "model JSON from train or classify-train");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "features for every manifest record as CSV");
  std::string ex_manifest, ex_out;
  FeatureFlags ex_ff;
  extract_cmd->add_option("--manifest", ex_manifest, "dataset manifest CSV")->required();
  extract_cmd->add_option("--out", ex_out, "write CSV here instead of stdout");
  extract_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  add_feature_flags(extract_cmd, ex_ff);

  // train / classify-train
  auto* train = app.add_subcommand("train", "fit an SVR quality model with content-disjoint grid search");
  auto* ctrain = app.add_subcommand("classify-train", "fit an SVC distortion classifier with grid search");
  std::string tr_manifest, tr_out;
  FeatureFlags tr_ff;
  GridFlags tr_grid;
  std::uint64_t tr_seed = 0;
  for (auto* cmd : {train, ctrain}) {
    cmd->add_option("--manifest", tr_manifest, "dataset manifest CSV")->required();
    cmd->add_option("--out", tr_out, "model JSON to write")->required();
    cmd->add_option("--seed", tr_seed, "fold assignment seed")->capture_default_str();
    cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    add_feature_flags(cmd, tr_ff);
    add_grid_flags(cmd, tr_grid, cmd == train);
  }

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "label images with a classifier model");
  std::string cl_model, cl_manifest;
  std::vector<std::string> cl_images;
  FeatureFlags cl_ff;
  classify_cmd->add_option("--model", cl_model, "model JSON from classify-train")->required();
  classify_cmd->add_option("images", cl_images, "images to label");
  classify_cmd->add_option("--manifest", cl_manifest, "label every record of a manifest");
  classify_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  add_feature_flags(classify_cmd, cl_ff);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "repeated content-disjoint train/test evaluation");
  std::string ev_manifest, ev_dump, ev_task = "regression";
  FeatureFlags ev_ff;
  SplitFlags ev_split;
  GridFlags ev_grid;
  eval_cmd->add_option("--manifest", ev_manifest, "dataset manifest CSV")->required();
  eval_cmd->add_option("--task", ev_task, "regression (SRC/PCC) or classification (accuracy)")
      ->check(CLI::IsMember({"regression", "classification"}))
      ->capture_default_str();
  eval_cmd->add_option("--dump-reps", ev_dump, "write per-repetition CSV here");
  eval_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  add_feature_flags(eval_cmd, ev_ff);
  add_split_flags(eval_cmd, ev_split);
  add_grid_flags(eval_cmd, ev_grid, true);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run eval over a (rho, q) grid");
  std::string sw_manifest;
  std::vector<int> sw_rho{2, 4, 8, 16, 32, 64, 128}, sw_q{2, 4, 8, 16};
  bool sw_no_ds = false;
  SplitFlags sw_split;
  GridFlags sw_grid;
  sweep_cmd->add_option("--manifest", sw_manifest, "dataset manifest CSV")->required();
  sweep_cmd->add_option("--rho-grid", sw_rho, "Minkowski orders")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--q-grid", sw_q, "power-law exponents")->delimiter(',')->capture_default_str();
  sweep_cmd->add_flag("--no-downsample", sw_no_ds, "skip block-mean downsampling");
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  add_split_flags(sweep_cmd, sw_split);
  add_grid_flags(sweep_cmd, sw_grid, true);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic gamma / mean-shift dataset");
  std::string sy_out;
  SynthOptions sy;
  synth_cmd->add_option("--out", sy_out, "output directory")->required();
  synth_cmd->add_option("--contents", sy.contents, "number of source contents")->capture_default_str();
  synth_cmd->add_option("--width", sy.width, "image width")->capture_default_str();
  synth_cmd->add_option("--height", sy.height, "image height")->capture_default_str();
  synth_cmd->add_option("--gamma-levels", sy.gamma_levels, "gamma severities |ln g|")
      ->delimiter(',')
      ->capture_default_str();
  synth_cmd->add_option("--shift-levels", sy.shift_levels, "mean-shift severities |delta|")
      ->delimiter(',')
      ->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "time feature extraction on random images");
  std::vector<std::string> bn_sizes{"384x512", "2160x3840"};
  std::size_t bn_reps = 5;
  std::uint64_t bn_seed = 0;
  bool bn_no_ds = false;
  bench->add_option("--sizes", bn_sizes, "image sizes as <W>x<H>")->delimiter(',')->capture_default_str();
  bench->add_option("--reps", bn_reps, "timed runs per size")->capture_default_str();
  bench->add_option("--seed", bn_seed, "RNG seed for the random images")->capture_default_str();
  bench->add_flag("--no-downsample", bn_no_ds, "skip block-mean downsampling");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("mdm");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (score->parsed()) {
      const auto f = extract(load_gray(score_image), score_ff.params(), !score_ff.no_downsample);
      std::string head = "mdm_d,mdm_dc,entropy";
      std::string row = format_real(f.mdm_d) + "," + format_real(f.mdm_dc) + "," + format_real(f.entropy_bits);
      if (!score_model.empty()) {
        const auto model = load_model(score_model);
        if (model.task == Task::Regression) {
          head += ",quality";
          row += "," + format_real(predict(model, f));
        } else {
          head += ",class";
          row += "," + classify(model, f);
        }
      }
      out << head << "\n" << row << "\n";
    } else if (extract_cmd->parsed()) {
      const auto m = parse_manifest(ex_manifest);
      const auto feats = extract_features(m, ex_ff.params(), !ex_ff.no_downsample, jobs);
      std::ostringstream csv;
      csv << "path,content_id,distortion,mos,mdm_d,mdm_dc,entropy\n";
      for (std::size_t i = 0; i < feats.size(); ++i) {
        const auto& r = m.records[i];
        csv << r.image_path << ',' << r.content_id << ',' << r.distortion.label() << ',' << format_real(r.mos) << ','
            << format_real(feats[i].mdm_d) << ',' << format_real(feats[i].mdm_dc) << ','
            << format_real(feats[i].entropy_bits) << '\n';
      }
      if (ex_out.empty()) {
        out << csv.str();
      } else {
        write_text(ex_out, csv.str());
      }
    } else if (train->parsed() || ctrain->parsed()) {
      const auto m = parse_manifest(tr_manifest);
      const auto s = load_samples(m, tr_ff, jobs);
      SearchOptions so;
      so.folds = tr_grid.folds;
      so.seed = tr_seed;
      so.jobs = jobs;
      if (train->parsed()) {
        const auto r = grid_search_svr(s.x, s.mos, s.ids, {tr_grid.c, tr_grid.gamma, tr_grid.epsilon}, so);
        save_model(train_svr(s.x, s.mos, r.best), tr_out);
        out << "c,gamma,epsilon,cv_src\n"
            << format_real(r.best.c) << ',' << format_real(r.best.gamma) << ',' << format_real(r.best.epsilon) << ','
            << format_real(r.best_score) << '\n';
      } else {
        const auto r = grid_search_svc(s.x, s.labels, s.ids, {tr_grid.c, tr_grid.gamma}, so);
        save_model(train_svc(s.x, s.labels, r.best), tr_out);
        out << "c,gamma,cv_accuracy\n"
            << format_real(r.best.c) << ',' << format_real(r.best.gamma) << ',' << format_real(r.best_score) << '\n';
      }
    } else if (classify_cmd->parsed()) {
      const auto model = load_model(cl_model);
      if (model.task != Task::Classification) throw Error(Errc::TaskMismatch, "model is not a classifier");
      std::vector<std::string> paths = cl_images;
      std::vector<FeatureVector> feats;
      for (const auto& p : cl_images) feats.push_back(extract(load_gray(p), cl_ff.params(), !cl_ff.no_downsample));
      if (!cl_manifest.empty()) {
        const auto m = parse_manifest(cl_manifest);
        const auto mf = extract_features(m, cl_ff.params(), !cl_ff.no_downsample, jobs);
        for (std::size_t i = 0; i < mf.size(); ++i) {
          paths.push_back(m.records[i].image_path);
          feats.push_back(mf[i]);
        }
      }
      if (paths.empty()) throw Error(Errc::InvalidArgument, "give images or --manifest");
      out << "path,label\n";
      for (std::size_t i = 0; i < paths.size(); ++i) out << paths[i] << ',' << classify(model, feats[i]) << '\n';
    } else if (eval_cmd->parsed()) {
      const auto m = parse_manifest(ev_manifest);
      ProtocolOptions po;
      po.svr_grid = {ev_grid.c, ev_grid.gamma, ev_grid.epsilon};
      po.svc_grid = {ev_grid.c, ev_grid.gamma};
      po.folds = ev_grid.folds;
      po.jobs = jobs;
      po.use_downsample = !ev_ff.no_downsample;
      const SplitSpec split{ev_split.train_frac, ev_split.reps, ev_split.seed};
      const auto feats = extract_features(m, ev_ff.params(), po.use_downsample, jobs);
      const bool cls = ev_task == "classification";
      const auto report = cls ? run_classification_protocol(m, feats, split, po) : run_protocol(m, feats, split, po);
      write_report_csv(out, report, cls);
      if (!ev_dump.empty()) {
        std::ostringstream reps;
        write_reps_csv(reps, report, cls);
        write_text(ev_dump, reps.str());
      }
      if (report.dropped > 0) err << report.dropped << " degenerate repetitions dropped\n";
    } else if (sweep_cmd->parsed()) {
      const auto m = parse_manifest(sw_manifest);
      ProtocolOptions po;
      po.svr_grid = {sw_grid.c, sw_grid.gamma, sw_grid.epsilon};
      po.folds = sw_grid.folds;
      po.jobs = jobs;
      po.use_downsample = !sw_no_ds;
      const auto rows = sweep(m, sw_rho, sw_q, SplitSpec{sw_split.train_frac, sw_split.reps, sw_split.seed}, po);
      write_sweep_csv(out, rows);
    } else if (synth_cmd->parsed()) {
      sy.jobs = jobs;
      make_synthetic_dataset(sy, sy_out);
      out << (std::filesystem::path(sy_out) / "manifest.csv").string() << "\n";
    } else if (bench->parsed()) {
      if (bn_reps < 1) throw Error(Errc::InvalidArgument, "--reps must be >= 1");
      std::vector<std::pair<std::size_t, std::size_t>> sizes;
      for (const auto& s : bn_sizes) sizes.push_back(parse_size(s));
      out << "size,width,height,reps,median_ms\n";
      std::mt19937_64 rng(bn_seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        const auto [w, h] = sizes[k];
        std::vector<double> px(w * h);
        for (auto& v : px) v = u(rng);
        const GrayImage img(w, h, std::move(px));
        std::vector<double> ms;
        double sink = 0.0;
        for (std::size_t r = 0; r < bn_reps; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          sink += extract(img, MdmParams{}, !bn_no_ds).mdm_d;
          const auto t1 = std::chrono::steady_clock::now();
          ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        if (!std::isfinite(sink)) err << "non-finite feature in bench\n";
        out << w << 'x' << h << ',' << w << ',' << h << ',' << bn_reps << ',' << format_real(median(ms)) << '\n';
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (e.row()) err << " (row " << *e.row() << ")";
    err << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}

}  // namespace mdm::cli

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mdm/error.hpp"
#include "mdm/eval.hpp"
#include "mdm/features.hpp"
#include "mdm/imgio.hpp"
#include "mdm/pixelops.hpp"
#include "mdm/stats.hpp"
#include "mdm/svm.hpp"
#include "mdm/synth.hpp"

namespace py = pybind11;
using namespace mdm;

namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const Array2& a) {
  if (a.ndim() != 2) throw Error(Errc::InvalidArgument, "image must be a 2-D array (height, width)");
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  return GrayImage(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const GrayImage& img) {
  py::array_t<double> a({img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), a.mutable_data());
  return a;
}

std::vector<FeatureVector> to_features(const Array2& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw Error(Errc::InvalidArgument, "features must have shape (n, 3)");
  std::vector<FeatureVector> out(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {r(i, 0), r(i, 1), r(i, 2)};
  return out;
}

py::tuple as_tuple(const FeatureVector& f) { return py::make_tuple(f.mdm_d, f.mdm_dc, f.entropy_bits); }

FeatureVector from_row(const std::vector<double>& v) {
  if (v.size() != 3) throw Error(Errc::InvalidArgument, "a feature vector has 3 entries");
  return {v[0], v[1], v[2]};
}

std::string report_csv(const ProtocolReport& r, bool cls) {
  std::ostringstream s;
  write_report_csv(s, r, cls);
  return s.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Contrast-distortion image quality metric";

  static py::handle error_type = py::exception<Error>(m, "MdmError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = error_type(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  m.def("load_gray", [](const std::filesystem::path& p) { return to_array(load_gray(p)); }, py::arg("path"),
        "Decode a PGM or PNG file to a float64 (height, width) array on [0,1].");
  m.def("save_pgm", [](const Array2& img, const std::filesystem::path& p) { save_pgm(to_image(img), p); },
        py::arg("image"), py::arg("path"));

  m.def("minkowski_deviation",
        [](const py::array_t<double, py::array::forcecast>& v, int rho) {
          std::vector<double> x(v.data(), v.data() + v.size());
          return minkowski_deviation(x, rho);
        },
        py::arg("values"), py::arg("rho"));
  m.def("mdm_feature", [](const Array2& img, int rho, int q) { return mdm_feature(to_image(img), {rho, q}); },
        py::arg("image"), py::arg("rho") = 64, py::arg("q") = 8);
  m.def("entropy", [](const Array2& img) { return entropy(to_image(img)); }, py::arg("image"));
  m.def("downsample_factor", [](std::size_t h, std::size_t w) { return downsample_factor(h, w).value(); },
        py::arg("height"), py::arg("width"));
  m.def("downsample", [](const Array2& img, int f) { return to_array(downsample(to_image(img), DownsampleFactor(f))); },
        py::arg("image"), py::arg("factor"));
  m.def("extract",
        [](const Array2& img, int rho, int q, bool ds) {
          MdmParams p{rho, q};
          p.validate();
          return as_tuple(extract(to_image(img), p, ds));
        },
        py::arg("image"), py::arg("rho") = 64, py::arg("q") = 8, py::arg("downsample") = true,
        "(mdm_d, mdm_dc, entropy) for a 2-D array on [0,1].");
  m.def("score",
        [](const std::filesystem::path& path, int rho, int q, bool ds) {
          MdmParams p{rho, q};
          p.validate();
          return as_tuple(extract(load_gray(path), p, ds));
        },
        py::arg("path"), py::arg("rho") = 64, py::arg("q") = 8, py::arg("downsample") = true);

  py::class_<SvModel>(m, "Model")
      .def_property_readonly("task",
                             [](const SvModel& s) { return s.task == Task::Regression ? "regression" : "classification"; })
      .def_readonly("c", &SvModel::c)
      .def_readonly("gamma", &SvModel::gamma)
      .def_readonly("epsilon", &SvModel::epsilon)
      .def_readonly("labels", &SvModel::labels)
      .def("predict", [](const SvModel& s, const std::vector<double>& f) { return predict(s, from_row(f)); })
      .def("classify", [](const SvModel& s, const std::vector<double>& f) { return classify(s, from_row(f)); })
      .def("to_json", &model_to_json)
      .def_static("from_json", [](const std::string& t) { return model_from_json(t); })
      .def("save", [](const SvModel& s, const std::filesystem::path& p) { save_model(s, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); });

  m.def("train_svr",
        [](const Array2& x, const std::vector<double>& y, double c, double gamma, double epsilon) {
          return train_svr(to_features(x), y, SvrHyper{c, gamma, epsilon});
        },
        py::arg("features"), py::arg("targets"), py::arg("c") = 1.0, py::arg("gamma") = 1.0,
        py::arg("epsilon") = 0.1);
  m.def("train_svc",
        [](const Array2& x, const std::vector<std::string>& labels, double c, double gamma) {
          return train_svc(to_features(x), labels, SvcHyper{c, gamma});
        },
        py::arg("features"), py::arg("labels"), py::arg("c") = 1.0, py::arg("gamma") = 1.0);

  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); });
  m.def("pearson", [](const std::vector<double>& a, const std::vector<double>& b) { return pearson(a, b); });
  m.def("logistic5", [](const std::array<double, 5>& beta, double x) { return logistic5(beta, x); });
  m.def(
      "evaluate",
      [](const std::vector<double>& scores, const std::vector<double>& mos) {
        const auto r = evaluate(scores, mos);
        py::dict d;
        d["src"] = r.src;
        d["pcc"] = r.pcc;
        d["beta"] = r.fit.beta;
        d["rmse"] = r.fit.rmse;
        d["residuals"] = r.residuals;
        return d;
      },
      py::arg("scores"), py::arg("mos"), "SRC, post-logistic PCC and the fitted logistic.");
  m.def(
      "f_test",
      [](const std::vector<double>& a, const std::vector<double>& b, double alpha) {
        const auto r = f_test(a, b, alpha);
        const char* name = r.outcome == FTestOutcome::SuperiorA   ? "a"
                           : r.outcome == FTestOutcome::SuperiorB ? "b"
                                                                  : "indistinguishable";
        return py::make_tuple(name, r.f_ratio, r.critical);
      },
      py::arg("resid_a"), py::arg("resid_b"), py::arg("alpha") = 0.05);

  m.def(
      "make_synthetic_dataset",
      [](const std::filesystem::path& out, std::size_t contents, std::size_t width, std::size_t height,
         std::uint64_t seed, int jobs) {
        SynthOptions o;
        o.contents = contents;
        o.width = width;
        o.height = height;
        o.seed = seed;
        o.jobs = jobs;
        make_synthetic_dataset(o, out);
        return out / "manifest.csv";
      },
      py::arg("out_dir"), py::arg("contents") = 20, py::arg("width") = 128, py::arg("height") = 128,
      py::arg("seed") = 0, py::arg("jobs") = 1, "Writes images plus manifest.csv; returns the manifest path.");

  m.def(
      "run_protocol",
      [](const std::filesystem::path& manifest, const std::string& task, double train_frac, std::size_t reps,
         std::uint64_t seed, std::vector<double> c, std::vector<double> gamma, std::vector<double> epsilon, int folds,
         int jobs, int rho, int q) {
        const auto mf = parse_manifest(manifest);
        ProtocolOptions po;
        po.svr_grid = {c, gamma, epsilon};
        po.svc_grid = {c, gamma};
        po.folds = folds;
        po.jobs = jobs;
        MdmParams p{rho, q};
        p.validate();
        const SplitSpec split{train_frac, reps, seed};
        const auto feats = extract_features(mf, p, true, jobs);
        if (task == "classification") return report_csv(run_classification_protocol(mf, feats, split, po), true);
        if (task != "regression") throw Error(Errc::InvalidArgument, "task must be regression or classification");
        return report_csv(run_protocol(mf, feats, split, po), false);
      },
      py::arg("manifest"), py::arg("task") = "regression", py::arg("train_frac") = 0.8, py::arg("reps") = 1000,
      py::arg("seed") = 0, py::arg("c") = SvrGrid{}.c, py::arg("gamma") = SvrGrid{}.gamma,
      py::arg("epsilon") = SvrGrid{}.epsilon, py::arg("folds") = 5, py::arg("jobs") = 1, py::arg("rho") = 64,
      py::arg("q") = 8, "Repeated content-disjoint evaluation; returns the report CSV text.");
}

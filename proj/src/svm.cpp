#include "mdm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mdm/error.hpp"
#include "mdm/text.hpp"

namespace mdm {

using nlohmann::json;

namespace {

void check_hyper(double c, double gamma) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(Errc::InvalidArgument, "c must be > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(Errc::InvalidArgument, "gamma must be > 0");
}

void check_features(std::span<const FeatureVector> features) {
  for (const auto& f : features) {
    for (double v : f.as_array()) {
      if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "non-finite feature value");
    }
  }
}

// Permutation putting samples in a canonical order so training does not depend
// on the order they were given in.
template <class Key>
std::vector<std::size_t> canonical_order(std::span<const FeatureVector> features, std::span<const Key> keys) {
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto fa = features[a].as_array();
    const auto fb = features[b].as_array();
    if (fa != fb) return fa < fb;
    return keys[a] < keys[b];
  });
  return order;
}

std::vector<double> gram(const std::vector<FeaturePoint>& pts, double gamma) {
  const std::size_t n = pts.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double v = rbf_kernel(pts[i], pts[j], gamma);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return k;
}

// Binary C-SVC on points already scaled; y is +1 / -1.
KernelMachine train_binary(const std::vector<FeaturePoint>& pts, const std::vector<std::int8_t>& y, double c,
                           double gamma, const SolverOptions& options) {
  DualProblem pr;
  pr.n_rows = pts.size();
  pr.kernel = gram(pts, gamma);
  pr.row.resize(pts.size());
  std::iota(pr.row.begin(), pr.row.end(), 0);
  pr.y = y;
  pr.p.assign(pts.size(), -1.0);
  pr.c = c;
  const DualSolution sol = solve_dual(pr, options);

  KernelMachine m;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      m.support_vectors.push_back(pts[i]);
      m.coefs.push_back(y[i] * sol.alpha[i]);
    }
  }
  m.bias = -sol.rho;
  return m;
}

const std::string& task_name(Task t) {
  static const std::string reg = "regression", cls = "classification";
  return t == Task::Regression ? reg : cls;
}

json real(double v) { return format_real(v); }

json reals(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(real(x));
  return a;
}

json machine_json(const KernelMachine& m) {
  json svs = json::array();
  for (const auto& sv : m.support_vectors) svs.push_back(reals(sv));
  return json{{"svs", svs}, {"coefs", reals(m.coefs)}, {"bias", real(m.bias)}};
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::CorruptModel, "corrupt model: " + what); }

double get_real(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) corrupt(std::string("missing ") + key);
  const json& v = j.at(key);
  if (!v.is_string()) corrupt(std::string(key) + " is not a decimal string");
  const auto r = parse_real(v.get<std::string>());
  if (!r) corrupt(std::string("bad number in ") + key);
  return *r;
}

std::vector<double> get_reals(const json& v, const char* what) {
  if (!v.is_array()) corrupt(std::string(what) + " is not an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_string()) corrupt(std::string(what) + " holds a non-string");
    const auto r = parse_real(x.get<std::string>());
    if (!r) corrupt(std::string("bad number in ") + what);
    out.push_back(*r);
  }
  return out;
}

FeaturePoint get_point(const json& v, const char* what) {
  const auto r = get_reals(v, what);
  if (r.size() != 3) corrupt(std::string(what) + " must have 3 entries");
  return {r[0], r[1], r[2]};
}

KernelMachine machine_from(const json& j) {
  KernelMachine m;
  if (!j.contains("svs") || !j.at("svs").is_array()) corrupt("missing svs");
  for (const auto& sv : j.at("svs")) m.support_vectors.push_back(get_point(sv, "svs"));
  if (!j.contains("coefs")) corrupt("missing coefs");
  m.coefs = get_reals(j.at("coefs"), "coefs");
  if (m.coefs.size() != m.support_vectors.size()) corrupt("svs and coefs differ in length");
  m.bias = get_real(j, "bias");
  return m;
}

}  // namespace

Scaler Scaler::fit(std::span<const FeatureVector> features) {
  if (features.empty()) throw Error(Errc::TooFewSamples, "cannot fit a scaler on no samples");
  Scaler s;
  s.min = features.front().as_array();
  s.max = s.min;
  for (const auto& f : features) {
    const auto a = f.as_array();
    for (std::size_t k = 0; k < 3; ++k) {
      s.min[k] = std::min(s.min[k], a[k]);
      s.max[k] = std::max(s.max[k], a[k]);
    }
  }
  return s;
}

FeaturePoint Scaler::transform(const FeatureVector& f) const {
  const auto a = f.as_array();
  FeaturePoint out{};
  for (std::size_t k = 0; k < 3; ++k) {
    const double range = max[k] - min[k];
    out[k] = range > 0.0 ? (a[k] - min[k]) / range : 0.0;
  }
  return out;
}

double rbf_kernel(const FeaturePoint& a, const FeaturePoint& b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < 3; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d2);
}

double KernelMachine::decision(const FeaturePoint& scaled, double gamma) const {
  double s = 0.0;
  for (std::size_t i = 0; i < support_vectors.size(); ++i) s += coefs[i] * rbf_kernel(support_vectors[i], scaled, gamma);
  return s + bias;
}

SvModel train_svr(std::span<const FeatureVector> features, std::span<const double> targets, const SvrHyper& hyper,
                  const SolverOptions& options) {
  if (features.size() != targets.size()) throw Error(Errc::InvalidArgument, "features and targets differ in length");
  if (features.size() < 2) throw Error(Errc::TooFewSamples, "SVR needs at least 2 samples");
  check_hyper(hyper.c, hyper.gamma);
  if (!(hyper.epsilon >= 0.0) || !std::isfinite(hyper.epsilon)) {
    throw Error(Errc::InvalidArgument, "epsilon must be >= 0");
  }
  check_features(features);
  for (double t : targets) {
    if (!std::isfinite(t)) throw Error(Errc::InvalidArgument, "non-finite target");
  }

  SvModel m;
  m.task = Task::Regression;
  m.gamma = hyper.gamma;
  m.c = hyper.c;
  m.epsilon = hyper.epsilon;
  m.scaler = Scaler::fit(features);
  const auto [tmin, tmax] = std::minmax_element(targets.begin(), targets.end());
  m.target_min = *tmin;
  m.target_max = *tmax;

  if (m.target_max == m.target_min) {
    m.degenerate = true;
    m.machines.push_back(KernelMachine{});
    return m;
  }

  const auto order = canonical_order(features, targets);
  const std::size_t l = order.size();
  const double range = m.target_max - m.target_min;
  std::vector<FeaturePoint> pts(l);
  std::vector<double> z(l);
  for (std::size_t i = 0; i < l; ++i) {
    pts[i] = m.scaler.transform(features[order[i]]);
    z[i] = (targets[order[i]] - m.target_min) / range;
  }

  // Variables 0..l-1 are alpha, l..2l-1 are alpha*.
  DualProblem pr;
  pr.n_rows = l;
  pr.kernel = gram(pts, hyper.gamma);
  pr.row.resize(2 * l);
  pr.y.resize(2 * l);
  pr.p.resize(2 * l);
  for (std::size_t i = 0; i < l; ++i) {
    pr.row[i] = i;
    pr.row[i + l] = i;
    pr.y[i] = 1;
    pr.y[i + l] = -1;
    pr.p[i] = hyper.epsilon - z[i];
    pr.p[i + l] = hyper.epsilon + z[i];
  }
  pr.c = hyper.c;
  const DualSolution sol = solve_dual(pr, options);

  KernelMachine km;
  for (std::size_t i = 0; i < l; ++i) {
    const double coef = sol.alpha[i] - sol.alpha[i + l];
    if (coef != 0.0) {
      km.support_vectors.push_back(pts[i]);
      km.coefs.push_back(coef);
    }
  }
  km.bias = -sol.rho;
  m.machines.push_back(std::move(km));
  return m;
}

SvModel train_svc(std::span<const FeatureVector> features, std::span<const std::string> labels, const SvcHyper& hyper,
                  const SolverOptions& options) {
  if (features.size() != labels.size()) throw Error(Errc::InvalidArgument, "features and labels differ in length");
  check_hyper(hyper.c, hyper.gamma);
  check_features(features);

  SvModel m;
  m.task = Task::Classification;
  m.gamma = hyper.gamma;
  m.c = hyper.c;
  m.labels.assign(labels.begin(), labels.end());
  std::sort(m.labels.begin(), m.labels.end());
  m.labels.erase(std::unique(m.labels.begin(), m.labels.end()), m.labels.end());
  if (m.labels.size() < 2) throw Error(Errc::SingleClass, "classification needs at least 2 distinct labels");
  m.scaler = Scaler::fit(features);

  const auto order = canonical_order(features, labels);
  std::vector<FeaturePoint> pts(order.size());
  std::vector<std::size_t> cls(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    pts[i] = m.scaler.transform(features[order[i]]);
    cls[i] = static_cast<std::size_t>(
        std::lower_bound(m.labels.begin(), m.labels.end(), labels[order[i]]) - m.labels.begin());
  }

  for (std::size_t a = 0; a < m.labels.size(); ++a) {
    for (std::size_t b = a + 1; b < m.labels.size(); ++b) {
      std::vector<FeaturePoint> sub;
      std::vector<std::int8_t> y;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (cls[i] == a || cls[i] == b) {
          sub.push_back(pts[i]);
          y.push_back(cls[i] == a ? 1 : -1);
        }
      }
      KernelMachine km = train_binary(sub, y, hyper.c, hyper.gamma, options);
      km.positive = a;
      km.negative = b;
      m.machines.push_back(std::move(km));
    }
  }
  return m;
}

double predict(const SvModel& model, const FeatureVector& f) {
  if (model.task != Task::Regression) throw Error(Errc::TaskMismatch, "predict called on a classifier");
  if (model.degenerate) return model.target_min;
  if (model.machines.size() != 1) throw Error(Errc::CorruptModel, "regression model needs exactly one machine");
  const double z = model.machines.front().decision(model.scaler.transform(f), model.gamma);
  return model.target_min + z * (model.target_max - model.target_min);
}

std::string classify(const SvModel& model, const FeatureVector& f) {
  if (model.task != Task::Classification) throw Error(Errc::TaskMismatch, "classify called on a regressor");
  const FeaturePoint x = model.scaler.transform(f);
  std::vector<std::size_t> votes(model.labels.size(), 0);
  for (const auto& km : model.machines) {
    ++votes[km.decision(x, model.gamma) > 0.0 ? km.positive : km.negative];
  }
  // max_element keeps the first maximum, so vote ties go to the lower label.
  return model.labels[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
}

std::string model_to_json(const SvModel& m) {
  json j;
  j["version"] = kModelSchemaVersion;
  j["task"] = task_name(m.task);
  j["kernel"] = json{{"type", "rbf"}, {"gamma", real(m.gamma)}};
  j["c"] = real(m.c);
  j["epsilon"] = real(m.epsilon);
  j["scaler"] = json{{"min", reals(m.scaler.min)}, {"max", reals(m.scaler.max)}};
  j["labels"] = m.labels;
  if (m.task == Task::Regression) {
    j["target"] = json{{"min", real(m.target_min)}, {"max", real(m.target_max)}};
    j["degenerate"] = m.degenerate;
  }
  if (m.machines.size() == 1) {
    const json mj = machine_json(m.machines.front());
    for (const auto& [k, v] : mj.items()) j[k] = v;
  } else {
    json pairs = json::array();
    for (const auto& km : m.machines) {
      json pj = machine_json(km);
      pj["positive"] = km.positive;
      pj["negative"] = km.negative;
      pairs.push_back(std::move(pj));
    }
    j["pairs"] = std::move(pairs);
  }
  return j.dump(2) + "\n";
}

SvModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  if (!j.is_object() || !j.contains("version")) corrupt("missing version");
  if (!j.at("version").is_number_integer()) corrupt("version is not an integer");
  if (j.at("version").get<long long>() != kModelSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch,
                "model schema version " + j.at("version").dump() + ", expected " + std::to_string(kModelSchemaVersion));
  }

  SvModel m;
  try {
    const std::string task = j.at("task").get<std::string>();
    if (task == "regression") {
      m.task = Task::Regression;
    } else if (task == "classification") {
      m.task = Task::Classification;
    } else {
      corrupt("unknown task " + task);
    }
    const json& kernel = j.at("kernel");
    if (kernel.at("type").get<std::string>() != "rbf") corrupt("only the rbf kernel is supported");
    m.gamma = get_real(kernel, "gamma");
    m.c = get_real(j, "c");
    m.epsilon = get_real(j, "epsilon");
    m.scaler.min = get_point(j.at("scaler").at("min"), "scaler.min");
    m.scaler.max = get_point(j.at("scaler").at("max"), "scaler.max");
    m.labels = j.at("labels").get<std::vector<std::string>>();

    if (m.task == Task::Regression) {
      const json& t = j.at("target");
      m.target_min = get_real(t, "min");
      m.target_max = get_real(t, "max");
      m.degenerate = j.at("degenerate").get<bool>();
    }
    if (j.contains("pairs")) {
      for (const auto& pj : j.at("pairs")) {
        KernelMachine km = machine_from(pj);
        km.positive = pj.at("positive").get<std::size_t>();
        km.negative = pj.at("negative").get<std::size_t>();
        m.machines.push_back(std::move(km));
      }
    } else {
      m.machines.push_back(machine_from(j));
    }
  } catch (const json::exception& e) {
    corrupt(e.what());
  }

  if (!(m.gamma > 0.0) || !(m.c > 0.0)) corrupt("gamma and c must be > 0");
  if (m.task == Task::Classification) {
    const std::size_t k = m.labels.size();
    if (k < 2 || m.machines.size() != k * (k - 1) / 2) corrupt("label count does not match machine count");
    for (const auto& km : m.machines) {
      if (km.positive >= k || km.negative >= k) corrupt("label index out of range");
    }
  } else if (m.machines.size() != 1) {
    corrupt("regression model needs exactly one machine");
  }
  return m;
}

void save_model(const SvModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

SvModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace mdm

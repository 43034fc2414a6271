#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrem/lrem.hpp"

namespace fs = std::filesystem;
using namespace lrem;

namespace {

enum Exit : int {
  kOk = 0,
  kInput = 1,
  kFactorization = 2,
  kCircleSingular = 3,
  kNoSolution = 4,
  kUnitCircleZero = 5,
};

// A failure carrying its exit code and stderr reason code.
struct Failure {
  int code;
  std::string reason;
  std::string detail;
};

struct Options {
  std::string model_path;
  std::string builtin;
  std::vector<std::string> params;
  std::string out;
  std::uint64_t seed = 0;
  bool json = false;
  Tolerances tol;

  int horizon = 20;
  std::string regularizer;
  bool regularized = false;

  std::string family;
  std::vector<std::string> grid;
  std::string truth;
  int finite_sample = 0;
  bool no_polish = false;

  int T = 200;
  int reps = 1;
  int burn_in = 0;
};

std::pair<std::string, double> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected name=value, got '" + text + "'");
  const std::string value = text.substr(eq + 1);
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw std::invalid_argument("malformed number in '" + text + "'");
  return {text.substr(0, eq), v};
}

struct Loaded {
  ModelFile file;
  ParamValues theta;
};

Loaded load(const Options& o) {
  Loaded l;
  if (!o.model_path.empty()) l.file = load_model_file(o.model_path);
  else if (!o.builtin.empty()) {
    l.file.model = builtin::by_name(o.builtin);
    l.file.builtin = o.builtin;
  } else
    throw std::invalid_argument("one of --model or --builtin is required");
  ParamValues given;
  for (const auto& p : o.params) given.push_back(parse_assignment(p));
  l.theta = l.file.model.resolve(given);
  return l;
}

Json theta_json(const ParamValues& theta) {
  Json j = Json::object();
  for (const auto& [k, v] : theta) j[k] = v;
  return j;
}

Json classification_json(const Classification& c) {
  Json j{{"tag", c.tag()}, {"dim", c.dim}, {"kappa", c.kappa}, {"winding", c.winding}};
  if (c.kind == SolutionKind::UnitCircleZero) {
    Json pts = Json::array();
    for (cd z : c.points) pts.push_back(Json::array({z.real(), z.imag()}));
    j["points"] = pts;
    j["coprime"] = c.coprime;
  }
  return j;
}

std::string classification_text(const Classification& c) {
  std::string s = c.tag();
  if (c.kind == SolutionKind::Indeterminate) s += "(" + std::to_string(c.dim) + ")";
  if (c.kind == SolutionKind::UnitCircleZero) s += std::string("(coprime=") + (c.coprime ? "true" : "false") + ")";
  return s;
}

Failure classification_failure(const Classification& c) {
  if (c.kind == SolutionKind::UnitCircleZero) return {kUnitCircleZero, c.tag(), classification_text(c)};
  std::string k;
  for (int v : c.kappa) k += (k.empty() ? "" : ",") + std::to_string(v);
  return {kNoSolution, c.tag(), "negative partial index, kappa=[" + k + "]"};
}

// Writes `content` to DIR/name when --out is set, otherwise to stdout.
void emit(const Options& o, const std::string& name, const std::string& content, bool to_stdout = true) {
  if (!o.out.empty()) write_atomic(fs::path(o.out) / name, content);
  else if (to_stdout) std::cout << content;
}

Json run_header(const std::string& command, const Loaded& l, const Options& o) {
  Json j{{"command", command}, {"model", l.file.builtin ? *l.file.builtin : l.file.model.name}, {"parameters", theta_json(l.theta)}};
  j["tolerances"] = tolerances_json(o.tol);
  return j;
}

RegularizerSpec pick_regularizer(const Options& o, const Loaded& l) {
  if (o.regularizer.empty()) return l.file.regularizer.value_or(RegularizerSpec::identity());
  const std::string& r = o.regularizer;
  if (r == "identity") return RegularizerSpec::identity();
  Json j;
  try {
    if (!r.empty() && r.front() == '@') {
      std::ifstream in(r.substr(1));
      if (!in) throw std::invalid_argument("cannot open regularizer file '" + r.substr(1) + "'");
      j = Json::parse(in);
    } else {
      j = Json::parse(r);
    }
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("--regularizer: malformed JSON: ") + e.what());
  }
  return regularizer_from_json(j, "--regularizer");
}

int cmd_factorize(const Options& o) {
  Loaded l = load(o);
  LaurentMatrix symbol = l.file.model.symbol(l.theta);
  WHFactorization f;
  try {
    f = whf_matrix(symbol, o.tol);
  } catch (const CircleSingularError& e) {
    throw Failure{kCircleSingular, "CircleSingular", e.what()};
  } catch (const UnfactorableError& e) {
    throw Failure{kFactorization, "Unfactorable", e.what()};
  }
  FactorizationReport rep = verify_factorization(symbol, f, o.tol);
  GenericityReport gen = genericity_check(f.kappa);
  Json j = run_header("factorize", l, o);
  j["kappa"] = f.kappa;
  j["residual"] = f.residual_sup;
  j["generic"] = gen.is_generic;
  j["sign_class"] = gen.sign_class;
  j["backend"] = f.backend;
  if (f.section_N > 0) j["section_N"] = f.section_N;
  Json checks = Json::array();
  for (const auto& c : rep.checks) checks.push_back(Json{{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
  j["checks"] = checks;
  j["certified"] = rep.ok();
  if (!o.out.empty()) write_atomic(fs::path(o.out) / "factorize.json", j.dump(2) + "\n");
  if (o.json) std::cout << j.dump(2) << "\n";
  else {
    std::cout << "kappa:";
    for (int k : f.kappa) std::cout << " " << k;
    std::cout << "\nresidual: " << format_double(f.residual_sup) << "\ngeneric: " << (gen.is_generic ? "true" : "false")
              << "\nbackend: " << f.backend << "\ncertified: " << (rep.ok() ? "true" : "false") << "\n";
  }
  if (!rep.ok()) {
    std::string failed;
    for (const auto& c : rep.checks)
      if (!c.pass) failed += (failed.empty() ? "" : ",") + c.name;
    throw Failure{kFactorization, "Uncertified", "failed checks: " + failed};
  }
  return kOk;
}

int cmd_classify(const Options& o) {
  Loaded l = load(o);
  Classification c;
  try {
    c = classify(l.file.model, l.theta, o.tol);
  } catch (const UnfactorableError& e) {
    throw Failure{kFactorization, "Unfactorable", e.what()};
  }
  Json j = run_header("classify", l, o);
  j["classification"] = classification_json(c);
  if (!o.out.empty()) write_atomic(fs::path(o.out) / "classify.json", j.dump(2) + "\n");
  if (o.json) std::cout << j.dump(2) << "\n";
  else std::cout << classification_text(c) << "\n";
  if (!c.solvable()) throw classification_failure(c);
  return kOk;
}

SolutionSet solve_or_fail(const Loaded& l, const Options& o) {
  try {
    return solve(l.file.model, l.theta, o.tol);
  } catch (const ClassificationError& e) {
    throw classification_failure(e.cls);
  } catch (const UnfactorableError& e) {
    throw Failure{kFactorization, "Unfactorable", e.what()};
  }
}

int cmd_solve(const Options& o) {
  if (o.horizon < 0) throw std::invalid_argument("--horizon must be non-negative");
  Loaded l = load(o);
  SolutionSet s = solve_or_fail(l, o);
  const std::string csv = impulse_csv(impulse_responses(s.particular, o.horizon));
  Json j = run_header("solve", l, o);
  j["classification"] = classification_json(s.cls);
  j["horizon"] = o.horizon;
  j["residual"] = solution_residual(s.symbol, s.particular, l.file.model.rhs());
  j["kernel_dimension"] = s.dim;
  Json files = Json::array({"impulse.csv"});
  for (size_t k = 0; k < s.kernel.size(); ++k) {
    const std::string name = "kernel_" + std::to_string(k) + ".csv";
    if (!o.out.empty()) write_atomic(fs::path(o.out) / name, impulse_csv(impulse_responses(s.kernel[k], o.horizon)));
    files.push_back(name);
  }
  if (!o.out.empty()) j["files"] = files;
  if (!o.out.empty()) write_atomic(fs::path(o.out) / "solve.json", j.dump(2) + "\n");
  emit(o, "impulse.csv", csv, !o.json);
  if (o.json) std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_regularize(const Options& o) {
  if (o.horizon < 0) throw std::invalid_argument("--horizon must be non-negative");
  Loaded l = load(o);
  RegularizerSpec reg = pick_regularizer(o, l);
  SolutionSet s = solve_or_fail(l, o);
  RegularizedSolution r = reg.kind == RegularizerSpec::Kind::Identity ? tikhonov_from(s, l.file.model, o.tol)
                                                                     : regularized_from(s, l.file.model, reg, o.tol);
  Json j = run_header("regularize", l, o);
  j["classification"] = classification_json(s.cls);
  j["regularizer"] = regularizer_to_json(reg);
  j["method"] = r.method;
  j["unique"] = r.unique;
  j["min_gram_eigenvalue"] = r.min_gram_eigenvalue;
  j["residual"] = r.residual;
  double worst = 0.0;
  for (cd g : r.gram_residuals) worst = std::max(worst, std::abs(g));
  j["max_gram_residual"] = worst;
  j["horizon"] = o.horizon;
  if (!o.out.empty()) write_atomic(fs::path(o.out) / "regularize.json", j.dump(2) + "\n");
  emit(o, "regularized.csv", impulse_csv(impulse_responses(r.transfer, o.horizon)), !o.json);
  if (o.json) std::cout << j.dump(2) << "\n";
  if (!r.unique) std::cerr << "warning: NonUniqueRegularized: regularizer does not separate the kernel\n";
  return kOk;
}

std::string family_for(const Options& o, const Loaded* l) {
  if (!o.family.empty()) return o.family;
  std::string base = o.builtin;
  if (base.empty() && l && l->file.builtin) base = *l->file.builtin;
  if (base.empty()) throw std::invalid_argument("scan needs --family or a builtin model (cagan or nongeneric)");
  return o.regularized ? base + "-regularized" : base;
}

// Greek spellings of the family parameters.
std::string canonical_name(const std::string& k) {
  if (k == "β") return "beta";
  if (k == "ψ") return "psi";
  if (k == "θ") return "theta";
  if (k == "β0" || k == "β₀") return "beta0";
  if (k == "ψ0" || k == "ψ₀") return "psi0";
  if (k == "θ0" || k == "θ₀") return "theta0";
  return k;
}

// "beta=2,psi=2"; a trailing 0 on a name (beta0) is accepted for the true value.
std::vector<double> parse_truth(const std::string& text, const std::vector<std::string>& names) {
  std::vector<std::optional<double>> v(names.size());
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto [raw, x] = parse_assignment(item);
    const std::string k = canonical_name(raw);
    size_t i = 0;
    for (; i < names.size(); ++i)
      if (names[i] == k || names[i] + "0" == k) break;
    if (i == names.size()) throw std::invalid_argument("--truth: unknown parameter '" + k + "'");
    v[i] = x;
  }
  std::vector<double> out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (!v[i]) throw std::invalid_argument("--truth: missing value for '" + names[i] + "'");
    out.push_back(*v[i]);
  }
  return out;
}

int cmd_scan(const Options& o) {
  std::optional<Loaded> l;
  if (!o.model_path.empty()) l = load(o);
  const std::string name = family_for(o, l ? &*l : nullptr);
  LikelihoodFamily fam = family_by_name(name);
  std::vector<GridAxis> axes;
  for (const auto& g : o.grid) {
    GridAxis a = parse_axis(g);
    a.name = canonical_name(a.name);
    axes.push_back(a);
  }
  // Axes may be given in any order; reorder to the family's parameter order.
  std::vector<GridAxis> ordered;
  for (const auto& p : fam.parameters) {
    auto it = std::find_if(axes.begin(), axes.end(), [&](const GridAxis& a) { return a.name == p; });
    if (it == axes.end()) throw std::invalid_argument("--grid: no axis for parameter '" + p + "'");
    ordered.push_back(*it);
  }
  if (axes.size() != ordered.size()) throw std::invalid_argument("--grid: axis for an unknown parameter");
  if (o.truth.empty()) throw std::invalid_argument("scan requires --truth");
  std::vector<double> truth = parse_truth(o.truth, fam.parameters);
  ScanOptions opt;
  opt.polish = !o.no_polish;
  opt.finite_sample_T = o.finite_sample;
  opt.seed = o.seed;
  LikelihoodSurface s;
  try {
    s = scan(fam, ordered, truth, opt, o.tol);
  } catch (const ClassificationError& e) {
    throw classification_failure(e.cls);
  }
  Json meta = surface_json(s, o.tol);
  if (!o.out.empty()) {
    write_atomic(fs::path(o.out) / "surface.csv", surface_csv(s));
    write_atomic(fs::path(o.out) / "surface.json", meta.dump(2) + "\n");
  }
  if (o.json) std::cout << meta.dump(2) << "\n";
  else if (o.out.empty()) std::cout << surface_csv(s);
  else {
    for (const auto& m : s.minima) {
      std::cout << "minimum";
      for (size_t i = 0; i < m.theta.size(); ++i) std::cout << " " << s.parameters[i] << "=" << format_double(m.theta[i]);
      std::cout << " value=" << format_double(m.value) << "\n";
    }
  }
  return kOk;
}

std::string path_csv(const RealMat& x, std::optional<int> rep) {
  std::ostringstream out;
  if (rep) out << "rep,";
  out << "t";
  for (Index i = 0; i < x.cols(); ++i) out << ",X" << i + 1;
  out << "\n";
  for (Index t = 0; t < x.rows(); ++t) {
    if (rep) out << *rep << ",";
    out << t + 1;
    for (Index i = 0; i < x.cols(); ++i) out << "," << format_double(x(t, i));
    out << "\n";
  }
  return out.str();
}

int cmd_simulate(const Options& o) {
  if (o.T < 1 || o.reps < 1 || o.burn_in < 0) throw std::invalid_argument("need --T >= 1, --reps >= 1, --burn-in >= 0");
  Loaded l = load(o);
  SolutionSet s = solve_or_fail(l, o);
  TransferFunction xi = s.particular;
  std::string which = "particular";
  if (o.regularized || !o.regularizer.empty()) {
    RegularizerSpec reg = pick_regularizer(o, l);
    xi = reg.kind == RegularizerSpec::Kind::Identity ? tikhonov_from(s, l.file.model, o.tol).transfer
                                                    : regularized_from(s, l.file.model, reg, o.tol).transfer;
    which = "regularized";
  }
  SimConfig cfg;
  cfg.T = o.T;
  cfg.seed = o.seed;
  cfg.replications = o.reps;
  cfg.burn_in = o.burn_in;
  std::vector<RealMat> paths = simulate_paths(xi, cfg);
  Json j = run_header("simulate", l, o);
  j["classification"] = classification_json(s.cls);
  j["solution"] = which;
  j["T"] = o.T;
  j["reps"] = o.reps;
  j["burn_in"] = o.burn_in;
  j["seed"] = o.seed;
  j["truncation"] = simulation_truncation(xi, cfg);
  if (!o.out.empty()) {
    for (size_t k = 0; k < paths.size(); ++k) {
      const std::string name = paths.size() == 1 ? "path.csv" : "path_" + std::to_string(k) + ".csv";
      write_atomic(fs::path(o.out) / name, path_csv(paths[k], std::nullopt));
    }
    write_atomic(fs::path(o.out) / "simulate.json", j.dump(2) + "\n");
  }
  if (o.json) std::cout << j.dump(2) << "\n";
  else if (o.out.empty()) {
    if (paths.size() == 1) std::cout << path_csv(paths[0], std::nullopt);
    else
      for (size_t k = 0; k < paths.size(); ++k) {
        std::string block = path_csv(paths[k], static_cast<int>(k));
        std::cout << (k == 0 ? block : block.substr(block.find('\n') + 1));
      }
  }
  return kOk;
}

void add_tolerance_flags(CLI::App& app, Tolerances& t) {
  app.add_option("--tol-drop", t.drop, "Coefficient pruning threshold")->capture_default_str();
  app.add_option("--tol-circle", t.circle, "Distance from |z|=1 treated as on the circle")->capture_default_str();
  app.add_option("--tol-cluster", t.cluster, "Relative root-merging distance")->capture_default_str();
  app.add_option("--tol-factor", t.factor, "Factorization residual certificate")->capture_default_str();
  app.add_option("--tol-pd", t.pd, "Positive-definiteness floor")->capture_default_str();
  app.add_option("--tol-gram", t.gram, "Gram singularity threshold")->capture_default_str();
  app.add_option("--tol-rank", t.rank, "Rank decision threshold")->capture_default_str();
  app.add_option("--tol-series", t.series, "Series tail bound")->capture_default_str();
  app.add_option("--grid-n", t.grid, "Quadrature grid size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--section-start", t.section_start, "First finite-section order")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--section-max", t.section_max, "Largest finite-section order")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solve, regularize and analyse linear rational expectations models"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  auto* model_opt = app.add_option("--model", o.model_path, "Model file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--builtin", o.builtin, "Builtin model: ar1, cagan, mixed, nongeneric")->excludes(model_opt);
  app.add_option("--param", o.params, "Parameter override name=value (repeatable)")->allow_extra_args(false);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_flag("--json", o.json, "Print a JSON report instead of text/CSV");
  add_tolerance_flags(app, o.tol);

  auto* factorize = app.add_subcommand("factorize", "Wiener-Hopf factorization with certificate");
  auto* classify_cmd = app.add_subcommand("classify", "Existence and uniqueness classification");
  auto* solve_cmd = app.add_subcommand("solve", "Particular solution impulse responses and kernel basis");
  auto* regularize = app.add_subcommand("regularize", "Regularized solution impulse responses");
  auto* scan_cmd = app.add_subcommand("scan", "Limiting likelihood surface over a parameter grid");
  auto* simulate = app.add_subcommand("simulate", "Simulate sample paths of a solution");

  for (auto* c : {solve_cmd, regularize}) c->add_option("--horizon", o.horizon, "Last impulse response lag")->capture_default_str();
  for (auto* c : {regularize, simulate})
    c->add_option("--regularizer", o.regularizer, "identity, inline JSON, or @file");
  scan_cmd->add_option("--family", o.family, "cagan, cagan-regularized, nongeneric, nongeneric-regularized");
  scan_cmd->add_option("--grid", o.grid, "Axis name=lo:hi:steps (one per parameter)")->required();
  scan_cmd->add_option("--truth", o.truth, "True parameters name=value,...")->required();
  scan_cmd->add_option("--finite-sample", o.finite_sample, "Also evaluate the exact likelihood of one simulated sample of length T");
  scan_cmd->add_flag("--no-polish", o.no_polish, "Skip local minimum refinement");
  for (auto* c : {scan_cmd, simulate}) c->add_flag("--regularized", o.regularized, "Use the regularized solution");
  simulate->add_option("--T", o.T, "Sample length")->capture_default_str();
  simulate->add_option("--reps", o.reps, "Replications")->capture_default_str();
  simulate->add_option("--burn-in", o.burn_in, "Discarded leading periods")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*factorize) return cmd_factorize(o);
    if (*classify_cmd) return cmd_classify(o);
    if (*solve_cmd) return cmd_solve(o);
    if (*regularize) return cmd_regularize(o);
    if (*scan_cmd) return cmd_scan(o);
    if (*simulate) return cmd_simulate(o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.reason << ": " << f.detail << "\n";
    return f.code;
  } catch (const ClassificationError& e) {
    Failure f = classification_failure(e.cls);
    std::cerr << "error: " << f.reason << ": " << e.what() << "\n";
    return f.code;
  } catch (const CircleSingularError& e) {
    std::cerr << "error: CircleSingular: " << e.what() << "\n";
    return kCircleSingular;
  } catch (const UnfactorableError& e) {
    std::cerr << "error: Unfactorable: " << e.what() << "\n";
    return kFactorization;
  } catch (const std::exception& e) {
    std::cerr << "error: InvalidInput: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}

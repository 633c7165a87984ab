// SPDX-License-Identifier: Apache-2.0
//
// Benchmark CLI for the convex-conjugation toolkit. Every subcommand is
// fully determined by (config, seed) and writes its results plus a manifest
// with content hashes into the output directory.
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "dlt/certificate.hpp"
#include "dlt/convex.hpp"
#include "dlt/entropic.hpp"
#include "dlt/grid.hpp"
#include "dlt/hopf.hpp"
#include "dlt/inverse.hpp"
#include "dlt/net.hpp"
#include "dlt/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dlt;

namespace {

constexpr const char* kVersion = "1.0.0";

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Deterministic view of a payload: wall-clock fields differ across reruns by
// nature, so they are masked before hashing (CSV columns named seconds or
// t_solve; JSON keys named seconds). Everything else must be byte-stable.
void strip_json_seconds(json& j) {
  if (j.is_object()) {
    j.erase("seconds");
    for (auto& [k, v] : j.items()) strip_json_seconds(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_json_seconds(v);
  }
}

std::string stable_view(const std::string& name, const std::string& content) {
  if (name.size() > 5 && name.ends_with(".json")) {
    json j = json::parse(content);
    strip_json_seconds(j);
    return j.dump();
  }
  if (name.size() > 4 && name.ends_with(".csv")) {
    std::istringstream is(content);
    std::string header;
    if (!std::getline(is, header)) return content;
    std::vector<std::size_t> mask;
    {
      std::istringstream hs(header);
      std::string col;
      std::size_t idx = 0;
      while (std::getline(hs, col, ','))
        if (col == "seconds" || col == "t_solve") mask.push_back(idx), ++idx;
        else
          ++idx;
    }
    if (mask.empty()) return content;
    std::ostringstream out;
    out << header << "\n";
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string field;
      std::size_t idx = 0;
      bool first = true;
      while (std::getline(ls, field, ',')) {
        bool masked = false;
        for (std::size_t m : mask) masked = masked || m == idx;
        if (!first) out << ",";
        out << (masked ? "-" : field);
        first = false;
        ++idx;
      }
      out << "\n";
    }
    return out.str();
  }
  return content;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// Collects emitted files and writes the run manifest.
class Run {
 public:
  Run(std::string command, fs::path out_dir, std::uint64_t seed, json config)
      : command_(std::move(command)),
        out_dir_(std::move(out_dir)),
        seed_(seed),
        config_(std::move(config)) {
    fs::create_directories(out_dir_);
  }

  fs::path path(const std::string& name) const { return out_dir_ / name; }

  void emit(const std::string& name, const std::string& content) {
    fs::path p = path(name);
    std::ofstream os(p, std::ios::binary);
    os << content;
    os.close();
    files_.push_back(
        {{"path", name}, {"fnv1a", fnv1a(stable_view(name, content))}});
  }

  void emit_json(const std::string& name, const json& j) {
    emit(name, j.dump(2) + "\n");
  }

  // Registers a file written directly (e.g. checkpoints).
  void track(const std::string& name) {
    files_.push_back(
        {{"path", name},
         {"fnv1a", fnv1a(stable_view(name, read_file(path(name))))}});
  }

  void finish(double seconds) {
    json m{{"command", command_},
           {"seed", seed_},
           {"config_hash", fnv1a(config_.dump())},
           {"version", kVersion},
           {"seconds", seconds},
           {"files", files_}};
    std::ofstream os(path("manifest.json"), std::ios::binary);
    os << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::uint64_t seed_;
  json config_;
  json files_ = json::array();
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConvexFunction load_function(const std::string& name, int dim,
                             std::uint64_t seed, double condition_number) {
  json params{{"seed", seed}};
  if (name == "quadratic-spd") params["condition_number"] = condition_number;
  return make_builtin(name, dim, params);
}

// Dual validation points through the push-forward of the default sampler.
std::vector<Vec> dual_validation_points(const ConvexFunction& f, int n,
                                        std::uint64_t seed) {
  Sampler s = default_primal_sampler(f, seed);
  std::vector<Vec> ys;
  for (int i = 0; i < n; ++i) ys.push_back(f.gradient(s.next()));
  return ys;
}

double grid_rmse_vs_conjugate(const GridField& out, const ConvexFunction& f,
                              const CartesianGrid& dual, int n,
                              std::uint64_t seed) {
  if (!f.has_conjugate()) return -1.0;
  Rng r = Rng(seed).split(0x9a1d);
  double acc = 0.0;
  int used = 0;
  for (int k = 0; k < n; ++k) {
    Vec y(dual.dim());
    for (int i = 0; i < dual.dim(); ++i)
      y[i] = r.uniform(dual.axes[i].front(), dual.axes[i].back());
    double d = interp_eval(out, y) - f.conjugate(y);
    acc += d * d;
    ++used;
  }
  return std::sqrt(acc / used);
}

// --- subcommand payloads ---------------------------------------------------

struct GlobalOpts {
  std::uint64_t seed = 7;
  std::string out = "out";
  int threads = 0;
};

int cmd_transform_grid(const GlobalOpts& g, const std::string& function,
                       int dim, double lo, double hi, int n, int dual_n,
                       const std::string& method) {
  json cfg{{"function", function}, {"dim", dim},     {"lo", lo},
           {"hi", hi},             {"n", n},         {"dual_n", dual_n},
           {"method", method}};
  Run run("transform-grid", g.out, g.seed, cfg);
  Timer t;
  ConvexFunction f = load_function(function, dim, g.seed, 10.0);
  CartesianGrid primal = CartesianGrid::uniform(lo, hi, n, dim);
  constexpr std::size_t kCap = std::size_t(2) << 30;
  if (primal.size() > kCap / (2 * sizeof(double)))
    throw GridMemoryError(primal.size() * 2 * sizeof(double), kCap);
  GridField field = GridField::tabulate(primal, f.value);
  auto bounds = dual_grid_bounds(f, primal);
  Vec dlo(dim), dhi(dim);
  for (int i = 0; i < dim; ++i) {
    dlo[i] = bounds[i].first;
    dhi[i] = bounds[i].second;
  }
  CartesianGrid dual =
      CartesianGrid::uniform(dlo, dhi, std::vector<int>(dim, dual_n));
  Timer solve;
  GridField out = method == "brute" ? brute_force_conjugate(field, dual)
                                    : llt_nested(field, dual);
  double t_solve = solve.seconds();
  double rmse = grid_rmse_vs_conjugate(out, f, dual, 1000, g.seed);

  std::ostringstream csv;
  write_field_csv(out, csv);
  run.emit("conjugate_field.csv", csv.str());
  run.emit_json("result.json", json{{"function", function},
                                    {"dim", dim},
                                    {"method", method},
                                    {"n", n},
                                    {"dual_n", dual_n},
                                    {"dual_lo", dlo},
                                    {"dual_hi", dhi},
                                    {"t_solve", t_solve},
                                    {"rmse", rmse}});
  run.finish(t.seconds());
  return 0;
}

int cmd_transform_entropic(const GlobalOpts& g, const std::string& function,
                           int dim, double lo, double hi,
                           std::vector<double> epsilons, int n_samples,
                           int n_eval, const std::string& sequence) {
  json cfg{{"function", function}, {"dim", dim},
           {"lo", lo},             {"hi", hi},
           {"epsilons", epsilons}, {"n_samples", n_samples},
           {"n_eval", n_eval},     {"sequence", sequence}};
  Run run("transform-entropic", g.out, g.seed, cfg);
  Timer t;
  ConvexFunction f = load_function(function, dim, g.seed, 10.0);
  if (!f.has_conjugate())
    throw std::invalid_argument(
        "transform-entropic needs a closed-form conjugate for scoring");
  auto ys = dual_validation_points(f, n_eval, g.seed);
  Vec blo(dim, lo), bhi(dim, hi);

  std::ostringstream csv;
  csv << "epsilon,n_samples,rmse,max_err,seconds\n";
  for (double eps : epsilons) {
    EntropicConfig ec;
    ec.epsilon = eps;
    ec.n_samples = std::size_t(n_samples);
    ec.seed = g.seed;
    ec.sequence = sequence == "pseudo-random" ? SequenceKind::PseudoRandom
                                              : SequenceKind::LowDiscrepancy;
    Timer te;
    double acc = 0.0, mx = 0.0;
    for (const auto& y : ys) {
      double d = softmax_conjugate(f, blo, bhi, y, ec) - f.conjugate(y);
      acc += d * d;
      mx = std::max(mx, std::fabs(d));
    }
    csv << fmt(eps) << "," << n_samples << ","
        << fmt(std::sqrt(acc / ys.size())) << "," << fmt(mx) << ","
        << fmt(te.seconds()) << "\n";
  }
  run.emit("entropic_sweep.csv", csv.str());
  run.finish(t.seconds());
  return 0;
}

std::string loss_history_csv(const TrainReport& rep) {
  std::ostringstream csv;
  csv << "step,loss\n";
  for (const auto& [step, loss] : rep.loss_history)
    csv << step << "," << fmt(loss) << "\n";
  return csv.str();
}

int cmd_train_dlt(const GlobalOpts& g, const std::string& function, int dim,
                  const std::string& family, int width, long long steps,
                  int batch, double lr, const std::string& loss,
                  double dual_lo, double dual_hi,
                  const std::string& inverse_ckpt) {
  json cfg{{"function", function}, {"dim", dim},   {"family", family},
           {"width", width},       {"steps", steps}, {"batch", batch},
           {"lr", lr},             {"loss", loss}};
  Run run("train-dlt", g.out, g.seed, cfg);
  Timer t;
  ConvexFunction f = load_function(function, dim, g.seed, 10.0);
  TrainConfig tc;
  tc.max_steps = steps;
  tc.batch_size = batch;
  tc.lr = lr;
  tc.seed = g.seed;
  tc.loss_kind = loss == "direct"  ? LossKind::Direct
                 : loss == "proxy" ? LossKind::Proxy
                                   : LossKind::Implicit;
  ArchSpec spec = ArchSpec::make(family_from_name(family), dim, width);

  Sampler sampler =
      tc.loss_kind == LossKind::Implicit
          ? default_primal_sampler(f, g.seed)
          : Sampler::uniform_box(Vec(dim, dual_lo), Vec(dim, dual_hi), g.seed);
  VectorFn proxy;
  NetworkModel inv;
  if (tc.loss_kind == LossKind::Proxy) {
    if (inverse_ckpt.empty())
      throw std::invalid_argument("proxy loss requires --inverse-ckpt");
    inv = load_checkpoint(inverse_ckpt);
    proxy = model_vec_fn(inv);
  }

  TrainReport rep = train(f, sampler, spec, tc, proxy);
  save_checkpoint(rep.model, run.path("model.ckpt").string());
  run.track("model.ckpt");
  run.emit("loss_history.csv", loss_history_csv(rep));
  json rj = rep.to_json();
  rj["config"] = tc.to_json();
  run.emit_json("report.json", rj);
  run.finish(t.seconds());
  return 0;
}

int cmd_certify(const GlobalOpts& g, const std::string& function, int dim,
                const std::string& ckpt, int n, double level) {
  json cfg{{"function", function}, {"dim", dim}, {"ckpt", ckpt},
           {"n", n},               {"level", level}};
  Run run("certify", g.out, g.seed, cfg);
  Timer t;
  ConvexFunction f = load_function(function, dim, g.seed, 10.0);
  ScalarFn gfn;
  NetworkModel model;
  if (ckpt.empty()) {
    if (!f.has_conjugate())
      throw std::invalid_argument(
          "no checkpoint given and no closed-form conjugate to certify");
    gfn = f.conjugate;
  } else {
    model = load_checkpoint(ckpt);
    gfn = model_fn(model);
  }
  Sampler s = default_primal_sampler(f, g.seed);
  ErrorCertificate cert = certify(gfn, f, s, std::size_t(n), level);
  json cj = cert.to_json();
  cj["seed"] = g.seed;
  run.emit_json("certificate.json", cj);
  run.finish(t.seconds());
  return 0;
}

int cmd_inverse_train(const GlobalOpts& g, const std::string& function,
                      int dim, int width, long long pretrain_steps,
                      long long refine_steps, double lambda, double dual_lo,
                      double dual_hi, int batch) {
  json cfg{{"function", function},
           {"dim", dim},
           {"width", width},
           {"pretrain_steps", pretrain_steps},
           {"refine_steps", refine_steps},
           {"lambda", lambda},
           {"dual_lo", dual_lo},
           {"dual_hi", dual_hi},
           {"batch", batch}};
  Run run("inverse-train", g.out, g.seed, cfg);
  Timer t;
  ConvexFunction f = load_function(function, dim, g.seed, 10.0);
  ArchSpec spec = ArchSpec::make(Family::ResNet, dim, width, dim);
  NetworkModel h = init_network(spec, g.seed);
  InverseTrainConfig ic;
  ic.pretrain_steps = pretrain_steps;
  ic.refine_steps = refine_steps;
  ic.mix_lambda = lambda;
  ic.pretrain_batch = batch;
  ic.refine_batch = batch;
  ic.seed = g.seed;
  InverseReport pre = pretrain_inverse(h, f, default_primal_sampler(f, g.seed), ic);
  Sampler dual = Sampler::uniform_box(Vec(dim, dual_lo), Vec(dim, dual_hi),
                                      g.seed + 1);
  InverseReport ref = refine_inverse(h, f, dual, ic);

  Sampler dual_test = Sampler::uniform_box(Vec(dim, dual_lo), Vec(dim, dual_hi),
                                           g.seed + 2);
  std::vector<Vec> ys;
  for (int i = 0; i < 2000; ++i) ys.push_back(dual_test.next());
  double quality = inverse_quality(model_vec_fn(h), f, ys, dual_hi - dual_lo);

  save_checkpoint(h, run.path("inverse.ckpt").string());
  run.track("inverse.ckpt");
  run.emit_json("inverse_report.json",
                json{{"pretrain_final_loss", pre.final_loss},
                     {"pretrain_steps", pre.steps},
                     {"refine_final_loss", ref.final_loss},
                     {"refine_steps", ref.steps},
                     {"mean_omitted_fraction", ref.mean_omitted_fraction},
                     {"inverse_quality", quality},
                     {"config", ic.to_json()}});
  run.finish(t.seconds());
  return 0;
}

int cmd_hj(const GlobalOpts& g, int dim, int width, long long steps,
           double box_a, double horizon, std::vector<double> t_slices,
           int n_eval) {
  json cfg{{"dim", dim},       {"width", width},     {"steps", steps},
           {"box_a", box_a},   {"horizon", horizon}, {"t_slices", t_slices},
           {"n_eval", n_eval}};
  Run run("hj", g.out, g.seed, cfg);
  Timer t;
  HopfProblem prob = HopfProblem::quadratic_quadratic(dim, box_a, horizon);
  ArchSpec spec = ArchSpec::make(Family::ResNet, dim + 1, width);
  TimeDltConfig hc;
  hc.steps = steps;
  hc.seed = g.seed;
  Timer tt;
  TrainReport rep = train_time_dlt(prob, spec, hc);
  double t_train = tt.seconds();
  SpaceTimeFn u = model_space_time_fn(rep.model);

  Rng r = Rng(g.seed).split(0xe7a1);
  std::vector<Vec> pts;
  for (int k = 0; k < n_eval; ++k) {
    Vec x(dim);
    for (auto& v : x) v = r.uniform(-box_a, box_a);
    pts.push_back(x);
  }

  std::ostringstream csv;
  csv << "d,t,l2_error,pde_residual,ic_error,seconds\n";
  for (double ts : t_slices) {
    HjMetrics m = hj_metrics(u, prob, pts, {ts});
    csv << dim << "," << fmt(ts) << "," << fmt(m.l2_error) << ","
        << fmt(m.pde_residual) << "," << fmt(m.ic_error) << ","
        << fmt(t_train) << "\n";
  }
  save_checkpoint(rep.model, run.path("hj_model.ckpt").string());
  run.track("hj_model.ckpt");
  run.emit("hj_table.csv", csv.str());
  run.emit("loss_history.csv", loss_history_csv(rep));
  run.finish(t.seconds());
  return 0;
}

int cmd_bench_table(const GlobalOpts& g, const std::string& table,
                    std::vector<int> dims, int grid_n, long long steps,
                    int width) {
  json cfg{{"table", table}, {"dims", dims},  {"grid_n", grid_n},
           {"steps", steps}, {"width", width}};
  Run run("bench-table", g.out, g.seed, cfg);
  Timer t;
  if (table != "table3")
    throw std::invalid_argument("unknown table: " + table);

  std::ostringstream csv;
  csv << "function,d,method,t_solve,rmse\n";
  for (const char* name : {"quadratic", "neg-log"}) {
    for (int d : dims) {
      ConvexFunction f = load_function(name, d, g.seed, 10.0);
      double lo = std::string(name) == "neg-log" ? 0.1 : -3.0;
      double hi = std::string(name) == "neg-log" ? 5.0 : 3.0;
      CartesianGrid primal = CartesianGrid::uniform(lo, hi, grid_n, d);
      GridField field = GridField::tabulate(primal, f.value);
      auto bounds = dual_grid_bounds(f, primal);
      Vec dlo(d), dhi(d);
      for (int i = 0; i < d; ++i) {
        dlo[i] = bounds[i].first;
        dhi[i] = bounds[i].second;
      }
      CartesianGrid dual =
          CartesianGrid::uniform(dlo, dhi, std::vector<int>(d, grid_n));
      Timer tl;
      GridField out = llt_nested(field, dual);
      double t_llt = tl.seconds();
      double rmse_llt = grid_rmse_vs_conjugate(out, f, dual, 1000, g.seed);
      csv << name << "," << d << ",llt," << fmt(t_llt) << "," << fmt(rmse_llt)
          << "\n";

      TrainConfig tc;
      tc.max_steps = steps;
      tc.seed = g.seed;
      Timer td;
      TrainReport rep = train(f, default_primal_sampler(f, g.seed),
                              ArchSpec::make(Family::Mlp, d, width), tc);
      double t_dlt = td.seconds();
      Sampler s = default_primal_sampler(f, g.seed + 1);
      ErrorCertificate cert = certify(model_fn(rep.model), f, s, 4096);
      csv << name << "," << d << ",dlt," << fmt(t_dlt) << ","
          << fmt(cert.rmse()) << "\n";
    }
  }
  run.emit("table3.csv", csv.str());
  run.finish(t.seconds());
  return 0;
}

int cmd_plot_data(const GlobalOpts& g, const std::string& mode,
                  const std::string& function, int dim, int n) {
  json cfg{{"mode", mode}, {"function", function}, {"dim", dim}, {"n", n}};
  Run run("plot-data", g.out, g.seed, cfg);
  Timer t;
  std::ostringstream csv;
  csv << "series,x,y\n";
  if (mode == "fig1" && n > 0) {
    ConvexFunction f = load_function(function, dim, g.seed, 10.0);
    if (dim != 2) throw std::invalid_argument("fig1 mode needs dim == 2");
    Sampler s = default_primal_sampler(f, g.seed);
    auto xs = sample_primal(f, s, std::size_t(n));
    for (const auto& x : xs)
      csv << "primal," << fmt(x[0]) << "," << fmt(x[1]) << "\n";
    for (const auto& x : xs) {
      Vec y = f.gradient(x);
      csv << "gradient-image," << fmt(y[0]) << "," << fmt(y[1]) << "\n";
    }
  } else if (mode != "fig1") {
    throw std::invalid_argument("unknown plot mode: " + mode);
  }
  run.emit("plot_data.csv", csv.str());
  run.finish(t.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-conjugation toolkit benchmark CLI"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Root seed for all randomness");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Thread count (0 = library default)");

  // transform-grid
  std::string tg_fn = "quadratic", tg_method = "llt";
  int tg_dim = 2, tg_n = 10, tg_dual_n = 10;
  double tg_lo = -3.0, tg_hi = 3.0;
  auto* tg = app.add_subcommand("transform-grid",
                                "Discrete conjugate on a Cartesian grid");
  tg->add_option("--function", tg_fn);
  tg->add_option("--dim", tg_dim);
  tg->add_option("--lo", tg_lo);
  tg->add_option("--hi", tg_hi);
  tg->add_option("--n", tg_n);
  tg->add_option("--dual-n", tg_dual_n);
  tg->add_option("--method", tg_method)
      ->check(CLI::IsMember({"llt", "brute"}));

  // transform-entropic
  std::string te_fn = "quadratic", te_seq = "low-discrepancy";
  int te_dim = 1, te_samples = 65536, te_eval = 50;
  double te_lo = -3.0, te_hi = 3.0;
  std::vector<double> te_eps{0.5, 0.1, 0.01};
  auto* te = app.add_subcommand("transform-entropic",
                                "Entropic conjugate epsilon sweep");
  te->add_option("--function", te_fn);
  te->add_option("--dim", te_dim);
  te->add_option("--lo", te_lo);
  te->add_option("--hi", te_hi);
  te->add_option("--eps", te_eps);
  te->add_option("--n-samples", te_samples);
  te->add_option("--n-eval", te_eval);
  te->add_option("--sequence", te_seq)
      ->check(CLI::IsMember({"low-discrepancy", "pseudo-random"}));

  // train-dlt
  std::string td_fn = "quadratic", td_family = "mlp", td_loss = "implicit";
  std::string td_inverse_ckpt;
  int td_dim = 2, td_width = 64, td_batch = 0;
  long long td_steps = 20000;
  double td_lr = 1e-3, td_dual_lo = -2.0, td_dual_hi = 2.0;
  auto* td = app.add_subcommand("train-dlt", "Deep Legendre Transform training");
  td->add_option("--function", td_fn);
  td->add_option("--dim", td_dim);
  td->add_option("--family", td_family)
      ->check(CLI::IsMember({"mlp", "mlp-icnn", "resnet", "icnn"}));
  td->add_option("--width", td_width);
  td->add_option("--steps", td_steps);
  td->add_option("--batch", td_batch);
  td->add_option("--lr", td_lr);
  td->add_option("--loss", td_loss)
      ->check(CLI::IsMember({"implicit", "direct", "proxy"}));
  td->add_option("--dual-lo", td_dual_lo);
  td->add_option("--dual-hi", td_dual_hi);
  td->add_option("--inverse-ckpt", td_inverse_ckpt);

  // certify
  std::string cf_fn = "quadratic", cf_ckpt;
  int cf_dim = 2, cf_n = 4096;
  double cf_level = 0.95;
  auto* cf = app.add_subcommand("certify", "A-posteriori error certificate");
  cf->add_option("--function", cf_fn);
  cf->add_option("--dim", cf_dim);
  cf->add_option("--ckpt", cf_ckpt);
  cf->add_option("--n", cf_n);
  cf->add_option("--level", cf_level);

  // inverse-train
  std::string iv_fn = "neg-log";
  int iv_dim = 2, iv_width = 128, iv_batch = 0;
  long long iv_pre = 20000, iv_ref = 40000;
  double iv_lambda = 0.5, iv_dual_lo = -1000.0, iv_dual_hi = -10.0;
  auto* iv = app.add_subcommand("inverse-train",
                                "Learned inverse-gradient sampler");
  iv->add_option("--function", iv_fn);
  iv->add_option("--dim", iv_dim);
  iv->add_option("--width", iv_width);
  iv->add_option("--pretrain-steps", iv_pre);
  iv->add_option("--refine-steps", iv_ref);
  iv->add_option("--lambda", iv_lambda);
  iv->add_option("--dual-lo", iv_dual_lo);
  iv->add_option("--dual-hi", iv_dual_hi);
  iv->add_option("--batch", iv_batch);

  // hj
  int hj_dim = 2, hj_width = 64, hj_eval = 200;
  long long hj_steps = 20000;
  double hj_a = 2.0, hj_T = 2.0;
  std::vector<double> hj_ts{0.5, 1.0};
  auto* hj = app.add_subcommand("hj", "Hopf-formula Hamilton-Jacobi solver");
  hj->add_option("--dim", hj_dim);
  hj->add_option("--width", hj_width);
  hj->add_option("--steps", hj_steps);
  hj->add_option("--box-a", hj_a);
  hj->add_option("--horizon", hj_T);
  hj->add_option("--t-slices", hj_ts);
  hj->add_option("--n-eval", hj_eval);

  // bench-table
  std::string bt_table = "table3";
  std::vector<int> bt_dims{2};
  int bt_grid_n = 5, bt_width = 32;
  long long bt_steps = 2000;
  auto* bt = app.add_subcommand("bench-table", "Reproduce a paper-style table");
  bt->add_option("table", bt_table);
  bt->add_option("--dims", bt_dims);
  bt->add_option("--grid-n", bt_grid_n);
  bt->add_option("--steps", bt_steps);
  bt->add_option("--width", bt_width);

  // plot-data
  std::string pd_mode = "fig1", pd_fn = "quadratic-over-linear";
  int pd_dim = 2, pd_n = 1000;
  auto* pd = app.add_subcommand("plot-data", "Long-format CSV for plotting");
  pd->add_option("--mode", pd_mode);
  pd->add_option("--function", pd_fn);
  pd->add_option("--dim", pd_dim);
  pd->add_option("--n", pd_n);

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (tg->parsed())
      return cmd_transform_grid(g, tg_fn, tg_dim, tg_lo, tg_hi, tg_n,
                                tg_dual_n, tg_method);
    if (te->parsed())
      return cmd_transform_entropic(g, te_fn, te_dim, te_lo, te_hi, te_eps,
                                    te_samples, te_eval, te_seq);
    if (td->parsed())
      return cmd_train_dlt(g, td_fn, td_dim, td_family, td_width, td_steps,
                           td_batch, td_lr, td_loss, td_dual_lo, td_dual_hi,
                           td_inverse_ckpt);
    if (cf->parsed())
      return cmd_certify(g, cf_fn, cf_dim, cf_ckpt, cf_n, cf_level);
    if (iv->parsed())
      return cmd_inverse_train(g, iv_fn, iv_dim, iv_width, iv_pre, iv_ref,
                               iv_lambda, iv_dual_lo, iv_dual_hi, iv_batch);
    if (hj->parsed())
      return cmd_hj(g, hj_dim, hj_width, hj_steps, hj_a, hj_T, hj_ts, hj_eval);
    if (bt->parsed())
      return cmd_bench_table(g, bt_table, bt_dims, bt_grid_n, bt_steps,
                             bt_width);
    if (pd->parsed()) return cmd_plot_data(g, pd_mode, pd_fn, pd_dim, pd_n);
  } catch (const GridMemoryError& e) {
    std::cerr << json{{"error",
                       {{"type", "grid-memory"},
                        {"message", e.what()},
                        {"required_bytes", e.required_bytes}}}}
                     .dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", "runtime"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}

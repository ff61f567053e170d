// graphnewton command-line front end: solve / decompose / bench / compare-ddp.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "graphnewton/autodiff.hpp"
#include "graphnewton/newton.hpp"
#include "graphnewton/optimal_control.hpp"
#include "graphnewton/problem_io.hpp"

namespace {

using namespace gn;

int max_threads() {
  if (const char* env = std::getenv("GRAPH_NEWTON_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw GraphError("cannot open output file: " + path);
  return file;
}

OrderingHeuristic parse_heuristic(const std::string& s) {
  if (s == "min-fill") return OrderingHeuristic::MinFill;
  if (s == "min-degree") return OrderingHeuristic::MinDegree;
  throw GraphError("unknown heuristic: " + s + " (want min-fill|min-degree)");
}

// ---------------------------------------------------------------- solve -----

int cmd_solve(const std::string& path, const std::string& solver, double tol, int max_iter,
              const std::string& heuristic, const std::string& trace_path) {
  Problem p = load_problem(path);
  NewtonConfig cfg;
  cfg.tol = tol;
  cfg.max_iters = max_iter;
  cfg.solver = (solver == "dense") ? SolverKind::Dense : SolverKind::Tree;
  cfg.heuristic = parse_heuristic(heuristic);
  NewtonResult res = optimize(p.graph, p.inputs_init, cfg);
  if (!trace_path.empty()) {
    std::ofstream tf(trace_path);
    if (!tf) throw GraphError("cannot open trace file: " + trace_path);
    write_trace_csv(tf, res.trace);
  }
  const IterRecord& last = res.trace.back();
  std::cout << "status: " << (res.status == NewtonStatus::Converged ? "converged" : "max-iters")
            << "\niterations: " << last.iter << "\nobjective: " << last.objective
            << "\ngrad_inf: " << last.grad_inf << "\n";
  return res.status == NewtonStatus::Converged ? 0 : 2;
}

// ------------------------------------------------------------ decompose -----

int cmd_decompose(const std::string& path, const std::string& heuristic, bool check_separation,
                  const std::string& out_path) {
  Problem p = load_problem(path);
  Hypergraph h = moralize(p.graph);
  TreeDecomposition td = decomposition_from_ordering(h, elimination_order(h, parse_heuristic(heuristic)));
  auto violations = validate_decomposition(h, td);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "invalid decomposition: " << v << "\n";
    return 1;
  }
  if (check_separation) {
    for (size_t e = 0; e < td.edges.size(); ++e) {
      if (!check_edge_separation(h, td, static_cast<int>(e))) {
        std::cerr << "edge-separation check failed on tree edge " << e << "\n";
        return 1;
      }
    }
  }
  nlohmann::json doc;
  doc["bags"] = nlohmann::json::array();
  for (int b = 0; b < td.num_bags(); ++b) {
    nlohmann::json vs = nlohmann::json::array();
    for (int v : td.bags[b]) vs.push_back(h.vertex_ids[v]);
    doc["bags"].push_back({{"id", b}, {"vertices", vs}});
  }
  doc["edges"] = nlohmann::json::array();
  for (auto [a, b] : td.edges) doc["edges"].push_back({a, b});
  doc["width"] = td.width;
  std::ofstream file;
  open_out(out_path, file) << doc.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench -----

struct BenchRow {
  std::string family;
  int n = 0;
  std::string solver;
  int width = 0, bags = 0;
  double assemble_ms = 0, solve_ms = 0, total_ms = 0;
  int iters = 0;
  double final_grad_inf = 0;
};

nlohmann::json make_family_doc(const std::string& family, int n, unsigned seed) {
  if (family == "oc-chain") return make_oc_chain_doc(n, seed);
  if (family == "random-tree") return make_random_tree_doc(n, seed);
  if (family == "grid-k") return make_grid_doc(std::max(2, n / 4), 4 + n % 4, seed);
  throw GraphError("unknown bench family: " + family);
}

template <class F>
double median_ms(F&& body, int reps = 5) {
  body();  // warm-up, discarded
  std::vector<double> ms;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    int inner = 0;
    double elapsed = 0.0;
    do {  // repeat sub-ms bodies until the sample is long enough to trust
      body();
      ++inner;
      elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } while (elapsed < 2.0 && inner < 1000);
    ms.push_back(elapsed / inner);
  }
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

std::vector<BenchRow> bench_instance(const std::string& family, int n, unsigned seed,
                                     int dense_cap) {
  Problem p = parse_problem(make_family_doc(family, n, seed));
  const CompGraph& g = p.graph;
  Hypergraph h = moralize(g);
  TreeDecomposition td = decomposition_from_ordering(h, elimination_order(h, OrderingHeuristic::MinFill));

  StateAssignment s = forward_eval(g, p.inputs_init);
  DualAssignment duals = reverse_grad(g, s);
  KktSystem k = assemble_kkt(g, s, duals);

  double assemble_ms = median_ms([&] {
    StateAssignment s2 = forward_eval(g, p.inputs_init);
    DualAssignment d2 = reverse_grad(g, s2);
    KktSystem k2 = assemble_kkt(g, s2, d2);
    (void)k2;
  });

  std::vector<BenchRow> rows;
  auto run_solver = [&](SolverKind kind, const std::string& name) {
    BenchRow row;
    row.family = family;
    row.n = n;
    row.solver = name;
    row.width = td.width;
    row.bags = td.num_bags();
    row.assemble_ms = assemble_ms;
    row.solve_ms = median_ms([&] {
      if (kind == SolverKind::Tree)
        solve_kkt_tree(k, td);
      else
        dense_kkt_solve(k);
    });
    NewtonConfig cfg;
    cfg.solver = kind;
    auto t0 = std::chrono::steady_clock::now();
    NewtonResult res = optimize(g, p.inputs_init, cfg);
    row.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.iters = static_cast<int>(res.trace.size()) - 1;
    row.final_grad_inf = res.trace.back().grad_inf;
    rows.push_back(row);
  };
  run_solver(SolverKind::Tree, "tree");
  if (k.total_dim() <= dense_cap) run_solver(SolverKind::Dense, "dense");
  return rows;
}

double fit_slope(const std::vector<std::pair<double, double>>& xy) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : xy) {
    double lx = std::log(x), ly = std::log(std::max(y, 1e-9));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m = static_cast<double>(xy.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

int cmd_bench(const std::string& family, const std::vector<int>& ns, unsigned seed, int dense_cap,
              bool parallel, const std::string& out_path) {
  std::vector<std::vector<BenchRow>> results(ns.size());
  if (parallel) {
    int workers = std::min<int>(max_threads(), static_cast<int>(ns.size()));
    std::mutex mtx;
    size_t next = 0;
    auto work = [&] {
      while (true) {
        size_t i;
        {
          std::lock_guard<std::mutex> lk(mtx);
          if (next >= ns.size()) return;
          i = next++;
        }
        results[i] = bench_instance(family, ns[i], seed, dense_cap);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  } else {
    for (size_t i = 0; i < ns.size(); ++i) results[i] = bench_instance(family, ns[i], seed, dense_cap);
  }

  std::ofstream file;
  std::ostream& os = open_out(out_path, file);
  os << "family,n,solver,width,bags,assemble_ms,solve_ms,total_ms,iters,final_grad_inf\n";
  std::vector<std::pair<double, double>> tree_xy, dense_xy;
  for (const auto& rows : results)
    for (const auto& r : rows) {
      os << r.family << "," << r.n << "," << r.solver << "," << r.width << "," << r.bags << ","
         << r.assemble_ms << "," << r.solve_ms << "," << r.total_ms << "," << r.iters << ","
         << r.final_grad_inf << "\n";
      (r.solver == "tree" ? tree_xy : dense_xy).emplace_back(r.n, r.solve_ms);
    }
  if (tree_xy.size() >= 2) std::cout << "# slope solver=tree " << fit_slope(tree_xy) << "\n";
  if (dense_xy.size() >= 2) std::cout << "# slope solver=dense " << fit_slope(dense_xy) << "\n";
  return 0;
}

// ----------------------------------------------------------- compare-ddp ----

OcProblem make_preset(const std::string& name, int horizon, double dt) {
  if (name == "lqr-scalar") return make_lqr_scalar(horizon);
  if (name == "lqr-mimo") return make_lqr_mimo(horizon);
  if (name == "pendulum-swingup") return make_pendulum_swingup(horizon, dt);
  throw GraphError("unknown preset: " + name);
}

int cmd_compare_ddp(const std::string& preset, int horizon, double dt, int max_iter,
                    const std::string& out_path) {
  OcProblem oc = make_preset(preset, horizon, dt);
  std::vector<Vec> u0(oc.horizon, Vec::Zero(oc.control_dim));
  NewtonConfig cfg;
  cfg.max_iters = max_iter;

  const std::vector<std::pair<std::string, DdpVariant>> variants = {
      {"ddp", DdpVariant::Ddp},
      {"stagewise_newton", DdpVariant::StagewiseNewton},
      {"nonlinear_stagewise_newton", DdpVariant::NonlinearStagewiseNewton},
      {"ilqr", DdpVariant::Ilqr}};
  std::vector<IterationTrace> traces;
  std::vector<std::string> names;
  for (const auto& [name, v] : variants) {
    traces.push_back(run_ddp(oc, u0, v, cfg).trace);
    names.push_back(name);
  }
  CompGraph chain = build_chain(oc);
  traces.push_back(optimize(chain, stack_controls(oc, u0), cfg).trace);
  names.push_back("graphical_newton");

  std::ofstream file;
  std::ostream& os = open_out(out_path, file);
  os << "iter";
  for (const auto& n : names) os << "," << n << "_objective," << n << "_grad_inf";
  os << "\n";
  size_t rows = 0;
  for (const auto& t : traces) rows = std::max(rows, t.size());
  for (size_t i = 0; i < rows; ++i) {
    os << i;
    for (const auto& t : traces) {
      if (i < t.size())
        os << "," << t[i].objective << "," << t[i].grad_inf;
      else
        os << ",,";
    }
    os << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphnewton: structured Newton steps on computational graphs"};
  app.require_subcommand(1);

  std::string path, solver = "tree", heuristic = "min-fill", trace_path, out_path;
  double tol = 1e-8, dt = 0.1;
  int max_iter = 100, dense_cap = 3000, horizon = 50;
  unsigned seed = 0;
  bool check_separation = false, parallel = false;
  std::string family = "oc-chain", preset = "lqr-scalar";
  std::vector<int> ns = {32, 64, 128, 256, 512, 1024};

  auto* solve = app.add_subcommand("solve", "run the Newton driver on a problem file");
  solve->add_option("path", path, "problem JSON file")->required();
  solve->add_option("--solver", solver, "tree|dense");
  solve->add_option("--tol", tol, "gradient inf-norm tolerance");
  solve->add_option("--max-iter", max_iter, "iteration cap");
  solve->add_option("--heuristic", heuristic, "min-fill|min-degree");
  solve->add_option("--trace", trace_path, "write per-iteration CSV here");

  auto* decompose = app.add_subcommand("decompose", "emit the tree decomposition as JSON");
  decompose->add_option("path", path, "problem JSON file")->required();
  decompose->add_option("--heuristic", heuristic, "min-fill|min-degree");
  decompose->add_flag("--check-separation", check_separation, "verify edge separation on all tree edges");
  decompose->add_option("--out", out_path, "output file (default stdout)");

  auto* bench = app.add_subcommand("bench", "KKT assemble/solve scaling study");
  bench->add_option("--family", family, "oc-chain|random-tree|grid-k");
  bench->add_option("--n", ns, "instance size sweep");
  bench->add_option("--seed", seed, "instance RNG seed");
  bench->add_option("--dense-cap", dense_cap, "skip dense solver above this many scalar variables");
  bench->add_flag("--parallel", parallel, "run instances concurrently (GRAPH_NEWTON_THREADS caps)");
  bench->add_option("--out", out_path, "output CSV file (default stdout)");

  auto* cmp = app.add_subcommand("compare-ddp", "four DDP variants vs the graphical Newton driver");
  cmp->add_option("--preset", preset, "lqr-scalar|lqr-mimo|pendulum-swingup");
  cmp->add_option("--horizon", horizon, "number of stages");
  cmp->add_option("--dt", dt, "time step (pendulum preset)");
  cmp->add_option("--max-iter", max_iter, "iteration cap");
  cmp->add_option("--out", out_path, "output CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (solve->parsed()) return cmd_solve(path, solver, tol, max_iter, heuristic, trace_path);
    if (decompose->parsed()) return cmd_decompose(path, heuristic, check_separation, out_path);
    if (bench->parsed()) return cmd_bench(family, ns, seed, dense_cap, parallel, out_path);
    if (cmp->parsed()) return cmd_compare_ddp(preset, horizon, dt, max_iter, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include "graphnewton/problem_io.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "graphnewton/functions.hpp"

namespace gn {

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

Problem parse_problem(const nlohmann::json& doc) {
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw GraphError("problem file: missing 'nodes' array");
  std::vector<NodeSpec> specs;
  for (const auto& jn : doc["nodes"]) {
    NodeSpec spec;
    try {
      spec.id = jn.at("id").get<std::string>();
      spec.dim = jn.at("dim").get<int>();
      if (jn.contains("parents"))
        spec.parents = jn["parents"].get<std::vector<std::string>>();
      if (jn.contains("func") && !jn["func"].is_null()) {
        spec.func_name = jn["func"].at("name").get<std::string>();
        spec.func_params = std::make_shared<const nlohmann::json>(jn["func"].value("params", nlohmann::json::object()));
        spec.func = make_function(spec.func_name, *spec.func_params);
      }
      if (jn.contains("objective") && !jn["objective"].is_null()) {
        spec.objective_name = jn["objective"].at("name").get<std::string>();
        spec.objective_params =
            std::make_shared<const nlohmann::json>(jn["objective"].value("params", nlohmann::json::object()));
        spec.objective = make_objective(spec.objective_name, *spec.objective_params);
      }
    } catch (const nlohmann::json::exception& e) {
      throw GraphError("problem file: node '" + spec.id + "': " + e.what());
    }
    specs.push_back(std::move(spec));
  }
  Problem p{CompGraph(std::move(specs)), Vec()};
  auto violations = p.graph.validate();
  if (!violations.empty()) {
    std::string msg = "problem file invalid:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw GraphError(msg);
  }
  p.inputs_init = Vec::Zero(p.graph.total_input_dim());
  if (doc.contains("inputs_init")) {
    const auto& init = doc["inputs_init"];
    const auto& ins = p.graph.input_nodes();
    for (size_t k = 0; k < ins.size(); ++k) {
      const auto& id = p.graph.node(ins[k]).id;
      if (!init.contains(id)) continue;
      auto vals = init[id].get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != p.graph.dim(ins[k]))
        throw GraphError("problem file: inputs_init for '" + id + "' has wrong length");
      for (int i = 0; i < p.graph.dim(ins[k]); ++i)
        p.inputs_init[p.graph.input_offset(static_cast<int>(k)) + i] = vals[i];
    }
  }
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open problem file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw GraphError("problem file parse error: " + std::string(e.what()));
  }
  return parse_problem(doc);
}

nlohmann::json serialize_problem(const CompGraph& g, const Vec& inputs_init) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& nd : g.nodes()) {
    nlohmann::json jn;
    jn["id"] = nd.id;
    jn["dim"] = nd.dim;
    jn["parents"] = nd.parents;
    if (nd.func) {
      if (nd.func_name.empty())
        throw GraphError("serialize_problem: node '" + nd.id + "' has a non-registry function");
      jn["func"] = {{"name", nd.func_name}, {"params", *nd.func_params}};
    } else {
      jn["func"] = nullptr;
    }
    if (nd.objective) {
      if (nd.objective_name.empty())
        throw GraphError("serialize_problem: node '" + nd.id + "' has a non-registry objective");
      jn["objective"] = {{"name", nd.objective_name}, {"params", *nd.objective_params}};
    } else {
      jn["objective"] = nullptr;
    }
    doc["nodes"].push_back(jn);
  }
  nlohmann::json init = nlohmann::json::object();
  const auto& ins = g.input_nodes();
  for (size_t k = 0; k < ins.size(); ++k) {
    Vec v = inputs_init.segment(g.input_offset(static_cast<int>(k)), g.dim(ins[k]));
    init[g.node(ins[k]).id] = vec_to_json(v);
  }
  doc["inputs_init"] = init;
  return doc;
}

std::string problem_fingerprint(const nlohmann::json& doc) { return doc.dump(); }

namespace {

nlohmann::json quadratic_obj(const Mat& Q, const Vec& r) {
  return {{"name", "quadratic"}, {"params", {{"Q", mat_to_json(Q)}, {"r", vec_to_json(r)}}}};
}

nlohmann::json affine_func(const Mat& A, const Vec& c) {
  return {{"name", "affine"}, {"params", {{"A", mat_to_json(A)}, {"c", vec_to_json(c)}}}};
}

}  // namespace

nlohmann::json make_oc_chain_doc(int horizon, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  const int n = horizon;
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json init = nlohmann::json::object();
  for (int i = 0; i < n; ++i) {
    nlohmann::json u = {{"id", "u" + std::to_string(i)}, {"dim", 1}, {"parents", nlohmann::json::array()}, {"func", nullptr}};
    if (i == 0)
      u["objective"] = quadratic_obj(Mat::Identity(1, 1), Vec::Zero(1));
    else
      u["objective"] = nullptr;
    nodes.push_back(u);
    init["u" + std::to_string(i)] = {unif(rng)};
  }
  for (int i = 1; i <= n; ++i) {
    nlohmann::json x = {{"id", "x" + std::to_string(i)}, {"dim", 1}};
    if (i == 1) {
      x["parents"] = {"u0"};
      Mat A(1, 1);
      A << 1.0;
      Vec c(1);
      c << 0.9;  // 0.9 * x0 with x0 = 1
      x["func"] = affine_func(A, c);
      Mat Q = Mat::Zero(2, 2);
      if (i == n) Q(0, 0) = 1.0;  // terminal
      x["objective"] = (i == n) ? quadratic_obj(Q, Vec::Zero(2)) : nlohmann::json(nullptr);
    } else {
      x["parents"] = {"x" + std::to_string(i - 1), "u" + std::to_string(i - 1)};
      Mat A(1, 2);
      A << 0.9, 1.0;
      x["func"] = affine_func(A, Vec::Zero(1));
      Mat Q = Mat::Zero(3, 3);
      Q(1, 1) = 1.0;  // stage state cost
      Q(2, 2) = 1.0;  // stage control cost
      if (i == n) Q(0, 0) = 1.0;
      x["objective"] = quadratic_obj(Q, Vec::Zero(3));
    }
    nodes.push_back(x);
  }
  return {{"nodes", nodes}, {"inputs_init", init}};
}

nlohmann::json make_random_tree_doc(int num_nodes, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dimd(1, 3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json init = nlohmann::json::object();
  std::vector<int> dims(num_nodes);
  for (int i = 0; i < num_nodes; ++i) {
    dims[i] = dimd(rng);
    std::string id = "n" + std::to_string(i);
    nlohmann::json jn = {{"id", id}, {"dim", dims[i]}};
    bool is_input = (i == 0) || (std::uniform_real_distribution<double>(0, 1)(rng) < 0.3);
    if (is_input) {
      jn["parents"] = nlohmann::json::array();
      jn["func"] = nullptr;
      Mat Q = Mat::Identity(dims[i], dims[i]);
      Vec r(dims[i]);
      for (int j = 0; j < dims[i]; ++j) r[j] = 0.3 * unif(rng);
      jn["objective"] = quadratic_obj(Q, r);
      nlohmann::json v = nlohmann::json::array();
      for (int j = 0; j < dims[i]; ++j) v.push_back(0.5 * unif(rng));
      init[id] = v;
    } else {
      int p = std::uniform_int_distribution<int>(0, i - 1)(rng);
      jn["parents"] = {"n" + std::to_string(p)};
      if (dims[i] == dims[p] && std::uniform_real_distribution<double>(0, 1)(rng) < 0.5) {
        jn["func"] = {{"name", "tanh"}, {"params", {{"dim", dims[i]}}}};
      } else {
        Mat A(dims[i], dims[p]);
        for (int a = 0; a < A.size(); ++a) A.data()[a] = 0.7 * unif(rng);
        Vec c(dims[i]);
        for (int a = 0; a < c.size(); ++a) c[a] = 0.2 * unif(rng);
        jn["func"] = affine_func(A, c);
      }
      int md = dims[i] + dims[p];
      Mat Q = 0.5 * Mat::Identity(md, md);
      Vec r(md);
      for (int j = 0; j < md; ++j) r[j] = 0.3 * unif(rng);
      jn["objective"] = quadratic_obj(Q, r);
    }
    nodes.push_back(jn);
  }
  return {{"nodes", nodes}, {"inputs_init", init}};
}

nlohmann::json make_random_dag_doc(int num_nodes, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dimd(1, 3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json init = nlohmann::json::object();
  std::vector<int> dims(num_nodes);
  for (int i = 0; i < num_nodes; ++i) {
    dims[i] = dimd(rng);
    std::string id = "n" + std::to_string(i);
    nlohmann::json jn = {{"id", id}, {"dim", dims[i]}};
    bool is_input = (i < 2) || (std::uniform_real_distribution<double>(0, 1)(rng) < 0.25);
    if (is_input) {
      jn["parents"] = nlohmann::json::array();
      jn["func"] = nullptr;
      Vec r(dims[i]);
      for (int j = 0; j < dims[i]; ++j) r[j] = 0.3 * unif(rng);
      jn["objective"] = quadratic_obj(Mat::Identity(dims[i], dims[i]), r);
      nlohmann::json v = nlohmann::json::array();
      for (int j = 0; j < dims[i]; ++j) v.push_back(0.4 * unif(rng));
      init[id] = v;
    } else {
      int np = std::uniform_int_distribution<int>(1, 2)(rng);
      std::vector<int> ps;
      while (static_cast<int>(ps.size()) < np) {
        int p = std::uniform_int_distribution<int>(0, i - 1)(rng);
        if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
      }
      nlohmann::json parents = nlohmann::json::array();
      int indim = 0;
      for (int p : ps) {
        parents.push_back("n" + std::to_string(p));
        indim += dims[p];
      }
      jn["parents"] = parents;
      Mat A(dims[i], indim);
      for (int a = 0; a < A.size(); ++a) A.data()[a] = 0.6 * unif(rng);
      jn["func"] = affine_func(A, Vec::Zero(dims[i]));
      int md = dims[i] + indim;
      Mat Q = 0.4 * Mat::Identity(md, md);
      Vec r(md);
      for (int j = 0; j < md; ++j) r[j] = 0.3 * unif(rng);
      jn["objective"] = quadratic_obj(Q, r);
    }
    nodes.push_back(jn);
  }
  return {{"nodes", nodes}, {"inputs_init", init}};
}

nlohmann::json make_grid_doc(int layers, int k, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json init = nlohmann::json::object();
  auto id = [](int t, int j) { return "g" + std::to_string(t) + "_" + std::to_string(j); };
  for (int j = 0; j < k; ++j) {
    nlohmann::json jn = {{"id", id(0, j)}, {"dim", 1}, {"parents", nlohmann::json::array()}, {"func", nullptr}};
    jn["objective"] = quadratic_obj(Mat::Identity(1, 1), Vec::Zero(1));
    nodes.push_back(jn);
    init[id(0, j)] = {unif(rng)};
  }
  for (int t = 1; t < layers; ++t) {
    for (int j = 0; j < k; ++j) {
      nlohmann::json parents = nlohmann::json::array();
      int np = 0;
      for (int d = -1; d <= 1; ++d) {
        int jj = j + d;
        if (jj >= 0 && jj < k) {
          parents.push_back(id(t - 1, jj));
          ++np;
        }
      }
      Mat A(1, np);
      for (int a = 0; a < np; ++a) A(0, a) = 0.4 + 0.2 * unif(rng);
      nlohmann::json jn = {{"id", id(t, j)}, {"dim", 1}, {"parents", parents},
                           {"func", affine_func(A, Vec::Zero(1))}};
      Mat Q = 0.5 * Mat::Identity(np + 1, np + 1);
      jn["objective"] = quadratic_obj(Q, 0.1 * Vec::Ones(np + 1));
      nodes.push_back(jn);
    }
  }
  return {{"nodes", nodes}, {"inputs_init", init}};
}

}  // namespace gn

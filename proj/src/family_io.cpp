#include "maml/family_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace maml {

namespace {

using nlohmann::json;

json vec_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from_json(const json& a) {
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json mat_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix mat_from_json(const json& rows) {
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = nr > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Matrix m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  return m;
}

json task_to_json(const Task& t) {
  json j;
  j["noise_key"] = t.noise_key;
  if (const auto* q = std::get_if<QuadraticParams>(&t.params)) {
    j["a"] = mat_to_json(q->a);
    j["b"] = vec_to_json(q->b);
    j["hess_noise_scale"] = q->hess_noise_scale;
    j["grad_noise_scale"] = q->grad_noise_scale;
  } else if (const auto* tr = std::get_if<TrigParams>(&t.params)) {
    j["c"] = tr->c;
    j["a"] = vec_to_json(tr->a);
    j["phase"] = tr->phase;
    j["lambda"] = tr->lambda;
    j["hess_noise_scale"] = tr->hess_noise_scale;
    j["grad_noise_scale"] = tr->grad_noise_scale;
  } else {
    const auto& m = std::get<MseParams>(t.params);
    j["support_x"] = mat_to_json(m.support_x);
    j["support_y"] = vec_to_json(m.support_y);
    j["query_x"] = mat_to_json(m.query_x);
    j["query_y"] = vec_to_json(m.query_y);
  }
  return j;
}

Task task_from_json(const json& j, Family family, int d, double radius) {
  Task t;
  t.family = family;
  t.dimension = d;
  t.noise_key = j.at("noise_key").get<std::uint64_t>();
  switch (family) {
    case Family::Quadratic: {
      QuadraticParams q;
      q.a = mat_from_json(j.at("a"));
      q.b = vec_from_json(j.at("b"));
      q.hess_noise_scale = j.at("hess_noise_scale").get<double>();
      q.grad_noise_scale = j.at("grad_noise_scale").get<double>();
      t.params = std::move(q);
      break;
    }
    case Family::Trig: {
      TrigParams tr;
      tr.c = j.at("c").get<double>();
      tr.a = vec_from_json(j.at("a"));
      tr.phase = j.at("phase").get<double>();
      tr.lambda = j.at("lambda").get<double>();
      tr.hess_noise_scale = j.at("hess_noise_scale").get<double>();
      tr.grad_noise_scale = j.at("grad_noise_scale").get<double>();
      t.params = std::move(tr);
      break;
    }
    case Family::FiniteSumMse: {
      MseParams m;
      m.support_x = mat_from_json(j.at("support_x"));
      m.support_y = vec_from_json(j.at("support_y"));
      m.query_x = mat_from_json(j.at("query_x"));
      m.query_y = vec_from_json(j.at("query_y"));
      m.finalize(radius);
      t.params = std::move(m);
      break;
    }
  }
  return t;
}

json profile_to_json(const SmoothnessProfile& p) {
  return json{{"L", p.L},           {"rho", p.rho},
              {"sigma", p.sigma},   {"sigma_g", p.sigma_g},
              {"sigma_H", p.sigma_H}, {"b", p.b},
              {"b_tilde", p.b_tilde}};
}

SmoothnessProfile profile_from_json(const json& j) {
  SmoothnessProfile p;
  p.L = j.at("L").get<double>();
  p.rho = j.at("rho").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.sigma_g = j.at("sigma_g").get<double>();
  p.sigma_H = j.at("sigma_H").get<double>();
  p.b = j.at("b").get<double>();
  p.b_tilde = j.at("b_tilde").get<double>();
  return p;
}

}  // namespace

nlohmann::json family_to_json(const TaskDistribution& dist) {
  json j;
  j["schema"] = "maml-family/1";
  j["case"] = to_string(dist.objective);
  j["family"] = to_string(dist.family);
  j["d"] = dist.dimension();
  j["seed"] = dist.seed;
  j["domain_radius"] = dist.domain_radius;
  j["weights"] = vec_to_json(dist.weights);
  j["profile"] = profile_to_json(dist.profile);
  json tasks = json::array();
  for (const auto& t : dist.tasks) tasks.push_back(task_to_json(t));
  j["tasks"] = std::move(tasks);
  return j;
}

TaskDistribution family_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "maml-family/1")
    throw std::invalid_argument("not a maml-family/1 document");
  TaskDistribution dist;
  dist.objective = case_from_string(j.at("case").get<std::string>());
  dist.family = family_from_string(j.at("family").get<std::string>());
  const int d = j.at("d").get<int>();
  dist.seed = j.at("seed").get<std::uint64_t>();
  dist.domain_radius = j.at("domain_radius").get<double>();
  dist.weights = vec_from_json(j.at("weights"));
  dist.profile = profile_from_json(j.at("profile"));
  for (const auto& tj : j.at("tasks"))
    dist.tasks.push_back(task_from_json(tj, dist.family, d, dist.domain_radius));
  dist.validate();
  return dist;
}

void save_family(const TaskDistribution& dist, const std::filesystem::path& p) {
  write_text_file(p, family_to_json(dist).dump(2) + "\n");
}

TaskDistribution load_family(const std::filesystem::path& p) {
  return family_from_json(json::parse(read_text_file(p)));
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["case"] = to_string(cfg.objective);
  j["N"] = cfg.N;
  j["K"] = cfg.K;
  j["B"] = cfg.B;
  j["S"] = cfg.S;
  j["D"] = cfg.D;
  j["T"] = cfg.T;
  j["Bprime"] = cfg.Bprime;
  j["DL"] = cfg.DL;
  if (cfg.alpha < 0.0)
    j["alpha"] = "default";
  else
    j["alpha"] = cfg.alpha;
  j["C_beta"] = cfg.C_beta;
  j["seed"] = cfg.seed;
  j["record_exact_grad"] = cfg.record_exact_grad;
  j["allow_unsafe_alpha"] = cfg.allow_unsafe_alpha;
  j["record_timing"] = cfg.record_timing;
  j["zeta_draws"] = cfg.zeta_draws;
  j["workers"] = cfg.workers;
  if (cfg.w0) j["w0"] = vec_to_json(*cfg.w0);
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.objective = case_from_string(j.at("case").get<std::string>());
  cfg.N = j.value("N", cfg.N);
  cfg.K = j.value("K", cfg.K);
  cfg.B = j.value("B", cfg.B);
  cfg.S = j.value("S", cfg.S);
  cfg.D = j.value("D", cfg.D);
  cfg.T = j.value("T", cfg.T);
  cfg.Bprime = j.value("Bprime", cfg.Bprime);
  cfg.DL = j.value("DL", cfg.DL);
  if (j.contains("alpha") && j["alpha"].is_number())
    cfg.alpha = j["alpha"].get<double>();
  else
    cfg.alpha = -1.0;
  cfg.C_beta = j.value("C_beta", cfg.C_beta);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.record_exact_grad = j.value("record_exact_grad", cfg.record_exact_grad);
  cfg.allow_unsafe_alpha = j.value("allow_unsafe_alpha", cfg.allow_unsafe_alpha);
  cfg.record_timing = j.value("record_timing", cfg.record_timing);
  cfg.zeta_draws = j.value("zeta_draws", cfg.zeta_draws);
  cfg.workers = j.value("workers", cfg.workers);
  if (j.contains("w0")) cfg.w0 = vec_from_json(j["w0"]);
  cfg.validate();
  return cfg;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_to_csv(const RunMetrics& m) {
  std::ostringstream out;
  out << "k,grad_norm,loss,beta,hat_L,elapsed_ms\n";
  for (const auto& r : m.rows) {
    out << r.k << ',' << format_double(r.grad_norm) << ','
        << format_double(r.loss) << ',' << format_double(r.beta) << ','
        << format_double(r.hat_L) << ',' << format_double(r.elapsed_ms) << '\n';
  }
  return out.str();
}

std::string inner_path_to_csv(const InnerPath& path) {
  std::ostringstream out;
  out << "j,batch_size";
  const auto d = path.iterates.empty() ? 0 : path.iterates.front().size();
  for (Eigen::Index c = 0; c < d; ++c) out << ",w" << c;
  out << '\n';
  for (std::size_t j = 0; j < path.iterates.size(); ++j) {
    out << j << ',';
    if (j >= 1 && j - 1 < path.batches.size())
      out << path.batches[j - 1].size();
    else
      out << 0;
    for (Eigen::Index c = 0; c < d; ++c)
      out << ',' << format_double(path.iterates[j][c]);
    out << '\n';
  }
  return out.str();
}

nlohmann::json run_summary_json(const RunConfig& cfg, const RunMetrics& m) {
  json j;
  j["config"] = run_config_to_json(cfg);
  j["zeta"] = m.zeta;
  j["zeta_mean_grad_norm"] = m.zeta_mean_grad_norm;
  j["initial_grad_norm"] = m.initial_grad_norm;
  j["final_grad_norm"] = m.final_grad_norm;
  j["delta"] = m.delta;
  j["loss_min"] = m.loss_min;
  j["theorem_rhs"] = m.theorem_rhs;
  j["diverged"] = m.diverged;
  j["diverged_at"] = m.diverged_at;
  j["ball_violation"] = m.ball_violation;
  j["grad_evals"] = m.grad_evals;
  j["hess_evals"] = m.hess_evals;
  j["iterations"] = m.rows.size();
  j["resolved_alpha"] = m.resolved_alpha;
  return j;
}

void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace maml

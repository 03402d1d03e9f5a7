#include "drjcc/config_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace drjcc {

using nlohmann::json;

namespace {

Vec vec_from_json(const json& j, const std::string& what, int expected = -1) {
  if (!j.is_array()) throw ParseError(what + " must be an array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + " must contain numbers only");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  if (expected >= 0 && v.size() != expected)
    throw ParseError(what + " must have length " + std::to_string(expected));
  return v;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double number(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ParseError("missing key '" + key + "'");
  if (!j.at(key).is_number()) throw ParseError("key '" + key + "' must be a number");
  return j.at(key).get<double>();
}

ProsumerConfig prosumer_from_json(const json& j, int horizon) {
  ProsumerConfig p;
  if (!j.contains("id") || !j.at("id").is_string())
    throw ParseError("prosumer entry missing string key 'id'");
  p.id = j.at("id").get<std::string>();
  if (j.contains("neighbors")) {
    for (const auto& m : j.at("neighbors")) p.neighbors.push_back(m.get<std::string>());
  }
  p.p_min = number(j, "p_min");
  p.p_max = number(j, "p_max");
  p.q_min = number(j, "q_min");
  p.q_max = number(j, "q_max");
  p.pe_min = number(j, "pe_min");
  p.pe_max = number(j, "pe_max");
  p.pb_min = number(j, "pb_min");
  p.pb_max = number(j, "pb_max");
  p.ps_max = number(j, "ps_max");
  p.E_min = number(j, "E_min");
  p.E_max = number(j, "E_max");
  p.S_min = number(j, "S_min");
  p.S_max = number(j, "S_max");
  p.E_init = number(j, "E_init");
  p.S_init = number(j, "S_init");
  p.eta = number(j, "eta");
  p.gamma_b = number(j, "gamma_b");
  p.gamma_s = number(j, "gamma_s");
  p.ps_ref = vec_from_json(j.value("ps_ref", json::array()),
                           "prosumer '" + p.id + "' ps_ref", horizon);
  return p;
}

json prosumer_to_json(const ProsumerConfig& p) {
  json j;
  j["id"] = p.id;
  j["neighbors"] = p.neighbors;
  j["p_min"] = p.p_min;
  j["p_max"] = p.p_max;
  j["q_min"] = p.q_min;
  j["q_max"] = p.q_max;
  j["pe_min"] = p.pe_min;
  j["pe_max"] = p.pe_max;
  j["pb_min"] = p.pb_min;
  j["pb_max"] = p.pb_max;
  j["ps_max"] = p.ps_max;
  j["E_min"] = p.E_min;
  j["E_max"] = p.E_max;
  j["S_min"] = p.S_min;
  j["S_max"] = p.S_max;
  j["E_init"] = p.E_init;
  j["S_init"] = p.S_init;
  j["eta"] = p.eta;
  j["gamma_b"] = p.gamma_b;
  j["gamma_s"] = p.gamma_s;
  j["ps_ref"] = vec_to_json(p.ps_ref);
  return j;
}

}  // namespace

CommunityConfig community_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }

  CommunityConfig c;
  try {
    c.horizon = j.value("horizon", 24);
    c.dt = j.value("dt", 1.0);

    if (!j.contains("prosumers") || !j.at("prosumers").is_array())
      throw ParseError("missing array key 'prosumers'");
    for (const auto& pj : j.at("prosumers"))
      c.prosumers.push_back(prosumer_from_json(pj, c.horizon));

    if (!j.contains("prices")) throw ParseError("missing key 'prices'");
    const json& pr = j.at("prices");
    c.prices.c_p = vec_from_json(pr.at("c_p"), "prices.c_p", c.horizon);
    c.prices.c_q = vec_from_json(pr.at("c_q"), "prices.c_q", c.horizon);
    if (pr.contains("c_nm")) {
      for (const auto& e : pr.at("c_nm")) {
        auto from = e.at("from").get<std::string>();
        auto to = e.at("to").get<std::string>();
        c.prices.c_nm[{from, to}] =
            vec_from_json(e.at("values"), "prices.c_nm " + from + "->" + to,
                          c.horizon);
      }
    }

    if (j.contains("admm")) {
      const json& a = j.at("admm");
      c.admm.sigma = a.value("sigma", c.admm.sigma);
      c.admm.tol_primal = a.value("tol_primal", c.admm.tol_primal);
      c.admm.tol_dual = a.value("tol_dual", c.admm.tol_dual);
      c.admm.max_iter = a.value("max_iter", c.admm.max_iter);
      c.admm.parallel = a.value("parallel", c.admm.parallel);
    }
    if (j.contains("risk")) {
      const json& r = j.at("risk");
      c.risk.epsilon = r.value("epsilon", c.risk.epsilon);
      if (r.contains("weights"))
        for (const auto& w : r.at("weights")) c.risk.weights.push_back(w.get<double>());
    }
    if (j.contains("ambiguity")) {
      const json& a = j.at("ambiguity");
      c.ambiguity.rho = a.value("rho", 0.0);
      if (a.contains("C") && a.contains("d")) {
        const json& rows = a.at("C");
        const Vec d = vec_from_json(a.at("d"), "ambiguity.d");
        Mat C(rows.size(), c.horizon);
        for (size_t r = 0; r < rows.size(); ++r)
          C.row(static_cast<int>(r)) =
              vec_from_json(rows[r], "ambiguity.C row", c.horizon).transpose();
        if (C.rows() != d.size())
          throw ParseError("ambiguity: C row count must equal d length");
        // All-zero rows with zero rhs are vacuous and encode unbounded support.
        std::vector<int> keep;
        for (int r = 0; r < C.rows(); ++r)
          if (!(C.row(r).isZero(0.0) && d[r] == 0.0)) keep.push_back(r);
        Mat Ck(keep.size(), c.horizon);
        Vec dk(keep.size());
        for (size_t r = 0; r < keep.size(); ++r) {
          Ck.row(static_cast<int>(r)) = C.row(keep[r]);
          dk[static_cast<int>(r)] = d[keep[r]];
        }
        c.ambiguity.support_C = Ck;
        c.ambiguity.support_d = dk;
      } else {
        c.ambiguity.support_C = Mat(0, c.horizon);
        c.ambiguity.support_d = Vec(0);
      }
    } else {
      c.ambiguity.support_C = Mat(0, c.horizon);
      c.ambiguity.support_d = Vec(0);
    }
    c.recourse = recourse_structure_from_string(j.value("recourse", "diagonal"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }

  c.validate();
  return c;
}

CommunityConfig load_community_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return community_config_from_json_text(ss.str());
}

std::string community_config_to_json_text(const CommunityConfig& config) {
  json j;
  j["horizon"] = config.horizon;
  j["dt"] = config.dt;
  j["prosumers"] = json::array();
  for (const auto& p : config.prosumers) j["prosumers"].push_back(prosumer_to_json(p));
  json pr;
  pr["c_p"] = vec_to_json(config.prices.c_p);
  pr["c_q"] = vec_to_json(config.prices.c_q);
  pr["c_nm"] = json::array();
  for (const auto& [pair, v] : config.prices.c_nm) {
    json e;
    e["from"] = pair.first;
    e["to"] = pair.second;
    e["values"] = vec_to_json(v);
    pr["c_nm"].push_back(e);
  }
  j["prices"] = pr;
  j["admm"] = {{"sigma", config.admm.sigma},
               {"tol_primal", config.admm.tol_primal},
               {"tol_dual", config.admm.tol_dual},
               {"max_iter", config.admm.max_iter},
               {"parallel", config.admm.parallel}};
  json risk;
  risk["epsilon"] = config.risk.epsilon;
  if (!config.risk.weights.empty()) risk["weights"] = config.risk.weights;
  j["risk"] = risk;
  json amb;
  amb["rho"] = config.ambiguity.rho;
  if (config.ambiguity.support_rows() > 0) {
    amb["C"] = json::array();
    for (int r = 0; r < config.ambiguity.support_C.rows(); ++r)
      amb["C"].push_back(vec_to_json(config.ambiguity.support_C.row(r).transpose()));
    amb["d"] = vec_to_json(config.ambiguity.support_d);
  }
  j["ambiguity"] = amb;
  j["recourse"] = to_string(config.recourse);
  return j.dump(2) + "\n";
}

void save_community_config(const CommunityConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write config file '" + path + "'");
  out << community_config_to_json_text(config);
}

}  // namespace drjcc

#include "drjcc/profiles.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "drjcc/io_util.hpp"

namespace drjcc {

namespace {

struct Row {
  std::string id;
  long day;
  int hour;
  double load;
  double pv;
};

double parse_number(const std::string& cell, int line_no) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ParseError("profiles: non-numeric cell '" + cell + "' at line " +
                     std::to_string(line_no));
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

}  // namespace

ScenarioSet profiles_from_csv_text(const std::string& text,
                                   const CommunityConfig& config) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("profiles: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "prosumer_id,day,hour,load_kw,pv_kw")
    throw ParseError("profiles: unexpected header '" + line + "'");

  const int T = config.horizon;
  // (prosumer -> day -> hour values)
  std::map<std::string, std::map<long, std::vector<std::pair<int, Row>>>> table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 5)
      throw ParseError("profiles: expected 5 columns at line " +
                       std::to_string(line_no));
    Row r;
    r.id = cells[0];
    r.day = static_cast<long>(parse_number(cells[1], line_no));
    r.hour = static_cast<int>(parse_number(cells[2], line_no));
    r.load = parse_number(cells[3], line_no);
    r.pv = parse_number(cells[4], line_no);
    if (r.hour < 0 || r.hour >= T)
      throw ParseError("profiles: hour " + std::to_string(r.hour) +
                       " outside 0.." + std::to_string(T - 1) + " at line " +
                       std::to_string(line_no));
    if (config.index_of(r.id) < 0)
      throw ParseError("profiles: unknown prosumer '" + r.id + "' at line " +
                       std::to_string(line_no));
    table[r.id][r.day].push_back({r.hour, r});
  }

  ScenarioSet out;
  for (const auto& p : config.prosumers) {
    auto it = table.find(p.id);
    if (it == table.end())
      throw ParseError("profiles: missing prosumer '" + p.id + "'");
    const auto& days = it->second;
    const int I = static_cast<int>(days.size());
    Mat load(I, T), pv(I, T);
    int i = 0;
    for (const auto& [day, rows] : days) {
      if (static_cast<int>(rows.size()) != T)
        throw ParseError("profiles: prosumer '" + p.id + "' day " +
                         std::to_string(day) + " has " +
                         std::to_string(rows.size()) + " hours, expected " +
                         std::to_string(T));
      std::vector<bool> seen(T, false);
      for (const auto& [hour, r] : rows) {
        if (seen[hour])
          throw ParseError("profiles: prosumer '" + p.id + "' day " +
                           std::to_string(day) + " repeats hour " +
                           std::to_string(hour));
        seen[hour] = true;
        load(i, hour) = r.load;
        pv(i, hour) = r.pv;
      }
      ++i;
    }
    out.prosumers.push_back(make_scenario_prosumer(p.id, load, pv));
  }
  // Sample counts must agree across prosumers so deviations index one joint day.
  for (const auto& s : out.prosumers) {
    if (s.deviations.rows() != out.prosumers[0].deviations.rows())
      throw ParseError("profiles: prosumer '" + s.id +
                       "' has a different day count than '" +
                       out.prosumers[0].id + "'");
  }
  out.validate(config);
  return out;
}

ScenarioSet load_profiles(const std::string& path, const CommunityConfig& config) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return profiles_from_csv_text(ss.str(), config);
}

std::string profiles_to_csv_text(const ScenarioSet& scenarios) {
  std::string out = "prosumer_id,day,hour,load_kw,pv_kw\n";
  for (const auto& s : scenarios.prosumers) {
    for (int i = 0; i < s.load_samples.rows(); ++i) {
      for (int t = 0; t < s.load_samples.cols(); ++t) {
        out += s.id;
        out += ',';
        out += std::to_string(i);
        out += ',';
        out += std::to_string(t);
        out += ',';
        out += format_sig12(s.load_samples(i, t));
        out += ',';
        out += format_sig12(s.pv_samples(i, t));
        out += '\n';
      }
    }
  }
  return out;
}

void save_profiles(const ScenarioSet& scenarios, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write profile file '" + path + "'");
  out << profiles_to_csv_text(scenarios);
}

std::pair<ScenarioSet, ScenarioSet> split_train_test(const ScenarioSet& s,
                                                     double train_fraction,
                                                     unsigned seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("split: train_fraction must lie in (0,1)");
  const int I = s.sample_count();
  const int n_train = static_cast<int>(std::round(train_fraction * I));
  if (n_train < 1 || n_train >= I)
    throw ValidationError("split: degenerate partition (train " +
                          std::to_string(n_train) + " of " + std::to_string(I) +
                          ")");

  std::vector<int> order(I);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int> test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [](const Mat& m, const std::vector<int>& idx) {
    Mat out(idx.size(), m.cols());
    for (size_t r = 0; r < idx.size(); ++r) out.row(static_cast<int>(r)) = m.row(idx[r]);
    return out;
  };

  ScenarioSet train, test;
  for (const auto& p : s.prosumers) {
    auto tr = make_scenario_prosumer(p.id, take(p.load_samples, train_idx),
                                     take(p.pv_samples, train_idx));
    test.prosumers.push_back(make_scenario_prosumer(
        p.id, take(p.load_samples, test_idx), take(p.pv_samples, test_idx),
        &tr.nominal_load, &tr.nominal_pv));
    train.prosumers.push_back(std::move(tr));
  }
  return {train, test};
}

}  // namespace drjcc

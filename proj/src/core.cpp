#include "ocrs/core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ocrs {

using nlohmann::json;

double bestfit_gamma() { return 1.0 / (3.0 + std::exp(-2.0)); }

double ScenarioDist::active_prob() const {
  double s = 0.0;
  for (const auto& sc : support) s += sc.prob;
  return s;
}

double MultiScenarioDist::active_prob() const {
  double s = 0.0;
  for (const auto& sc : support) s += sc.prob;
  return s;
}

double expected_size(const ScenarioDist& q, const SizeGrid& grid) {
  double units = 0.0;
  for (const auto& sc : q.support) units += sc.prob * sc.size_units;
  return units / grid.units();
}

double expected_reward(const ScenarioDist& q) {
  double r = 0.0;
  for (const auto& sc : q.support) r += sc.prob * sc.reward;
  return r;
}

namespace {

void check_query(const ScenarioDist& q, int total_units, int t,
                 ValidationReport& report) {
  double psum = q.active_prob();
  report.worst_prob_sum = std::max(report.worst_prob_sum, psum);
  if (psum > 1.0 + kMassClampTol) {
    report.ok = false;
    report.issues.push_back("query " + std::to_string(t) +
                            ": probabilities sum to " + std::to_string(psum));
  }
  for (const auto& sc : q.support) {
    if (sc.prob < 0.0) {
      report.ok = false;
      report.issues.push_back("query " + std::to_string(t) +
                              ": negative probability");
    }
    if (sc.size_units < 0 || sc.size_units > total_units) {
      report.ok = false;
      report.issues.push_back("query " + std::to_string(t) +
                              ": size off the grid");
    }
    if (sc.reward < 0.0) {
      report.ok = false;
      report.issues.push_back("query " + std::to_string(t) +
                              ": negative reward");
    }
  }
}

}  // namespace

ValidationReport validate(const SingleResourceInstance& inst) {
  ValidationReport report;
  if (inst.horizon() == 0) return report;  // empty instance is feasible
  if (inst.grid.refinement < 1 || inst.grid.horizon < 1) {
    report.ok = false;
    report.issues.push_back("grid must have K >= 1, T >= 1");
    return report;
  }
  if (inst.grid.horizon != inst.horizon()) {
    report.ok = false;
    report.issues.push_back("grid horizon differs from query count");
  }
  const int total = inst.grid.units();
  for (int t = 0; t < inst.horizon(); ++t) {
    check_query(inst.queries[t], total, t + 1, report);
    report.budget += expected_size(inst.queries[t], inst.grid);
  }
  if (report.budget > 1.0 + kBudgetTol) {
    report.ok = false;
    report.issues.push_back("budget sum E[size] = " +
                            std::to_string(report.budget) + " exceeds 1");
  }
  return report;
}

ValidationReport validate(const MultiResourceInstance& inst) {
  ValidationReport report;
  if (inst.horizon() == 0) return report;
  const int total = inst.grid.units();
  for (int t = 0; t < inst.horizon(); ++t) {
    const auto& q = inst.queries[t];
    double psum = q.active_prob();
    report.worst_prob_sum = std::max(report.worst_prob_sum, psum);
    if (psum > 1.0 + kMassClampTol) {
      report.ok = false;
      report.issues.push_back("query " + std::to_string(t + 1) +
                              ": probabilities sum to " + std::to_string(psum));
    }
    for (const auto& sc : q.support) {
      if (sc.reward.size() != inst.resources ||
          sc.size_units.size() != inst.resources) {
        report.ok = false;
        report.issues.push_back("query " + std::to_string(t + 1) +
                                ": vector length != resource count");
        continue;
      }
      for (int j = 0; j < inst.resources; ++j) {
        if (sc.size_units(j) < 0 || sc.size_units(j) > total) {
          report.ok = false;
          report.issues.push_back("query " + std::to_string(t + 1) +
                                  ": size off the grid");
        }
      }
    }
  }
  return report;
}

double UtilizationPmf::mean_units() const {
  double m = 0.0;
  for (int u = 1; u < mass_.size(); ++u) m += u * mass_(u);
  return m;
}

double mass_in(const UtilizationPmf& pmf, int a_units, int b_units) {
  if (a_units > b_units)
    throw std::domain_error("mass_in: interval (a,b] with a > b");
  if (a_units < 0 || b_units > pmf.total_units())
    throw std::domain_error("mass_in: interval outside the grid");
  double s = 0.0;
  for (int u = a_units + 1; u <= b_units; ++u) s += pmf.at(u);
  return s;
}

UtilizationPmf move_mass(const UtilizationPmf& pmf, int from_units,
                         int to_units, double amount) {
  if (to_units < 0 || to_units > pmf.total_units() || from_units < 0 ||
      from_units > pmf.total_units())
    throw std::domain_error("move_mass: key outside the grid");
  if (amount < 0.0) throw std::domain_error("move_mass: negative amount");
  const double available = pmf.at(from_units);
  if (amount > available + kMassClampTol) {
    std::ostringstream msg;
    msg << "move_mass: overdraw at unit " << from_units << ", deficit "
        << (amount - available);
    throw std::runtime_error(msg.str());
  }
  UtilizationPmf out = pmf;
  if (to_units != from_units) {
    const double moved = std::min(amount, available);
    out.at(from_units) = std::max(0.0, available - moved);
    out.at(to_units) += moved;
  }
  return out;
}

std::uint64_t counter_mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  // SplitMix64 finalizer applied to a combined counter word.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t z = mix(seed ^ 0x2545f4914f6cdd1dULL);
  z = mix(z ^ mix(a));
  z = mix(z ^ mix(b + 0x632be59bd9b4e019ULL));
  z = mix(z ^ mix(c + 0x9e6c63d0876a9a47ULL));
  return z;
}

double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  return (counter_mix(seed, a, b, c) >> 11) * 0x1.0p-53;
}

namespace {

json queries_to_json(const std::vector<ScenarioDist>& queries) {
  json arr = json::array();
  for (const auto& q : queries) {
    json qj = json::array();
    for (const auto& sc : q.support)
      qj.push_back(
          {{"p", sc.prob}, {"r", sc.reward}, {"d_units", sc.size_units}});
    arr.push_back(qj);
  }
  return arr;
}

}  // namespace

std::string to_json(const SingleResourceInstance& inst) {
  json j;
  j["K"] = inst.grid.refinement;
  j["T"] = inst.grid.horizon;
  j["queries"] = queries_to_json(inst.queries);
  return j.dump(2) + "\n";
}

std::string to_json(const MultiResourceInstance& inst) {
  json j;
  j["m"] = inst.resources;
  j["K"] = inst.grid.refinement;
  j["T"] = inst.grid.horizon;
  json arr = json::array();
  for (const auto& q : inst.queries) {
    json qj = json::array();
    for (const auto& sc : q.support) {
      json rj = json::array(), dj = json::array();
      for (int j2 = 0; j2 < sc.reward.size(); ++j2) {
        rj.push_back(sc.reward(j2));
        dj.push_back(sc.size_units(j2));
      }
      qj.push_back({{"p", sc.prob}, {"r", rj}, {"d_units", dj}});
    }
    arr.push_back(qj);
  }
  j["queries"] = arr;
  return j.dump(2) + "\n";
}

SingleResourceInstance instance_from_json(const std::string& text) {
  json j = json::parse(text);
  SingleResourceInstance inst;
  inst.grid.refinement = j.at("K").get<int>();
  inst.grid.horizon = j.at("T").get<int>();
  for (const auto& qj : j.at("queries")) {
    ScenarioDist q;
    for (const auto& sj : qj)
      q.support.push_back({sj.at("p").get<double>(), sj.at("r").get<double>(),
                           sj.at("d_units").get<int>()});
    inst.queries.push_back(std::move(q));
  }
  return inst;
}

MultiResourceInstance multi_instance_from_json(const std::string& text) {
  json j = json::parse(text);
  MultiResourceInstance inst;
  inst.resources = j.at("m").get<int>();
  inst.grid.refinement = j.at("K").get<int>();
  inst.grid.horizon = j.at("T").get<int>();
  for (const auto& qj : j.at("queries")) {
    MultiScenarioDist q;
    for (const auto& sj : qj) {
      MultiScenario sc;
      sc.prob = sj.at("p").get<double>();
      const auto& rj = sj.at("r");
      const auto& dj = sj.at("d_units");
      sc.reward.resize(static_cast<int>(rj.size()));
      sc.size_units.resize(static_cast<int>(dj.size()));
      for (int i = 0; i < sc.reward.size(); ++i) {
        sc.reward(i) = rj[i].get<double>();
        sc.size_units(i) = dj[i].get<int>();
      }
      q.support.push_back(std::move(sc));
    }
    inst.queries.push_back(std::move(q));
  }
  return inst;
}

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

SingleResourceInstance load_instance(const std::string& path) {
  return instance_from_json(read_text_file(path));
}

MultiResourceInstance load_multi_instance(const std::string& path) {
  return multi_instance_from_json(read_text_file(path));
}

void write_text_file(const std::string& path, const std::string& text) {
  // Write-then-rename so readers never observe a partial file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

}  // namespace ocrs

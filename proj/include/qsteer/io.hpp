#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qsteer/params.hpp"

namespace qsteer {

// Flat key-value parameter file, one key per line, '#' comments, optional '='.
// Keys: mass omega_m kappa_m S_F_th alpha g kappa Delta eta tau n0.
// Either alpha or g may be given; g is converted via alpha = sqrt(8/kappa) g.
// Unknown keys are errors.
inline PhysicalParams parse_params(std::istream& in) {
  std::map<std::string, double> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& ch : line)
      if (ch == '=') ch = ' ';
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    double value;
    if (!(ls >> value))
      throw Error("paramfile line " + std::to_string(lineno) + ": expected 'key value'");
    std::string extra;
    if (ls >> extra)
      throw Error("paramfile line " + std::to_string(lineno) + ": trailing content '" + extra + "'");
    if (kv.count(key)) throw Error("paramfile: duplicate key '" + key + "'");
    kv[key] = value;
  }

  PhysicalParams p;
  p.window = 0.0;  // resolved by the caller when absent
  auto take = [&](const char* key, double& field) {
    auto it = kv.find(key);
    if (it != kv.end()) {
      field = it->second;
      kv.erase(it);
    }
  };
  take("mass", p.mass);
  take("omega_m", p.mech_freq);
  take("kappa_m", p.mech_damping);
  take("S_F_th", p.bath_force_spectrum);
  take("kappa", p.cavity_bandwidth);
  take("Delta", p.detuning);
  take("eta", p.efficiency);
  take("tau", p.window);
  take("n0", p.initial_occupation);

  bool has_alpha = kv.count("alpha") > 0, has_g = kv.count("g") > 0;
  if (has_alpha && has_g) throw Error("paramfile: give either alpha or g, not both");
  if (has_alpha) {
    p.coupling = kv["alpha"];
    kv.erase("alpha");
  } else if (has_g) {
    p.coupling = PhysicalParams::alpha_from_g(kv["g"], p.cavity_bandwidth);
    kv.erase("g");
  }

  if (!kv.empty()) {
    std::string msg = "paramfile: unknown key(s):";
    for (const auto& [k, v] : kv) msg += " '" + k + "'";
    throw Error(msg);
  }
  return p;
}

inline PhysicalParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open parameter file '" + path + "'");
  return parse_params(in);
}

// CSV with one header row, '.' decimal, scientific notation, 9 significant
// digits. Byte-identical across runs by construction.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open output file '" + path + "'");
  }
  explicit CsvWriter(std::ostream& os) : ext_(&os) {}

  void header(const std::vector<std::string>& cols) {
    std::string line;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i) line += ',';
      line += cols[i];
    }
    line += '\n';
    stream() << line;
  }
  void row(const std::vector<double>& vals) {
    std::string line;
    char buf[32];
    for (size_t i = 0; i < vals.size(); ++i) {
      if (i) line += ',';
      std::snprintf(buf, sizeof buf, "%.8e", vals[i]);
      line += buf;
    }
    line += '\n';
    stream() << line;
  }

 private:
  std::ostream& stream() { return ext_ ? *ext_ : out_; }
  std::ofstream out_;
  std::ostream* ext_ = nullptr;
};

inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

}  // namespace qsteer

// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include "divopt/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "divopt/units.hpp"

namespace divopt {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(int line, const std::string& field, std::string_view token) {
  const std::string_view t = trim(token);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ConfigError(line, field, "expected a number, got '" + std::string(t) + "'");
  }
  return value;
}

struct KeyValue {
  double number = 0.0;
  std::string text;
  int line = 0;
  bool used = false;
};

struct Section {
  int line = 0;
  std::map<std::string, KeyValue> entries;
};

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Section global;
  std::vector<Section> sensors;
  Section* current = &global;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line != "[sensor]") {
        throw ConfigError(line_no, "", "unknown section '" + std::string(line) + "'");
      }
      sensors.emplace_back();
      sensors.back().line = line_no;
      current = &sensors.back();
      continue;
    }

    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, "", "expected 'key = value'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "", "empty key");
    if (current->entries.count(key)) {
      throw ConfigError(line_no, key, "duplicate key");
    }
    KeyValue kv;
    kv.text = std::string(value);
    kv.line = line_no;
    current->entries.emplace(key, std::move(kv));
  }

  auto take_number = [](Section& section, const std::string& key) -> std::optional<double> {
    auto it = section.entries.find(key);
    if (it == section.entries.end()) return std::nullopt;
    it->second.used = true;
    return parse_number(it->second.line, key, it->second.text);
  };
  auto take_text = [](Section& section, const std::string& key) -> std::optional<std::string> {
    auto it = section.entries.find(key);
    if (it == section.entries.end()) return std::nullopt;
    it->second.used = true;
    return it->second.text;
  };
  auto reject_unknown = [](const Section& section, const std::string& where) {
    for (const auto& [key, kv] : section.entries) {
      if (!kv.used) throw ConfigError(kv.line, key, "unknown key in " + where);
    }
  };

  const double pl0_db = take_number(global, "pl0_db").value_or(55.0);
  const double pathloss_exp = take_number(global, "pathloss_exp").value_or(2.0);
  const double d0_m = take_number(global, "d0_m").value_or(1.0);
  const std::optional<double> sigma2_dbm = take_number(global, "sigma2_dbm");
  const std::optional<double> p_tot_dbm = take_number(global, "p_tot_dbm");
  const std::optional<double> rho = take_number(global, "rho");
  const std::optional<std::string> convention_text = take_text(global, "gain_convention");
  reject_unknown(global, "global section");

  if (!sigma2_dbm) throw ConfigError(1, "sigma2_dbm", "required key missing");
  if (!p_tot_dbm) throw ConfigError(1, "p_tot_dbm", "required key missing");
  if (sensors.empty()) throw ConfigError(line_no, "", "no [sensor] sections");

  GainConvention convention = GainConvention::AmplitudeAsPrinted;
  if (convention_text) {
    if (*convention_text == "amplitude") {
      convention = GainConvention::AmplitudeAsPrinted;
    } else if (*convention_text == "power") {
      convention = GainConvention::PowerSqrt;
    } else {
      throw ConfigError(global.entries.at("gain_convention").line, "gain_convention",
                        "expected 'amplitude' or 'power'");
    }
    if (!rho) {
      throw ConfigError(global.entries.at("gain_convention").line, "gain_convention",
                        "only meaningful together with rho");
    }
  }

  Scenario scenario;
  Eigen::VectorXd gains(static_cast<Eigen::Index>(sensors.size()));
  for (size_t i = 0; i < sensors.size(); ++i) {
    Section& section = sensors[i];
    const std::optional<double> d_m = take_number(section, "d_m");
    const std::optional<double> gain_db = take_number(section, "gain_db");
    const std::optional<double> p_d = take_number(section, "p_d");
    const std::optional<double> p_f = take_number(section, "p_f");
    const std::optional<double> p_max_dbm = take_number(section, "p_max_dbm");
    reject_unknown(section, "[sensor] section");

    if (d_m.has_value() == gain_db.has_value()) {
      throw ConfigError(section.line, "d_m", "each sensor needs exactly one of d_m | gain_db");
    }
    if (!p_d || !p_f || !p_max_dbm) {
      throw ConfigError(section.line, "", "sensor requires p_d, p_f, and p_max_dbm");
    }
    double gain = 0.0;
    if (gain_db) {
      gain = linear_from_db(*gain_db);
    } else {
      if (!(*d_m > 0.0)) throw ConfigError(section.line, "d_m", "distance must be positive");
      gain = pathloss_gain(*d_m, pl0_db, pathloss_exp, d0_m).gain;
    }
    gains(static_cast<Eigen::Index>(i)) = gain;
    try {
      scenario.sensors.emplace_back(*p_d, *p_f, mw_from_dbm(*p_max_dbm));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(section.line, "p_d", e.what());
    }
  }

  const double sigma2_mw = mw_from_dbm(*sigma2_dbm);
  if (rho) {
    if (sensors.size() != 2) {
      throw ConfigError(global.entries.at("rho").line, "rho",
                        "the coupled channel is defined for exactly two sensors");
    }
    if (!(*rho >= 0.0 && *rho < 1.0)) {
      throw ConfigError(global.entries.at("rho").line, "rho", "requires 0 <= rho < 1");
    }
    scenario.channel =
        build_cross_channel(Eigen::Vector2d(gains(0), gains(1)), *rho, sigma2_mw, convention);
  } else {
    scenario.channel = ChannelSpec::orthogonal(gains, sigma2_mw);
  }
  scenario.p_tot_mw = mw_from_dbm(*p_tot_dbm);
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

}  // namespace divopt

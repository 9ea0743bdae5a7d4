#include "expnet/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace expnet {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_edge_list(std::ostream& os, const Network& net) {
  os << "n " << net.size() << '\n';
  for (const Edge& e : net.edges()) os << (e.from + 1) << ' ' << (e.to + 1) << '\n';
}

Network read_edge_list(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<Edge> edges;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    if (!have_header) {
      std::string tag;
      long long value = 0;
      if (!(ss >> tag >> value) || tag != "n" || value < 1) {
        throw FormatError("expected header 'n <nodes>'", lineno);
      }
      n = static_cast<std::size_t>(value);
      have_header = true;
    } else {
      long long i = 0, j = 0;
      if (!(ss >> i >> j)) throw FormatError("expected 'i j' edge line", lineno);
      std::string rest;
      if (ss >> rest) throw FormatError("trailing content on edge line", lineno);
      if (i < 1 || j < 1 || static_cast<std::size_t>(i) > n || static_cast<std::size_t>(j) > n) {
        throw FormatError("node index out of range 1.." + std::to_string(n), lineno);
      }
      if (i == j) throw FormatError("self-loop", lineno);
      edges.push_back({static_cast<std::uint32_t>(i - 1), static_cast<std::uint32_t>(j - 1)});
    }
  }
  if (!have_header) throw FormatError("missing header 'n <nodes>'", lineno);
  try {
    return Network(n, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), 0);
  }
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file '" + path + "'");
  try {
    return read_edge_list(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what(), 0);
  }
}

void save_network(const std::string& path, const Network& net) {
  std::ostringstream os;
  write_edge_list(os, net);
  write_text_file(path, os.str());
}

nlohmann::json to_json(const FitResult& r) {
  return nlohmann::json{{"alpha", r.params.alpha},
                        {"beta", r.params.beta},
                        {"rho", r.rho},
                        {"mu_used", r.mu_used},
                        {"outer_iters", r.outer_iters},
                        {"converged", r.converged},
                        {"residual_trace", r.residual_trace},
                        {"loglik_trace", r.loglik_trace}};
}

FitResult fit_result_from_json(const nlohmann::json& j) {
  FitResult r;
  r.params.alpha = j.at("alpha").get<std::vector<double>>();
  r.params.beta = j.at("beta").get<std::vector<double>>();
  r.rho = j.at("rho").get<double>();
  r.mu_used = j.at("mu_used").get<double>();
  r.outer_iters = j.at("outer_iters").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.residual_trace = j.at("residual_trace").get<std::vector<double>>();
  r.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
  return r;
}

nlohmann::json to_json(const Truth& t) {
  return nlohmann::json{{"alpha", t.params.alpha},
                        {"beta", t.params.beta},
                        {"rho", t.globals.rho},
                        {"mu", t.globals.mu}};
}

Truth truth_from_json(const nlohmann::json& j) {
  Truth t;
  t.params.alpha = j.at("alpha").get<std::vector<double>>();
  t.params.beta = j.at("beta").get<std::vector<double>>();
  t.globals.rho = j.at("rho").get<double>();
  t.globals.mu = j.value("mu", 1.0);
  t.params.validate();
  return t;
}

nlohmann::json to_json(const ErrorReport& r) {
  return nlohmann::json{{"delta_alpha", r.delta_alpha},
                        {"delta_beta", r.delta_beta},
                        {"mse_bound", r.mse_bound},
                        {"uniform_bound", r.uniform_bound},
                        {"shift_adjusted_mse", r.shift_adjusted_mse},
                        {"shift_adjusted_uniform", r.shift_adjusted_uniform},
                        {"rho_error_sq", r.rho_error_sq}};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what(), 0);
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace expnet

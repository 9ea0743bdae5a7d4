#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "expnet/io.hpp"
#include "support.hpp"

using namespace expnet;
namespace fs = std::filesystem;

namespace {

std::size_t error_line(const std::string& text) {
  std::istringstream is(text);
  try {
    read_edge_list(is);
  } catch (const FormatError& e) {
    return e.line();
  }
  return 0;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("expnet_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("edge list round trip") {
  std::mt19937_64 gen(61);
  for (int inst = 0; inst < 10; ++inst) {
    const Network net = testing_support::random_network(5 + inst, 0.3, gen);
    std::ostringstream os;
    write_edge_list(os, net);
    std::istringstream is(os.str());
    CHECK(read_edge_list(is) == net);
  }
}

TEST_CASE("edge list format") {
  const Network net(3, {{0, 1}, {2, 0}});
  std::ostringstream os;
  write_edge_list(os, net);
  CHECK(os.str() == "n 3\n1 2\n3 1\n");

  std::istringstream with_comments("# comment\n\nn 3\r\n1 2\n  # another\n3 1\n");
  CHECK(read_edge_list(with_comments) == net);
}

TEST_CASE("malformed edge lists report their line") {
  CHECK(error_line("n 3\n1 2\n2 x\n") == 3);
  CHECK(error_line("# c\nnodes 3\n") == 2);
  CHECK(error_line("n 3\n1 4\n") == 2);
  CHECK(error_line("n 3\n\n2 2\n") == 3);
  CHECK(error_line("n 3\n1 2 3\n") == 2);
  CHECK(error_line("n 0\n") == 1);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_edge_list(empty), FormatError);
  std::istringstream dup("n 3\n1 2\n1 2\n");
  CHECK_THROWS_AS(read_edge_list(dup), FormatError);
  try {
    std::istringstream bad("n 3\n1 2\n2 x\n");
    read_edge_list(bad);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
  }
}

TEST_CASE("file helpers") {
  const fs::path dir = scratch_dir("files");
  const Network net(4, {{0, 3}, {3, 0}, {1, 2}});
  save_network((dir / "net.txt").string(), net);
  CHECK(load_network((dir / "net.txt").string()) == net);
  CHECK_THROWS_AS(load_network((dir / "missing.txt").string()), IoError);
  CHECK_THROWS_AS(write_text_file((dir / "no" / "such" / "f.txt").string(), "x"), IoError);
  write_text_file((dir / "bad.json").string(), "{\n  \"a\": 1,\n}\n");
  CHECK_THROWS_AS(read_json_file((dir / "bad.json").string()), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 gen(62);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(gen) * std::pow(10.0, k % 20 - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("JSON round trips") {
  FitResult r;
  r.params = NodeParams({0.0, 0.1 + 0.2}, {-1.0 / 3.0, 1e-300});
  r.rho = 0.6;
  r.mu_used = 0.25;
  r.outer_iters = 7;
  r.converged = true;
  r.residual_trace = {1.0, 0.5};
  r.loglik_trace = {-10.0, -9.5};
  const FitResult back = fit_result_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.params.alpha == r.params.alpha);
  CHECK(back.params.beta == r.params.beta);
  CHECK(back.rho == r.rho);
  CHECK(back.mu_used == r.mu_used);
  CHECK(back.outer_iters == 7);
  CHECK(back.converged);
  CHECK(back.residual_trace == r.residual_trace);
  CHECK(back.loglik_trace == r.loglik_trace);

  const Truth t{NodeParams({0.0, 0.5}, {0.25, -0.75}), {0.3, 0.1}};
  const Truth tb = truth_from_json(nlohmann::json::parse(to_json(t).dump()));
  CHECK(tb.params.alpha == t.params.alpha);
  CHECK(tb.params.beta == t.params.beta);
  CHECK(tb.globals.rho == 0.3);
  CHECK(tb.globals.mu == 0.1);
  CHECK_THROWS(truth_from_json(nlohmann::json{{"alpha", {0.0}}, {"beta", {0.0}}, {"rho", 0.0}}));

  const nlohmann::json er = to_json(ErrorReport{0.1, 0.2, 0.3, 0.4, 0.05, 0.06, 0.01});
  CHECK(er.at("uniform_bound").get<double>() == 0.4);
  CHECK(er.size() == 7);
}

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "surromap/surromap.hpp"
#include "surromap/text_format.hpp"

#ifndef SURROMAP_CLI
#error "SURROMAP_CLI must name the command-line binary"
#endif

using namespace surromap;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("surromap_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run cli(const std::string& args, const std::string& env = "") {
  const auto out = workdir() / "stdout.txt";
  const auto err = workdir() / "stderr.txt";
  const std::string cmd = env + " " SURROMAP_CLI " " + args + " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Default synthetic map trained once with the default flags.
const fs::path& trained_models() {
  static const fs::path dir = [] {
    const auto d = workdir() / "default";
    REQUIRE(cli("synth --out " + (workdir() / "map.csv").string()).status == 0);
    const auto r = cli("train --map " + (workdir() / "map.csv").string() + " --out " + d.string() + " --hidden 20");
    REQUIRE(r.status == 0);
    return d;
  }();
  return dir;
}

std::string model_flags(const fs::path& d) {
  return "--tot " + (d / "p_tot.mlp").string() + " --sens " + (d / "p_sens.mlp").string() + " --abs " +
         (d / "p_abs.mlp").string();
}

PolynomialMetamodel poly(std::vector<Term> terms) {
  PolynomialMetamodel p;
  p.variables = MapBounds{}.factor_space().factors;
  p.terms = std::move(terms);
  return p;
}

// Polynomial maps that predict q_sens > q_tot for t_ewb below 18.33.
fs::path dry_polynomials() {
  const auto d = workdir() / "poly";
  fs::create_directories(d);
  const double c0 = 0.5 * -18.33 * 100.0, c1 = 0.5 * (100.0 - 18.33), c2 = 0.5;
  spit(d / "p_tot.mlp", serialize(poly({{{0, 0, 0}, 30.0 + c0}, {{0, 0, 1}, c1}, {{0, 0, 2}, c2}})));
  spit(d / "p_sens.mlp", serialize(poly({{{0, 0, 0}, 30.0}})));
  spit(d / "p_abs.mlp", serialize(poly({{{0, 0, 0}, 8.0}})));
  return d;
}

std::vector<std::string> fields(const std::string& line) { return text::split(line, ','); }

}  // namespace

TEST_CASE("train writes three models and the error block") {
  const auto& d = trained_models();
  for (const char* f : {"p_tot.mlp", "p_sens.mlp", "p_abs.mlp", "train_report.txt"}) CHECK(fs::exists(d / f));
  const auto r = cli("train --map " + (workdir() / "map.csv").string() + " --out " + (workdir() / "again").string() +
                     " --hidden 20 --epochs 50");
  REQUIRE(r.status == 0);
  const auto out = lines(r.out);
  REQUIRE(out.size() == 5);
  CHECK(out[0] == "parameters 101");
  CHECK(out[1] == "capacity,n_hidden,train_mse,generalization_mse,generalization_max_abs");
  CHECK(out[2].rfind("p_tot,20,", 0) == 0);
  CHECK(out[4].rfind("p_abs,20,", 0) == 0);
  CHECK(parse_network(slurp(workdir() / "again" / "p_sens.mlp")).trained_with->epochs == 50);
}

TEST_CASE("missing input exits 2 without outputs") {
  const auto out = workdir() / "never";
  const auto r = cli("train --map " + (workdir() / "absent.csv").string() + " --out " + out.string());
  CHECK(r.status == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(r.err.find("absent.csv") != std::string::npos);
  CHECK(cli("train --out " + out.string()).status == 2);
  CHECK(cli("frobnicate").status == 2);
}

TEST_CASE("seed flag and environment fallback agree") {
  const std::string map = (workdir() / "map.csv").string();
  trained_models();
  const auto a = workdir() / "seed_flag";
  const auto b = workdir() / "seed_env";
  REQUIRE(cli("train --map " + map + " --out " + a.string() + " --hidden 3 --epochs 100 --seed 5").status == 0);
  REQUIRE(cli("train --map " + map + " --out " + b.string() + " --hidden 3 --epochs 100", "SURROMAP_SEED=5").status ==
          0);
  CHECK(slurp(a / "p_tot.mlp") == slurp(b / "p_tot.mlp"));
  const auto c = workdir() / "seed_default";
  REQUIRE(cli("train --map " + map + " --out " + c.string() + " --hidden 3 --epochs 100").status == 0);
  CHECK(slurp(a / "p_tot.mlp") != slurp(c / "p_tot.mlp"));
}

TEST_CASE("prune with threshold zero keeps the architecture") {
  const auto& d = trained_models();
  const auto out = workdir() / "same.mlp";
  const auto r = cli("prune --model " + (d / "p_abs.mlp").string() + " --map " + (workdir() / "map.csv").string() +
                     " --out " + out.string() + " --threshold 0 --epochs 200");
  REQUIRE(r.status == 0);
  CHECK(parse_network(slurp(out)).n_hidden == 20);
  CHECK(r.out.rfind("neuron,mean,std,kept\n", 0) == 0);
  CHECK(r.out.find("# n_hidden_after 20") != std::string::npos);
}

TEST_CASE("prune reduces a net trained on a two-unit target") {
  const auto task = oracle::two_unit_teacher();
  std::vector<PerformanceRecord> records;
  for (const auto* d : {&task.train, &task.generalization}) {
    for (std::size_t r = 0; r < d->size(); ++r) {
      const auto x = d->row(r);
      records.push_back({x[0], x[1], x[2], d->targets[r], d->targets[r], std::nullopt, false});
    }
  }
  std::ostringstream csv;
  write_map(csv, records);
  const auto map = workdir() / "teacher.csv";
  spit(map, csv.str());
  const auto models = workdir() / "teacher";
  REQUIRE(cli("train --map " + map.string() + " --out " + models.string() + " --hidden 20").status == 0);
  const auto r = cli("prune --model " + (models / "p_tot.mlp").string() + " --map " + map.string() + " --out " +
                     (workdir() / "teacher_pruned.mlp").string());
  REQUIRE(r.status == 0);
  std::size_t before = 0, after = 0;
  for (const auto& l : lines(r.out)) {
    if (l.rfind("# n_hidden_before ", 0) == 0) before = std::stoul(l.substr(18));
    if (l.rfind("# n_hidden_after ", 0) == 0) after = std::stoul(l.substr(17));
  }
  CHECK(before == 20);
  CHECK(after < before);
  CHECK(parse_network(slurp(workdir() / "teacher_pruned.mlp")).n_hidden == after);
  // Per-neuron rows carry mean and std.
  CHECK(fields(lines(r.out)[1]).size() == 4);
}

TEST_CASE("metamodel term sets") {
  const auto& d = trained_models();
  const auto model = (d / "p_abs.mlp").string();
  const auto eq5 = cli("metamodel --model " + model + " --terms eq5 --out " + (workdir() / "abs5.poly").string());
  REQUIRE(eq5.status == 0);
  auto out = lines(eq5.out);
  CHECK(out.size() == 1 + 7 + 1);
  CHECK(out.back().rfind("fit_error ", 0) == 0);
  CHECK(parse_metamodel(slurp(workdir() / "abs5.poly")).terms.size() == 7);

  const auto eq7 = cli("metamodel --model " + model + " --terms eq7 --out " + (workdir() / "abs7.poly").string());
  REQUIRE(eq7.status == 0);
  out = lines(eq7.out);
  CHECK(out.size() == 1 + 8 + 1);
  CHECK(eq7.out.find("t_edb*t_ewb^2,") != std::string::npos);
  const auto persisted = parse_metamodel(slurp(workdir() / "abs7.poly"));
  CHECK(persisted.fit_error > 0.0);
  CHECK(out.back() == "fit_error " + text::format_double(persisted.fit_error));

  const auto custom = cli("metamodel --model " + model + " --terms 'custom:1;t_ewb;t_ewb^2;t_ewb*t_odb' --out " +
                          (workdir() / "absc.poly").string());
  CHECK(custom.status == 0);
  CHECK(cli("metamodel --model " + model + " --terms eq8 --out " + (workdir() / "bad.poly").string()).status == 1);
  CHECK_FALSE(fs::exists(workdir() / "bad.poly"));
}

TEST_CASE("predict flags and corrects a dry coil") {
  const auto d = dry_polynomials();
  const std::string point = " --odb 40.56 --edb 32.22 --ewb 10";
  const auto off = cli("predict " + model_flags(d) + point);
  REQUIRE(off.status == 0);
  auto rec = fields(lines(off.out)[1]);
  CHECK(rec[6] == "true");
  CHECK(rec[8] == "false");

  const auto on = cli("predict " + model_flags(d) + point + " --correct-dry-coil");
  REQUIRE(on.status == 0);
  rec = fields(lines(on.out)[1]);
  CHECK(rec[3] == rec[4]);
  CHECK(rec[8] == "true");
  CHECK(std::abs(text::parse_double(rec[7]) - 18.33) < 1e-6);
}

TEST_CASE("predict at the anchor against synthetic-map models") {
  const auto& d = trained_models();
  const auto r = cli("predict " + model_flags(d) + " --odb 40.56 --edb 32.22 --ewb 18.33 --correct-dry-coil");
  REQUIRE(r.status == 0);
  const auto rec = fields(lines(r.out)[1]);
  CHECK(std::abs(text::parse_double(rec[3]) - 33.17) <= 0.05 * 33.17);
  CHECK(std::abs(text::parse_double(rec[4]) - 33.17) <= 0.05 * 33.17);
}

TEST_CASE("domain and usage errors") {
  const auto& d = trained_models();
  CHECK(cli("predict " + model_flags(d) + " --odb 40 --edb 20 --ewb 25").status == 1);
  CHECK(cli("predict " + model_flags(d) + " --odb 60 --edb 20 --ewb 15").status == 1);
  CHECK(cli("predict " + model_flags(d) + " --odb 60 --edb 20 --ewb 15 --allow-extrapolation").status == 0);
  CHECK(cli("simulate " + model_flags(d) + " --odb 40 --edb 30 --ewb 20 --horizon 10").status == 2);
  CHECK(cli("simulate " + model_flags(d) + " --odb 40 --edb 30 --ewb 20 --horizon 10 --tau 0").status == 1);
}

TEST_CASE("simulate follows the first-order response") {
  const auto& d = trained_models();
  const auto r = cli("simulate " + model_flags(d) + " --odb 35 --edb 26.67 --ewb 19.4 --tau 60 --horizon 600 --steps 10");
  REQUIRE(r.status == 0);
  const auto out = lines(r.out);
  REQUIRE(out.size() == 12);
  CHECK(out[0] == "t,q_tot_cyc,q_sens_cyc,q_abs_cyc");
  const auto ss = cli("predict " + model_flags(d) + " --odb 35 --edb 26.67 --ewb 19.4");
  const double q_tot = text::parse_double(fields(lines(ss.out)[1])[3]);
  const auto at_tau = fields(out[2]);
  CHECK(at_tau[0] == "60");
  CHECK(std::abs(text::parse_double(at_tau[1]) / q_tot - 0.6321) <= 1e-4);
  double prev = -1.0;
  const std::string abs0 = fields(out[1])[3];
  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto f = fields(out[i]);
    CHECK(f[3] == abs0);
    CHECK(text::parse_double(f[1]) >= prev);
    prev = text::parse_double(f[1]);
  }

  const auto zero = cli("simulate " + model_flags(d) + " --odb 35 --edb 26.67 --ewb 19.4 --tau 60 --horizon 0");
  REQUIRE(zero.status == 0);
  const auto z = lines(zero.out);
  REQUIRE(z.size() == 2);
  CHECK(fields(z[1])[0] == "0");
}

TEST_CASE("analyze flags no input on the synthetic map") {
  const auto& d = trained_models();
  const auto r = cli("analyze --model " + (d / "p_tot.mlp").string());
  REQUIRE(r.status == 0);
  const auto out = lines(r.out);
  REQUIRE(out.size() == 4);
  CHECK(out[0] == "factor,first_order,total,std_total,irrelevant");
  for (std::size_t i = 1; i < 4; ++i) CHECK(fields(out[i]).back() == "0");
}

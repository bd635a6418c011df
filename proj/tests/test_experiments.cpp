#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "gammahom/experiments.hpp"

using namespace gammahom;

namespace {

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gammahom_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) { return detail::read_text_file(path); }

}  // namespace

TEST_CASE("dw scenario is deterministic and graded from its files", "[experiments]") {
  const json cfg{{"queries", 36}};
  const std::string dir_a = fresh_dir("dw_a");
  const std::string dir_b = fresh_dir("dw_b");

  const auto first = run_scenario("dw", cfg, 7, dir_a);
  CHECK(first.all_pass());
  run_scenario("dw", cfg, 7, dir_b);
  CHECK(slurp(dir_a + "/dw.csv") == slurp(dir_b + "/dw.csv"));
  CHECK(slurp(dir_a + "/results.json") == slurp(dir_b + "/results.json"));

  const std::string before = slurp(dir_a + "/dw.csv");
  run_scenario("dw", cfg, 7, dir_a);
  CHECK(slurp(dir_a + "/dw.csv") == before);

  const json rec_a = detail::load_json_file(dir_a + "/run_record.json");
  const json rec_b = detail::load_json_file(dir_b + "/run_record.json");
  CHECK(rec_a.at("outputs") == rec_b.at("outputs"));
  CHECK(rec_a.at("config_fnv64") == rec_b.at("config_fnv64"));

  // break one stored distance and regrade without recomputing
  auto table = detail::read_csv(dir_a + "/dw.csv");
  table.rows[0][3] += 0.5;
  detail::write_csv(dir_a + "/dw.csv", table.header, table.rows);
  const auto regraded = run_scenario("dw", cfg, 7, dir_a, 1, true);
  CHECK_FALSE(regraded.all_pass());
}

TEST_CASE("whom scenario grades convexity and the zero set", "[experiments]") {
  const json cfg{{"micro_m", 64},
                 {"pairs", 20},
                 {"p_grid", json{{"lo", -1.5}, {"hi", 1.5}, {"count", 16}}}};
  const std::string dir = fresh_dir("whom");
  const auto outcome = run_scenario("whom", cfg, 3, dir);
  CHECK(outcome.all_pass());

  const json meta = detail::load_json_file(dir + "/whom.json");
  CHECK(meta.at("zero_set")[0].get<double>() == Catch::Approx(-1.0).margin(1e-12));
  CHECK(meta.at("zero_set")[1].get<double>() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("h1 scenario stores the optimal selection", "[experiments]") {
  const json cfg{{"micro_m", 64}, {"p", 0.0}};
  const std::string dir = fresh_dir("h1");
  const auto outcome = run_scenario("h1", cfg, 1, dir);
  CHECK(outcome.all_pass());
  const json rec = detail::load_json_file(dir + "/h1.json");
  CHECK(rec.at("value").get<double>() == Catch::Approx(16.0 / 3.0).epsilon(0.02));
  CHECK(rec.at("interfaces").get<int>() == 2);
}

TEST_CASE("energy scenario checks the unfolding identity", "[experiments]") {
  const std::string dir = fresh_dir("energy");
  CHECK(run_scenario("energy", json::object(), 1, dir).all_pass());

  const json tanh_cfg{{"field", "tanh"}, {"macro_n", 512}, {"eps_ratio", 1.0 / 32.0}};
  CHECK(run_scenario("energy", tanh_cfg, 1, fresh_dir("energy_tanh")).all_pass());
}

TEST_CASE("minimize scenario writes a monotone trace", "[experiments]") {
  const json cfg{{"macro_n", 64}, {"eps_ratio", 0.5}, {"max_iters", 4000},
                 {"grad_tol", 1e-10}};
  const std::string dir = fresh_dir("minimize");
  CHECK(run_scenario("minimize", cfg, 2, dir).all_pass());

  json constrained = cfg;
  constrained["mass"] = 0.0;
  const auto outcome = run_scenario("minimize", constrained, 2, fresh_dir("minimize_m"));
  CHECK(outcome.all_pass());
}

TEST_CASE("recovery scenario meets the interface prediction", "[experiments]") {
  const std::string dir = fresh_dir("recovery");
  const auto outcome = run_scenario("recovery", json::object(), 1, dir);
  CHECK(outcome.all_pass());
  const json results = detail::load_json_file(dir + "/results.json");
  CHECK(results.at("all_pass").get<bool>());
  CHECK(results.at("scenario").get<std::string>() == "recovery");
}

TEST_CASE("scaling scenario fits both exponents", "[experiments]") {
  CHECK(run_scenario("scaling", json::object(), 1, fresh_dir("scaling_jump")).all_pass());

  const json smooth{{"pattern", json{{"kind", "uniform"}}},
                    {"potential", json{{"wobble", 0.1}}},
                    {"expect_slope", 2.0},
                    {"slope_margin", 0.2},
                    {"check_shares", false}};
  CHECK(run_scenario("scaling", smooth, 1, fresh_dir("scaling_smooth")).all_pass());
}

TEST_CASE("gamma0 scenario reaches the basin floor", "[experiments]") {
  const json cfg{{"deltas", std::vector<double>{0.25, 0.125}}, {"seeds", 4}};
  const auto outcome = run_scenario("gamma0", cfg, 1, fresh_dir("gamma0"));
  CHECK(outcome.all_pass());
}

TEST_CASE("gamma1 scenario approaches the cell value", "[experiments]") {
  const std::string dir = fresh_dir("gamma1");
  const auto outcome = run_scenario("gamma1", json::object(), 1, dir);
  CHECK(outcome.all_pass());
  const json rec = detail::load_json_file(dir + "/gamma1.json");
  CHECK(rec.at("prediction").get<double>() == Catch::Approx(16.0 / 3.0).epsilon(0.01));
}

TEST_CASE("dichotomy scenario separates continuous from split wells", "[experiments]") {
  const std::string dir = fresh_dir("dichotomy");
  const auto outcome = run_scenario("dichotomy", json::object(), 1, dir);
  CHECK(outcome.all_pass());
  const json rec = detail::load_json_file(dir + "/dichotomy.json");
  bool saw_bz = false;
  for (const auto& c : rec.at("cases"))
    if (c.at("family") == "bz" && c.value("k", 0.0) > 0.0) {
      saw_bz = true;
      CHECK(c.at("min_value").get<double>() == Catch::Approx(0.36).margin(1e-6));
    }
  CHECK(saw_bz);
}

TEST_CASE("verify-assumptions passes for the builtin families", "[experiments]") {
  CHECK(run_scenario("verify-assumptions", json::object(), 5, fresh_dir("verify_q"))
            .all_pass());
  const json bz{{"potential", json{{"family", "bz"}, {"k", 0.3}}}};
  CHECK(run_scenario("verify-assumptions", bz, 5, fresh_dir("verify_bz")).all_pass());
}

TEST_CASE("scenario dispatch validates its inputs", "[experiments]") {
  CHECK_THROWS_AS(run_scenario("nope", json::object(), 1, fresh_dir("bad_name")),
                  BadConfig);
  CHECK_THROWS_AS(run_scenario("dw", json::object(), 1, fresh_dir("bad_jobs"), 0),
                  BadConfig);
  CHECK_THROWS_AS(potential_from_config(json{{"family", "cubic"}}), BadConfig);
  CHECK_THROWS_AS(pattern_from_config(json{{"kind", "stripes"}}), BadConfig);
}

TEST_CASE("worker count does not change the bytes", "[experiments]") {
  const json cfg{{"micro_m", 64},
                 {"pairs", 12},
                 {"p_grid", json{{"lo", -1.2}, {"hi", 1.2}, {"count", 12}}}};
  const std::string serial = fresh_dir("whom_serial");
  const std::string pooled = fresh_dir("whom_pooled");
  run_scenario("whom", cfg, 9, serial, 1);
  run_scenario("whom", cfg, 9, pooled, 3);
  CHECK(slurp(serial + "/whom.csv") == slurp(pooled + "/whom.csv"));
  CHECK(slurp(serial + "/whom_pairs.csv") == slurp(pooled + "/whom_pairs.csv"));
}

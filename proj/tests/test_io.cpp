// Copyright 2026 The btlcov Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "btlcov/io.hpp"
#include "btlcov/serialize.hpp"
#include "btlcov/simulate.hpp"
#include "test_support.hpp"

using btlcov::ComparisonDataset;
using btlcov::Edge;
using btlcov::Matrix;
using btlcov::ParseError;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("btlcov_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  out << contents;
}

}  // namespace

TEST_CASE("toy dataset loads with expected counts", "[io]") {
  TempDir dir;
  write_file(dir.file("cov.csv"),
             "item_id,x1\n"
             "0,0.0\n"
             "2,2.0\n"
             "1,-1.0\n");
  write_file(dir.file("cmp.csv"),
             "item_i,item_j,wins_j,trials\n"
             "0,1,3,5\n"
             "2,1,1,4\n");
  const auto load = btlcov::load_dataset(dir.file("cov.csv"),
                                         dir.file("cmp.csv"));
  CHECK(load.data.n() == 3);
  CHECK(load.data.d() == 1);
  REQUIRE(load.data.num_edges() == 2);
  // Row (0,1,3,5): item 1 won 3 of 5, canonical edge (1,0) stores 3.
  CHECK(load.data.edges()[0].i == 1);
  CHECK(load.data.edges()[0].j == 0);
  CHECK(load.data.edges()[0].wins == 3);
  CHECK(load.data.edges()[0].trials == 5);
  // Row (2,1,1,4): item 1 won 1, so item 2 (canonical i) won 3.
  CHECK(load.data.edges()[1].i == 2);
  CHECK(load.data.edges()[1].j == 1);
  CHECK(load.data.edges()[1].wins == 3);
  CHECK(load.data.l_ref() == 4);  // lower median of {4, 5}
  CHECK(load.covariate_scale > 1.0);
}

TEST_CASE("long format aggregates trials per pair", "[io]") {
  TempDir dir;
  write_file(dir.file("cov.csv"), "item_id\n0\n1\n2\n");
  write_file(dir.file("cmp.csv"),
             "winner,loser\n"
             "2,1\n"
             "2,1\n"
             "2,1\n"
             "0,1\n"
             "1,0\n");
  const auto load = btlcov::load_dataset(dir.file("cov.csv"),
                                         dir.file("cmp.csv"));
  REQUIRE(load.data.num_edges() == 2);
  CHECK(load.data.edges()[0].i == 1);
  CHECK(load.data.edges()[0].j == 0);
  CHECK(load.data.edges()[0].trials == 2);
  CHECK(load.data.edges()[0].wins == 1);  // item 1 beat item 0 once
  CHECK(load.data.edges()[1].i == 2);
  CHECK(load.data.edges()[1].j == 1);
  CHECK(load.data.edges()[1].wins == 3);
  CHECK(load.data.edges()[1].trials == 3);
}

TEST_CASE("the reference trial count can be overridden", "[io]") {
  TempDir dir;
  write_file(dir.file("cov.csv"), "item_id\n0\n1\n2\n");
  write_file(dir.file("cmp.csv"),
             "item_i,item_j,wins_j,trials\n0,1,3,5\n1,2,2,9\n");
  const auto median = btlcov::load_dataset(dir.file("cov.csv"),
                                           dir.file("cmp.csv"));
  CHECK(median.data.l_ref() == 5);  // lower median of {5, 9}
  const auto forced = btlcov::load_dataset(dir.file("cov.csv"),
                                           dir.file("cmp.csv"), 9);
  CHECK(forced.data.l_ref() == 9);
  CHECK(forced.data.weight(1) == 1.0);
}

TEST_CASE("dataset round-trips bit-identically", "[io]") {
  TempDir dir;
  const auto inst = btlcov_test::random_instance(9, 2, 0.6, 7, 3131);
  btlcov::write_dataset(inst.data, dir.file("cov.csv"), dir.file("cmp.csv"));
  const auto load = btlcov::load_dataset(dir.file("cov.csv"),
                                         dir.file("cmp.csv"));
  CHECK(load.data.covariates() == inst.data.covariates());
  CHECK(load.data.l_ref() == inst.data.l_ref());
  REQUIRE(load.data.num_edges() == inst.data.num_edges());
  for (long e = 0; e < load.data.num_edges(); ++e) {
    CHECK(load.data.edges()[e].i == inst.data.edges()[e].i);
    CHECK(load.data.edges()[e].j == inst.data.edges()[e].j);
    CHECK(load.data.edges()[e].wins == inst.data.edges()[e].wins);
    CHECK(load.data.edges()[e].trials == inst.data.edges()[e].trials);
  }
  CHECK(load.covariate_scale == 1.0);  // already rescaled at generation
}

TEST_CASE("loader rejects malformed inputs with line numbers", "[io]") {
  TempDir dir;
  write_file(dir.file("cov.csv"), "item_id,x1\n0,0.1\n1,0.2\n2,0.3\n");

  SECTION("non-contiguous ids") {
    write_file(dir.file("bad_cov.csv"), "item_id,x1\n0,0.1\n5,0.2\n2,0.3\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("bad_cov.csv"), dir.file("cov.csv")),
        ParseError, Catch::Matchers::MessageMatches(
                        ContainsSubstring("contiguous")));
  }
  SECTION("duplicate item ids") {
    write_file(dir.file("dup_cov.csv"), "item_id,x1\n0,0.1\n0,0.2\n1,0.3\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("dup_cov.csv"), dir.file("cov.csv")),
        ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("duplicate")));
  }
  SECTION("self pair carries its line number") {
    write_file(dir.file("cmp.csv"),
               "item_i,item_j,wins_j,trials\n1,0,1,2\n2,2,1,2\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("cov.csv"), dir.file("cmp.csv")),
        ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("cmp.csv:3")));
  }
  SECTION("duplicate pairs in either order") {
    write_file(dir.file("cmp.csv"),
               "item_i,item_j,wins_j,trials\n1,0,1,2\n0,1,1,2\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("cov.csv"), dir.file("cmp.csv")),
        ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("duplicate pair")));
  }
  SECTION("wins beyond trials") {
    write_file(dir.file("cmp.csv"),
               "item_i,item_j,wins_j,trials\n1,0,5,2\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("cov.csv"), dir.file("cmp.csv")),
        ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("cmp.csv:2")));
  }
  SECTION("unknown header") {
    write_file(dir.file("cmp.csv"), "a,b\n1,0\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("cov.csv"), dir.file("cmp.csv")),
        ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("header")));
  }
  SECTION("numbers must parse") {
    write_file(dir.file("cmp.csv"),
               "item_i,item_j,wins_j,trials\n1,0,abc,2\n");
    CHECK_THROWS_MATCHES(
        btlcov::load_dataset(dir.file("cov.csv"), dir.file("cmp.csv")),
        ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("integer")));
  }
}

TEST_CASE("config files are strict and round-trip", "[io]") {
  TempDir dir;

  SECTION("valid file with comments and blanks") {
    write_file(dir.file("run.cfg"),
               "# solver settings\n"
               "lambda = 1.5\n"
               "\n"
               "tau = 0.25\n"
               "B = 300\n"
               "alpha = 0.1\n"
               "seed = 42\n"
               "preset = table1\n");
    const auto config = btlcov::read_config(dir.file("run.cfg"));
    CHECK(config.lambda == 1.5);
    CHECK(config.tau == 0.25);
    CHECK(config.bootstrap_b == 300);
    CHECK(config.alpha_level == 0.1);
    CHECK(config.seed == 42);
    CHECK(config.preset == "table1");
    CHECK_FALSE(config.covariates.has_value());
  }
  SECTION("empty file gives all defaults") {
    write_file(dir.file("empty.cfg"), "");
    const auto config = btlcov::read_config(dir.file("empty.cfg"));
    CHECK_FALSE(config.lambda.has_value());
    CHECK_FALSE(config.preset.has_value());
  }
  SECTION("unknown keys are named") {
    write_file(dir.file("bad.cfg"), "lambda = 1\nshrinkage = 2\n");
    CHECK_THROWS_MATCHES(
        btlcov::read_config(dir.file("bad.cfg")), ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("shrinkage")));
  }
  SECTION("all violations are enumerated") {
    write_file(dir.file("bad.cfg"),
               "mystery = 1\nlambda = abc\nother = 2\n");
    try {
      btlcov::read_config(dir.file("bad.cfg"));
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string message = e.what();
      CHECK(message.find("mystery") != std::string::npos);
      CHECK(message.find("number") != std::string::npos);
      CHECK(message.find("other") != std::string::npos);
    }
  }
  SECTION("missing referenced files are reported") {
    write_file(dir.file("missing.cfg"), "covariates = /no/such/file.csv\n");
    CHECK_THROWS_MATCHES(
        btlcov::read_config(dir.file("missing.cfg")), ParseError,
        Catch::Matchers::MessageMatches(ContainsSubstring("does not exist")));
  }
  SECTION("write then read reproduces every field") {
    btlcov::RunConfig config;
    config.lambda = 0.123456789012345;
    config.tau = 3.25;
    config.bootstrap_b = 17;
    config.alpha_level = 0.05;
    config.seed = 7;
    config.threads = 2;
    config.preset = "fig3";
    config.reps = 10;
    btlcov::write_config(config, dir.file("round.cfg"));
    const auto back = btlcov::read_config(dir.file("round.cfg"));
    CHECK(back.lambda == config.lambda);
    CHECK(back.tau == config.tau);
    CHECK(back.bootstrap_b == config.bootstrap_b);
    CHECK(back.alpha_level == config.alpha_level);
    CHECK(back.seed == config.seed);
    CHECK(back.threads == config.threads);
    CHECK(back.preset == config.preset);
    CHECK(back.reps == config.reps);
  }
}

TEST_CASE("fit results round-trip through JSON exactly", "[io]") {
  TempDir dir;
  const auto inst = btlcov_test::random_instance(8, 2, 0.7, 12, 3232, 0.5);
  btlcov::FitConfig config;
  config.lambda = 0.4;
  config.tau = 0.02;
  const btlcov::FitResult result = btlcov::fit(inst.data, config);

  btlcov::RunEcho echo;
  echo.covariates_path = "cov.csv";
  echo.comparisons_path = "cmp.csv";
  const auto j = btlcov::fit_result_to_json(result, echo);
  btlcov::write_json(j, dir.file("fit.json"));
  btlcov::RunEcho echo_back;
  const btlcov::FitResult back = btlcov::fit_result_from_json(
      btlcov::read_json(dir.file("fit.json")), &echo_back);

  CHECK(back.params.alpha == result.params.alpha);
  CHECK(back.params.beta == result.params.beta);
  CHECK(back.support == result.support);
  CHECK(back.iterations == result.iterations);
  CHECK(back.residual == result.residual);
  CHECK(back.converged == result.converged);
  CHECK(back.lambda == result.lambda);
  CHECK(back.tau == result.tau);
  CHECK(echo_back.covariates_path == "cov.csv");
  CHECK(echo_back.comparisons_path == "cmp.csv");

  SECTION("schema violations are rejected") {
    auto broken = j;
    broken["schema_version"] = 999;
    CHECK_THROWS_AS(btlcov::fit_result_from_json(broken), ParseError);
  }
}

TEST_CASE("covariate serialization keeps full precision", "[io]") {
  TempDir dir;
  Matrix x(2, 1);
  x << 0.1234567890123456789, -1.0 / 3.0;
  const auto [scaled, k] = btlcov::rescale_covariates(x);
  ComparisonDataset data(scaled, {Edge{1, 0, 1, 2}}, 2);
  btlcov::write_dataset(data, dir.file("cov.csv"), dir.file("cmp.csv"));
  const auto load =
      btlcov::load_dataset(dir.file("cov.csv"), dir.file("cmp.csv"));
  CHECK(load.data.covariates()(0, 0) == scaled(0, 0));
  CHECK(load.data.covariates()(1, 0) == scaled(1, 0));
}

// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "hubbard_phonon/cli.hpp"

using namespace hubbard_phonon;
using cli::json;

namespace {

json base() {
  return json::parse(R"({
    "lattice": {"n_sites": 2, "chain": {"t": -1.0}},
    "electrons": {"n_e": 2},
    "interaction": {"u": 1.0},
    "coupling": {"alpha": 0.5},
    "phonons": {"beta": 0.5, "big_k": 1.0, "kappa": 0.1}
  })");
}

std::string error_of(const json& doc) {
  try {
    cli::parse_config(doc);
  } catch (const cli::ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(cli::fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(cli::fmt(1.0), "1");
  EXPECT_EQ(cli::fmt(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(std::stod(cli::fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Format, Fnv1aReferenceVectors) {
  EXPECT_EQ(cli::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(cli::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(cli::fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Config, ParsesDefaults) {
  const cli::RunConfig c = cli::parse_config(base());
  EXPECT_EQ(c.n_sites, 2);
  EXPECT_EQ(c.hopping(0, 1), -1.0);
  EXPECT_EQ(c.n_e, std::vector<int>{2});
  EXPECT_EQ(c.modes_per_site, 2);
  EXPECT_TRUE(c.write_json);
}

TEST(Config, HashIgnoresWhitespaceAndKeyOrder) {
  const json a = base();
  const json b = json::parse(a.dump(4));
  EXPECT_EQ(cli::config_hash(cli::parse_config(a)), cli::config_hash(cli::parse_config(b)));
  json c = a;
  c["interaction"]["u"] = 1.5;
  EXPECT_NE(cli::config_hash(cli::parse_config(a)), cli::config_hash(cli::parse_config(c)));
}

TEST(Config, AlphaGridFromRange) {
  json d = base();
  d["coupling"] = {{"alpha_grid", {{"start", 0.2}, {"stop", 2.0}, {"step", 0.02}}}};
  const cli::RunConfig c = cli::parse_config(d);
  ASSERT_EQ(c.alpha.size(), 91u);
  EXPECT_DOUBLE_EQ(c.alpha.front(), 0.2);
  EXPECT_NEAR(c.alpha.back(), 2.0, 1e-14);
  EXPECT_NEAR(c.alpha[43], 1.06, 1e-14);
}

TEST(Config, RejectsPhysicallyInvalidInput) {
  json d = base();
  d["electrons"]["n_e"] = 5;
  EXPECT_NE(error_of(d).find("Pauli"), std::string::npos);

  d = base();
  d["phonons"]["beta"] = 0.0;
  EXPECT_NE(error_of(d).find("square integrable"), std::string::npos);

  d = base();
  d["phonons"]["kappa"] = 1.5;
  EXPECT_NE(error_of(d).find("kappa < big_k"), std::string::npos);

  d = base();
  d["lattice"] = {{"n_sites", 2}, {"hopping", {{0.0, 1.0}, {0.5, 0.0}}}};
  EXPECT_NE(error_of(d).find("symmetric"), std::string::npos);

  d = base();
  d["lattice"] = {{"n_sites", 3}, {"tasaki", {{"t0", 1.0}, {"t_x", {1.0, -1.0, 1.0}}}}};
  EXPECT_NE(error_of(d).find("t_x"), std::string::npos);

  d = base();
  d["coupling"] = {{"alpha_grid", {0.5, 0.4}}};
  EXPECT_NE(error_of(d).find("ascending"), std::string::npos);

  d = base();
  d.erase("interaction");
  EXPECT_NE(error_of(d).find("interaction"), std::string::npos);
}

TEST(Config, RejectsWrongTypes) {
  json d = base();
  d["electrons"]["n_e"] = 1.5;
  EXPECT_NE(error_of(d).find("integer"), std::string::npos);
}

TEST(Csv, MetadataHeaderAndQuoting) {
  const auto path = std::filesystem::temp_directory_path() / "hubbard_phonon_csv_test.csv";
  {
    cli::CsvWriter w(path, {{"seed", "1"}}, {"a", "b"});
    w.row({"x,y", "say \"hi\""});
  }
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "# seed: 1\na,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  std::filesystem::remove(path);
}

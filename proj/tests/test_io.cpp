#include <sstream>

#include "doctest.h"
#include "pcsamp/io.hpp"

using namespace pcsamp;

TEST_CASE("config accepts both delimiters, comments, and defaults") {
  std::istringstream in(
      "# sampling setup\n"
      "mode vii\n"
      "k = 16\n"
      "n_b 4\n"
      "gamma=0.95\n"
      "tau 0.2\n"
      "variant insert\n"
      "policy prior\n"
      "seed 1234\n");
  const ConfigFile file = parse_config(in);
  CHECK(file.config.mode == IndexingMode::column_square_divided);
  CHECK(file.config.k == 16);
  CHECK(file.config.bin_count == 4);
  CHECK(file.config.gamma == doctest::Approx(0.95));
  CHECK(file.config.tau == doctest::Approx(0.2));
  CHECK(file.config.variant == SamVariant::insert);
  CHECK(file.config.policy == SamplePolicy::prior);
  REQUIRE(file.seed.has_value());
  CHECK(*file.seed == 1234);

  std::istringstream empty("");
  const ConfigFile defaults = parse_config(empty);
  CHECK(defaults.config.mode == IndexingMode::column_square_divided);
  CHECK(defaults.config.k == 32);
  CHECK(defaults.config.bin_count == 6);
  CHECK(defaults.config.gamma == doctest::Approx(0.99));
  CHECK(defaults.config.tau == doctest::Approx(0.1));
  CHECK(defaults.config.variant == SamVariant::carve);
  CHECK(defaults.config.policy == SamplePolicy::bin);
  CHECK_FALSE(defaults.seed.has_value());
}

TEST_CASE("config rejects unknown keys, bad values, and bad combinations") {
  std::istringstream unknown("modes vii\n");
  CHECK_THROWS_AS(parse_config(unknown), FormatError);
  std::istringstream bad_mode("mode viii\n");
  CHECK_THROWS_AS(parse_config(bad_mode), FormatError);
  std::istringstream bad_num("k abc\n");
  CHECK_THROWS_AS(parse_config(bad_num), FormatError);
  std::istringstream bad_combo("variant insert\nmode iv\n");
  CHECK_THROWS_AS(parse_config(bad_combo), IncompatibleMode);
  std::istringstream bad_tau("tau 0\n");
  CHECK_THROWS_AS(parse_config(bad_tau), InvalidTau);
}

TEST_CASE("state file round-trips") {
  CalibrationState state;
  state.bin_count = 4;
  state.gamma = 0.99;
  state.steps = 321;
  state.boundaries.resize(3);
  state.boundaries << 0.674510203040506, 1e-17, -0.674489750196082;

  std::stringstream buf;
  save_state(buf, state);
  const CalibrationState back = load_state(buf);
  CHECK(back.bin_count == 4);
  CHECK(back.gamma == state.gamma);
  CHECK(back.steps == 321);
  CHECK(back.boundaries == state.boundaries);
}

TEST_CASE("state loader rejects malformed files") {
  std::istringstream missing("# just a comment\n");
  CHECK_THROWS_AS(load_state(missing), FormatError);
  std::istringstream short_list("3 0.99 10\n0.5\n");
  CHECK_THROWS_AS(load_state(short_list), FormatError);
  std::istringstream junk("3 0.99 10\n0.5\nxyz\n");
  CHECK_THROWS_AS(load_state(junk), FormatError);
}

TEST_CASE("sample serialization is the documented line format") {
  SampleResult r;
  r.indices.resize(2);
  r.indices << 5, 3;
  r.scores.resize(2);
  r.scores << 1.5, -0.25;
  r.bins.resize(2);
  r.bins << 0, 2;
  r.seed = 42;
  r.policy = Policy::bin;
  std::ostringstream out;
  write_sample_result(out, r, 10);
  CHECK(out.str() ==
        "# N=10 M=2 seed=42 policy=bin\n"
        "5 1.5 0\n"
        "3 -0.25 2\n");

  r.shortfall = true;
  r.policy = Policy::voxel;
  std::ostringstream out2;
  write_sample_result(out2, r, 10);
  CHECK(out2.str().find("shortfall=1") != std::string::npos);
}

TEST_CASE("score and histogram tables carry their metadata headers") {
  ScoreVector scores;
  scores.raw.resize(2);
  scores.raw << 0.25, 0.5;
  scores.normalized.resize(2);
  scores.normalized << -0.5, 1.5;
  scores.mode = IndexingMode::column_average;
  PipelineConfig cfg;
  cfg.k = 12;
  std::ostringstream out;
  write_score_table(out, scores, cfg);
  CHECK(out.str() ==
        "# mode=vi k=12 variant=carve\n"
        "# index raw normalized\n"
        "0 0.25 -0.5\n"
        "1 0.5 1.5\n");

  BinModel model;
  model.bin_count = 2;
  model.counts.resize(2);
  model.counts << 7, 3;
  model.allocations.resize(2);
  model.allocations << 2, 1;
  model.ratios.resize(2);
  model.ratios << 2.0 / 7.0, 1.0 / 3.0;
  model.weights.resize(2);
  model.weights << 0.5, 0.0;
  std::ostringstream hist;
  write_bin_histogram(hist, model, "shape-1", 10, 3);
  const std::string text = hist.str();
  CHECK(text.find("# shape=shape-1 N=10 M=3 n_b=2\n") == 0);
  CHECK(text.find("# bin beta kappa ratio omega\n") != std::string::npos);
  CHECK(text.find("0 7 2 ") != std::string::npos);
  CHECK(text.find("1 3 1 ") != std::string::npos);
}

TEST_CASE("full-precision formatting survives a text round trip") {
  for (double v : {1.0 / 3.0, 0.1, 2.251799813685248e15, -0.674489750196082, 1e-300}) {
    const std::string s = fmt_g17(v);
    double back;
    REQUIRE(detail::parse_double(s, back));
    CHECK(back == v);
  }
}

TEST_CASE("weights format error on header/payload dimension mismatch") {
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  buf.write(kWeightsMagic, 8);
  const std::uint32_t header[4] = {1, 2, 8, 0};  // declares 2x8 projections
  buf.write(reinterpret_cast<const char*>(header), sizeof header);
  const double v = 0.5;
  for (int i = 0; i < 5; ++i) buf.write(reinterpret_cast<const char*>(&v), 8);  // too short
  CHECK_THROWS_AS(load_weights(buf), FormatError);
}

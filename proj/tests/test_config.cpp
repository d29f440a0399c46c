#include <sstream>

#include <doctest.h>

#include "dybm/config_file.hpp"
#include "dybm/errors.hpp"
#include "dybm/experiments.hpp"

using namespace dybm;

TEST_CASE("key=value parsing with comments and whitespace") {
  KeyValueConfig cfg = KeyValueConfig::parse_text(
      "# comment\n"
      "learning_rate = 0.01  # trailing comment\n"
      "  minibatch_size=16\n"
      "\n"
      "method = dropout\n");
  CHECK(cfg.get_double("learning_rate", 0.0) == 0.01);
  CHECK(cfg.get_int("minibatch_size", 0) == 16);
  CHECK(cfg.get_string("method", "") == "dropout");
  cfg.require_consumed();
}

TEST_CASE("unknown keys are rejected") {
  KeyValueConfig cfg = KeyValueConfig::parse_text("lr = 0.1\n");
  CHECK_THROWS_AS(cfg.require_consumed(), ConfigError);

  Markov7Options opts = make_markov7_options("desk");
  KeyValueConfig bad = KeyValueConfig::parse_text("not_a_real_key = 3\n");
  CHECK_THROWS_AS(apply_markov7_config(bad, opts), ConfigError);
}

TEST_CASE("malformed lines and duplicates") {
  CHECK_THROWS_AS(KeyValueConfig::parse_text("novalue\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse_text("a = 1\na = 2\n"), ConfigError);
  KeyValueConfig cfg = KeyValueConfig::parse_text("x = abc\n");
  CHECK_THROWS_AS(cfg.get_double("x", 0.0), ConfigError);
}

TEST_CASE("markov7 config application overrides the preset") {
  Markov7Options opts = make_markov7_options("desk");
  KeyValueConfig cfg = KeyValueConfig::parse_text(
      "seed = 9\n"
      "p = 0.25\n"
      "train_steps = 500\n"
      "learning_rate = 0.005\n"
      "synaptic_decays = 0.1,0.4,0.7\n");
  apply_markov7_config(cfg, opts);
  CHECK(opts.seed == 9);
  CHECK(opts.p_prune == 0.25);
  CHECK(opts.train_steps == 500);
  CHECK(opts.train.learning_rate == 0.005);
  CHECK(opts.model.synaptic_decays == std::vector<double>{0.1, 0.4, 0.7});
}

TEST_CASE("video and sweep config application") {
  VideoOptions vo = make_video_options("desk");
  KeyValueConfig cfg = KeyValueConfig::parse_text(
      "method = dropconnect\n"
      "p = 0.7\n"
      "frames = 12\n"
      "predict = 4\n"
      "train_videos = 6\n");
  apply_video_config(cfg, vo);
  CHECK(vo.method == RegMethod::dropconnect);
  CHECK(vo.p == 0.7);
  CHECK(vo.input_frames == 12);
  CHECK(vo.predict_frames == 4);
  CHECK(vo.train_videos == 6);

  SweepOptions so;
  so.base = make_video_options("desk");
  KeyValueConfig scfg = KeyValueConfig::parse_text(
      "methods = delay-prune,dropout\n"
      "p_list = 0.3,0.5\n"
      "seeds = 1,2,3\n"
      "max_parallel = 2\n");
  apply_sweep_config(scfg, so);
  CHECK(so.methods.size() == 2);
  CHECK(so.p_values == std::vector<double>{0.3, 0.5});
  CHECK(so.seeds.size() == 3);
  CHECK(so.max_parallel == 2);
}

TEST_CASE("config echo stays parseable and stable") {
  Markov7Options opts = make_markov7_options("desk");
  std::ostringstream os1, os2;
  echo_markov7_config(os1, opts);
  echo_markov7_config(os2, opts);
  CHECK(os1.str() == os2.str());
  // round-trip: the echo must be consumable except the subcommand marker
  KeyValueConfig cfg = KeyValueConfig::parse_text(os1.str());
  CHECK(cfg.get_string("subcommand", "") == "markov7");
  Markov7Options back = make_markov7_options("desk");
  apply_markov7_config(cfg, back);
  CHECK(back.train_steps == opts.train_steps);
  CHECK(back.model.synaptic_decays == opts.model.synaptic_decays);
}

TEST_CASE("scale presets differ only in sizes") {
  const Markov7Options desk = make_markov7_options("desk");
  const Markov7Options paper = make_markov7_options("paper");
  CHECK(desk.model.n_units == paper.model.n_units);
  CHECK(desk.model.synaptic_decays == paper.model.synaptic_decays);
  CHECK(desk.train.learning_rate == paper.train.learning_rate);
  CHECK(paper.train_steps > desk.train_steps);
  CHECK_THROWS_AS(make_markov7_options("huge"), ConfigError);
}

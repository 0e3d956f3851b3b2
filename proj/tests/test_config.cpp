// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "gridattn/config.hpp"
#include "gridattn/error.hpp"
#include "helpers.hpp"

using namespace gridattn;

TEST_CASE("presets mirror the published table") {
  CHECK(presets().size() == 16);
  std::set<std::string> names;
  for (const auto& p : presets()) names.insert(p.name);
  CHECK(names.size() == 16);

  const Preset& gcn = find_preset("fr-gcn");
  CHECK(gcn.kind == LayerKind::kGcn);
  CHECK(gcn.hidden == 170);
  CHECK(gcn.lr == 3e-3);
  CHECK_FALSE(gcn.remapped());

  const Preset& cheb = find_preset("uk-cheb");
  CHECK(cheb.hops == 10);
  CHECK(cheb.n_layers == 4);
  CHECK(find_preset("uk-appnp").teleport == 0.85);

  CHECK(find_preset("fr-gat").remapped());
  CHECK(find_preset("fr-gat").graph == "space");
  CHECK(find_preset("fr-transformer").remapped());
  CHECK(find_preset("fr-cheb").remapped());

  CHECK_THROWS_WITH_AS(find_preset("fr-mlp"), doctest::Contains("fr-gcn"), ContractError);
}

TEST_CASE("set parses values and aliases") {
  RunConfig c;
  c.set("kind", "gatv2");
  c.set("K", "4");
  c.set("alpha", "0.25");
  c.set("ff_hidden", "8, 16");
  c.set("node_identity", "true");
  c.set("lr", "1e-4");
  CHECK(c.kind == LayerKind::kGatV2);
  CHECK(c.hops == 4);
  CHECK(c.teleport == 0.25);
  CHECK(c.ff_hidden == std::vector<std::size_t>{8, 16});
  CHECK(c.train.node_identity);
  CHECK(c.train.lr == 1e-4);

  CHECK_THROWS_WITH_AS(c.set("learning_rate", "1"), doctest::Contains("unknown key"), ContractError);
  CHECK_THROWS_AS(c.set("hidden", "-3"), ContractError);
  CHECK_THROWS_AS(c.set("hidden", "12x"), ContractError);
  CHECK_THROWS_AS(c.set("model", "rnn"), ContractError);
  CHECK_THROWS_AS(c.set("window", "weekly"), ContractError);
  CHECK_THROWS_AS(c.set("appnp_sigma", "yes"), ContractError);
}

TEST_CASE("parse_run_config") {
  // The preset applies first wherever it appears, so later lines override it.
  const RunConfig c = parse_run_config("hidden=12  # smaller\n\n  preset = uk-gat\nseed=5\n");
  CHECK(c.preset == "uk-gat");
  CHECK(c.kind == LayerKind::kGat);
  CHECK(c.hidden == 12);
  CHECK(c.train.batch_size == 16);
  CHECK(c.train.seed == 5);

  CHECK_THROWS_WITH_AS(parse_run_config("hidden 12\n"), doctest::Contains("line 1"), ContractError);
  CHECK_THROWS_AS(parse_run_config("colour=blue\n"), ContractError);
}

TEST_CASE("resolved text round-trips and manifest keys are skipped") {
  RunConfig c = parse_run_config("preset=uk-tag\nlr=0.0123\nwindow=step\nhistory=3\nff_hidden=4,5\n");
  const std::string text = c.to_text();
  CHECK(parse_run_config(text).to_text() == text);

  const std::string manifest = "tool=gridattn 0.1.0\ncommand=train\n" + text +
                               "path.data=x.csv\nresult.best_val=0.5\n";
  CHECK(parse_run_config(manifest).to_text() == text);
  CHECK(is_manifest_key("path.graph"));
  CHECK_FALSE(is_manifest_key("graph"));
}

TEST_CASE("window choice and model shapes") {
  const TimePanel cal = testing::calendar_panel(3, 48 * 4, [](std::size_t i, std::size_t t) { return 1.0 + i + t % 48; });
  RunConfig c;
  CHECK(c.window_spec(cal).horizon == 48);
  c.set("window", "step");
  c.set("history", "2");
  CHECK(c.window_spec(cal).horizon == 1);
  CHECK(c.window_spec(cal).input_len == 2);
  c.set("node_identity", "true");
  CHECK(c.stack_options(cal).input_dim == 2 * 4);
  c.set("history", "0");
  CHECK_THROWS_AS(c.window_spec(cal), ContractError);

  RunConfig ff;
  ff.set("model", "ff");
  ff.set("ff_hidden", "6");
  const ForecastModel m = ff.make_model(WeightedGraph{}, cal, 1);
  CHECK(m.family == ModelFamily::kFeedForward);
  CHECK(m.nodes() == 3);
  CHECK(m.horizon() == 48);
}

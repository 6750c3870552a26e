#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "fd.hpp"
#include "mnci/mnci.hpp"

using namespace mnci;
using Catch::Matchers::WithinAbs;

namespace {

TemporalGraph tiny_graph() {
  std::istringstream in(
      "0 1 1.0\n"
      "2 3 2.0\n"
      "1 2 3.0\n"
      "0 3 4.0\n"
      "1 3 5.0\n"
      "0 2 6.0\n");
  return parse_edge_list(in);
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.communities = 2;
  cfg.negatives = 2;
  cfg.batch_size = 3;
  cfg.epochs = 2;
  cfg.history_cap = 4;
  cfg.seed = 13;
  return cfg;
}

}  // namespace

TEST_CASE("the first event fills both histories and moves both embeddings") {
  Model m(tiny_graph(), tiny_config());
  const Vec pe0 = positional_encode(0, 4);
  const Vec pe1 = positional_encode(1, 4);
  REQUIRE((m.state(0).embedding - pe0).cwiseAbs().maxCoeff() == 0.0);

  m.process_event(m.graph().events()[0]);
  CHECK(m.state(0).history.size() == 1);
  CHECK(m.state(1).history.size() == 1);
  CHECK(m.state(0).history.entries()[0].neighbor == 1);
  CHECK(m.state(1).history.entries()[0].neighbor == 0);
  CHECK((m.state(0).embedding - pe0).cwiseAbs().maxCoeff() > 0.0);
  CHECK((m.state(1).embedding - pe1).cwiseAbs().maxCoeff() > 0.0);
  CHECK(m.state(2).history.empty());
}

TEST_CASE("out-of-order events are rejected") {
  Model m(tiny_graph(), tiny_config());
  m.process_event({0, 1, 5.0});
  CHECK_THROWS_AS(m.process_event({2, 3, 4.0}), DataError);
}

TEST_CASE("zero epochs leave the positional encodings untouched") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 0;
  std::vector<EpochMetrics> metrics;
  Model m = train(tiny_graph(), cfg, &metrics);
  CHECK(metrics.empty());
  for (int i = 0; i < m.graph().node_count(); ++i) {
    CHECK((m.state(i).embedding - positional_encode(i, cfg.dim)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("same seed reproduces losses and embeddings") {
  const TrainConfig cfg = tiny_config();
  Model a(tiny_graph(), cfg);
  Model b(tiny_graph(), cfg);
  for (const Event& e : a.graph().events()) {
    const double la = a.process_event(e);
    const double lb = b.process_event(e);
    CHECK_THAT(la, WithinAbs(lb, 1e-12));
    CHECK(std::isfinite(la));
  }
  CHECK((a.embeddings() - b.embeddings()).cwiseAbs().maxCoeff() <= 1e-12);

  std::vector<EpochMetrics> ma, mb;
  Model ta = train(tiny_graph(), cfg, &ma);
  Model tb = train(tiny_graph(), cfg, &mb);
  REQUIRE(ma.size() == mb.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK_THAT(ma[i].mean_loss, WithinAbs(mb[i].mean_loss, 1e-12));
  }
  CHECK((ta.embeddings() - tb.embeddings()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("epoch resets keep learned parameters") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  Model m(tiny_graph(), cfg);
  const AggregatorParams before_training = m.params();
  m.fit();
  const AggregatorParams after_training = m.params();
  CHECK((after_training.w_update - before_training.w_update).cwiseAbs().maxCoeff() > 0.0);

  const Vec omega = m.encoder().omega();
  const double delta_ne_0 = m.state(0).delta_ne;
  m.reset_state();
  CHECK((m.params().w_update - after_training.w_update).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m.params().b_cand - after_training.b_cand).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m.encoder().omega() - omega).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.state(0).delta_ne == delta_ne_0);
  // transient state back to the initial picture
  for (int i = 0; i < m.graph().node_count(); ++i) {
    CHECK((m.state(i).embedding - positional_encode(i, cfg.dim)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.state(i).history.empty());
  }
}

TEST_CASE("prefix replay equals the prefix of a full replay") {
  TrainConfig cfg = tiny_config();
  Model trained = train(tiny_graph(), cfg);

  const auto& events = trained.graph().events();
  const std::size_t k = 3;

  InferenceSession prefix(trained, trained.graph());
  for (std::size_t i = 0; i < k; ++i) prefix.step(events[i]);

  InferenceSession full(trained, trained.graph());
  Mat snapshot;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i == k) snapshot = full.embeddings();
    full.step(events[i]);
  }
  REQUIRE(snapshot.size() > 0);
  CHECK((prefix.embeddings() - snapshot).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per-event loss gradients match finite differences end to end") {
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 1000;  // keep parameters frozen while probing
  Model model(tiny_graph(), cfg);
  for (int i = 0; i < 4; ++i) model.process_event(model.graph().events()[i]);

  // Freeze a state whose components sit away from zero. Positional encodings
  // carry exact zeros, and gradient entries scaled by those fall below the
  // finite-difference noise floor of the relative comparison.
  Rng state_rng(99);
  for (int i = 0; i < model.graph().node_count(); ++i) {
    for (int j = 0; j < cfg.dim; ++j) {
      model.state(i).embedding[j] =
          state_rng.uniform(0.3, 1.0) * (state_rng.below(2) == 0 ? 1.0 : -1.0);
    }
    model.state(i).delta_ne = state_rng.uniform(0.5, 1.5) * (state_rng.below(2) == 0 ? 1.0 : -1.0);
    model.state(i).delta_co = state_rng.uniform(0.5, 1.5) * (state_rng.below(2) == 0 ? 1.0 : -1.0);
  }

  const Event probe = model.graph().events()[4];  // (1, 3, 5.0)
  const std::vector<int> negatives{model.graph().index_of(0), model.graph().index_of(2)};
  const EventTerms base = model.event_terms(probe, negatives);

  const int u = model.graph().index_of(probe.src);
  const int v = model.graph().index_of(probe.dst);
  REQUIRE(base.grads.delta_ne.size() == 2);
  REQUIRE(base.grads.delta_ne.count(u) == 1);
  REQUIRE(base.grads.delta_ne.count(v) == 1);

  auto loss_with = [&](const std::function<void(Model&)>& mutate) {
    Model copy = model;
    mutate(copy);
    return copy.event_terms(probe, negatives).loss;
  };

  CHECK(fd::max_rel_err_mat(base.grads.agg.w_update, [&](int i, int j, double h) {
          return loss_with([&](Model& m) { m.params().w_update(i, j) += h; });
        }) < 1e-4);
  CHECK(fd::max_rel_err_mat(base.grads.agg.w_cand, [&](int i, int j, double h) {
          return loss_with([&](Model& m) { m.params().w_cand(i, j) += h; });
        }) < 1e-4);
  CHECK(fd::max_rel_err_vec(base.grads.agg.b_reset_ne, [&](int i, double h) {
          return loss_with([&](Model& m) { m.params().b_reset_ne[i] += h; });
        }) < 1e-4);
  CHECK(fd::max_rel_err_vec(base.grads.omega, [&](int k, double h) {
          return loss_with([&](Model& m) { m.encoder().omega()[k] += h; });
        }) < 1e-4);
  for (const int node : {u, v}) {
    const double got_ne = base.grads.delta_ne.at(node);
    const double fd_ne = fd::central([&](double h) {
      return loss_with([&](Model& m) { m.state(node).delta_ne += h; });
    });
    CHECK(fd::rel_err(got_ne, fd_ne) < 1e-4);
    const double got_co = base.grads.delta_co.at(node);
    const double fd_co = fd::central([&](double h) {
      return loss_with([&](Model& m) { m.state(node).delta_co += h; });
    });
    CHECK(fd::rel_err(got_co, fd_co) < 1e-4);
  }
}

TEST_CASE("training reduces the loss on a planted two-community stream") {
  SynthConfig synth;
  synth.nodes_per_community = 10;
  synth.communities = 2;
  synth.intra_p = 0.9;
  synth.events_per_node = 10;
  synth.seed = 3;

  TrainConfig cfg;
  cfg.dim = 8;
  cfg.communities = 2;
  cfg.negatives = 5;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.01;
  cfg.epochs = 10;
  cfg.seed = 3;

  std::vector<EpochMetrics> metrics;
  train(synth_planted_graph(synth).graph, cfg, &metrics);
  REQUIRE(metrics.size() == 10);
  const double first = metrics.front().mean_loss;
  const double last = metrics.back().mean_loss;
  CHECK(last <= first - 0.2 * std::fabs(first));
}

TEST_CASE("checkpoints resume training bit for bit") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 3;

  Model straight = train(tiny_graph(), cfg);

  TrainConfig cfg2 = cfg;
  cfg2.epochs = 2;
  Model partial(tiny_graph(), cfg2);
  partial.fit();
  std::ostringstream saved;
  partial.save_checkpoint(saved);

  std::istringstream loaded_in(saved.str());
  Model resumed = Model::load_checkpoint(loaded_in, tiny_graph());
  CHECK(resumed.epochs_done() == 2);
  resumed.fit(1);

  CHECK((resumed.embeddings() - straight.embeddings()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((resumed.params().w_update - straight.params().w_update).cwiseAbs().maxCoeff() == 0.0);
  CHECK((resumed.encoder().omega() - straight.encoder().omega()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < straight.graph().node_count(); ++i) {
    CHECK(resumed.state(i).delta_ne == straight.state(i).delta_ne);
    CHECK(resumed.state(i).delta_co == straight.state(i).delta_co);
  }
}

TEST_CASE("checkpoints reject a mismatched edge list") {
  Model m(tiny_graph(), tiny_config());
  m.fit(1);
  std::ostringstream saved;
  m.save_checkpoint(saved);

  std::istringstream in(saved.str());
  std::istringstream other("7 8 1.0\n8 9 2.0\n");
  CHECK_THROWS_AS(Model::load_checkpoint(in, parse_edge_list(other)), DataError);
}

TEST_CASE("checkpoint embeddings can be read without the edge list") {
  Model m(tiny_graph(), tiny_config());
  m.fit(1);
  std::ostringstream saved;
  m.save_checkpoint(saved);
  std::istringstream in(saved.str());
  const EmbeddingTable table = read_checkpoint_embeddings(in);
  CHECK(table.size() == m.graph().node_count());
  CHECK((table.vectors - m.embeddings()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < table.size(); ++i) CHECK(table.ids[i] == m.graph().node_ids()[i]);
}

TEST_CASE("auto time scale uses the median positive gap") {
  std::istringstream in(
      "0 1 10.0\n"
      "1 2 12.0\n"
      "2 3 18.0\n"
      "0 2 18.0\n");
  TemporalGraph g = parse_edge_list(in);
  // stream gaps: 2, 6, 0 -> positive {2, 6}, median 4
  // replayed history lookbacks: {2, 6, 8, 6} -> median 6
  TrainConfig cfg = tiny_config();
  Model m(g, cfg);
  CHECK_THAT(m.resolved_time_scale(), WithinAbs(4.0, 1e-12));
  CHECK_THAT(m.sigma_omega(), WithinAbs(4.0 / 6.0, 1e-12));
  CHECK_THAT(median_history_delta(g, cfg.history_cap), WithinAbs(6.0, 1e-12));

  cfg.time_scale = 2.0;
  Model overridden(g, cfg);
  CHECK_THAT(overridden.resolved_time_scale(), WithinAbs(2.0, 1e-12));
  CHECK_THAT(overridden.sigma_omega(), WithinAbs(2.0 / 6.0, 1e-12));
}

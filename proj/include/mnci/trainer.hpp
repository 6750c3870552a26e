#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mnci/adam.hpp"
#include "mnci/aggregator.hpp"
#include "mnci/common.hpp"
#include "mnci/encoders.hpp"
#include "mnci/graph.hpp"
#include "mnci/influence.hpp"
#include "mnci/io.hpp"
#include "mnci/loss.hpp"
#include "mnci/sampler.hpp"

namespace mnci {

struct TrainConfig {
  int dim = 128;
  double learning_rate = 0.001;
  int batch_size = 128;
  int negatives = 10;    // noise draws per event
  int communities = 10;  // K
  int epochs = 10;
  int history_cap = 10;
  std::uint64_t seed = 42;
  double time_scale = 0.0;  // 0 = auto: median positive inter-event gap
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("dim must be even and positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
    if (communities < 1) throw std::invalid_argument("communities must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (history_cap < 1) throw std::invalid_argument("history cap must be >= 1");
    if (time_scale < 0.0) throw std::invalid_argument("time scale must be >= 0 (0 = auto)");
  }

  AdamConfig adam() const { return {adam_beta1, adam_beta2, adam_eps}; }
};

struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

/// Gradients of one event's loss with respect to every learnable tensor.
/// The per-node influence scalars are sparse (at most the two endpoints).
struct ParamGrads {
  AggregatorGrads agg;
  Vec omega;
  std::map<int, double> delta_ne;
  std::map<int, double> delta_co;

  static ParamGrads zeros(int dim) {
    ParamGrads g;
    g.agg = AggregatorGrads::zeros(dim);
    g.omega = Vec::Zero(dim / 2);
    return g;
  }
};

/// Forward pass of one endpoint against the pre-event state.
struct EndpointPass {
  bool has_ne = false;
  NeighborhoodTape ne;
  std::vector<int> neighbor_idx;  // history-aligned node indices
  CommunityTape co;
  CellTape tape;
  Vec z_new;
};

/// Runs influence aggregation and the recurrent cell for one endpoint. The
/// history is passed separately so callers can evaluate with the partner
/// entry already appended without mutating stored state. Neighbor embeddings
/// are read from `states` as they stand (the previous-timestamp values).
inline EndpointPass endpoint_forward(const std::vector<NodeState>& states, int node,
                                     const NeighborHistory& history, double event_time,
                                     const CommunityModel& com, const AggregatorParams& params,
                                     const TimeEncoder& enc) {
  const NodeState& st = states[node];
  EndpointPass pass;
  Vec ne_value = Vec::Zero(st.embedding.size());
  if (!history.empty()) {
    std::vector<Vec> nbr_embeddings;
    nbr_embeddings.reserve(history.entries().size());
    pass.neighbor_idx.reserve(history.entries().size());
    for (const HistoryEntry& e : history.entries()) {
      const int idx = static_cast<int>(e.neighbor);
      pass.neighbor_idx.push_back(idx);
      nbr_embeddings.push_back(states[idx].embedding);
    }
    NodeState view = st;  // affinity uses the node's pre-event embedding
    view.history = history;
    pass.ne = neighborhood_influence_tape(view, nbr_embeddings, event_time, enc);
    pass.has_ne = true;
    ne_value = pass.ne.value;
  }
  pass.co = community_influence_tape(st, com);
  CellResult cell = cell_forward(st.embedding, ne_value, pass.co.value, params);
  pass.tape = std::move(cell.tape);
  pass.z_new = std::move(cell.output);
  return pass;
}

/// Loss value, its gradients, and the two candidate embeddings of one event.
struct EventTerms {
  double loss = 0.0;
  ParamGrads grads;
  Vec z_src_new, z_dst_new;
};

/// Median of the positive history lookbacks (event time minus entry time) a
/// replay of the stream feeds to the time encoder. Returns 0 when every
/// lookback is zero (single-timestamp streams).
inline double median_history_delta(const TemporalGraph& graph, int history_cap) {
  std::vector<std::vector<double>> times(graph.node_count());
  std::vector<double> deltas;
  auto visit = [&](int node, double now) {
    std::vector<double>& h = times[node];
    h.push_back(now);
    if (static_cast<int>(h.size()) > history_cap) h.erase(h.begin());
    for (double t : h) {
      if (now - t > 0.0) deltas.push_back(now - t);
    }
  };
  for (const Event& e : graph.events()) {
    visit(graph.index_of(e.src), e.time);
    visit(graph.index_of(e.dst), e.time);
  }
  if (deltas.empty()) return 0.0;
  const std::size_t mid = deltas.size() / 2;
  std::nth_element(deltas.begin(), deltas.begin() + mid, deltas.end());
  double m = deltas[mid];
  if (deltas.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(deltas.begin(), deltas.begin() + mid));
  }
  return m;
}

/// The training engine. Owns the event stream, per-node states, community
/// model, learnable parameters, and optimizer state. Event processing is
/// strictly sequential; epochs replay the stream from a reset transient state
/// while parameters persist.
class Model {
 public:
  Model(TemporalGraph graph, TrainConfig cfg)
      : graph_(std::move(graph)), cfg_(validated(cfg)), enc_(Vec::Ones(1)),
        sampler_(make_sampler(graph_, cfg_)),
        communities_(cfg_.communities, cfg_.dim, graph_.node_count()),
        adam_cfg_(cfg_.adam()),
        opt_delta_ne_(graph_.node_count()), opt_delta_co_(graph_.node_count()) {
    const int n = graph_.node_count();
    if (cfg_.communities > n) throw DataError("more communities than nodes");

    // Time scaling: deltas are divided by the median positive inter-event gap
    // so the frequency scale is dataset-unit free. The frequency spread is
    // then matched to the deltas the encoder actually sees, which are history
    // lookbacks spanning many inter-event gaps.
    const double median_gap = graph_.median_positive_gap().value_or(1.0);
    resolved_time_scale_ = cfg_.time_scale > 0.0 ? cfg_.time_scale : median_gap;
    const double median_delta = median_history_delta(graph_, cfg_.history_cap);
    sigma_omega_ = median_delta > 0.0 ? resolved_time_scale_ / median_delta : 1.0;

    Rng rng_params(cfg_.seed, 1);
    params_ = AggregatorParams::init(cfg_.dim, rng_params);
    Rng rng_omega(cfg_.seed, 2);
    enc_ = TimeEncoder::init(cfg_.dim, sigma_omega_, rng_omega, resolved_time_scale_);

    // Community embeddings start as copies of the positional encodings of K
    // distinct nodes drawn from the earliest-seen pool.
    Rng rng_comm(cfg_.seed, 3);
    const int pool = std::min(n, 10 * cfg_.communities);
    std::vector<int> candidates(pool);
    for (int i = 0; i < pool; ++i) candidates[i] = i;
    rng_comm.shuffle(candidates);
    anchors_.assign(candidates.begin(), candidates.begin() + cfg_.communities);

    states_.resize(n);
    for (NodeState& st : states_) {
      st.delta_ne = 1.0;
      st.delta_co = 1.0;
    }
    init_optimizer();
    reset_state();
  }

  const TemporalGraph& graph() const { return graph_; }
  const TrainConfig& config() const { return cfg_; }
  double resolved_time_scale() const { return resolved_time_scale_; }
  double sigma_omega() const { return sigma_omega_; }
  const std::vector<int>& community_anchors() const { return anchors_; }
  int epochs_done() const { return epochs_done_; }

  const NodeState& state(int idx) const { return states_.at(idx); }
  NodeState& state(int idx) { return states_.at(idx); }
  const std::vector<NodeState>& states() const { return states_; }
  const CommunityModel& communities() const { return communities_; }
  CommunityModel& communities() { return communities_; }
  const AggregatorParams& params() const { return params_; }
  AggregatorParams& params() { return params_; }
  const TimeEncoder& encoder() const { return enc_; }
  TimeEncoder& encoder() { return enc_; }
  NegativeSampler& sampler() { return sampler_; }

  /// N x d matrix of current embeddings, row order = first-appearance order.
  Mat embeddings() const {
    Mat m(graph_.node_count(), cfg_.dim);
    for (int i = 0; i < graph_.node_count(); ++i) m.row(i) = states_[i].embedding.transpose();
    return m;
  }

  EmbeddingTable embedding_table() const {
    return EmbeddingTable::from(graph_.node_ids(), embeddings());
  }

  /// Re-initializes embeddings, histories, and the community model for an
  /// epoch replay. Learnable parameters, the influence scalars, and optimizer
  /// state are untouched.
  void reset_state() {
    const int n = graph_.node_count();
    for (int i = 0; i < n; ++i) {
      states_[i].embedding = positional_encode(i, cfg_.dim);
      states_[i].history = NeighborHistory(cfg_.history_cap);
      states_[i].last_update = 0.0;
    }
    for (int k = 0; k < cfg_.communities; ++k) {
      communities_.embeddings().row(k) = positional_encode(anchors_[k], cfg_.dim).transpose();
    }
    for (int i = 0; i < n; ++i) {
      communities_.assignment()[i] = argmax_weight(community_weights(states_[i].embedding, communities_));
    }
    last_event_time_ = -std::numeric_limits<double>::infinity();
  }

  /// Loss and gradients for one event against the current (pre-event) state.
  /// Pure: nothing in the model is mutated, so a finite-difference probe can
  /// re-evaluate it after perturbing any learnable tensor. Gradients are not
  /// propagated into stored embeddings or community embeddings; at each event
  /// those are constants of the streaming recurrence.
  EventTerms event_terms(const Event& event, const std::vector<int>& negative_ids) const {
    const int u = graph_.index_of(event.src);
    const int v = graph_.index_of(event.dst);

    NeighborHistory hu = states_[u].history;
    hu.push(v, event.time);
    NeighborHistory hv = states_[v].history;
    hv.push(u, event.time);

    const EndpointPass pu = endpoint_forward(states_, u, hu, event.time, communities_, params_, enc_);
    const EndpointPass pv = endpoint_forward(states_, v, hv, event.time, communities_, params_, enc_);

    std::vector<Vec> negs;
    negs.reserve(negative_ids.size());
    for (int id : negative_ids) negs.push_back(states_.at(id).embedding);

    const PairTerm pair = pair_term(pu.z_new, pv.z_new, negs);
    const CommunityTerm cu = community_term(pu.z_new, communities_);
    const CommunityTerm cv = community_term(pv.z_new, communities_);

    EventTerms terms;
    terms.loss = -(pair.value + cu.value + cv.value);
    if (!std::isfinite(terms.loss)) throw NumericError("non-finite event loss");
    terms.grads = ParamGrads::zeros(cfg_.dim);
    backprop_endpoint(u, pu, -(pair.grad_u + cu.grad_node), terms.grads);
    backprop_endpoint(v, pv, -(pair.grad_v + cv.grad_node), terms.grads);
    terms.z_src_new = pu.z_new;
    terms.z_dst_new = pv.z_new;
    return terms;
  }

  /// Processes one event: draws negatives, evaluates loss and gradients,
  /// accumulates the gradients into the open minibatch, then commits the new
  /// embeddings, histories, and community updates. Returns the event loss.
  double process_event(const Event& event) {
    if (event.time < last_event_time_) throw DataError("out-of-order event");
    const int u = graph_.index_of(event.src);
    const int v = graph_.index_of(event.dst);
    const std::vector<int> negative_ids = sampler_.draw(cfg_.negatives, {u, v});
    EventTerms terms = event_terms(event, negative_ids);

    accumulate(terms.grads);
    ++batch_fill_;

    states_[u].history.push(v, event.time);
    states_[v].history.push(u, event.time);
    const Vec z_old_u = states_[u].embedding;
    const Vec z_old_v = states_[v].embedding;
    states_[u].embedding = terms.z_src_new;
    states_[u].last_update = event.time;
    states_[v].embedding = terms.z_dst_new;
    states_[v].last_update = event.time;
    community_update(communities_, u, z_old_u, terms.z_src_new);
    community_update(communities_, v, z_old_v, terms.z_dst_new);

    last_event_time_ = event.time;
    if (batch_fill_ >= cfg_.batch_size) apply_batch();
    return terms.loss;
  }

  /// One pass over the full stream from a reset state. Returns the mean
  /// per-event loss; a partial trailing minibatch is flushed.
  double run_epoch() {
    reset_state();
    double total = 0.0;
    for (const Event& e : graph_.events()) total += process_event(e);
    if (batch_fill_ > 0) apply_batch();
    return total / static_cast<double>(graph_.events().size());
  }

  std::vector<EpochMetrics> fit() { return fit(cfg_.epochs); }

  /// Runs `epochs` additional passes. Resuming a loaded model continues the
  /// optimizer and sampler streams exactly where they stopped.
  std::vector<EpochMetrics> fit(int epochs) {
    std::vector<EpochMetrics> metrics;
    metrics.reserve(epochs);
    for (int e = 0; e < epochs; ++e) {
      const auto start = std::chrono::steady_clock::now();
      const double mean_loss = run_epoch();
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ++epochs_done_;
      metrics.push_back({epochs_done_, mean_loss, secs});
    }
    return metrics;
  }

  void save_checkpoint(std::ostream& out) const;
  void save_checkpoint_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    save_checkpoint(out);
    if (!out) throw DataError("write failed: " + path);
  }
  static Model load_checkpoint(std::istream& in, TemporalGraph graph);
  static Model load_checkpoint_file(const std::string& path, TemporalGraph graph) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    return load_checkpoint(in, std::move(graph));
  }

 private:
  struct FromCheckpoint {};

  static TrainConfig validated(TrainConfig cfg) {
    cfg.validate();
    return cfg;
  }

  Model(TemporalGraph graph, TrainConfig cfg, FromCheckpoint)
      : graph_(std::move(graph)), cfg_(cfg), enc_(Vec::Ones(std::max(1, cfg.dim / 2))),
        sampler_(make_sampler(graph_, cfg)),
        communities_(cfg.communities, cfg.dim, graph_.node_count()), adam_cfg_(cfg.adam()),
        opt_delta_ne_(graph_.node_count()), opt_delta_co_(graph_.node_count()) {
    states_.resize(graph_.node_count());
    init_optimizer();
  }

  static NegativeSampler make_sampler(const TemporalGraph& g, const TrainConfig& cfg) {
    return NegativeSampler(g.event_degrees(), cfg.seed);
  }

  void init_optimizer() {
    const Mat w_like = Mat::Zero(cfg_.dim, 3 * cfg_.dim);
    const Vec b_like = Vec::Zero(cfg_.dim);
    opt_w_.clear();
    opt_b_.clear();
    for (int i = 0; i < 4; ++i) opt_w_.emplace_back(w_like);
    for (int i = 0; i < 4; ++i) opt_b_.emplace_back(b_like);
    opt_omega_ = AdamState<Vec>(Vec::Zero(cfg_.dim / 2));
    acc_ = ParamGrads::zeros(cfg_.dim);
    batch_fill_ = 0;
  }

  /// Routes upstream output gradient through the cell into the shared
  /// parameters and this endpoint's influence scalars.
  void backprop_endpoint(int node, const EndpointPass& pass, const Vec& upstream,
                         ParamGrads& g) const {
    CellInputGrads ig = cell_backward(params_, pass.tape, upstream, g.agg);
    if (pass.has_ne) {
      g.delta_ne[node] += ig.ne.dot(pass.ne.sum);
      const double delta = states_[node].delta_ne;
      for (std::size_t i = 0; i < pass.neighbor_idx.size(); ++i) {
        const Vec up = delta * pass.ne.weights[static_cast<int>(i)] *
                       ig.ne.cwiseProduct(states_[pass.neighbor_idx[i]].embedding);
        g.omega += enc_.backward(pass.ne.deltas[i], up);
      }
    }
    g.delta_co[node] += ig.co.dot(pass.co.sum);
  }

  void accumulate(const ParamGrads& g) {
    acc_.agg.w_update += g.agg.w_update;
    acc_.agg.w_reset_ne += g.agg.w_reset_ne;
    acc_.agg.w_reset_co += g.agg.w_reset_co;
    acc_.agg.w_cand += g.agg.w_cand;
    acc_.agg.b_update += g.agg.b_update;
    acc_.agg.b_reset_ne += g.agg.b_reset_ne;
    acc_.agg.b_reset_co += g.agg.b_reset_co;
    acc_.agg.b_cand += g.agg.b_cand;
    acc_.omega += g.omega;
    for (const auto& [idx, val] : g.delta_ne) acc_.delta_ne[idx] += val;
    for (const auto& [idx, val] : g.delta_co) acc_.delta_co[idx] += val;
  }

  void apply_batch() {
    const double lr = cfg_.learning_rate;
    adam_step(opt_w_[0], params_.w_update, acc_.agg.w_update, lr, adam_cfg_, "w_update");
    adam_step(opt_w_[1], params_.w_reset_ne, acc_.agg.w_reset_ne, lr, adam_cfg_, "w_reset_ne");
    adam_step(opt_w_[2], params_.w_reset_co, acc_.agg.w_reset_co, lr, adam_cfg_, "w_reset_co");
    adam_step(opt_w_[3], params_.w_cand, acc_.agg.w_cand, lr, adam_cfg_, "w_cand");
    adam_step(opt_b_[0], params_.b_update, acc_.agg.b_update, lr, adam_cfg_, "b_update");
    adam_step(opt_b_[1], params_.b_reset_ne, acc_.agg.b_reset_ne, lr, adam_cfg_, "b_reset_ne");
    adam_step(opt_b_[2], params_.b_reset_co, acc_.agg.b_reset_co, lr, adam_cfg_, "b_reset_co");
    adam_step(opt_b_[3], params_.b_cand, acc_.agg.b_cand, lr, adam_cfg_, "b_cand");
    adam_step(opt_omega_.value(), enc_.omega(), acc_.omega, lr, adam_cfg_, "omega");

    Vec delta_ne_params(graph_.node_count());
    Vec delta_co_params(graph_.node_count());
    for (int i = 0; i < graph_.node_count(); ++i) {
      delta_ne_params[i] = states_[i].delta_ne;
      delta_co_params[i] = states_[i].delta_co;
    }
    adam_step_sparse(opt_delta_ne_, delta_ne_params, acc_.delta_ne, lr, adam_cfg_, "delta_ne");
    adam_step_sparse(opt_delta_co_, delta_co_params, acc_.delta_co, lr, adam_cfg_, "delta_co");
    for (const auto& [idx, unused] : acc_.delta_ne) states_[idx].delta_ne = delta_ne_params[idx];
    for (const auto& [idx, unused] : acc_.delta_co) states_[idx].delta_co = delta_co_params[idx];

    acc_ = ParamGrads::zeros(cfg_.dim);
    batch_fill_ = 0;
  }

  TemporalGraph graph_;
  TrainConfig cfg_;
  TimeEncoder enc_;
  NegativeSampler sampler_;
  CommunityModel communities_;
  AggregatorParams params_;
  std::vector<NodeState> states_;
  std::vector<int> anchors_;
  double resolved_time_scale_ = 1.0;
  double sigma_omega_ = 1.0;
  double last_event_time_ = -std::numeric_limits<double>::infinity();
  int epochs_done_ = 0;

  AdamConfig adam_cfg_;
  std::vector<AdamState<Mat>> opt_w_;
  std::vector<AdamState<Vec>> opt_b_;
  std::optional<AdamState<Vec>> opt_omega_;
  AdamScalarArray opt_delta_ne_;
  AdamScalarArray opt_delta_co_;
  ParamGrads acc_;
  int batch_fill_ = 0;
};

/// Trains a fresh model: positional-encoding init, `epochs` sequential passes
/// over the time-ordered stream, per-epoch transient-state resets.
inline Model train(TemporalGraph graph, const TrainConfig& cfg,
                   std::vector<EpochMetrics>* metrics_out = nullptr) {
  Model model(std::move(graph), cfg);
  auto metrics = model.fit();
  if (metrics_out) *metrics_out = std::move(metrics);
  return model;
}

inline void export_embeddings(const Model& model, const std::string& path) {
  write_embeddings_file(model.embedding_table(), path);
}

/// Reads only the node ids and embeddings out of a checkpoint, for export
/// without the original edge list.
inline EmbeddingTable read_checkpoint_embeddings(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty checkpoint");
  auto head = detail::split_ws(header);
  if (head.size() != 4 || head[0] != "mnci-checkpoint" || head[1] != "v1") {
    throw DataError("bad checkpoint header");
  }
  auto records = read_tensor_records(in);
  auto ids_it = records.find("node_ids");
  auto emb_it = records.find("node_embeddings");
  if (ids_it == records.end() || emb_it == records.end()) {
    throw DataError("checkpoint missing node embeddings");
  }
  const auto raw_ids = ids_it->second.as_ints();
  std::vector<NodeId> ids(raw_ids.begin(), raw_ids.end());
  return EmbeddingTable::from(std::move(ids), emb_it->second.as_matrix());
}

inline EmbeddingTable read_checkpoint_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return read_checkpoint_embeddings(in);
}

/// Frozen-parameter replay: embeds an event stream with a trained model's
/// parameters without any learning. Nodes unseen in training start from their
/// positional encoding with unit influence scalars.
class InferenceSession {
 public:
  InferenceSession(const Model& trained, TemporalGraph graph)
      : graph_(std::move(graph)), cfg_(trained.config()), params_(trained.params()),
        enc_(trained.encoder()),
        communities_(cfg_.communities, cfg_.dim, graph_.node_count()) {
    const int n = graph_.node_count();
    if (cfg_.communities > n) throw DataError("more communities than nodes");
    Rng rng_comm(cfg_.seed, 3);
    const int pool = std::min(n, 10 * cfg_.communities);
    std::vector<int> candidates(pool);
    for (int i = 0; i < pool; ++i) candidates[i] = i;
    rng_comm.shuffle(candidates);

    states_.resize(n);
    for (int i = 0; i < n; ++i) {
      states_[i].embedding = positional_encode(i, cfg_.dim);
      states_[i].history = NeighborHistory(cfg_.history_cap);
      const NodeId external = graph_.node_ids()[i];
      if (trained.graph().has_node(external)) {
        const NodeState& src = trained.state(trained.graph().index_of(external));
        states_[i].delta_ne = src.delta_ne;
        states_[i].delta_co = src.delta_co;
      }
    }
    for (int k = 0; k < cfg_.communities; ++k) {
      communities_.embeddings().row(k) = positional_encode(candidates[k], cfg_.dim).transpose();
    }
    for (int i = 0; i < n; ++i) {
      communities_.assignment()[i] = argmax_weight(community_weights(states_[i].embedding, communities_));
    }
  }

  void step(const Event& event) {
    if (event.time < last_event_time_) throw DataError("out-of-order event");
    const int u = graph_.index_of(event.src);
    const int v = graph_.index_of(event.dst);
    NeighborHistory hu = states_[u].history;
    hu.push(v, event.time);
    NeighborHistory hv = states_[v].history;
    hv.push(u, event.time);
    const EndpointPass pu = endpoint_forward(states_, u, hu, event.time, communities_, params_, enc_);
    const EndpointPass pv = endpoint_forward(states_, v, hv, event.time, communities_, params_, enc_);

    states_[u].history = std::move(hu);
    states_[v].history = std::move(hv);
    const Vec z_old_u = states_[u].embedding;
    const Vec z_old_v = states_[v].embedding;
    states_[u].embedding = pu.z_new;
    states_[u].last_update = event.time;
    states_[v].embedding = pv.z_new;
    states_[v].last_update = event.time;
    community_update(communities_, u, z_old_u, pu.z_new);
    community_update(communities_, v, z_old_v, pv.z_new);
    last_event_time_ = event.time;
  }

  const NodeState& state(int idx) const { return states_.at(idx); }
  const TemporalGraph& graph() const { return graph_; }

  Mat embeddings() const {
    Mat m(graph_.node_count(), cfg_.dim);
    for (int i = 0; i < graph_.node_count(); ++i) m.row(i) = states_[i].embedding.transpose();
    return m;
  }

 private:
  TemporalGraph graph_;
  TrainConfig cfg_;
  AggregatorParams params_;
  TimeEncoder enc_;
  CommunityModel communities_;
  std::vector<NodeState> states_;
  double last_event_time_ = -std::numeric_limits<double>::infinity();
};

// --- checkpoint format -------------------------------------------------------
//
// Header: `mnci-checkpoint v1 <d> <K>`, then one `name rank dims... values...`
// line per tensor. Real values carry 17 significant digits so reloading is
// exact; resuming fit() continues the run bit-for-bit.

inline void Model::save_checkpoint(std::ostream& out) const {
  out << "mnci-checkpoint v1 " << cfg_.dim << ' ' << cfg_.communities << '\n';
  TensorWriter w(out);
  w.scalar("cfg_learning_rate", cfg_.learning_rate);
  w.scalar_int("cfg_batch_size", cfg_.batch_size);
  w.scalar_int("cfg_negatives", cfg_.negatives);
  w.scalar_int("cfg_epochs", cfg_.epochs);
  w.scalar_int("cfg_history_cap", cfg_.history_cap);
  w.scalar_int("cfg_seed", static_cast<std::int64_t>(cfg_.seed));
  w.scalar("cfg_time_scale", cfg_.time_scale);
  w.scalar("cfg_adam_beta1", cfg_.adam_beta1);
  w.scalar("cfg_adam_beta2", cfg_.adam_beta2);
  w.scalar("cfg_adam_eps", cfg_.adam_eps);
  w.scalar("resolved_time_scale", resolved_time_scale_);
  w.scalar("sigma_omega", sigma_omega_);
  w.scalar_int("epochs_done", epochs_done_);

  const int n = graph_.node_count();
  std::vector<std::int64_t> ids(graph_.node_ids().begin(), graph_.node_ids().end());
  w.vector_int("node_ids", ids);
  w.matrix("node_embeddings", embeddings());
  Vec last_update(n), delta_ne(n), delta_co(n);
  for (int i = 0; i < n; ++i) {
    last_update[i] = states_[i].last_update;
    delta_ne[i] = states_[i].delta_ne;
    delta_co[i] = states_[i].delta_co;
  }
  w.vector("node_last_update", last_update);
  w.vector("delta_ne", delta_ne);
  w.vector("delta_co", delta_co);

  std::vector<std::int64_t> offsets(1, 0), hist_nodes;
  std::vector<double> hist_times;
  for (int i = 0; i < n; ++i) {
    for (const HistoryEntry& e : states_[i].history.entries()) {
      hist_nodes.push_back(e.neighbor);
      hist_times.push_back(e.time);
    }
    offsets.push_back(static_cast<std::int64_t>(hist_nodes.size()));
  }
  w.vector_int("history_offsets", offsets);
  w.vector_int("history_neighbors", hist_nodes);
  w.vector_reals("history_times", hist_times);

  w.matrix("community_embeddings", communities_.embeddings());
  std::vector<std::int64_t> assign(communities_.assignment().begin(), communities_.assignment().end());
  w.vector_int("community_assignment", assign);
  std::vector<std::int64_t> anchors(anchors_.begin(), anchors_.end());
  w.vector_int("community_anchors", anchors);

  w.vector("omega", enc_.omega());
  w.matrix("w_update", params_.w_update);
  w.matrix("w_reset_ne", params_.w_reset_ne);
  w.matrix("w_reset_co", params_.w_reset_co);
  w.matrix("w_cand", params_.w_cand);
  w.vector("b_update", params_.b_update);
  w.vector("b_reset_ne", params_.b_reset_ne);
  w.vector("b_reset_co", params_.b_reset_co);
  w.vector("b_cand", params_.b_cand);

  const char* w_names[4] = {"w_update", "w_reset_ne", "w_reset_co", "w_cand"};
  const char* b_names[4] = {"b_update", "b_reset_ne", "b_reset_co", "b_cand"};
  for (int i = 0; i < 4; ++i) {
    w.matrix(std::string("adam_m_") + w_names[i], opt_w_[i].m);
    w.matrix(std::string("adam_v_") + w_names[i], opt_w_[i].v);
    w.scalar_int(std::string("adam_t_") + w_names[i], opt_w_[i].step);
  }
  for (int i = 0; i < 4; ++i) {
    w.vector(std::string("adam_m_") + b_names[i], opt_b_[i].m);
    w.vector(std::string("adam_v_") + b_names[i], opt_b_[i].v);
    w.scalar_int(std::string("adam_t_") + b_names[i], opt_b_[i].step);
  }
  w.vector("adam_m_omega", opt_omega_->m);
  w.vector("adam_v_omega", opt_omega_->v);
  w.scalar_int("adam_t_omega", opt_omega_->step);
  w.vector("adam_m_delta_ne", opt_delta_ne_.m);
  w.vector("adam_v_delta_ne", opt_delta_ne_.v);
  w.vector_int("adam_t_delta_ne",
               std::vector<std::int64_t>(opt_delta_ne_.steps.begin(), opt_delta_ne_.steps.end()));
  w.vector("adam_m_delta_co", opt_delta_co_.m);
  w.vector("adam_v_delta_co", opt_delta_co_.v);
  w.vector_int("adam_t_delta_co",
               std::vector<std::int64_t>(opt_delta_co_.steps.begin(), opt_delta_co_.steps.end()));

  w.tokens("rng_sampler", detail::split_tokens(sampler_.rng().save_state()));
}

inline Model Model::load_checkpoint(std::istream& in, TemporalGraph graph) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty checkpoint");
  auto head = detail::split_ws(header);
  if (head.size() != 4 || head[0] != "mnci-checkpoint" || head[1] != "v1") {
    throw DataError("bad checkpoint header");
  }
  std::int64_t dim = 0, k = 0;
  if (!detail::parse_int(head[2], dim) || !detail::parse_int(head[3], k)) {
    throw DataError("bad checkpoint header");
  }
  auto records = read_tensor_records(in);
  auto need = [&](const std::string& name) -> const TensorRecord& {
    auto it = records.find(name);
    if (it == records.end()) throw DataError("checkpoint missing tensor " + name);
    return it->second;
  };

  TrainConfig cfg;
  cfg.dim = static_cast<int>(dim);
  cfg.communities = static_cast<int>(k);
  cfg.learning_rate = need("cfg_learning_rate").as_scalar();
  cfg.batch_size = static_cast<int>(need("cfg_batch_size").as_int_scalar());
  cfg.negatives = static_cast<int>(need("cfg_negatives").as_int_scalar());
  cfg.epochs = static_cast<int>(need("cfg_epochs").as_int_scalar());
  cfg.history_cap = static_cast<int>(need("cfg_history_cap").as_int_scalar());
  cfg.seed = static_cast<std::uint64_t>(need("cfg_seed").as_int_scalar());
  cfg.time_scale = need("cfg_time_scale").as_scalar();
  cfg.adam_beta1 = need("cfg_adam_beta1").as_scalar();
  cfg.adam_beta2 = need("cfg_adam_beta2").as_scalar();
  cfg.adam_eps = need("cfg_adam_eps").as_scalar();
  cfg.validate();

  Model m(std::move(graph), cfg, FromCheckpoint{});
  const int n = m.graph_.node_count();
  const auto ids = need("node_ids").as_ints();
  if (static_cast<int>(ids.size()) != n) throw DataError("checkpoint node count does not match edge list");
  for (int i = 0; i < n; ++i) {
    if (ids[i] != m.graph_.node_ids()[i]) {
      throw DataError("checkpoint node ordering does not match edge list");
    }
  }

  m.resolved_time_scale_ = need("resolved_time_scale").as_scalar();
  m.sigma_omega_ = need("sigma_omega").as_scalar();
  m.epochs_done_ = static_cast<int>(need("epochs_done").as_int_scalar());
  m.enc_ = TimeEncoder(need("omega").as_vector(), m.resolved_time_scale_);

  const Mat embeddings = need("node_embeddings").as_matrix();
  const Vec last_update = need("node_last_update").as_vector();
  const Vec delta_ne = need("delta_ne").as_vector();
  const Vec delta_co = need("delta_co").as_vector();
  if (embeddings.rows() != n || embeddings.cols() != cfg.dim) {
    throw DataError("checkpoint embedding shape mismatch");
  }
  const auto offsets = need("history_offsets").as_ints();
  const auto hist_nodes = need("history_neighbors").as_ints();
  const auto hist_times = need("history_times").as_reals();
  if (static_cast<int>(offsets.size()) != n + 1 || hist_nodes.size() != hist_times.size()) {
    throw DataError("checkpoint history shape mismatch");
  }
  for (int i = 0; i < n; ++i) {
    NodeState& st = m.states_[i];
    st.embedding = embeddings.row(i).transpose();
    st.last_update = last_update[i];
    st.delta_ne = delta_ne[i];
    st.delta_co = delta_co[i];
    st.history = NeighborHistory(cfg.history_cap);
    for (std::int64_t j = offsets[i]; j < offsets[i + 1]; ++j) {
      st.history.push(hist_nodes[j], hist_times[j]);
    }
  }

  m.communities_.embeddings() = need("community_embeddings").as_matrix();
  const auto assign = need("community_assignment").as_ints();
  if (static_cast<int>(assign.size()) != n) throw DataError("checkpoint assignment shape mismatch");
  m.communities_.assignment().assign(assign.begin(), assign.end());
  const auto anchors = need("community_anchors").as_ints();
  m.anchors_.assign(anchors.begin(), anchors.end());

  m.params_.w_update = need("w_update").as_matrix();
  m.params_.w_reset_ne = need("w_reset_ne").as_matrix();
  m.params_.w_reset_co = need("w_reset_co").as_matrix();
  m.params_.w_cand = need("w_cand").as_matrix();
  m.params_.b_update = need("b_update").as_vector();
  m.params_.b_reset_ne = need("b_reset_ne").as_vector();
  m.params_.b_reset_co = need("b_reset_co").as_vector();
  m.params_.b_cand = need("b_cand").as_vector();

  const char* w_names[4] = {"w_update", "w_reset_ne", "w_reset_co", "w_cand"};
  const char* b_names[4] = {"b_update", "b_reset_ne", "b_reset_co", "b_cand"};
  for (int i = 0; i < 4; ++i) {
    m.opt_w_[i].m = need(std::string("adam_m_") + w_names[i]).as_matrix();
    m.opt_w_[i].v = need(std::string("adam_v_") + w_names[i]).as_matrix();
    m.opt_w_[i].step = need(std::string("adam_t_") + w_names[i]).as_int_scalar();
  }
  for (int i = 0; i < 4; ++i) {
    m.opt_b_[i].m = need(std::string("adam_m_") + b_names[i]).as_vector();
    m.opt_b_[i].v = need(std::string("adam_v_") + b_names[i]).as_vector();
    m.opt_b_[i].step = need(std::string("adam_t_") + b_names[i]).as_int_scalar();
  }
  m.opt_omega_->m = need("adam_m_omega").as_vector();
  m.opt_omega_->v = need("adam_v_omega").as_vector();
  m.opt_omega_->step = need("adam_t_omega").as_int_scalar();
  m.opt_delta_ne_.m = need("adam_m_delta_ne").as_vector();
  m.opt_delta_ne_.v = need("adam_v_delta_ne").as_vector();
  const auto t_ne = need("adam_t_delta_ne").as_ints();
  m.opt_delta_ne_.steps.assign(t_ne.begin(), t_ne.end());
  m.opt_delta_co_.m = need("adam_m_delta_co").as_vector();
  m.opt_delta_co_.v = need("adam_v_delta_co").as_vector();
  const auto t_co = need("adam_t_delta_co").as_ints();
  m.opt_delta_co_.steps.assign(t_co.begin(), t_co.end());

  const auto& rng_rec = need("rng_sampler");
  std::string rng_state;
  for (const auto& tok : rng_rec.tokens) {
    if (!rng_state.empty()) rng_state += ' ';
    rng_state += tok;
  }
  m.sampler_.rng().load_state(rng_state);
  m.last_event_time_ = -std::numeric_limits<double>::infinity();
  return m;
}

}  // namespace mnci

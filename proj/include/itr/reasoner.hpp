#pragma once

#include "itr/layers.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

// Output layer: reasoning state recurrence, attention reads over the passage
// memory, termination gate and span answer heads.
namespace itr {

// How the stop turn is chosen from a finished episode.
enum class StopRule { Sample, Marginal, Threshold };

StopRule parse_stop_rule(const std::string& name);
std::string to_string(StopRule r);

// Turn policy. Dynamic learns when to stop (cap t_max); Fixed always stops
// after exactly `turns` turns. Single turn is Fixed with turns = 1.
struct TurnPolicy {
  enum class Kind { Dynamic, Fixed };
  Kind kind = Kind::Dynamic;
  std::size_t turns = 5;  // cap for Dynamic, exact count for Fixed

  static TurnPolicy dynamic(std::size_t t_max) { return {Kind::Dynamic, t_max}; }
  static TurnPolicy fixed(std::size_t k) { return {Kind::Fixed, k}; }
  bool is_fixed() const { return kind == Kind::Fixed; }
};

// "single", "fixed-K" or "dynamic" (cap from t_max).
TurnPolicy parse_mode(const std::string& name, std::size_t t_max);
std::string to_string(const TurnPolicy& p);

struct ReasonerConfig {
  TurnPolicy policy = TurnPolicy::dynamic(5);
  double lambda = 10.0;
  std::size_t gate_hidden = 10;
  std::size_t gate_layers = 3;  // hidden layers of the termination net
  std::size_t max_span_len = 50;
  StopRule stop_rule = StopRule::Marginal;

  void validate() const;
};

template <typename Scalar>
struct DenseParams {
  Parameter<Scalar> w;
  Parameter<Scalar> b;

  template <typename To>
  DenseParams<To> cast() const {
    return {w.template cast<To>(), b.template cast<To>()};
  }
};

template <typename Scalar>
struct ReasonerParams {
  GruParams<Scalar> state;        // input 2d, hidden 2d
  Parameter<Scalar> att_memory;   // w1: 2d x 2d
  Parameter<Scalar> att_state;    // w2: 2d x 2d
  std::vector<DenseParams<Scalar>> gate;  // 2d -> 10 -> 10 -> 10 -> 1
  Parameter<Scalar> w_s;   // 4d x 1
  Parameter<Scalar> w_e;   // 4d x 1
  Parameter<Scalar> w_ps;  // 2d x 2d
  Parameter<Scalar> w_pe;  // 2d x 2d

  // The last gate layer starts at zero, so an untrained gate emits 0.5.
  static ReasonerParams init(std::size_t hidden, const ReasonerConfig& cfg, Rng& rng);

  template <typename F>
  void visit(F&& f) {
    state.visit(f);
    f(att_memory);
    f(att_state);
    for (auto& l : gate) {
      f(l.w);
      f(l.b);
    }
    f(w_s);
    f(w_e);
    f(w_ps);
    f(w_pe);
  }
  template <typename F>
  void visit_gate(F&& f) {
    for (auto& l : gate) {
      f(l.w);
      f(l.b);
    }
  }
  template <typename To>
  ReasonerParams<To> cast() const {
    ReasonerParams<To> o;
    o.state = state.template cast<To>();
    o.att_memory = att_memory.template cast<To>();
    o.att_state = att_state.template cast<To>();
    for (const auto& l : gate) o.gate.push_back(l.template cast<To>());
    o.w_s = w_s.template cast<To>();
    o.w_e = w_e.template cast<To>();
    o.w_ps = w_ps.template cast<To>();
    o.w_pe = w_pe.template cast<To>();
    return o;
  }
};

// [forward rows of Hq at column m-1; backward rows of Hq at column 0].
template <typename Scalar>
Var<Scalar> init_state(const Var<Scalar>& hq);

// Attention weights a (n x 1) = softmax(lambda * cos(w1 m_i, w2 s)), given
// the projected memory w1 Mp.
template <typename Scalar>
Var<Scalar> attention_weights(const Var<Scalar>& projected_memory, const Var<Scalar>& w_state, const Var<Scalar>& s,
                              double lambda);

// X = Mp a.
template <typename Scalar>
Var<Scalar> attend(const Var<Scalar>& s, const Var<Scalar>& mp, const Var<Scalar>& w_memory,
                   const Var<Scalar>& w_state, double lambda);

// sigmoid of the feed-forward gate, 1 x 1.
template <typename Scalar>
Var<Scalar> terminate_prob(Tape<Scalar>& tape, std::vector<DenseParams<Scalar>>& gate, const Var<Scalar>& s);

// Start and end distributions over the n passage positions, each n x 1.
template <typename Scalar>
struct SpanDistributions {
  Var<Scalar> start;
  Var<Scalar> end;
};

template <typename Scalar>
SpanDistributions<Scalar> answer_span(Tape<Scalar>& tape, ReasonerParams<Scalar>& p, const Var<Scalar>& s,
                                      const Var<Scalar>& mp);

// Best span s <= e <= s + max_len - 1 by ys[s] * ye[e]; first maximum wins.
struct DecodedSpan {
  TokenSpan span;
  double prob = 0.0;
};
DecodedSpan best_span(const Eigen::VectorXd& ys, const Eigen::VectorXd& ye, std::size_t max_len);

struct TurnRecord {
  double tau = 0.0;
  double pi = 0.0;
  Eigen::VectorXd ys;
  Eigen::VectorXd ye;
  std::size_t argmax_start = 0;
  std::size_t argmax_end = 0;
  DecodedSpan span;
};

struct TurnTrace {
  std::vector<TurnRecord> turns;
  std::size_t stop_turn = 1;  // 1-based
  std::size_t state_updates = 0;

  const TurnRecord& stop() const { return turns.at(stop_turn - 1); }
};

// Differentiable quantities of one episode plus its plain-valued trace.
template <typename Scalar>
struct Episode {
  std::vector<Var<Scalar>> tau;  // termination probabilities (forced values are constants)
  std::vector<Var<Scalar>> ys;
  std::vector<Var<Scalar>> ye;
  TurnTrace trace;
};

// Runs every turn up to the policy's cap. Turn t reads the memory with the
// previous state, updates the state, then emits tau_t and the span heads.
// The stop turn in the trace is chosen by cfg.stop_rule (`rng` is used only
// by the sampling rule).
template <typename Scalar>
Episode<Scalar> run_episode(Tape<Scalar>& tape, ReasonerParams<Scalar>& p, const ReasonerConfig& cfg,
                            const Var<Scalar>& hq, const Var<Scalar>& mp, Rng* rng = nullptr);

// pi_t = tau_t * prod_{k<t} (1 - tau_k).
std::vector<double> stop_distribution(const std::vector<double>& tau);

// Stop turn (1-based) for a trace under a rule.
std::size_t choose_stop_turn(const TurnTrace& trace, StopRule rule, Rng* rng);

// Stabilization turns of the start and end argmaxes, counted back from the
// stop turn.
struct DecisionTurns {
  std::size_t start = 1;
  std::size_t end = 1;
};
DecisionTurns decision_turn(const TurnTrace& trace);

}  // namespace itr

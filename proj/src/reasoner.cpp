#include "itr/reasoner.hpp"

#include "itr/errors.hpp"

#include <algorithm>

namespace itr {

StopRule parse_stop_rule(const std::string& name) {
  if (name == "sample") return StopRule::Sample;
  if (name == "marginal") return StopRule::Marginal;
  if (name == "threshold") return StopRule::Threshold;
  throw ConfigError("unknown stop rule '" + name + "' (sample | marginal | threshold)");
}

std::string to_string(StopRule r) {
  switch (r) {
    case StopRule::Sample: return "sample";
    case StopRule::Marginal: return "marginal";
    case StopRule::Threshold: return "threshold";
  }
  return "unknown";
}

TurnPolicy parse_mode(const std::string& name, std::size_t t_max) {
  if (name == "single") return TurnPolicy::fixed(1);
  if (name == "dynamic") {
    if (t_max == 0) throw ConfigError("t_max must be at least 1");
    return TurnPolicy::dynamic(t_max);
  }
  if (name.rfind("fixed-", 0) == 0) {
    const std::string k = name.substr(6);
    std::size_t turns = 0;
    try {
      std::size_t used = 0;
      turns = std::stoul(k, &used);
      if (used != k.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("invalid mode '" + name + "': expected fixed-<K>");
    }
    if (turns == 0) throw ConfigError("invalid mode '" + name + "': K must be at least 1");
    return TurnPolicy::fixed(turns);
  }
  throw ConfigError("unknown mode '" + name + "' (single | fixed-K | dynamic)");
}

std::string to_string(const TurnPolicy& p) {
  if (p.is_fixed()) return p.turns == 1 ? "single" : "fixed-" + std::to_string(p.turns);
  return "dynamic";
}

void ReasonerConfig::validate() const {
  if (policy.turns < 1) throw ConfigError("turn cap must be at least 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (gate_hidden == 0) throw ConfigError("gate_hidden must be positive");
  if (max_span_len == 0) throw ConfigError("max_span_len must be positive");
}

template <typename Scalar>
ReasonerParams<Scalar> ReasonerParams<Scalar>::init(std::size_t hidden, const ReasonerConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto d2 = static_cast<Index>(2 * hidden);
  ReasonerParams p;
  p.state = GruParams<Scalar>::init("reasoner.state", 2 * hidden, 2 * hidden, rng);
  p.att_memory = Parameter<Scalar>("reasoner.att_memory", glorot<Scalar>(d2, d2, rng));
  p.att_state = Parameter<Scalar>("reasoner.att_state", glorot<Scalar>(d2, d2, rng));
  Index in = d2;
  for (std::size_t l = 0; l <= cfg.gate_layers; ++l) {
    const bool last = l == cfg.gate_layers;
    const Index out = last ? 1 : static_cast<Index>(cfg.gate_hidden);
    const std::string n = "reasoner.gate" + std::to_string(l);
    DenseParams<Scalar> layer{
        Parameter<Scalar>(n + ".w", last ? Tensor<Scalar>(Tensor<Scalar>::Zero(out, in)) : glorot<Scalar>(out, in, rng)),
        Parameter<Scalar>(n + ".b", Tensor<Scalar>::Zero(out, 1))};
    p.gate.push_back(std::move(layer));
    in = out;
  }
  p.w_s = Parameter<Scalar>("reasoner.w_s", glorot<Scalar>(2 * d2, 1, rng));
  p.w_e = Parameter<Scalar>("reasoner.w_e", glorot<Scalar>(2 * d2, 1, rng));
  p.w_ps = Parameter<Scalar>("reasoner.w_ps", glorot<Scalar>(d2, d2, rng));
  p.w_pe = Parameter<Scalar>("reasoner.w_pe", glorot<Scalar>(d2, d2, rng));
  return p;
}

template <typename Scalar>
Var<Scalar> init_state(const Var<Scalar>& hq) {
  const Index m = hq.cols();
  if (m < 1) throw DimensionError("init_state: empty question encoding");
  if (hq.rows() % 2 != 0) throw DimensionError("init_state: encoding rows must be even, got " + shape_of(hq.value()));
  const Index d = hq.rows() / 2;
  auto fwd = slice_rows(slice_cols(hq, m - 1, 1), 0, d);
  auto bwd = slice_rows(slice_cols(hq, 0, 1), d, d);
  return concat_rows(std::vector<Var<Scalar>>{fwd, bwd});
}

template <typename Scalar>
Var<Scalar> attention_weights(const Var<Scalar>& projected_memory, const Var<Scalar>& w_state, const Var<Scalar>& s,
                              double lambda) {
  auto cos = cosine_cols(projected_memory, matmul(w_state, s));
  return softmax(scale(cos, static_cast<Scalar>(lambda)), 0);
}

template <typename Scalar>
Var<Scalar> attend(const Var<Scalar>& s, const Var<Scalar>& mp, const Var<Scalar>& w_memory,
                   const Var<Scalar>& w_state, double lambda) {
  return matmul(mp, attention_weights(matmul(w_memory, mp), w_state, s, lambda));
}

template <typename Scalar>
Var<Scalar> terminate_prob(Tape<Scalar>& tape, std::vector<DenseParams<Scalar>>& gate, const Var<Scalar>& s) {
  if (gate.empty()) throw ConfigError("termination net has no layers");
  Var<Scalar> h = s;
  for (std::size_t l = 0; l < gate.size(); ++l) {
    h = add(matmul(tape.parameter(gate[l].w), h), tape.parameter(gate[l].b));
    h = l + 1 < gate.size() ? relu(h) : sigmoid(h);
  }
  return h;
}

template <typename Scalar>
SpanDistributions<Scalar> answer_span(Tape<Scalar>& tape, ReasonerParams<Scalar>& p, const Var<Scalar>& s,
                                      const Var<Scalar>& mp) {
  auto head = [&](Parameter<Scalar>& w, Parameter<Scalar>& wp) {
    auto gated = mul_colwise(s, matmul(transpose(tape.parameter(wp)), mp));
    auto features = concat_rows(std::vector<Var<Scalar>>{mp, gated});
    return softmax(transpose(matmul(transpose(tape.parameter(w)), features)), 0);
  };
  return {head(p.w_s, p.w_ps), head(p.w_e, p.w_pe)};
}

DecodedSpan best_span(const Eigen::VectorXd& ys, const Eigen::VectorXd& ye, std::size_t max_len) {
  if (ys.size() != ye.size() || ys.size() == 0) {
    throw DimensionError("best_span: distributions of sizes " + std::to_string(ys.size()) + " and " +
                         std::to_string(ye.size()));
  }
  const auto n = static_cast<std::size_t>(ys.size());
  DecodedSpan best;
  best.prob = -1.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t last = std::min(n - 1, s + max_len - 1);
    for (std::size_t e = s; e <= last; ++e) {
      const double p = ys(static_cast<Index>(s)) * ye(static_cast<Index>(e));
      if (p > best.prob) best = {{s, e}, p};
    }
  }
  return best;
}

std::vector<double> stop_distribution(const std::vector<double>& tau) {
  std::vector<double> pi(tau.size());
  double remain = 1.0;
  for (std::size_t t = 0; t < tau.size(); ++t) {
    pi[t] = tau[t] * remain;
    remain *= 1.0 - tau[t];
  }
  return pi;
}

std::size_t choose_stop_turn(const TurnTrace& trace, StopRule rule, Rng* rng) {
  const std::size_t turns = trace.turns.size();
  if (turns == 0) throw ContractError("choose_stop_turn: empty trace");
  switch (rule) {
    case StopRule::Marginal: {
      std::size_t best = 0;
      for (std::size_t t = 1; t < turns; ++t) {
        if (trace.turns[t].pi > trace.turns[best].pi) best = t;
      }
      return best + 1;
    }
    case StopRule::Threshold: {
      for (std::size_t t = 0; t < turns; ++t) {
        if (trace.turns[t].tau > 0.5) return t + 1;
      }
      return turns;
    }
    case StopRule::Sample: {
      if (rng == nullptr) throw ContractError("choose_stop_turn: sampling rule needs a generator");
      const double u = rng->uniform();
      double acc = 0.0;
      for (std::size_t t = 0; t < turns; ++t) {
        acc += trace.turns[t].pi;
        if (u < acc) return t + 1;
      }
      return turns;
    }
  }
  return turns;
}

namespace {

std::size_t argmax_first(const Eigen::VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<std::size_t>(best);
}

template <typename Scalar>
Eigen::VectorXd as_vector(const Var<Scalar>& v) {
  return v.value().col(0).template cast<double>();
}

}  // namespace

template <typename Scalar>
Episode<Scalar> run_episode(Tape<Scalar>& tape, ReasonerParams<Scalar>& p, const ReasonerConfig& cfg,
                            const Var<Scalar>& hq, const Var<Scalar>& mp, Rng* rng) {
  cfg.validate();
  if (mp.rows() != hq.rows()) {
    throw DimensionError("run_episode: question " + shape_of(hq.value()) + " and memory " + shape_of(mp.value()) +
                         " differ in rows");
  }
  const std::size_t turns = cfg.policy.turns;
  auto gru = GruVars<Scalar>::bind(tape, p.state);
  auto projected = matmul(tape.parameter(p.att_memory), mp);
  auto w_state = tape.parameter(p.att_state);

  Episode<Scalar> ep;
  auto s = init_state(hq);
  std::vector<double> taus;
  for (std::size_t t = 1; t <= turns; ++t) {
    auto a = attention_weights(projected, w_state, s, cfg.lambda);
    s = gru_cell(gru, s, matmul(mp, a));
    ++ep.trace.state_updates;

    Var<Scalar> tau;
    if (t == turns) {
      tau = tape.constant(Tensor<Scalar>::Ones(1, 1));
    } else if (cfg.policy.is_fixed()) {
      tau = tape.constant(Tensor<Scalar>::Zero(1, 1));
    } else {
      tau = terminate_prob(tape, p.gate, s);
    }
    auto heads = answer_span(tape, p, s, mp);
    ep.tau.push_back(tau);
    ep.ys.push_back(heads.start);
    ep.ye.push_back(heads.end);

    TurnRecord rec;
    rec.tau = static_cast<double>(tau.item());
    rec.ys = as_vector(heads.start);
    rec.ye = as_vector(heads.end);
    rec.argmax_start = argmax_first(rec.ys);
    rec.argmax_end = argmax_first(rec.ye);
    rec.span = best_span(rec.ys, rec.ye, cfg.max_span_len);
    taus.push_back(rec.tau);
    ep.trace.turns.push_back(std::move(rec));
  }
  const auto pi = stop_distribution(taus);
  for (std::size_t t = 0; t < turns; ++t) ep.trace.turns[t].pi = pi[t];
  ep.trace.stop_turn = choose_stop_turn(ep.trace, cfg.stop_rule, rng);
  return ep;
}

DecisionTurns decision_turn(const TurnTrace& trace) {
  const std::size_t stop = trace.stop_turn;
  if (stop < 1 || stop > trace.turns.size()) throw ContractError("decision_turn: stop turn outside trace");
  auto stable_from = [&](auto pick) {
    const std::size_t target = pick(trace.turns[stop - 1]);
    std::size_t t = stop;
    while (t > 1 && pick(trace.turns[t - 2]) == target) --t;
    return t;
  };
  DecisionTurns out;
  out.start = stable_from([](const TurnRecord& r) { return r.argmax_start; });
  out.end = stable_from([](const TurnRecord& r) { return r.argmax_end; });
  return out;
}

#define ITR_INSTANTIATE_REASONER(S)                                                                           \
  template struct ReasonerParams<S>;                                                                          \
  template Var<S> init_state(const Var<S>&);                                                                  \
  template Var<S> attention_weights(const Var<S>&, const Var<S>&, const Var<S>&, double);                     \
  template Var<S> attend(const Var<S>&, const Var<S>&, const Var<S>&, const Var<S>&, double);                 \
  template Var<S> terminate_prob(Tape<S>&, std::vector<DenseParams<S>>&, const Var<S>&);                      \
  template SpanDistributions<S> answer_span(Tape<S>&, ReasonerParams<S>&, const Var<S>&, const Var<S>&);      \
  template Episode<S> run_episode(Tape<S>&, ReasonerParams<S>&, const ReasonerConfig&, const Var<S>&,         \
                                  const Var<S>&, Rng*);

ITR_INSTANTIATE_REASONER(float)
ITR_INSTANTIATE_REASONER(double)

#undef ITR_INSTANTIATE_REASONER

}  // namespace itr

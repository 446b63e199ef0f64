#include "itr/layers.hpp"

#include "itr/errors.hpp"

#include <cmath>

namespace itr {

EmbeddingChannels parse_channels(const std::string& name) {
  if (name == "word") return EmbeddingChannels::Word;
  if (name == "word+char") return EmbeddingChannels::WordChar;
  if (name == "word+char+3gram") return EmbeddingChannels::WordCharTrigram;
  throw ConfigError("unknown embedding channels '" + name + "' (word | word+char | word+char+3gram)");
}

std::string to_string(EmbeddingChannels c) {
  switch (c) {
    case EmbeddingChannels::Word: return "word";
    case EmbeddingChannels::WordChar: return "word+char";
    case EmbeddingChannels::WordCharTrigram: return "word+char+3gram";
  }
  return "unknown";
}

void LayerConfig::validate() const {
  if (word_dim == 0 || char_dim == 0 || char_filters == 0 || char_window == 0 || trigram_filters == 0 ||
      hidden == 0) {
    throw ConfigError("layer dimensions must be positive");
  }
  if (!(dropout_embed >= 0.0 && dropout_embed < 1.0) || !(dropout_gru >= 0.0 && dropout_gru < 1.0)) {
    throw ConfigError("dropout rates must lie in [0, 1)");
  }
}

template <typename Scalar>
Tensor<Scalar> glorot(Index rows, Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor<Scalar> m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = static_cast<Scalar>(rng.uniform(-a, a));
  }
  return m;
}

template <typename Scalar>
GruParams<Scalar> GruParams<Scalar>::init(const std::string& name, std::size_t input, std::size_t hidden,
                                          Rng& rng) {
  const auto k = static_cast<Index>(input);
  const auto h = static_cast<Index>(hidden);
  GruParams p;
  p.w_in = Parameter<Scalar>(name + ".w_in", glorot<Scalar>(3 * h, k, rng));
  p.b_in = Parameter<Scalar>(name + ".b_in", Tensor<Scalar>::Zero(3 * h, 1));
  p.u_zr = Parameter<Scalar>(name + ".u_zr", glorot<Scalar>(2 * h, h, rng));
  p.u_h = Parameter<Scalar>(name + ".u_h", glorot<Scalar>(h, h, rng));
  return p;
}

template <typename Scalar>
EncoderParams<Scalar> EncoderParams<Scalar>::init(const LayerConfig& cfg, std::size_t vocab_size,
                                                  std::size_t char_vocab_size, Rng& rng) {
  cfg.validate();
  const auto e = static_cast<Index>(cfg.embed_dim());
  const auto d = static_cast<Index>(cfg.hidden);
  EncoderParams p;
  auto& em = p.embed;
  em.word_table = Parameter<Scalar>("embed.word", Tensor<Scalar>::Zero(static_cast<Index>(vocab_size),
                                                                       static_cast<Index>(cfg.word_dim)),
                                    cfg.train_word_embeddings);
  {
    Tensor<Scalar> chars(static_cast<Index>(char_vocab_size), static_cast<Index>(cfg.char_dim));
    for (Index i = 0; i < chars.size(); ++i) chars(i) = static_cast<Scalar>(rng.normal(0.0, 0.1));
    chars.row(0).setZero();
    em.char_table = Parameter<Scalar>("embed.char", std::move(chars));
  }
  em.char_filters = Parameter<Scalar>(
      "embed.char_conv.w",
      glorot<Scalar>(static_cast<Index>(cfg.char_filters), static_cast<Index>(cfg.char_dim * cfg.char_window), rng));
  em.char_bias = Parameter<Scalar>("embed.char_conv.b", Tensor<Scalar>::Zero(static_cast<Index>(cfg.char_filters), 1));
  {
    Tensor<Scalar> tri(static_cast<Index>(kTrigramBuckets), static_cast<Index>(cfg.trigram_filters));
    for (Index i = 0; i < tri.size(); ++i) tri(i) = static_cast<Scalar>(rng.normal(0.0, 0.1));
    em.trigram_table = Parameter<Scalar>("embed.trigram_conv.w", std::move(tri));
  }
  em.trigram_bias =
      Parameter<Scalar>("embed.trigram_conv.b", Tensor<Scalar>::Zero(static_cast<Index>(cfg.trigram_filters), 1));
  for (std::size_t l = 0; l < cfg.highway_layers; ++l) {
    const std::string n = "embed.highway" + std::to_string(l);
    HighwayParams<Scalar> h;
    h.w_gate = Parameter<Scalar>(n + ".w_gate", glorot<Scalar>(e, e, rng));
    h.b_gate = Parameter<Scalar>(n + ".b_gate", Tensor<Scalar>::Constant(e, 1, Scalar(-1)));
    h.w_transform = Parameter<Scalar>(n + ".w_transform", glorot<Scalar>(e, e, rng));
    h.b_transform = Parameter<Scalar>(n + ".b_transform", Tensor<Scalar>::Zero(e, 1));
    em.highway.push_back(std::move(h));
  }
  p.context_fwd = GruParams<Scalar>::init("context.fwd", cfg.embed_dim(), cfg.hidden, rng);
  p.context_bwd = GruParams<Scalar>::init("context.bwd", cfg.embed_dim(), cfg.hidden, rng);
  p.w_match = Parameter<Scalar>("coattention.w_match", glorot<Scalar>(6 * d, 1, rng));
  p.memory_fwd = GruParams<Scalar>::init("memory.fwd", 8 * cfg.hidden, cfg.hidden, rng);
  p.memory_bwd = GruParams<Scalar>::init("memory.bwd", 8 * cfg.hidden, cfg.hidden, rng);
  return p;
}

template <typename Scalar>
Var<Scalar> gru_step(const GruVars<Scalar>& g, const Var<Scalar>& h, const Var<Scalar>& xp) {
  const Index hd = g.hidden();
  if (h.rows() != hd || h.cols() != 1 || xp.rows() != 3 * hd || xp.cols() != 1) {
    throw DimensionError("gru_step: state " + shape_of(h.value()) + " / projection " + shape_of(xp.value()) +
                         " do not match hidden size " + std::to_string(hd));
  }
  auto zr = sigmoid(add(slice_rows(xp, 0, 2 * hd), matmul(g.u_zr, h)));
  auto z = slice_rows(zr, 0, hd);
  auto r = slice_rows(zr, hd, hd);
  auto cand = tanh(add(slice_rows(xp, 2 * hd, hd), matmul(g.u_h, hadamard(r, h))));
  return add(h, hadamard(z, sub(cand, h)));
}

template <typename Scalar>
Var<Scalar> gru_cell(const GruVars<Scalar>& g, const Var<Scalar>& h, const Var<Scalar>& x) {
  if (x.rows() != g.w_in.cols() || x.cols() != 1) {
    throw DimensionError("gru_cell: input " + shape_of(x.value()) + " does not match weights " +
                         shape_of(g.w_in.value()));
  }
  return gru_step(g, h, add(matmul(g.w_in, x), g.b_in));
}

template <typename Scalar>
Var<Scalar> gru_sequence(const GruVars<Scalar>& g, const Var<Scalar>& x, bool reverse) {
  if (x.rows() != g.w_in.cols()) {
    throw DimensionError("gru_sequence: input " + shape_of(x.value()) + " does not match weights " +
                         shape_of(g.w_in.value()));
  }
  const Index len = x.cols();
  if (len < 1) throw DimensionError("gru_sequence: empty sequence");
  Tape<Scalar>& tape = x.tape();
  auto proj = add_colwise(matmul(g.w_in, x), g.b_in);
  auto h = tape.constant(Tensor<Scalar>::Zero(g.hidden(), 1));
  std::vector<Var<Scalar>> states(static_cast<std::size_t>(len));
  for (Index step = 0; step < len; ++step) {
    const Index j = reverse ? len - 1 - step : step;
    h = gru_step(g, h, slice_cols(proj, j, 1));
    states[static_cast<std::size_t>(j)] = h;
  }
  return concat_cols(states);
}

template <typename Scalar>
Var<Scalar> bigru(const GruVars<Scalar>& fwd, const GruVars<Scalar>& bwd, const Var<Scalar>& x, double dropout_rate,
                  bool training) {
  auto in = dropout(x, dropout_rate, training);
  return concat_rows(std::vector<Var<Scalar>>{gru_sequence(fwd, in, false), gru_sequence(bwd, in, true)});
}

template <typename Scalar>
Var<Scalar> highway(Tape<Scalar>& tape, HighwayParams<Scalar>& p, const Var<Scalar>& x) {
  auto gate = sigmoid(add_colwise(matmul(tape.parameter(p.w_gate), x), tape.parameter(p.b_gate)));
  auto transform = relu(add_colwise(matmul(tape.parameter(p.w_transform), x), tape.parameter(p.b_transform)));
  return add(x, hadamard(gate, sub(transform, x)));
}

template <typename Scalar>
Var<Scalar> embed_tokens(Tape<Scalar>& tape, EmbeddingParams<Scalar>& p, const LayerConfig& cfg,
                         const TokenFeatures& tokens, bool training) {
  const std::size_t len = tokens.size();
  if (len == 0) throw DimensionError("embed_tokens: empty token sequence");
  std::vector<Var<Scalar>> channels;
  channels.push_back(transpose(gather(tape.parameter(p.word_table), std::span<const std::size_t>(tokens.words))));

  if (cfg.use_chars()) {
    std::vector<std::size_t> flat;
    std::vector<Index> lengths;
    std::vector<Index> windows;
    const auto w = static_cast<Index>(cfg.char_window);
    for (const auto& cs : tokens.chars) {
      if (cs.empty()) {
        flat.push_back(Vocab::kUnk);
        lengths.push_back(1);
      } else {
        flat.insert(flat.end(), cs.begin(), cs.end());
        lengths.push_back(static_cast<Index>(cs.size()));
      }
      windows.push_back(window_count(lengths.back(), w));
    }
    auto chars = transpose(gather(tape.parameter(p.char_table), std::span<const std::size_t>(flat)));
    auto patches = unfold(chars, w, std::span<const Index>(lengths));
    auto response = add_colwise(matmul(tape.parameter(p.char_filters), patches), tape.parameter(p.char_bias));
    auto pooled = tanh(segment_max_cols(response, std::span<const Index>(windows)));
    channels.push_back(dropout(pooled, cfg.dropout_embed, training));
  }

  if (cfg.use_trigrams()) {
    std::vector<std::size_t> flat;
    std::vector<Index> counts;
    for (const auto& ts : tokens.trigrams) {
      flat.insert(flat.end(), ts.begin(), ts.end());
      counts.push_back(static_cast<Index>(ts.size()));
      if (ts.empty()) throw DimensionError("embed_tokens: token without trigrams");
    }
    // Window-1 convolution over one-hot trigram inputs is a row lookup.
    auto rows = transpose(gather(tape.parameter(p.trigram_table), std::span<const std::size_t>(flat)));
    auto response = add_colwise(rows, tape.parameter(p.trigram_bias));
    auto pooled = tanh(segment_max_cols(response, std::span<const Index>(counts)));
    channels.push_back(dropout(pooled, cfg.dropout_embed, training));
  }

  auto x = channels.size() == 1 ? channels.front() : concat_rows(channels);
  for (auto& h : p.highway) x = highway(tape, h, x);
  return x;
}

template <typename Scalar>
Var<Scalar> match_score(const Var<Scalar>& a, const Var<Scalar>& b, const Var<Scalar>& w) {
  if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows() || w.rows() != 3 * a.rows() || w.cols() != 1) {
    throw DimensionError("match_score: vectors " + shape_of(a.value()) + ", " + shape_of(b.value()) +
                         " and weights " + shape_of(w.value()) + " are inconsistent");
  }
  auto features = concat_rows(std::vector<Var<Scalar>>{a, b, hadamard(a, b)});
  return matmul(transpose(w), features);
}

template <typename Scalar>
CoAttention<Scalar> coattend(const Var<Scalar>& hq, const Var<Scalar>& hp, const Var<Scalar>& w_match,
                             AlignmentNorm norm) {
  const Index m = hq.cols();
  const Index n = hp.cols();
  if (m == 0 || n == 0) throw DimensionError("coattend: empty question or passage");
  const Index dd = hq.rows();
  if (hp.rows() != dd || w_match.rows() != 3 * dd || w_match.cols() != 1) {
    throw DimensionError("coattend: Hq " + shape_of(hq.value()) + ", Hp " + shape_of(hp.value()) + ", w " +
                         shape_of(w_match.value()) + " are inconsistent");
  }
  auto w_q = slice_rows(w_match, 0, dd);
  auto w_p = slice_rows(w_match, dd, dd);
  auto w_qp = slice_rows(w_match, 2 * dd, dd);
  // C = (Hq^T w_q) 1^T + 1 (w_p^T Hp) + Hq^T diag(w_qp) Hp
  auto cross = matmul(transpose(mul_colwise(w_qp, hq)), hp);
  auto c = add_rowwise(add_colwise(cross, matmul(transpose(hq), w_q)), matmul(transpose(w_p), hp));

  CoAttention<Scalar> out;
  out.c = c;
  out.cq = softmax(c, norm == AlignmentNorm::RowWise ? 1 : 0);
  out.cp = transpose(softmax(max_over_axis(c, 0), 1));
  auto q_aware = matmul(hq, out.cq);
  auto summary = matmul(hp, out.cp);
  out.u = concat_rows(std::vector<Var<Scalar>>{hp, q_aware, hadamard(hp, q_aware), mul_colwise(summary, hp)});
  return out;
}

template <typename Scalar>
Var<Scalar> build_memory(const GruVars<Scalar>& fwd, const GruVars<Scalar>& bwd, const Var<Scalar>& u,
                         double dropout_rate, bool training) {
  return bigru(fwd, bwd, u, dropout_rate, training);
}

template <typename Scalar>
EncodedPair<Scalar> encode_pair(Tape<Scalar>& tape, EncoderParams<Scalar>& p, const LayerConfig& cfg,
                                const TokenFeatures& question, const TokenFeatures& passage, bool training) {
  if (question.size() == 0 || passage.size() == 0) throw DimensionError("encode_pair: empty question or passage");
  auto ctx_f = GruVars<Scalar>::bind(tape, p.context_fwd);
  auto ctx_b = GruVars<Scalar>::bind(tape, p.context_bwd);
  EncodedPair<Scalar> out;
  out.hq = bigru(ctx_f, ctx_b, embed_tokens(tape, p.embed, cfg, question, training), cfg.dropout_gru, training);
  out.hp = bigru(ctx_f, ctx_b, embed_tokens(tape, p.embed, cfg, passage, training), cfg.dropout_gru, training);
  auto co = coattend(out.hq, out.hp, tape.parameter(p.w_match), cfg.alignment_norm);
  out.c = co.c;
  out.cq = co.cq;
  out.cp = co.cp;
  out.u = co.u;
  out.mp = build_memory(GruVars<Scalar>::bind(tape, p.memory_fwd), GruVars<Scalar>::bind(tape, p.memory_bwd), co.u,
                        cfg.dropout_gru, training);
  return out;
}

#define ITR_INSTANTIATE_LAYERS(S)                                                                              \
  template Tensor<S> glorot<S>(Index, Index, Rng&);                                                            \
  template struct GruParams<S>;                                                                                \
  template struct EncoderParams<S>;                                                                            \
  template Var<S> gru_step(const GruVars<S>&, const Var<S>&, const Var<S>&);                                   \
  template Var<S> gru_cell(const GruVars<S>&, const Var<S>&, const Var<S>&);                                   \
  template Var<S> gru_sequence(const GruVars<S>&, const Var<S>&, bool);                                        \
  template Var<S> bigru(const GruVars<S>&, const GruVars<S>&, const Var<S>&, double, bool);                    \
  template Var<S> highway(Tape<S>&, HighwayParams<S>&, const Var<S>&);                                         \
  template Var<S> embed_tokens(Tape<S>&, EmbeddingParams<S>&, const LayerConfig&, const TokenFeatures&, bool); \
  template Var<S> match_score(const Var<S>&, const Var<S>&, const Var<S>&);                                    \
  template CoAttention<S> coattend(const Var<S>&, const Var<S>&, const Var<S>&, AlignmentNorm);                \
  template Var<S> build_memory(const GruVars<S>&, const GruVars<S>&, const Var<S>&, double, bool);             \
  template EncodedPair<S> encode_pair(Tape<S>&, EncoderParams<S>&, const LayerConfig&, const TokenFeatures&,   \
                                      const TokenFeatures&, bool);

ITR_INSTANTIATE_LAYERS(float)
ITR_INSTANTIATE_LAYERS(double)

#undef ITR_INSTANTIATE_LAYERS

}  // namespace itr

#pragma once

#include "itr/ops.hpp"
#include "itr/text.hpp"

#include <cstddef>
#include <string>
#include <vector>

// Representation stack: token embeddings with a highway network, BiGRU
// encoders, question/passage co-attention and the passage memory.
namespace itr {

enum class EmbeddingChannels { Word, WordChar, WordCharTrigram };

EmbeddingChannels parse_channels(const std::string& name);
std::string to_string(EmbeddingChannels c);

// How the alignment matrix is normalized into question-to-passage weights.
// RowWise: each question word distributes over passage positions.
// ColumnWise: each passage position distributes over question words.
enum class AlignmentNorm { RowWise, ColumnWise };

struct LayerConfig {
  std::size_t word_dim = 300;
  std::size_t char_dim = 16;
  std::size_t char_filters = 100;
  std::size_t char_window = 5;
  std::size_t trigram_filters = 100;
  std::size_t hidden = 128;  // d; bidirectional outputs are 2d
  std::size_t highway_layers = 2;
  double dropout_embed = 0.15;
  double dropout_gru = 0.25;
  EmbeddingChannels channels = EmbeddingChannels::WordCharTrigram;
  AlignmentNorm alignment_norm = AlignmentNorm::RowWise;
  bool train_word_embeddings = false;

  bool use_chars() const { return channels != EmbeddingChannels::Word; }
  bool use_trigrams() const { return channels == EmbeddingChannels::WordCharTrigram; }
  // e = word_dim + char_filters + trigram_filters for the enabled channels.
  std::size_t embed_dim() const {
    return word_dim + (use_chars() ? char_filters : 0) + (use_trigrams() ? trigram_filters : 0);
  }
  void validate() const;
};

// Glorot-uniform initialized matrix.
template <typename Scalar>
Tensor<Scalar> glorot(Index rows, Index cols, Rng& rng);

// z, r and candidate projections stacked as [z; r; h].
template <typename Scalar>
struct GruParams {
  Parameter<Scalar> w_in;  // 3h x k
  Parameter<Scalar> b_in;  // 3h x 1
  Parameter<Scalar> u_zr;  // 2h x h
  Parameter<Scalar> u_h;   // h x h

  static GruParams init(const std::string& name, std::size_t input, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return static_cast<std::size_t>(u_h.value.rows()); }
  std::size_t input() const { return static_cast<std::size_t>(w_in.value.cols()); }

  template <typename F>
  void visit(F&& f) {
    f(w_in);
    f(b_in);
    f(u_zr);
    f(u_h);
  }
  template <typename To>
  GruParams<To> cast() const {
    return {w_in.template cast<To>(), b_in.template cast<To>(), u_zr.template cast<To>(), u_h.template cast<To>()};
  }
};

template <typename Scalar>
struct HighwayParams {
  Parameter<Scalar> w_gate;
  Parameter<Scalar> b_gate;
  Parameter<Scalar> w_transform;
  Parameter<Scalar> b_transform;

  template <typename F>
  void visit(F&& f) {
    f(w_gate);
    f(b_gate);
    f(w_transform);
    f(b_transform);
  }
  template <typename To>
  HighwayParams<To> cast() const {
    return {w_gate.template cast<To>(), b_gate.template cast<To>(), w_transform.template cast<To>(),
            b_transform.template cast<To>()};
  }
};

template <typename Scalar>
struct EmbeddingParams {
  Parameter<Scalar> word_table;     // V x word_dim
  Parameter<Scalar> char_table;     // C x char_dim
  Parameter<Scalar> char_filters;   // char_filters x (char_dim * window)
  Parameter<Scalar> char_bias;      // char_filters x 1
  Parameter<Scalar> trigram_table;  // kTrigramBuckets x trigram_filters (window-1 convolution)
  Parameter<Scalar> trigram_bias;   // trigram_filters x 1
  std::vector<HighwayParams<Scalar>> highway;

  template <typename F>
  void visit(F&& f, const LayerConfig& cfg) {
    f(word_table);
    if (cfg.use_chars()) {
      f(char_table);
      f(char_filters);
      f(char_bias);
    }
    if (cfg.use_trigrams()) {
      f(trigram_table);
      f(trigram_bias);
    }
    for (auto& h : highway) h.visit(f);
  }
  template <typename To>
  EmbeddingParams<To> cast() const {
    EmbeddingParams<To> o;
    o.word_table = word_table.template cast<To>();
    o.char_table = char_table.template cast<To>();
    o.char_filters = char_filters.template cast<To>();
    o.char_bias = char_bias.template cast<To>();
    o.trigram_table = trigram_table.template cast<To>();
    o.trigram_bias = trigram_bias.template cast<To>();
    for (const auto& h : highway) o.highway.push_back(h.template cast<To>());
    return o;
  }
};

// Everything below the reasoner.
template <typename Scalar>
struct EncoderParams {
  EmbeddingParams<Scalar> embed;
  GruParams<Scalar> context_fwd;  // shared by question and passage
  GruParams<Scalar> context_bwd;
  Parameter<Scalar> w_match;      // 6d x 1: [a; b; a o b] weights
  GruParams<Scalar> memory_fwd;
  GruParams<Scalar> memory_bwd;

  static EncoderParams init(const LayerConfig& cfg, std::size_t vocab_size, std::size_t char_vocab_size,
                            Rng& rng);

  template <typename F>
  void visit(F&& f, const LayerConfig& cfg) {
    embed.visit(f, cfg);
    context_fwd.visit(f);
    context_bwd.visit(f);
    f(w_match);
    memory_fwd.visit(f);
    memory_bwd.visit(f);
  }
  template <typename To>
  EncoderParams<To> cast() const {
    return {embed.template cast<To>(),      context_fwd.template cast<To>(), context_bwd.template cast<To>(),
            w_match.template cast<To>(),    memory_fwd.template cast<To>(),  memory_bwd.template cast<To>()};
  }
};

// Binds the parameters of one forward pass to a tape.
template <typename Scalar>
struct GruVars {
  Var<Scalar> w_in, b_in, u_zr, u_h;

  static GruVars bind(Tape<Scalar>& tape, GruParams<Scalar>& p) {
    return {tape.parameter(p.w_in), tape.parameter(p.b_in), tape.parameter(p.u_zr), tape.parameter(p.u_h)};
  }
  Index hidden() const { return u_h.rows(); }
};

// One GRU step on a precomputed input projection xp = W x + b (3h x 1):
// z = s(xp_z + U_z h), r = s(xp_r + U_r h), c = tanh(xp_h + U (r o h)),
// h' = (1 - z) o h + z o c.
template <typename Scalar>
Var<Scalar> gru_step(const GruVars<Scalar>& g, const Var<Scalar>& h, const Var<Scalar>& xp);

// Full cell from a raw input x (k x 1).
template <typename Scalar>
Var<Scalar> gru_cell(const GruVars<Scalar>& g, const Var<Scalar>& h, const Var<Scalar>& x);

// States for every column of x (k x L), starting from zero. Column j of the
// result is the state after consuming position j; a reverse pass runs from
// L-1 down to 0.
template <typename Scalar>
Var<Scalar> gru_sequence(const GruVars<Scalar>& g, const Var<Scalar>& x, bool reverse);

// [forward states; backward states], 2h x L. Input dropout applies once to x.
template <typename Scalar>
Var<Scalar> bigru(const GruVars<Scalar>& fwd, const GruVars<Scalar>& bwd, const Var<Scalar>& x, double dropout_rate,
                  bool training);

// Highway layer y = t o relu(W x + b) + (1 - t) o x with t = s(W_t x + b_t).
template <typename Scalar>
Var<Scalar> highway(Tape<Scalar>& tape, HighwayParams<Scalar>& p, const Var<Scalar>& x);

// E (e x L) for a token sequence.
template <typename Scalar>
Var<Scalar> embed_tokens(Tape<Scalar>& tape, EmbeddingParams<Scalar>& p, const LayerConfig& cfg,
                         const TokenFeatures& tokens, bool training);

// w^T [a; b; a o b] for 2d-vectors a, b and w in R^{6d}.
template <typename Scalar>
Var<Scalar> match_score(const Var<Scalar>& a, const Var<Scalar>& b, const Var<Scalar>& w);

template <typename Scalar>
struct CoAttention {
  Var<Scalar> c;    // m x n alignment
  Var<Scalar> cq;   // m x n normalized alignment
  Var<Scalar> cp;   // n x 1 passage attention
  Var<Scalar> u;    // 8d x n
};

// C_ij = match(Hq_i, Hp_j); Cq = softmax(C) per alignment_norm;
// cp = softmax(max over rows of C); U = [Hp; Hq Cq; Hp o Hq Cq; Hp o D] with
// D = Hp cp broadcast to every column.
template <typename Scalar>
CoAttention<Scalar> coattend(const Var<Scalar>& hq, const Var<Scalar>& hp, const Var<Scalar>& w_match,
                             AlignmentNorm norm = AlignmentNorm::RowWise);

template <typename Scalar>
Var<Scalar> build_memory(const GruVars<Scalar>& fwd, const GruVars<Scalar>& bwd, const Var<Scalar>& u,
                         double dropout_rate, bool training);

template <typename Scalar>
struct EncodedPair {
  Var<Scalar> hq;  // 2d x m
  Var<Scalar> hp;  // 2d x n
  Var<Scalar> c;
  Var<Scalar> cq;
  Var<Scalar> cp;
  Var<Scalar> u;
  Var<Scalar> mp;  // 2d x n
};

template <typename Scalar>
EncodedPair<Scalar> encode_pair(Tape<Scalar>& tape, EncoderParams<Scalar>& p, const LayerConfig& cfg,
                                const TokenFeatures& question, const TokenFeatures& passage, bool training);

}  // namespace itr

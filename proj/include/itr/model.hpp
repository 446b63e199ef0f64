#pragma once

#include "itr/layers.hpp"
#include "itr/reasoner.hpp"

#include <functional>

namespace itr {

struct ModelConfig {
  LayerConfig layers;
  ReasonerConfig reasoner;

  void validate() const {
    layers.validate();
    reasoner.validate();
  }
};

// Every tensor of the reader.
template <typename Scalar>
struct ModelParams {
  EncoderParams<Scalar> encoder;
  ReasonerParams<Scalar> reasoner;

  static ModelParams init(const ModelConfig& cfg, std::size_t vocab_size, std::size_t char_vocab_size, Rng& rng) {
    cfg.validate();
    ModelParams p;
    p.encoder = EncoderParams<Scalar>::init(cfg.layers, vocab_size, char_vocab_size, rng);
    p.reasoner = ReasonerParams<Scalar>::init(cfg.layers.hidden, cfg.reasoner, rng);
    return p;
  }

  // Parameters in a fixed order; channels disabled by the config are skipped.
  template <typename F>
  void visit(F&& f, const ModelConfig& cfg) {
    encoder.visit(f, cfg.layers);
    reasoner.visit(f);
  }

  std::vector<Parameter<Scalar>*> list(const ModelConfig& cfg) {
    std::vector<Parameter<Scalar>*> out;
    visit([&](Parameter<Scalar>& p) { out.push_back(&p); }, cfg);
    return out;
  }

  template <typename To>
  ModelParams<To> cast() const {
    return {encoder.template cast<To>(), reasoner.template cast<To>()};
  }
};

template <typename Scalar>
struct Forward {
  EncodedPair<Scalar> encoded;
  Episode<Scalar> episode;
};

// Full reader pass over one (question, passage) pair.
template <typename Scalar>
Forward<Scalar> forward(Tape<Scalar>& tape, ModelParams<Scalar>& p, const ModelConfig& cfg,
                        const TokenFeatures& question, const TokenFeatures& passage, bool training,
                        Rng* stop_rng = nullptr) {
  Forward<Scalar> out;
  out.encoded = encode_pair(tape, p.encoder, cfg.layers, question, passage, training);
  out.episode = run_episode(tape, p.reasoner, cfg.reasoner, out.encoded.hq, out.encoded.mp, stop_rng);
  return out;
}

}  // namespace itr

#include "itr/trainer.hpp"

#include "itr/checkpoint.hpp"
#include "itr/errors.hpp"
#include "itr/reader.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

namespace itr {

Advantage parse_advantage(const std::string& name) {
  if (name == "multiplicative") return Advantage::Multiplicative;
  if (name == "additive") return Advantage::Additive;
  throw ConfigError("unknown advantage '" + name + "' (multiplicative | additive)");
}

std::string to_string(Advantage a) { return a == Advantage::Additive ? "additive" : "multiplicative"; }

std::vector<double> advantages(const DetachedStats& stats, Advantage kind) {
  if (stats.pi.size() != stats.reward.size()) throw DimensionError("advantages: pi and reward lengths differ");
  double baseline = 0.0;
  for (std::size_t t = 0; t < stats.pi.size(); ++t) baseline += stats.pi[t] * stats.reward[t];
  std::vector<double> adv(stats.pi.size(), 0.0);
  for (std::size_t t = 0; t < adv.size(); ++t) {
    if (kind == Advantage::Additive) {
      adv[t] = stats.reward[t] - baseline;
    } else if (baseline > 0.0) {
      adv[t] = stats.reward[t] / baseline - 1.0;
    }
  }
  return adv;
}

template <typename Scalar>
InstanceLoss<Scalar> instance_loss(Tape<Scalar>& tape, const Episode<Scalar>& ep, TokenSpan gold,
                                   const LossConfig& cfg, bool fixed_policy, const DetachedStats* frozen) {
  const std::size_t turns = ep.ys.size();
  if (turns == 0 || ep.ye.size() != turns || ep.tau.size() != turns) {
    throw ContractError("instance_loss: incomplete episode");
  }
  const auto n = static_cast<std::size_t>(ep.ys.front().rows());
  if (gold.start > gold.end || gold.end >= n) {
    throw LookupError("instance_loss: gold span (" + std::to_string(gold.start) + ", " + std::to_string(gold.end) +
                      ") outside passage of " + std::to_string(n) + " tokens");
  }
  const auto s = static_cast<Index>(gold.start);
  const auto e = static_cast<Index>(gold.end);

  InstanceLoss<Scalar> out;
  if (frozen != nullptr) {
    if (frozen->pi.size() != turns || frozen->reward.size() != turns) {
      throw DimensionError("instance_loss: frozen statistics do not cover " + std::to_string(turns) + " turns");
    }
    out.stats = *frozen;
  } else {
    std::vector<double> tau;
    for (std::size_t t = 0; t < turns; ++t) {
      tau.push_back(static_cast<double>(ep.tau[t].item()));
      out.stats.reward.push_back(static_cast<double>(ep.ys[t].value()(s, 0)) *
                                 static_cast<double>(ep.ye[t].value()(e, 0)));
    }
    out.stats.pi = stop_distribution(tau);
  }

  // pi_t as a differentiable function of the gate outputs.
  std::vector<Var<Scalar>> pi;
  auto remain = tape.constant(Tensor<Scalar>::Ones(1, 1));
  for (std::size_t t = 0; t < turns; ++t) {
    pi.push_back(hadamard(ep.tau[t], remain));
    if (t + 1 < turns) remain = hadamard(remain, affine(ep.tau[t], Scalar(-1), Scalar(1)));
  }

  const auto floor = static_cast<Scalar>(cfg.log_floor);
  Var<Scalar> ans;
  for (std::size_t t = 0; t < turns; ++t) {
    auto ll = add(log(entry(ep.ys[t], s, 0), floor), log(entry(ep.ye[t], e, 0), floor));
    auto weighted = cfg.answer_grad_into_gate ? mul_scalar(ll, pi[t])
                                              : scale(ll, static_cast<Scalar>(out.stats.pi[t]));
    ans = t == 0 ? weighted : add(ans, weighted);
  }
  out.answer = scale(ans, Scalar(-1));
  out.total = out.answer;

  if (!fixed_policy) {
    out.advantage = advantages(out.stats, cfg.advantage);
    Var<Scalar> term;
    for (std::size_t t = 0; t < turns; ++t) {
      auto w = scale(pi[t], static_cast<Scalar>(out.advantage[t]));
      term = t == 0 ? w : add(term, w);
    }
    out.termination = scale(term, Scalar(-1));
    out.total = add(out.answer, out.termination);
  } else {
    out.advantage.assign(turns, 0.0);
  }
  return out;
}

template InstanceLoss<float> instance_loss(Tape<float>&, const Episode<float>&, TokenSpan, const LossConfig&, bool,
                                           const DetachedStats*);
template InstanceLoss<double> instance_loss(Tape<double>&, const Episode<double>&, TokenSpan, const LossConfig&,
                                            bool, const DetachedStats*);

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be nonnegative");
  if (target_dev_em < 0.0 || target_dev_em > 1.0) throw ConfigError("target_dev_em must be in [0, 1]");
  optimizer.validate();
}

namespace {

struct Instance {
  const Example* example;
  TokenFeatures question;
  TokenFeatures passage;
  TokenSpan gold;
};

std::vector<Instance> make_instances(const Vocab& vocab, const Dataset& data) {
  std::vector<Instance> out;
  for (const Example& ex : data.examples) {
    if (!ex.answerable() || ex.question.empty()) continue;
    const Passage& p = ex.passages[*ex.gold_passage];
    out.push_back({&ex, vocab.features(ex.question), vocab.features(p.tokens), *p.gold});
  }
  return out;
}

void write_nan_dump(const std::filesystem::path& dir, std::size_t epoch, const Instance& inst, double answer,
                    double termination, const std::vector<Parameter<float>*>& params) {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["example"] = inst.example->id;
  j["gold"] = {inst.gold.start, inst.gold.end};
  j["answer_loss"] = std::isfinite(answer) ? nlohmann::ordered_json(answer) : nlohmann::ordered_json("non-finite");
  j["termination_loss"] =
      std::isfinite(termination) ? nlohmann::ordered_json(termination) : nlohmann::ordered_json("non-finite");
  auto norms = nlohmann::ordered_json::object();
  for (const auto* p : params) {
    norms[p->name] = p->value.allFinite() ? nlohmann::ordered_json(static_cast<double>(p->value.norm()))
                                          : nlohmann::ordered_json("non-finite");
  }
  j["parameter_norms"] = std::move(norms);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "nan_dump.json");
  out << j.dump(1) << '\n';
}

}  // namespace

TrainResult train(ModelParams<float>& params, const ModelConfig& cfg, const Vocab& vocab, const Dataset& train_set,
                  const Dataset* dev_set, const TrainConfig& tc, const std::optional<std::filesystem::path>& checkpoint,
                  const std::optional<std::filesystem::path>& dump_dir) {
  cfg.validate();
  tc.validate();
  const auto instances = make_instances(vocab, train_set);
  if (instances.empty()) throw ConfigError("training set has no span-labeled examples");
  const bool fixed = cfg.reasoner.policy.is_fixed();
  const auto plist = params.list(cfg);
  for (auto* p : plist) p->zero_grad();
  AdaDelta<float> opt(tc.optimizer);

  TrainResult result;
  std::vector<Tensor<float>> best;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(Rng::mix(tc.seed, 0x5eed));

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
      const std::size_t end = std::min(order.size(), b + tc.batch_size);
      for (std::size_t k = b; k < end; ++k) {
        const Instance& inst = instances[order[k]];
        Tape<float> tape(Rng::mix(tc.seed, epoch * instances.size() + order[k]));
        auto fw = forward(tape, params, cfg, inst.question, inst.passage, true, &tape.rng());
        auto parts = instance_loss(tape, fw.episode, inst.gold, tc.loss, fixed);
        const double value = parts.total.item();
        if (!std::isfinite(value)) {
          const double term = parts.termination.valid() ? parts.termination.item() : 0.0;
          if (dump_dir) write_nan_dump(*dump_dir, epoch, inst, parts.answer.item(), term, plist);
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on example '" +
                             inst.example->id + "'");
        }
        loss_sum += value;
        tape.backward(parts.total);
      }
      scale_gradients(plist, 1.0 / static_cast<double>(end - b));
      clip_gradients(plist, tc.clip_norm);
      result.skipped_updates += opt.step(plist);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(instances.size());
    if (dev_set != nullptr && !dev_set->examples.empty()) {
      PredictOptions po;
      po.empty_floor = tc.empty_floor;
      po.with_loss = true;
      po.loss = tc.loss;
      po.seed = tc.seed;
      const auto preds = predict_dataset(params, cfg, vocab, *dev_set, po);
      double dl = 0.0;
      std::size_t dn = 0;
      for (const auto& p : preds) {
        for (const auto& r : p.readings) {
          if (r.loss) {
            dl += *r.loss;
            ++dn;
          }
        }
      }
      if (dn > 0) stats.dev_loss = dl / static_cast<double>(dn);
      const auto items = eval_items(*dev_set, preds);
      const auto report = evaluate(items);
      stats.dev_em = report.em;
      stats.dev_f1 = report.f1;
      if (report.f1 > result.best_dev_f1) {
        result.best_dev_f1 = report.f1;
        result.best_epoch = epoch;
        since_best = 0;
        best.clear();
        for (const auto* p : plist) best.push_back(p->value);
        if (checkpoint) save_parameters(*checkpoint, kModelMagic, plist);
      } else {
        ++since_best;
      }
    }
    if (tc.verbose) {
      std::fprintf(stderr, "epoch %zu train_loss %.4f", epoch, stats.train_loss);
      if (stats.dev_em) std::fprintf(stderr, " dev_em %.4f dev_f1 %.4f", *stats.dev_em, *stats.dev_f1);
      std::fprintf(stderr, "\n");
    }
    result.curve.push_back(stats);
    if (tc.patience > 0 && since_best >= tc.patience) {
      result.stopped_early = true;
      break;
    }
    if (tc.target_dev_em > 0.0 && stats.dev_em && *stats.dev_em >= tc.target_dev_em) {
      result.stopped_early = true;
      break;
    }
  }

  if (!best.empty()) {
    for (std::size_t i = 0; i < plist.size(); ++i) plist[i]->value = best[i];
  } else if (checkpoint) {
    save_parameters(*checkpoint, kModelMagic, plist);
  }
  return result;
}

void write_loss_curve(const std::vector<EpochStats>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  out << "epoch,split,loss,EM,F1\n";
  for (const auto& s : curve) {
    out << s.epoch << ",train," << num(s.train_loss) << ",,\n";
    if (s.dev_em) {
      out << s.epoch << ",dev," << (s.dev_loss ? num(*s.dev_loss) : "") << "," << num(*s.dev_em) << ","
          << num(*s.dev_f1) << "\n";
    }
  }
}

void add_dataset_words(Vocab& vocab, const Dataset& data) {
  for (const Example& ex : data.examples) {
    for (const Token& t : ex.question) vocab.add_word(t.text);
    for (const Passage& p : ex.passages) {
      for (const Token& t : p.tokens) vocab.add_word(t.text);
    }
  }
}

}  // namespace itr

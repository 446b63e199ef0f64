#include "itr/metrics.hpp"

#include "itr/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace itr {
namespace {

Words split_ws(std::string_view s) {
  Words out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (b < i) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

double f1_tokens(const Words& pred, const Words& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& w : gold) ++counts[w];
  std::size_t common = 0;
  for (const auto& w : pred) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / static_cast<double>(pred.size());
  const double r = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

double rouge_from_lcs(std::size_t lcs, std::size_t pred_len, std::size_t ref_len, double beta) {
  if (pred_len == 0 && ref_len == 0) return 1.0;
  if (pred_len == 0 || ref_len == 0 || lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(pred_len);
  const double r = static_cast<double>(lcs) / static_cast<double>(ref_len);
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(std::span<const std::string> toks, int n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  const auto un = static_cast<std::size_t>(n);
  if (toks.size() < un) return counts;
  for (std::size_t i = 0; i + un <= toks.size(); ++i) {
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + un))];
  }
  return counts;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

Words normalize_answer(std::string_view text) {
  std::string s;
  s.reserve(text.size());
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc < 0x80 && std::ispunct(uc)) continue;
    s += static_cast<char>(std::tolower(uc));
  }
  Words out;
  for (auto& w : split_ws(s)) {
    if (w == "a" || w == "an" || w == "the") continue;
    out.push_back(std::move(w));
  }
  return out;
}

double exact_match(std::string_view prediction, std::span<const std::string> golds) {
  const Words p = normalize_answer(prediction);
  double best = 0.0;
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) best = 1.0;
  }
  return best;
}

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
  const Words p = normalize_answer(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_tokens(p, normalize_answer(g)));
  return best;
}

std::size_t lcs_len(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> prediction, std::span<const std::string> reference, double beta) {
  return rouge_from_lcs(lcs_len(prediction, reference), prediction.size(), reference.size(), beta);
}

double rouge_l(std::string_view prediction, std::span<const std::string> golds, double beta) {
  const Words p = normalize_answer(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, rouge_l(p, normalize_answer(g), beta));
  return best;
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    matches[static_cast<std::size_t>(n)] += o.matches[static_cast<std::size_t>(n)];
    totals[static_cast<std::size_t>(n)] += o.totals[static_cast<std::size_t>(n)];
  }
  pred_len += o.pred_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_stats(std::span<const std::string> prediction, std::span<const Words> references, int max_n) {
  if (max_n < 1 || max_n > kBleuMaxOrder) throw ConfigError("bleu: max_n must be in [1, 4]");
  BleuStats st;
  st.pred_len = prediction.size();
  if (!references.empty()) {
    std::size_t best = references[0].size();
    for (const auto& r : references) {
      const auto d = [&](std::size_t len) {
        return len > st.pred_len ? len - st.pred_len : st.pred_len - len;
      };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    st.ref_len = best;
  }
  for (int n = 1; n <= max_n; ++n) {
    const auto pc = ngram_counts(prediction, n);
    std::map<std::vector<std::string>, std::size_t> max_ref;
    for (const auto& r : references) {
      for (const auto& [g, c] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t match = 0;
    std::size_t total = 0;
    for (const auto& [g, c] : pc) {
      total += c;
      if (auto it = max_ref.find(g); it != max_ref.end()) match += std::min(c, it->second);
    }
    st.matches[static_cast<std::size_t>(n - 1)] = match;
    st.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return st;
}

double bleu_score(const BleuStats& s, int max_n) {
  if (s.pred_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    double p = 0.0;
    if (n == 1) {
      if (s.matches[i] == 0) return 0.0;
      p = static_cast<double>(s.matches[i]) / static_cast<double>(s.totals[i]);
    } else {
      p = (static_cast<double>(s.matches[i]) + 1.0) / (static_cast<double>(s.totals[i]) + 1.0);
    }
    log_sum += std::log(p);
  }
  const double geo = std::exp(log_sum / max_n);
  const double c = static_cast<double>(s.pred_len);
  const double r = static_cast<double>(s.ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * geo;
}

double bleu(std::span<const Words> predictions, std::span<const std::vector<Words>> references, int max_n) {
  if (predictions.empty()) throw ConfigError("bleu: empty corpus");
  if (predictions.size() != references.size()) {
    throw DimensionError("bleu: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(references.size()) + " references");
  }
  BleuStats total;
  for (std::size_t i = 0; i < predictions.size(); ++i) total += bleu_stats(predictions[i], references[i], max_n);
  return bleu_score(total, max_n);
}

double bleu(std::span<const Words> predictions, std::span<const Words> references, int max_n) {
  std::vector<std::vector<Words>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back({r});
  return bleu(predictions, std::span<const std::vector<Words>>(refs), max_n);
}

Words label_tokens(const std::vector<Token>& tokens) {
  Words out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    std::string s = t.text;
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(s));
  }
  return out;
}

SpanLabel max_rouge_span(std::span<const std::vector<Token>> passages, std::string_view answer,
                         std::size_t max_len, double beta) {
  if (passages.empty()) throw ConfigError("max_rouge_span: no passages");
  const Words ans = label_tokens(tokenize(answer));
  SpanLabel best;
  if (ans.empty() || max_len == 0) return best;
  const std::size_t m = ans.size();
  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t p = 0; p < passages.size(); ++p) {
    const Words toks = label_tokens(passages[p]);
    for (std::size_t s = 0; s < toks.size(); ++s) {
      std::fill(prev.begin(), prev.end(), 0);
      const std::size_t last = std::min(toks.size(), s + max_len);
      // Row e of the LCS table between toks[s..e] and the answer.
      for (std::size_t e = s; e < last; ++e) {
        cur[0] = 0;
        for (std::size_t j = 1; j <= m; ++j) {
          cur[j] = toks[e] == ans[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
        const double score = rouge_from_lcs(prev[m], e - s + 1, m, beta);
        if (score > best.score) {
          best.score = score;
          best.passage = p;
          best.span = {s, e};
        }
      }
    }
  }
  return best;
}

EvalReport evaluate(std::span<const EvalItem> items, double rouge_beta) {
  EvalReport report;
  BleuStats corpus;
  for (const EvalItem& it : items) {
    ExampleScore s;
    s.id = it.id;
    s.prediction = it.prediction;
    s.em = exact_match(it.prediction, it.golds);
    s.f1 = token_f1(it.prediction, it.golds);
    s.rouge_l = rouge_l(it.prediction, it.golds, rouge_beta);
    std::vector<Words> refs;
    for (const auto& g : it.golds) refs.push_back(normalize_answer(g));
    s.bleu = bleu_stats(normalize_answer(it.prediction), refs);
    s.answer_length = it.golds.empty() ? 0 : normalize_answer(it.golds.front()).size();
    s.question_word = question_word(it.question);
    s.query_type = it.query_type;
    corpus += s.bleu;
    report.em += s.em;
    report.f1 += s.f1;
    report.rouge_l += s.rouge_l;
    report.examples.push_back(std::move(s));
  }
  if (!report.examples.empty()) {
    const double n = static_cast<double>(report.examples.size());
    report.em /= n;
    report.f1 /= n;
    report.rouge_l /= n;
    report.bleu = bleu_score(corpus);
  }
  return report;
}

BreakdownKey parse_breakdown_key(std::string_view name) {
  if (name == "answer_length") return BreakdownKey::AnswerLength;
  if (name == "question_type" || name == "question_word") return BreakdownKey::QuestionWord;
  if (name == "query_type") return BreakdownKey::QueryType;
  throw ConfigError("unknown breakdown key '" + std::string(name) + "'");
}

std::string to_string(BreakdownKey key) {
  switch (key) {
    case BreakdownKey::AnswerLength: return "answer_length";
    case BreakdownKey::QuestionWord: return "question_type";
    case BreakdownKey::QueryType: return "query_type";
  }
  return "unknown";
}

std::string answer_length_bucket(std::size_t length) {
  if (length <= 5) return std::to_string(length);
  if (length <= 10) return "6-10";
  return "11+";
}

std::string question_word(std::string_view question) {
  static const char* kWords[] = {"What", "Who", "When", "Which", "Where", "Why", "How"};
  const auto toks = tokenize(question);
  if (toks.empty()) return "other";
  std::string first = toks.front().text;
  for (char& c : first) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const char* w : kWords) {
    std::string lw = w;
    for (char& c : lw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (first == lw) return w;
  }
  return "other";
}

std::vector<BreakdownRow> breakdown(const EvalReport& report, BreakdownKey key) {
  std::vector<std::string> order;
  switch (key) {
    case BreakdownKey::AnswerLength: order = {"0", "1", "2", "3", "4", "5", "6-10", "11+"}; break;
    case BreakdownKey::QuestionWord: order = {"What", "Who", "When", "Which", "Where", "Why", "How", "other"}; break;
    case BreakdownKey::QueryType: break;
  }
  std::map<std::string, std::vector<const ExampleScore*>> groups;
  for (const auto& e : report.examples) {
    std::string b;
    switch (key) {
      case BreakdownKey::AnswerLength: b = answer_length_bucket(e.answer_length); break;
      case BreakdownKey::QuestionWord: b = e.question_word; break;
      case BreakdownKey::QueryType: b = e.query_type.value_or("none"); break;
    }
    groups[b].push_back(&e);
  }
  if (order.empty()) {
    for (const auto& [b, _] : groups) order.push_back(b);
  }
  std::vector<BreakdownRow> rows;
  for (const auto& b : order) {
    auto it = groups.find(b);
    if (it == groups.end()) continue;
    BreakdownRow row;
    row.bucket = b;
    row.count = it->second.size();
    BleuStats st;
    for (const ExampleScore* e : it->second) {
      row.em += e->em;
      row.f1 += e->f1;
      row.rouge_l += e->rouge_l;
      st += e->bleu;
    }
    const double n = static_cast<double>(row.count);
    row.em /= n;
    row.f1 /= n;
    row.rouge_l /= n;
    row.bleu = bleu_score(st);
    rows.push_back(row);
  }
  return rows;
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["aggregate"] = {{"count", report.examples.size()},
                    {"em", report.em},
                    {"f1", report.f1},
                    {"bleu", report.bleu},
                    {"rouge_l", report.rouge_l}};
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : report.examples) {
    nlohmann::ordered_json x;
    x["id"] = e.id;
    x["prediction"] = e.prediction;
    x["em"] = e.em;
    x["f1"] = e.f1;
    x["rouge_l"] = e.rouge_l;
    x["bleu_matches"] = e.bleu.matches;
    x["bleu_totals"] = e.bleu.totals;
    x["pred_len"] = e.bleu.pred_len;
    x["ref_len"] = e.bleu.ref_len;
    x["answer_length"] = e.answer_length;
    x["question_type"] = e.question_word;
    x["query_type"] = e.query_type ? nlohmann::ordered_json(*e.query_type) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(x));
  }
  j["examples"] = std::move(arr);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

void write_aggregate_tsv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "count\tem\tf1\tbleu\trouge_l\n";
  out << report.examples.size() << '\t' << fmt(report.em) << '\t' << fmt(report.f1) << '\t' << fmt(report.bleu)
      << '\t' << fmt(report.rouge_l) << '\n';
}

void write_breakdown_tsv(const std::vector<BreakdownRow>& rows, BreakdownKey key,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << to_string(key) << "\tcount\tem\tf1\tbleu\trouge_l\n";
  for (const auto& r : rows) {
    out << r.bucket << '\t' << r.count << '\t' << fmt(r.em) << '\t' << fmt(r.f1) << '\t' << fmt(r.bleu) << '\t'
        << fmt(r.rouge_l) << '\n';
  }
}

}  // namespace itr

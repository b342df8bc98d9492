#include "logicmp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "logicmp/error.hpp"

namespace logicmp {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (start < pos) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ParseError(line, 1, "invalid number '" + std::string(token) + "'");
  if (!std::isfinite(value)) throw ParseError(line, 1, "non-finite number '" + std::string(token) + "'");
  return value;
}

std::string record_key(std::string_view predicate, const std::vector<std::string>& args, std::string_view label) {
  std::string key(predicate);
  if (!args.empty()) {
    key += "(";
    for (std::size_t k = 0; k < args.size(); ++k) {
      if (k) key += ",";
      key += args[k];
    }
    key += ")";
  }
  if (label != "true") key += "=" + std::string(label);
  return key;
}

std::string csv_row(const MarginalRecord& r) {
  std::string row = r.predicate;
  for (const auto& a : r.args) row += "," + a;
  char buf[48];
  std::snprintf(buf, sizeof buf, ",%.9f", r.probability);
  return row + "," + r.label + buf;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

UnaryTable load_unary(std::string_view text, const KnowledgeBase& kb) {
  UnaryTable phi = zero_table(kb);
  std::set<GroundAtom> seen;
  for_each_content_line(text, [&](std::string_view content, std::size_t line, std::size_t column) {
    auto tokens = split_ws(content);
    AtomText atom = parse_atom_text(tokens.front(), line, column);
    if (atom.negated || atom.label) throw ParseError(line, column, "unary lines name a plain atom");
    GroundAtom g = resolve_atom(kb, atom, line);
    if (!seen.insert(g).second) throw ParseError(line, column, "atom listed twice");
    const std::size_t d = kb.predicates()[g.predicate].num_labels();
    if (tokens.size() - 1 != d) {
      throw ParseError(line, column,
                       "expected " + std::to_string(d) + " logits, got " + std::to_string(tokens.size() - 1));
    }
    const std::size_t cell = kb.cell_index(g);
    for (std::size_t v = 0; v < d; ++v) phi[g.predicate][cell * d + v] = parse_number(tokens[v + 1], line);
  });
  return phi;
}

std::vector<GroundAtom> load_query(std::string_view text, const KnowledgeBase& kb) {
  std::vector<GroundAtom> out;
  for_each_content_line(text, [&](std::string_view content, std::size_t line, std::size_t column) {
    AtomText atom = parse_atom_text(content, line, column);
    if (atom.negated || atom.label) throw ParseError(line, column, "query lines name a plain atom");
    GroundAtom g = resolve_atom(kb, atom, line);
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(std::move(g));
  });
  return out;
}

std::vector<MarginalRecord> marginal_records(const KnowledgeBase& kb, const MarginalTable& q,
                                             const std::optional<std::vector<GroundAtom>>& query,
                                             bool include_observed) {
  std::vector<GroundAtom> cells;
  if (query) {
    cells = *query;
  } else {
    for (std::size_t r = 0; r < kb.predicates().size(); ++r) {
      for (std::size_t c = 0; c < kb.num_cells(r); ++c) {
        GroundAtom g = kb.cell_atom(r, c);
        if (include_observed || !kb.observed_label(g)) cells.push_back(std::move(g));
      }
    }
  }
  std::vector<MarginalRecord> out;
  for (const auto& g : cells) {
    const Predicate& p = kb.predicates()[g.predicate];
    const std::size_t d = p.num_labels();
    const std::size_t cell = kb.cell_index(g);
    std::vector<std::string> args;
    for (auto a : g.args) args.push_back(kb.entities()[a]);
    const bool observed = kb.observed_label(g).has_value();
    const std::size_t first = p.declared_labels ? 0 : 1;
    for (std::size_t v = first; v < d; ++v) {
      out.push_back({p.name, args, p.labels[v], q[g.predicate][cell * d + v], observed});
    }
  }
  std::vector<std::pair<std::string, std::size_t>> keyed;
  for (std::size_t k = 0; k < out.size(); ++k) keyed.emplace_back(csv_row(out[k]), k);
  std::sort(keyed.begin(), keyed.end());
  std::vector<MarginalRecord> sorted;
  for (const auto& [row, k] : keyed) sorted.push_back(out[k]);
  return sorted;
}

std::string format_csv(const std::vector<MarginalRecord>& records) {
  std::string out;
  for (const auto& r : records) out += csv_row(r) + "\n";
  return out;
}

std::string format_json(const std::vector<MarginalRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"predicate", r.predicate},
                   {"args", r.args},
                   {"label", r.label},
                   {"probability", std::round(r.probability * 1e9) / 1e9},
                   {"observed", r.observed}});
  }
  return arr.dump(2) + "\n";
}

std::vector<ScoredItem> load_predictions(std::string_view text) {
  std::vector<ScoredItem> out;
  std::set<std::string> keys;
  for_each_content_line(text, [&](std::string_view content, std::size_t line, std::size_t column) {
    ScoredItem item;
    if (content.find(',') != std::string_view::npos && content.find('(') == std::string_view::npos) {
      auto fields = split_commas(content);
      if (fields.size() < 3) throw ParseError(line, column, "marginal rows need predicate, label and probability");
      std::vector<std::string> args(fields.begin() + 1, fields.end() - 2);
      item.key = record_key(fields.front(), args, fields[fields.size() - 2]);
      item.score = parse_number(fields.back(), line);
    } else {
      auto tokens = split_ws(content);
      if (tokens.size() != 2) throw ParseError(line, column, "expected 'ATOM score'");
      AtomText atom = parse_atom_text(tokens[0], line, column);
      if (atom.negated) throw ParseError(line, column, "predictions name a plain atom");
      item.key = record_key(atom.predicate, atom.args, atom.label.value_or("true"));
      item.score = parse_number(tokens[1], line);
    }
    if (!keys.insert(item.key).second) throw ParseError(line, column, "prediction '" + item.key + "' listed twice");
    out.push_back(std::move(item));
  });
  return out;
}

std::map<std::string, bool> load_truth(std::string_view text) {
  std::map<std::string, bool> out;
  for_each_content_line(text, [&](std::string_view content, std::size_t line, std::size_t column) {
    AtomText atom = parse_atom_text(content, line, column);
    bool truth = !atom.negated;
    std::string label = atom.label.value_or("true");
    if (label == "false") {
      label = "true";
      truth = false;
    }
    const std::string key = record_key(atom.predicate, atom.args, label);
    auto [it, fresh] = out.emplace(key, truth);
    if (!fresh && it->second != truth) throw ParseError(line, column, "conflicting truth for '" + key + "'");
  });
  return out;
}

std::vector<ScoredItem> align(std::vector<ScoredItem> predictions, const std::map<std::string, bool>& truth) {
  std::set<std::string> predicted;
  for (auto& p : predictions) {
    predicted.insert(p.key);
    auto it = truth.find(p.key);
    p.truth = it != truth.end() && it->second;
  }
  for (const auto& [key, value] : truth) {
    (void)value;
    if (!predicted.count(key)) throw DataError("truth atom '" + key + "' has no prediction");
  }
  return predictions;
}

}  // namespace logicmp

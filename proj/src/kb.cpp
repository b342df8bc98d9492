#include "logicmp/kb.hpp"

#include <algorithm>
#include <cctype>

#include "logicmp/error.hpp"

namespace logicmp {

std::size_t int_pow(std::size_t base, std::size_t exponent) {
  std::size_t out = 1;
  for (std::size_t k = 0; k < exponent; ++k) out *= base;
  return out;
}

KnowledgeBase::KnowledgeBase(std::vector<Predicate> predicates, std::vector<std::string> entities)
    : predicates_(std::move(predicates)) {
  for (auto& e : entities) {
    if (entity_lookup_.emplace(e, entities_.size()).second) entities_.push_back(std::move(e));
  }
  if (entities_.empty()) throw DataError("empty entity domain");
}

std::optional<std::size_t> KnowledgeBase::entity_index(std::string_view name) const {
  auto it = entity_lookup_.find(name);
  if (it == entity_lookup_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeBase::observe(const GroundAtom& atom, std::size_t label) {
  const Predicate& p = predicates_.at(atom.predicate);
  if (atom.args.size() != p.arity) throw DataError("arity mismatch for '" + p.name + "'");
  for (auto a : atom.args) {
    if (a >= entities_.size()) throw DataError("entity index out of range in '" + p.name + "'");
  }
  if (label >= p.num_labels()) throw DataError("label out of range for '" + p.name + "'");
  auto [it, inserted] = observations_.emplace(atom, label);
  if (!inserted && it->second != label) throw DataError("conflicting observations for " + atom_text(atom));
  return inserted;
}

std::optional<std::size_t> KnowledgeBase::observed_label(const GroundAtom& atom) const {
  auto it = observations_.find(atom);
  if (it == observations_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeBase::num_cells(std::size_t predicate) const {
  return int_pow(entities_.size(), predicates_.at(predicate).arity);
}

std::size_t KnowledgeBase::cell_index(const GroundAtom& atom) const {
  std::size_t cell = 0;
  for (auto a : atom.args) cell = cell * entities_.size() + a;
  return cell;
}

GroundAtom KnowledgeBase::cell_atom(std::size_t predicate, std::size_t cell) const {
  GroundAtom atom{predicate, std::vector<std::size_t>(predicates_.at(predicate).arity)};
  for (std::size_t k = atom.args.size(); k-- > 0;) {
    atom.args[k] = cell % entities_.size();
    cell /= entities_.size();
  }
  return atom;
}

ObservationMask KnowledgeBase::mask() const {
  ObservationMask m;
  for (std::size_t r = 0; r < predicates_.size(); ++r) {
    m.observed.emplace_back(num_cells(r), 0);
    m.label.emplace_back(num_cells(r), 0);
  }
  for (const auto& [atom, label] : observations_) {
    const std::size_t cell = cell_index(atom);
    m.observed[atom.predicate][cell] = 1;
    m.label[atom.predicate][cell] = label;
  }
  return m;
}

std::string KnowledgeBase::atom_text(const GroundAtom& atom) const {
  std::string out = predicates_.at(atom.predicate).name;
  if (!atom.args.empty()) {
    out += "(";
    for (std::size_t k = 0; k < atom.args.size(); ++k) {
      if (k) out += ",";
      out += entities_.at(atom.args[k]);
    }
    out += ")";
  }
  return out;
}

AtomText parse_atom_text(std::string_view token, std::size_t line, std::size_t column) {
  AtomText atom;
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> void { throw ParseError(line, column + pos, msg); };
  auto ident = [&]() {
    std::size_t start = pos;
    while (pos < token.size() && is_identifier_char(token[pos])) ++pos;
    if (start == pos) fail("expected an identifier");
    return std::string(token.substr(start, pos - start));
  };
  if (pos < token.size() && token[pos] == '!') {
    atom.negated = true;
    ++pos;
  }
  atom.predicate = ident();
  if (pos < token.size() && token[pos] == '(') {
    ++pos;
    if (pos < token.size() && token[pos] == ')') {
      ++pos;
    } else {
      while (true) {
        atom.args.push_back(ident());
        if (pos < token.size() && token[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < token.size() && token[pos] == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
  }
  if (pos < token.size() && token[pos] == '=') {
    ++pos;
    if (atom.negated) fail("'!' cannot be combined with '=LABEL'");
    atom.label = ident();
  }
  if (pos != token.size()) fail("unexpected character '" + std::string(1, token[pos]) + "'");
  return atom;
}

GroundAtom resolve_atom(const KnowledgeBase& kb, const AtomText& atom, std::size_t line) {
  std::optional<std::size_t> pred;
  for (std::size_t k = 0; k < kb.predicates().size(); ++k) {
    if (kb.predicates()[k].name == atom.predicate) pred = k;
  }
  if (!pred) throw ParseError(line, 1, "undeclared predicate '" + atom.predicate + "'");
  const Predicate& p = kb.predicates()[*pred];
  if (atom.args.size() != p.arity) {
    throw ParseError(line, 1,
                     "predicate '" + p.name + "' expects " + std::to_string(p.arity) + " arguments, got " +
                         std::to_string(atom.args.size()));
  }
  GroundAtom g{*pred, {}};
  for (const auto& a : atom.args) {
    auto idx = kb.entity_index(a);
    if (!idx) throw ParseError(line, 1, "unknown constant '" + a + "'");
    g.args.push_back(*idx);
  }
  return g;
}

std::size_t atom_label(const Predicate& p, const AtomText& atom, std::size_t line) {
  if (atom.label) {
    auto l = p.label_index(*atom.label);
    if (!l) throw ParseError(line, 1, "unknown label '" + *atom.label + "' for predicate '" + p.name + "'");
    return *l;
  }
  if (!p.is_binary()) throw ParseError(line, 1, "multi-class atom '" + p.name + "' needs '=LABEL'");
  return atom.negated ? 0 : 1;
}

void for_each_content_line(std::string_view text,
                           const std::function<void(std::string_view, std::size_t, std::size_t)>& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    std::size_t e = line.size();
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    if (b == e) continue;
    fn(line.substr(b, e - b), line_no, b + 1);
  }
}

KnowledgeBase load_evidence(std::string_view text, const std::vector<Predicate>& predicates,
                            const std::vector<std::string>& seed) {
  struct Pending {
    AtomText atom;
    std::size_t line;
  };
  std::vector<Pending> pending;
  std::vector<std::string> entities = seed;
  for_each_content_line(text, [&](std::string_view token, std::size_t line, std::size_t column) {
    if (token.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError(line, column, "whitespace inside an evidence atom");
    }
    AtomText atom = parse_atom_text(token, line, column);
    for (const auto& a : atom.args) {
      if (std::find(entities.begin(), entities.end(), a) == entities.end()) entities.push_back(a);
    }
    pending.push_back({std::move(atom), line});
  });
  KnowledgeBase kb(predicates, std::move(entities));
  for (const auto& [atom, line] : pending) {
    GroundAtom g = resolve_atom(kb, atom, line);
    const std::size_t label = atom_label(kb.predicates()[g.predicate], atom, line);
    try {
      kb.observe(g, label);
    } catch (const DataError& e) {
      throw ParseError(line, 1, e.what());
    }
  }
  return kb;
}

std::vector<std::size_t> variable_universe(const KnowledgeBase& kb) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < kb.predicates().size(); ++r) out.push_back(kb.num_cells(r));
  for (const auto& [atom, label] : kb.observations()) --out[atom.predicate];
  return out;
}

}  // namespace logicmp

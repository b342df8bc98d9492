#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logicmp/fol.hpp"

namespace logicmp {

struct GroundAtom {
  std::size_t predicate = 0;
  std::vector<std::size_t> args;

  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

/// Per-predicate flat cell arrays (row-major over N^arity).
struct ObservationMask {
  std::vector<std::vector<char>> observed;
  std::vector<std::vector<std::size_t>> label;
};

class KnowledgeBase {
 public:
  KnowledgeBase(std::vector<Predicate> predicates, std::vector<std::string> entities);

  const std::vector<Predicate>& predicates() const { return predicates_; }
  const std::vector<std::string>& entities() const { return entities_; }
  std::size_t num_entities() const { return entities_.size(); }
  std::optional<std::size_t> entity_index(std::string_view name) const;

  /// Records an observation; throws DataError if the atom already carries a
  /// different label. Returns false for an exact duplicate.
  bool observe(const GroundAtom& atom, std::size_t label);
  const std::map<GroundAtom, std::size_t>& observations() const { return observations_; }
  std::optional<std::size_t> observed_label(const GroundAtom& atom) const;

  std::size_t num_cells(std::size_t predicate) const;
  std::size_t cell_index(const GroundAtom& atom) const;
  GroundAtom cell_atom(std::size_t predicate, std::size_t cell) const;
  ObservationMask mask() const;

  std::string atom_text(const GroundAtom& atom) const;

 private:
  std::vector<Predicate> predicates_;
  std::vector<std::string> entities_;
  std::map<std::string, std::size_t, std::less<>> entity_lookup_;
  std::map<GroundAtom, std::size_t> observations_;
};

/// Atom as written in evidence, unary and query files: `[!]P(c1,...)[=LABEL]`.
struct AtomText {
  bool negated = false;
  std::string predicate;
  std::vector<std::string> args;
  std::optional<std::string> label;
};

/// Parse one atom token; throws ParseError with `line` and the column.
AtomText parse_atom_text(std::string_view token, std::size_t line, std::size_t column = 1);

/// Resolve a parsed atom against the KB. Unknown constants are rejected.
GroundAtom resolve_atom(const KnowledgeBase& kb, const AtomText& atom, std::size_t line);

/// Label implied by `atom` (negation, `=LABEL`, or the positive default).
std::size_t atom_label(const Predicate& p, const AtomText& atom, std::size_t line);

/// Build a KB from evidence text. Entity order: `seed` first, then constants
/// in evidence first-occurrence order.
KnowledgeBase load_evidence(std::string_view text, const std::vector<Predicate>& predicates,
                            const std::vector<std::string>& seed = {});

/// Unobserved ground-atom count per predicate.
std::vector<std::size_t> variable_universe(const KnowledgeBase& kb);

/// Calls `fn(content, line, column)` for each non-blank line with `#` comments
/// and surrounding whitespace removed.
void for_each_content_line(std::string_view text,
                           const std::function<void(std::string_view, std::size_t, std::size_t)>& fn);

std::size_t int_pow(std::size_t base, std::size_t exponent);

}  // namespace logicmp

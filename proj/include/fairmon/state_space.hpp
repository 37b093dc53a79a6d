#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairmon {

/// Zero-based state index. Text formats use one-based indices or names;
/// conversion happens only in StateSpace.
struct StateId {
  std::uint32_t index = 0;

  auto operator<=>(const StateId&) const = default;
};

/// An edge (i, j) of the chain, i.e. the variable v_ij.
struct Edge {
  StateId from;
  StateId to;

  auto operator<=>(const Edge&) const = default;
};

/// The declared finite state space Q = [1..N] with optional unique names.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::size_t n);
  explicit StateSpace(std::vector<std::string> names);

  /// Reads a declaration file: one `index name` pair per line, indices
  /// one-based and covering 1..N exactly once. Blank lines and lines starting
  /// with '#' are skipped.
  static StateSpace from_declaration(std::istream& in);
  static StateSpace from_declaration_file(const std::string& path);

  std::size_t size() const noexcept { return size_; }
  bool has_names() const noexcept { return !names_.empty(); }
  bool contains(StateId s) const noexcept { return s.index < size_; }

  /// Names take priority; otherwise the token is read as a one-based index.
  std::optional<StateId> find(std::string_view token) const;
  /// Like find() but throws UnknownStateError.
  StateId resolve(std::string_view token) const;

  /// Name if declared, else the one-based index.
  std::string label(StateId s) const;

  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::size_t size_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> by_name_;
};

}  // namespace fairmon

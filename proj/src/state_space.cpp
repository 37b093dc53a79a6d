#include "fairmon/state_space.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "fairmon/errors.hpp"

namespace fairmon {

StateSpace::StateSpace(std::size_t n) : size_(n) {}

StateSpace::StateSpace(std::vector<std::string> names) : size_(names.size()), names_(std::move(names)) {
  for (std::uint32_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw ValidationError("empty state name for state " + std::to_string(i + 1));
    if (!by_name_.emplace(names_[i], i).second)
      throw ValidationError("duplicate state name '" + names_[i] + "'");
  }
}

StateSpace StateSpace::from_declaration(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == '#') continue;
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(first.data(), first.data() + first.size(), index);
    std::string name;
    if (ec != std::errc{} || ptr != first.data() + first.size() || index == 0 || !(ls >> name))
      throw ValidationError("state declaration line " + std::to_string(line_no) +
                            ": expected '<index> <name>'");
    entries.emplace_back(index, name);
  }
  std::vector<std::string> names(entries.size());
  for (auto& [index, name] : entries) {
    if (index > names.size() || !names[index - 1].empty())
      throw ValidationError("state indices must cover 1.." + std::to_string(names.size()) +
                            " exactly once");
    names[index - 1] = name;
  }
  return StateSpace(std::move(names));
}

StateSpace StateSpace::from_declaration_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open state declaration file '" + path + "'");
  return from_declaration(in);
}

std::optional<StateId> StateSpace::find(std::string_view token) const {
  if (auto it = by_name_.find(std::string(token)); it != by_name_.end()) return StateId{it->second};
  std::size_t index = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  if (index == 0 || index > size_) return std::nullopt;
  return StateId{static_cast<std::uint32_t>(index - 1)};
}

StateId StateSpace::resolve(std::string_view token) const {
  if (auto s = find(token)) return *s;
  throw UnknownStateError("unknown state '" + std::string(token) + "'");
}

std::string StateSpace::label(StateId s) const {
  if (has_names() && s.index < names_.size()) return names_[s.index];
  return std::to_string(s.index + 1);
}

}  // namespace fairmon

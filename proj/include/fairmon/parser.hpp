#pragma once

#include <string_view>

#include "fairmon/pse.hpp"
#include "fairmon/state_space.hpp"

namespace fairmon {

/// Parses the PSE text syntax:
///
///   expr    := term (('+' | '-') term)*
///   term    := factor (('*' | '/') factor)*
///   factor  := number | '-' number | 'p' '(' state ',' state ')' | '(' expr ')'
///
/// `state` is a declared name or a one-based index. Division is restricted:
/// `e / c` with c a positive constant becomes (1/c) * e, `1 / xi` becomes
/// Inv(xi), and `e / xi` becomes e * Inv(xi), where xi is a monomial.
///
/// Throws ParseError (with offset) or UnknownStateError.
Pse parse_pse(std::string_view text, const StateSpace& states);

}  // namespace fairmon

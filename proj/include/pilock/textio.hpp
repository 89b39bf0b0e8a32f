#pragma once

#include <stdexcept>
#include <string>

#include "pilock/action.hpp"
#include "pilock/ast.hpp"
#include "pilock/typing.hpp"

namespace pilock {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, SourceSpan span)
        : std::runtime_error(msg), span_(span) {}
    [[nodiscard]] const SourceSpan& span() const { return span_; }
    /// "line:column: message"
    [[nodiscard]] std::string located() const;

private:
    SourceSpan span_;
};

/// A construct that exists in the grammar but not in the selected calculus.
class CalculusError : public ParseError {
public:
    using ParseError::ParseError;
};

/// proc  := unary ("|" proc)?
/// unary := "0" | name "(" name ")" "." unary | name "!" value
///        | name "((" name "))" "." unary | ("new"|"ν") name [":" type] "." unary
///        | "[" value "=" value "]" unary "," unary | "(" proc ")"
/// CCSL uses the sugar `l.P` and `l!` instead of value-carrying prefixes.
Process parse(const std::string& text, Calculus c);

/// Fully parenthesised where needed; parse(print(p)) is alpha-equivalent to p.
std::string print(const Process& p);

Type parse_type(const std::string& text);
std::string print_type(const Type& t);

/// Obligation flavour: "{l1,l2}{l3}; R={l2}". Usage flavour:
/// "{l1:Lock<bool>^10,l2:Lock<bool>^00}{...}". "∅" denotes the empty set.
TypeEnv parse_env(const std::string& text, Flavor f);
std::string print_env(const TypeEnv& e, bool with_types = false);

/// Forms: tau, l(v), l!v, l!(n), l((v)), tau/l.
Action parse_action(const std::string& text);
std::string print_action(const Action& a);

Value parse_value(const std::string& text);

}  // namespace pilock

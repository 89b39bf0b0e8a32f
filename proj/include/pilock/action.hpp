#pragma once

#include <string>

#include "pilock/ast.hpp"

namespace pilock {

/// Transition label.
struct Action {
    enum class Kind { Tau, Input, FreeOutput, BoundOutput, Wait, TauSlash };
    Kind kind = Kind::Tau;
    Name subject;
    Value value;  // Input/FreeOutput/Wait value; BoundOutput extruded name

    static Action tau() { return {}; }
    static Action input(Name l, Value v) { return {Kind::Input, std::move(l), std::move(v)}; }
    static Action output(Name l, Value v) { return {Kind::FreeOutput, std::move(l), std::move(v)}; }
    static Action bound_output(Name l, Name fresh) { return {Kind::BoundOutput, std::move(l), Value::of(std::move(fresh))}; }
    static Action wait_act(Name l, Value v) { return {Kind::Wait, std::move(l), std::move(v)}; }
    static Action tau_slash(Name l) { return {Kind::TauSlash, std::move(l), Value::unit()}; }

    [[nodiscard]] bool is_tau() const { return kind == Kind::Tau; }
    [[nodiscard]] bool deallocates() const { return kind == Kind::Wait || kind == Kind::TauSlash; }

    /// fl(mu): {l, v} for input/output/wait, {l} for bound output and tau/l.
    [[nodiscard]] NameSet free_names() const;
    [[nodiscard]] NameSet bound_names() const;

    /// Concrete form: tau, l(v), l!v, l!(n), l((v)), tau/l.
    [[nodiscard]] std::string str() const;

    auto operator<=>(const Action&) const = default;
};

}  // namespace pilock

#include "pilock/textio.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <sstream>
#include <vector>

namespace pilock {

std::string ParseError::located() const {
    return std::to_string(span_.line) + ":" + std::to_string(span_.column) + ": " + what();
}

namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourceSpan span;
};

const char* const kNu = "\xCE\xBD";       // ν
const char* const kEll = "\xE2\x84\x93";  // ℓ
const char* const kEmpty = "\xE2\x88\x85";  // ∅

bool is_reserved(const std::string& s) {
    return s == "new" || s == "tt" || s == "ff" || s == "bool" || s == "unit" || s == "Lock" || s == "tau";
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : src_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.span = here();
            if (pos_ >= src_.size()) {
                t.kind = Tok::End;
                out.push_back(t);
                return out;
            }
            if (starts(kNu)) {
                advance(2);
                t.kind = Tok::Ident;
                t.text = "new";
            } else if (starts(kEmpty)) {
                advance(3);
                t.kind = Tok::Sym;
                t.text = kEmpty;
            } else if (ident_start()) {
                t.kind = Tok::Ident;
                while (pos_ < src_.size() && ident_continue()) {
                    if (starts(kEll)) {
                        t.text += kEll;
                        advance(3);
                    } else {
                        t.text += src_[pos_];
                        advance(1);
                    }
                }
            } else if (std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                t.kind = Tok::Number;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    t.text += src_[pos_];
                    advance(1);
                }
            } else {
                char ch = src_[pos_];
                static const std::string syms = "()!.|[]=,:<>^{};/";
                if (syms.find(ch) == std::string::npos) {
                    SourceSpan s = here();
                    s.end = s.start + 1;
                    throw ParseError("unexpected character", s);
                }
                t.kind = Tok::Sym;
                t.text = std::string(1, ch);
                advance(1);
            }
            t.span.end = pos_;
            out.push_back(t);
        }
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;

    SourceSpan here() const { return SourceSpan{pos_, pos_, line_, col_}; }
    bool starts(const char* s) const { return src_.compare(pos_, std::strlen(s), s) == 0; }
    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
                ++col_;
            }
        }
    }
    void skip_space() {
        while (pos_ < src_.size()) {
            char ch = src_[pos_];
            if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
                advance(1);
            } else if (ch == '#') {  // line comment
                while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
            } else {
                break;
            }
        }
    }
    bool ident_start() const {
        unsigned char ch = static_cast<unsigned char>(src_[pos_]);
        return std::isalpha(ch) || ch == '_' || starts(kEll);
    }
    bool ident_continue() const {
        unsigned char ch = static_cast<unsigned char>(src_[pos_]);
        return std::isalnum(ch) || ch == '_' || ch == '\'' || starts(kEll);
    }
};

// "l'12" -> (l, 12); anything else keeps index 0.
Name split_name(const std::string& s) {
    auto q = s.rfind('\'');
    if (q == std::string::npos || q == 0 || q + 1 >= s.size()) return Name(s);
    std::string digits = s.substr(q + 1);
    if (digits.size() > 9 || digits[0] == '0') return Name(s);
    for (char ch : digits)
        if (!std::isdigit(static_cast<unsigned char>(ch))) return Name(s);
    return Name(s.substr(0, q), static_cast<unsigned>(std::stoul(digits)));
}

class Parser {
public:
    Parser(const std::string& text, Calculus c) : toks_(Lexer(text).run()), calc_(c) {}

    Process whole() {
        Process p = proc();
        expect_end();
        return p;
    }

    Type whole_type() {
        Type t = type();
        expect_end();
        return t;
    }

    Value whole_value() {
        Value v = value();
        expect_end();
        return v;
    }

    TypeEnv env(Flavor f) {
        TypeEnv e;
        e.flavor = f;
        if (is_sym(kEmpty)) {
            next();
        } else {
            while (is_sym("{")) {
                SourceSpan s = peek().span;
                next();
                Component g;
                if (!is_sym("}")) {
                    for (;;) {
                        Name n = name();
                        Type t = Type::any();
                        if (is_sym(":")) {
                            next();
                            t = type();
                        } else if (f == Flavor::Usages) {
                            fail("expected ':' and a type", peek().span);
                        }
                        if (t.kind() != Type::Kind::Any && !t.is_lock())
                            fail("component entries must be locks", s);
                        if (!g.hyps.emplace(n, t).second) fail("duplicate name in component", s);
                        if (!is_sym(",")) break;
                        next();
                    }
                }
                expect("}");
                if (!g.hyps.empty()) e.components.push_back(std::move(g));
            }
        }
        if (is_sym(";")) {
            next();
            if (!(peek().kind == Tok::Ident && peek().text == "R")) fail("expected R=", peek().span);
            next();
            expect("=");
            if (is_sym(kEmpty)) {
                next();
            } else {
                expect("{");
                if (!is_sym("}")) {
                    for (;;) {
                        e.obligations.insert(name());
                        if (!is_sym(",")) break;
                        next();
                    }
                }
                expect("}");
            }
            if (f == Flavor::Usages && !e.obligations.empty())
                fail("obligation sets belong to obligation-flavoured environments", peek().span);
        }
        expect_end();
        std::string why;
        if (!e.well_formed(&why)) fail(why, SourceSpan{});
        e.canonicalize();
        return e;
    }

    Action action() {
        const Token& t = peek();
        if (t.kind == Tok::Ident && t.text == "tau") {
            next();
            if (is_sym("/")) {
                next();
                Name l = name();
                expect_end();
                return Action::tau_slash(l);
            }
            expect_end();
            return Action::tau();
        }
        Name l = name();
        Action a;
        if (is_sym("!")) {
            next();
            if (is_sym("(")) {
                next();
                Name n = name();
                expect(")");
                a = Action::bound_output(l, n);
            } else {
                a = Action::output(l, value());
            }
        } else if (is_sym("(")) {
            next();
            if (is_sym("(")) {
                next();
                Value v = value();
                expect(")");
                expect(")");
                a = Action::wait_act(l, v);
            } else {
                Value v = value();
                expect(")");
                a = Action::input(l, v);
            }
        } else {
            fail("expected an action", peek().span);
        }
        expect_end();
        return a;
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;
    Calculus calc_;
    int depth_ = 0;

    [[noreturn]] static void fail(const std::string& msg, SourceSpan s) { throw ParseError(msg, s); }
    [[noreturn]] void calc_fail(const std::string& what, SourceSpan s) const {
        throw CalculusError(what + " is not available in " + calculus_name(calc_), s);
    }

    const Token& peek(std::size_t k = 0) const {
        std::size_t j = std::min(i_ + k, toks_.size() - 1);
        return toks_[j];
    }
    void next() {
        if (i_ + 1 < toks_.size()) ++i_;
    }
    bool is_sym(const std::string& s, std::size_t k = 0) const {
        return peek(k).kind == Tok::Sym && peek(k).text == s;
    }
    void expect(const std::string& s) {
        if (!is_sym(s)) fail("expected '" + s + "'", peek().span);
        next();
    }
    void expect_end() {
        if (peek().kind != Tok::End) fail("unexpected trailing input", peek().span);
    }

    Name name() {
        const Token& t = peek();
        if (t.kind != Tok::Ident || is_reserved(t.text)) fail("expected a name", t.span);
        Name n = split_name(t.text);
        next();
        return n;
    }

    Value value() {
        const Token& t = peek();
        if (t.kind == Tok::Ident && t.text == "tt") {
            next();
            return Value::boolean(true);
        }
        if (t.kind == Tok::Ident && t.text == "ff") {
            next();
            return Value::boolean(false);
        }
        return Value::of(name());
    }

    Usage usage() {
        const Token& t = peek();
        if (t.kind != Tok::Number || t.text.size() != 2 || (t.text[0] != '0' && t.text[0] != '1') ||
            (t.text[1] != '0' && t.text[1] != '1'))
            fail("usage must be one of 00, 01, 10, 11", t.span);
        Usage u{t.text[0] - '0', t.text[1] - '0'};
        next();
        return u;
    }

    Type type() {
        if (++depth_ > 200) fail("nesting too deep", peek().span);
        const Token& t = peek();
        Type out = Type::any();
        if (t.kind == Tok::Ident && t.text == "bool") {
            next();
            out = Type::boolean();
        } else if (t.kind == Tok::Ident && t.text == "unit") {
            next();
            out = Type::unit();
        } else if (t.kind == Tok::Ident && t.text == "Lock") {
            next();
            expect("<");
            Type inner = type();
            expect(">");
            Usage u;
            if (is_sym("^")) {
                next();
                u = usage();
            }
            out = Type::lock(inner, u);
        } else {
            fail("expected a type", t.span);
        }
        --depth_;
        return out;
    }

    Process proc() {
        SourceSpan s = peek().span;
        Process left = unary();
        if (is_sym("|")) {
            next();
            Process right = proc();
            s.end = right->span.end;
            return par(left, right, s);
        }
        return left;
    }

    Process unary() {
        if (++depth_ > 2000) fail("nesting too deep", peek().span);
        Process out = unary_inner();
        --depth_;
        return out;
    }

    Process unary_inner() {
        const Token& t = peek();
        SourceSpan s = t.span;
        auto close = [&](Process p) {
            auto node = std::make_shared<ProcessNode>(*p);
            node->span = s;
            node->span.end = toks_[i_ > 0 ? i_ - 1 : 0].span.end;
            return Process(node);
        };
        if (t.kind == Tok::Number) {
            if (t.text != "0") fail("expected a process", t.span);
            if (calc_ == Calculus::CCSL) calc_fail("the inactive process", t.span);
            next();
            return close(nil());
        }
        if (is_sym("(")) {
            next();
            Process p = proc();
            expect(")");
            return p;
        }
        if (is_sym("[")) {
            if (calc_ == Calculus::CCSL) calc_fail("matching", s);
            next();
            Value a = value();
            expect("=");
            Value b = value();
            expect("]");
            Process yes = unary();
            expect(",");
            Process no = unary();
            return close(match(a, b, yes, no));
        }
        if (t.kind == Tok::Ident && t.text == "new") {
            next();
            Name n = name();
            std::optional<Sort> annot;
            if (is_sym(":")) {
                SourceSpan ts = peek().span;
                next();
                Type ty = type();
                auto so = ty.sort();
                if (!so || !so->is_lock()) fail("a restricted name must have a lock type", ts);
                annot = *so;
            }
            expect(".");
            Process b = unary();
            return close(restrict(n, b, annot));
        }
        if (t.kind != Tok::Ident) fail("expected a process", t.span);
        Name l = name();
        if (is_sym("!")) {
            next();
            bool has_value = peek().kind == Tok::Ident && !(peek().text == "new");
            if (calc_ == Calculus::CCSL) {
                if (has_value) calc_fail("a stored value", peek().span);
                return close(release(l, Value::unit()));
            }
            if (!has_value) fail("expected a value after '!'", peek().span);
            return close(release(l, value()));
        }
        if (is_sym(".")) {
            if (calc_ != Calculus::CCSL) calc_fail("the value-less acquire `l.P`", s);
            next();
            return close(acquire(l, Name::unit(), unary()));
        }
        if (is_sym("(")) {
            next();
            if (is_sym("(")) {
                if (calc_ != Calculus::PILW) calc_fail("the wait prefix", s);
                next();
                Name x = name();
                expect(")");
                expect(")");
                expect(".");
                return close(wait(l, x, unary()));
            }
            if (calc_ == Calculus::CCSL) calc_fail("a value-binding acquire", s);
            Name x = name();
            expect(")");
            expect(".");
            return close(acquire(l, x, unary()));
        }
        fail("expected '!', '(' or '.' after a name", peek().span);
    }
};

void print_into(const Process& p, std::ostream& os);

void print_unary(const Process& p, std::ostream& os) {
    if (p->kind == ProcKind::Par) {
        os << '(';
        print_into(p, os);
        os << ')';
    } else {
        print_into(p, os);
    }
}

void print_into(const Process& p, std::ostream& os) {
    switch (p->kind) {
        case ProcKind::Nil:
            os << '0';
            break;
        case ProcKind::Release:
            os << p->subject.str() << '!';
            if (p->payload.kind != Value::Kind::Unit) os << p->payload.str();
            break;
        case ProcKind::Acquire:
            os << p->subject.str();
            if (!p->binder.is_unit()) os << '(' << p->binder.str() << ')';
            os << '.';
            print_unary(body(p), os);
            break;
        case ProcKind::Wait:
            os << p->subject.str() << "((" << p->binder.str() << ")).";
            print_unary(body(p), os);
            break;
        case ProcKind::Restrict:
            os << "new " << p->subject.str();
            if (p->annotation && !(p->annotation->is_lock() && p->annotation->payload().kind() == Sort::Kind::Unit))
                os << ':' << p->annotation->str();
            os << '.';
            print_unary(body(p), os);
            break;
        case ProcKind::Par:
            print_unary(p->left, os);
            os << " | ";
            print_into(p->right, os);
            break;
        case ProcKind::Match:
            os << '[' << p->lhs.str() << '=' << p->rhs.str() << ']';
            print_unary(p->left, os);
            os << ',';
            print_unary(p->right, os);
            break;
    }
}

}  // namespace

Process parse(const std::string& text, Calculus c) {
    return Parser(text, c).whole();
}

std::string print(const Process& p) {
    std::ostringstream os;
    print_into(p, os);
    return os.str();
}

Type parse_type(const std::string& text) {
    return Parser(text, Calculus::PILW).whole_type();
}

std::string print_type(const Type& t) {
    return t.str();
}

Value parse_value(const std::string& text) {
    return Parser(text, Calculus::PIL).whole_value();
}

TypeEnv parse_env(const std::string& text, Flavor f) {
    return Parser(text, Calculus::PILW).env(f);
}

std::string print_env(const TypeEnv& e, bool with_types) {
    std::ostringstream os;
    bool typed = with_types || e.flavor == Flavor::Usages;
    if (e.components.empty()) os << kEmpty;
    for (const auto& g : e.components) {
        os << '{';
        bool first = true;
        for (const auto& [n, t] : g.hyps) {
            if (!first) os << ',';
            first = false;
            os << n.str();
            if (typed && t.kind() != Type::Kind::Any) os << ':' << t.str();
        }
        os << '}';
    }
    if (e.flavor == Flavor::Obligations) {
        os << "; R=";
        if (e.obligations.empty()) {
            os << kEmpty;
        } else {
            os << '{';
            bool first = true;
            for (const auto& n : e.obligations) {
                if (!first) os << ',';
                first = false;
                os << n.str();
            }
            os << '}';
        }
    }
    return os.str();
}

Action parse_action(const std::string& text) {
    return Parser(text, Calculus::PILW).action();
}

std::string print_action(const Action& a) {
    return a.str();
}

std::string Action::str() const {
    switch (kind) {
        case Kind::Tau: return "tau";
        case Kind::Input: return subject.str() + "(" + value.str() + ")";
        case Kind::FreeOutput: return subject.str() + "!" + value.str();
        case Kind::BoundOutput: return subject.str() + "!(" + value.str() + ")";
        case Kind::Wait: return subject.str() + "((" + value.str() + "))";
        case Kind::TauSlash: return "tau/" + subject.str();
    }
    return "?";
}

NameSet Action::free_names() const {
    NameSet out;
    if (kind == Kind::Tau) return out;
    out.insert(subject);
    if ((kind == Kind::Input || kind == Kind::FreeOutput || kind == Kind::Wait) && value.is_name())
        out.insert(value.name);
    return out;
}

NameSet Action::bound_names() const {
    if (kind == Kind::BoundOutput) return {value.name};
    return {};
}

}  // namespace pilock

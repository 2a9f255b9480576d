#ifndef CECKD_EC_TERM_HPP
#define CECKD_EC_TERM_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ceckd/error.hpp"
#include "ceckd/kd/coord.hpp"

namespace ceckd::ec {

/**
 * Symbolic value: an atom or compound `functor(args...)`, an integer, a
 * decimal, or a list `[a,b]`. Structurally equal terms have identical
 * canonical text, and the text parses back to an equal term.
 *
 * Terms are immutable handles onto a shared representation; copying one
 * is a reference-count increment. The kd coordinate is computed once.
 */
class Term {
public:
    enum class Kind : std::uint8_t { Symbol, Integer, Decimal, List };

    Term() = default;

    static Term atom(std::string name) { return compound(std::move(name), {}); }

    static Term compound(std::string functor, std::vector<Term> args)
    {
        Rep r;
        r.kind = Kind::Symbol;
        r.name = std::move(functor);
        r.args = std::move(args);
        return Term(std::move(r));
    }

    static Term integer(std::int64_t v)
    {
        Rep r;
        r.kind = Kind::Integer;
        r.int_value = v;
        return Term(std::move(r));
    }

    static Term decimal(double v)
    {
        if (!std::isfinite(v))
            throw TermSyntax("decimal terms must be finite");
        Rep r;
        r.kind = Kind::Decimal;
        r.dec_value = v == 0.0 ? 0.0 : v; // folds -0.0
        return Term(std::move(r));
    }

    static Term list(std::vector<Term> items)
    {
        Rep r;
        r.kind = Kind::List;
        r.args = std::move(items);
        return Term(std::move(r));
    }

    Kind kind() const noexcept { return rep().kind; }
    bool is_symbol() const noexcept { return kind() == Kind::Symbol; }
    bool is_number() const noexcept { return kind() == Kind::Integer || kind() == Kind::Decimal; }

    /// Functor name of a symbol term; empty for other kinds.
    const std::string& functor() const noexcept { return rep().name; }
    /// Arguments of a compound, or the items of a list.
    const std::vector<Term>& args() const noexcept { return rep().args; }
    std::size_t arity() const noexcept { return rep().args.size(); }

    std::int64_t as_integer() const noexcept { return rep().int_value; }
    double as_number() const noexcept
    {
        return kind() == Kind::Decimal ? rep().dec_value : static_cast<double>(rep().int_value);
    }

    std::string text() const
    {
        std::string out;
        append_text(out);
        return out;
    }

    void append_text(std::string& out) const
    {
        const Rep& r = rep();
        switch (r.kind) {
        case Kind::Integer:
            out += std::to_string(r.int_value);
            return;
        case Kind::Decimal:
            out += format_decimal(r.dec_value);
            return;
        case Kind::List:
            out += '[';
            append_args(out);
            out += ']';
            return;
        case Kind::Symbol:
            append_name(out, r.name);
            if (!r.args.empty()) {
                out += '(';
                append_args(out);
                out += ')';
            }
            return;
        }
    }

    /// Coordinate of this term in a hashed kd dimension: the hash of its canonical text.
    kd::Coord hash() const noexcept { return rep().hash; }

    /// Heap memory behind this term, counted as if it were not shared.
    std::size_t heap_bytes() const noexcept
    {
        if (!rep_)
            return 0;
        std::size_t n = sizeof(Rep) + 2 * sizeof(long); // representation and control block
        n += rep_->name.capacity() > sso_capacity() ? rep_->name.capacity() + 1 : 0;
        n += rep_->args.capacity() * sizeof(Term);
        for (const auto& a : rep_->args)
            n += a.heap_bytes();
        return n;
    }

    friend bool operator==(const Term& a, const Term& b) noexcept
    {
        if (a.rep_ == b.rep_)
            return true;
        const Rep& x = a.rep();
        const Rep& y = b.rep();
        if (x.kind != y.kind || x.hash != y.hash)
            return false;
        switch (x.kind) {
        case Kind::Integer:
            return x.int_value == y.int_value;
        case Kind::Decimal:
            return x.dec_value == y.dec_value;
        default:
            return x.name == y.name && x.args == y.args;
        }
    }

    friend std::strong_ordering operator<=>(const Term& a, const Term& b) noexcept
    {
        if (a.rep_ == b.rep_)
            return std::strong_ordering::equal;
        const Rep& x = a.rep();
        const Rep& y = b.rep();
        if (x.kind != y.kind)
            return x.kind <=> y.kind;
        switch (x.kind) {
        case Kind::Integer:
            return x.int_value <=> y.int_value;
        case Kind::Decimal:
            return x.dec_value < y.dec_value ? std::strong_ordering::less
                 : x.dec_value > y.dec_value ? std::strong_ordering::greater
                                             : std::strong_ordering::equal;
        default:
            break;
        }
        if (auto c = x.name.compare(y.name); c != 0)
            return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        const std::size_t n = std::min(x.args.size(), y.args.size());
        for (std::size_t i = 0; i < n; ++i)
            if (auto c = x.args[i] <=> y.args[i]; c != 0)
                return c;
        return x.args.size() <=> y.args.size();
    }

    friend std::ostream& operator<<(std::ostream& os, const Term& t) { return os << t.text(); }

    /// Shortest round-trip rendering that always carries a '.' or exponent.
    static std::string format_decimal(double v)
    {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        std::string s(buf, end);
        if (s.find_first_of(".e") == std::string::npos)
            s += ".0";
        return s;
    }

private:
    struct Rep {
        Kind kind = Kind::Symbol;
        std::string name;
        std::int64_t int_value = 0;
        double dec_value = 0.0;
        std::vector<Term> args;
        kd::Coord hash = 0;
    };

    explicit Term(Rep r)
    {
        auto p = std::make_shared<Rep>(std::move(r));
        rep_ = p;
        std::string t;
        append_text(t);
        p->hash = kd::symbol_hash(t);
    }

    // the default-constructed term is the empty atom ''
    static const Rep& empty_rep() noexcept
    {
        static const Rep r{Kind::Symbol, {}, 0, 0.0, {}, kd::symbol_hash("''")};
        return r;
    }

    const Rep& rep() const noexcept { return rep_ ? *rep_ : empty_rep(); }

    static std::size_t sso_capacity() noexcept
    {
        static const std::size_t c = std::string().capacity();
        return c;
    }

    static bool plain_name(std::string_view s) noexcept
    {
        if (s.empty() || !std::islower(static_cast<unsigned char>(s[0])))
            return false;
        for (char c : s)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
                return false;
        return true;
    }

    static void append_name(std::string& out, const std::string& name)
    {
        if (plain_name(name)) {
            out += name;
            return;
        }
        out += '\'';
        for (char c : name) {
            if (c == '\'' || c == '\\')
                out += '\\';
            out += c;
        }
        out += '\'';
    }

    void append_args(std::string& out) const
    {
        const auto& args = rep().args;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (i)
                out += ',';
            args[i].append_text(out);
        }
    }

    std::shared_ptr<const Rep> rep_;
};

namespace detail {

class TermParser {
public:
    explicit TermParser(std::string_view s) : s_(s) {}

    Term parse_all()
    {
        Term t = parse();
        skip_ws();
        if (pos_ != s_.size())
            fail("trailing input");
        return t;
    }

private:
    [[noreturn]] void fail(const std::string& why) const
    {
        throw TermSyntax(why + " at offset " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool eat(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::vector<Term> parse_seq(char close)
    {
        std::vector<Term> items;
        if (eat(close))
            return items;
        do
            items.push_back(parse());
        while (eat(','));
        if (!eat(close))
            fail(std::string("expected '") + close + "'");
        return items;
    }

    Term parse()
    {
        skip_ws();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '[') {
            ++pos_;
            return Term::list(parse_seq(']'));
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c)))
            return parse_number();
        std::string name;
        if (c == '\'') {
            ++pos_;
            for (;;) {
                if (pos_ >= s_.size())
                    fail("unterminated quoted atom");
                char ch = s_[pos_++];
                if (ch == '\'')
                    break;
                if (ch == '\\') {
                    if (pos_ >= s_.size())
                        fail("dangling escape");
                    ch = s_[pos_++];
                }
                name += ch;
            }
        } else if (std::islower(static_cast<unsigned char>(c))) {
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                name += s_[pos_++];
        } else {
            fail("unexpected character");
        }
        if (pos_ < s_.size() && s_[pos_] == '(') {
            ++pos_;
            auto args = parse_seq(')');
            if (args.empty())
                fail("empty argument list");
            return Term::compound(std::move(name), std::move(args));
        }
        return Term::atom(std::move(name));
    }

    Term parse_number()
    {
        const std::size_t start = pos_;
        if (s_[pos_] == '-')
            ++pos_;
        bool decimal = false;
        while (pos_ < s_.size()) {
            const char ch = s_[pos_];
            if (std::isdigit(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else if (ch == '.' || ch == 'e' || ch == 'E') {
                decimal = true;
                ++pos_;
                if ((ch == 'e' || ch == 'E') && pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+'))
                    ++pos_;
            } else {
                break;
            }
        }
        const char* first = s_.data() + start;
        const char* last = s_.data() + pos_;
        if (decimal) {
            double v = 0;
            auto [p, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || p != last)
                fail("malformed decimal");
            return Term::decimal(v);
        }
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last)
            fail("malformed integer");
        return Term::integer(v);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses canonical term text (atoms may also be single-quoted).
inline Term parse_term(std::string_view text) { return detail::TermParser(text).parse_all(); }

// Shorthands used heavily by rule code and tests.
inline Term atom(std::string name) { return Term::atom(std::move(name)); }
inline Term fn(std::string functor, std::vector<Term> args) { return Term::compound(std::move(functor), std::move(args)); }
inline Term num(double v) { return Term::decimal(v); }
inline Term integer(std::int64_t v) { return Term::integer(v); }

} // namespace ceckd::ec

#endif // CECKD_EC_TERM_HPP

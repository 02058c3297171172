#include <algorithm>
#include <cctype>
#include <string>

#include "pwh/error.hpp"
#include "pwh/preprocess.hpp"
#include "pwh/query.hpp"

namespace pwh {
namespace {

enum class Tok { Ident, QuotedIdent, Number, String, Op, LParen, RParen, Comma, Star, Semicolon, Minus, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

[[noreturn]] void shape_error(const std::string& what) {
    throw QueryError("unsupported query shape: " + what);
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

std::vector<Token> tokenize(std::string_view sql) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
    while (i < sql.size()) {
        const char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            while (i < sql.size() && (std::isdigit(static_cast<unsigned char>(sql[i])) || sql[i] == '.')) ++i;
            if (i < sql.size() && (sql[i] == 'e' || sql[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < sql.size() && (sql[j] == '+' || sql[j] == '-')) ++j;
                if (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) {
                    i = j;
                    while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                }
            }
            out.push_back({Tok::Number, std::string(sql.substr(start, i - start)), start});
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < sql.size() && is_ident(sql[i])) ++i;
            out.push_back({Tok::Ident, std::string(sql.substr(start, i - start)), start});
        } else if (c == '\'' || c == '"' || c == '`') {
            std::string text;
            ++i;
            for (;;) {
                if (i >= sql.size()) shape_error("unterminated quote at offset " + std::to_string(start));
                if (sql[i] == c) {
                    // A doubled quote is an escaped quote.
                    if (i + 1 < sql.size() && sql[i + 1] == c) {
                        text.push_back(c);
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                text.push_back(sql[i++]);
            }
            out.push_back({c == '\'' ? Tok::String : Tok::QuotedIdent, std::move(text), start});
        } else if (c == '<' || c == '>' || c == '=' || c == '!') {
            ++i;
            if (i < sql.size() && (sql[i] == '=' || (c == '<' && sql[i] == '>'))) ++i;
            std::string op(sql.substr(start, i - start));
            if (op == "!") shape_error("stray '!'");
            out.push_back({Tok::Op, std::move(op), start});
        } else {
            Tok kind;
            switch (c) {
                case '(': kind = Tok::LParen; break;
                case ')': kind = Tok::RParen; break;
                case ',': kind = Tok::Comma; break;
                case '*': kind = Tok::Star; break;
                case ';': kind = Tok::Semicolon; break;
                case '-': kind = Tok::Minus; break;
                case '+': ++i; continue;
                default: shape_error(std::string("unexpected character '") + c + "'");
            }
            ++i;
            out.push_back({kind, std::string(1, c), start});
        }
    }
    out.push_back({Tok::End, "", sql.size()});
    return out;
}

CompareOp to_op(const std::string& text) {
    if (text == "<") return CompareOp::Less;
    if (text == ">") return CompareOp::Greater;
    if (text == "<=") return CompareOp::LessEqual;
    if (text == ">=") return CompareOp::GreaterEqual;
    if (text == "=" || text == "==") return CompareOp::Equal;
    if (text == "!=" || text == "<>") return CompareOp::NotEqual;
    shape_error("unknown operator '" + text + "'");
}

CompareOp mirror(CompareOp op) {
    switch (op) {
        case CompareOp::Less: return CompareOp::Greater;
        case CompareOp::Greater: return CompareOp::Less;
        case CompareOp::LessEqual: return CompareOp::GreaterEqual;
        case CompareOp::GreaterEqual: return CompareOp::LessEqual;
        default: return op;
    }
}

class Parser {
public:
    Parser(std::string_view sql, const Synopsis& syn) : toks_(tokenize(sql)), syn_(syn) {}

    QueryPlan parse() {
        QueryPlan plan;
        expect_keyword("SELECT");
        const auto agg_tok = next();
        const std::string agg = upper(agg_tok.text);
        if (agg_tok.kind != Tok::Ident) shape_error("expected an aggregate after SELECT");
        if (agg == "COUNT") plan.aggregate = Aggregate::Count;
        else if (agg == "SUM") plan.aggregate = Aggregate::Sum;
        else if (agg == "AVG") plan.aggregate = Aggregate::Avg;
        else if (agg == "MIN") plan.aggregate = Aggregate::Min;
        else if (agg == "MAX") plan.aggregate = Aggregate::Max;
        else if (agg == "MEDIAN") plan.aggregate = Aggregate::Median;
        else if (agg == "VAR" || agg == "VARIANCE" || agg == "VAR_POP") plan.aggregate = Aggregate::Var;
        else shape_error("aggregate '" + agg_tok.text + "' is not supported");
        expect(Tok::LParen, "'('");
        if (peek().kind == Tok::Star) {
            next();
            if (plan.aggregate != Aggregate::Count) shape_error(agg + "(*) is not supported");
        } else {
            plan.agg_column = column(next());
            const auto& spec = syn_.columns[*plan.agg_column];
            if (plan.aggregate != Aggregate::Count && !spec.numeric())
                throw QueryError(agg + " undefined for categorical column '" + spec.name + "'");
        }
        expect(Tok::RParen, "')'");
        expect_keyword("FROM");
        if (peek().kind != Tok::Ident && peek().kind != Tok::QuotedIdent) shape_error("expected a table name");
        next();
        if (keyword("WHERE")) {
            next();
            plan.predicate = parse_or();
        }
        if (keyword("GROUP")) {
            next();
            expect_keyword("BY");
            plan.group_by = column(next());
            if (syn_.columns[*plan.group_by].kind != ColumnKind::Categorical)
                shape_error("GROUP BY needs a categorical column");
        }
        if (peek().kind == Tok::Semicolon) next();
        if (peek().kind != Tok::End) shape_error("unexpected '" + peek().text + "'");
        return plan;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    Token next() {
        Token t = toks_[pos_];
        if (t.kind != Tok::End) ++pos_;
        return t;
    }
    bool keyword(std::string_view kw) const { return peek().kind == Tok::Ident && upper(peek().text) == kw; }
    void expect_keyword(std::string_view kw) {
        if (!keyword(kw)) shape_error("expected " + std::string(kw) + " near '" + peek().text + "'");
        next();
    }
    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) shape_error(std::string("expected ") + what + " near '" + peek().text + "'");
        next();
    }

    std::uint32_t column(const Token& t) const {
        if (t.kind != Tok::Ident && t.kind != Tok::QuotedIdent) shape_error("expected a column name");
        if (auto id = syn_.column_index(t.text)) return *id;
        std::string_view name = t.text;
        // Drop a table qualifier.
        if (auto dot = name.rfind('.'); t.kind == Tok::Ident && dot != std::string_view::npos)
            name = name.substr(dot + 1);
        const auto want = upper(name);
        for (const auto& c : syn_.columns)
            if (upper(c.name) == want) return c.id;
        throw QueryError("unknown column '" + t.text + "'");
    }

    bool at_column() const {
        if (peek().kind == Tok::QuotedIdent) return true;
        if (peek().kind != Tok::Ident) return false;
        const auto kw = upper(peek().text);
        return kw != "NULL";
    }

    // Literal text, or nullopt for NULL.
    std::optional<std::string> literal() {
        if (keyword("NULL")) {
            next();
            return std::nullopt;
        }
        std::string sign;
        if (peek().kind == Tok::Minus) {
            next();
            sign = "-";
        }
        const auto t = next();
        if (t.kind == Tok::Number) return sign + t.text;
        if (!sign.empty()) shape_error("'-' must precede a number");
        if (t.kind == Tok::String) return t.text;
        shape_error("expected a literal near '" + t.text + "'");
    }

    Predicate condition(std::uint32_t col, CompareOp op, const std::optional<std::string>& lit) {
        if (!lit) {
            if (op != CompareOp::Equal && op != CompareOp::NotEqual) shape_error("NULL only compares with = or !=");
            Condition c;
            c.column = col;
            c.op = op;
            c.kind = Condition::Literal::Null;
            return Predicate::leaf(c);
        }
        return Predicate::leaf(transform_literal(*lit, op, syn_.columns[col]));
    }

    Predicate parse_or() {
        std::vector<Predicate> terms{parse_and()};
        while (keyword("OR")) {
            next();
            terms.push_back(parse_and());
        }
        return Predicate::node(Predicate::Kind::Or, std::move(terms));
    }

    Predicate parse_and() {
        std::vector<Predicate> terms{parse_primary()};
        while (keyword("AND")) {
            next();
            terms.push_back(parse_primary());
        }
        return Predicate::node(Predicate::Kind::And, std::move(terms));
    }

    Predicate parse_primary() {
        if (peek().kind == Tok::LParen) {
            next();
            auto p = parse_or();
            expect(Tok::RParen, "')'");
            return p;
        }
        if (keyword("NOT")) shape_error("NOT is not supported");
        if (at_column()) {
            const auto col = column(next());
            if (keyword("IS")) {
                next();
                bool negated = false;
                if (keyword("NOT")) {
                    next();
                    negated = true;
                }
                expect_keyword("NULL");
                return condition(col, negated ? CompareOp::NotEqual : CompareOp::Equal, std::nullopt);
            }
            if (keyword("BETWEEN")) {
                next();
                auto lo = literal();
                expect_keyword("AND");
                auto hi = literal();
                if (!lo || !hi) shape_error("BETWEEN needs non-NULL bounds");
                std::vector<Predicate> both;
                both.push_back(condition(col, CompareOp::GreaterEqual, lo));
                both.push_back(condition(col, CompareOp::LessEqual, hi));
                return Predicate::node(Predicate::Kind::And, std::move(both));
            }
            if (peek().kind != Tok::Op) shape_error("expected a comparison after '" + syn_.columns[col].name + "'");
            const auto op = to_op(next().text);
            return condition(col, op, literal());
        }
        // literal OP column
        auto lit = literal();
        if (peek().kind != Tok::Op) shape_error("expected a comparison");
        const auto op = mirror(to_op(next().text));
        const auto col = column(next());
        return condition(col, op, lit);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const Synopsis& syn_;
};

}  // namespace

QueryPlan parse_query(std::string_view sql, const Synopsis& synopsis) {
    return Parser(sql, synopsis).parse();
}

}  // namespace pwh

#include "qsdkit/expr.hpp"

#include "qsdkit/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace qsd {

namespace {

class Parser {
public:
    Parser(std::string_view text, int k, std::span<const std::string> params,
           std::vector<RateExpr::Node>& nodes)
        : text_(text), k_(k), params_(params), nodes_(nodes) {}

    int parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "empty expression");
        int root = expr();
        skip_ws();
        if (pos_ != text_.size())
            throw SyntaxError(pos_, std::string("unexpected '") + text_[pos_] + "'");
        return root;
    }

private:
    using Op = RateExpr::Op;

    int add(Op op, int lhs = -1, int rhs = -1) {
        nodes_.push_back({op, 0.0, -1, lhs, rhs});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= text_.size())
                throw SyntaxError(pos_, std::string("expected '") + c + "' before end of input");
            throw SyntaxError(pos_, std::string("expected '") + c + "'");
        }
    }

    int expr() {
        int lhs = term();
        for (;;) {
            if (accept('+')) lhs = add(Op::Add, lhs, term());
            else if (accept('-')) lhs = add(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    int term() {
        int lhs = factor();
        for (;;) {
            if (accept('*')) lhs = add(Op::Mul, lhs, factor());
            else if (accept('/')) lhs = add(Op::Div, lhs, factor());
            else return lhs;
        }
    }

    int factor() {
        if (accept('-')) return add(Op::Neg, factor());
        int base = atom();
        if (accept('^')) return add(Op::Pow, base, atom());
        return base;
    }

    int atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw SyntaxError(pos_, std::string("unexpected '") + c + "'");
    }

    int number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        std::string token(text_.substr(start, pos_ - start));
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size())
            throw SyntaxError(start, "malformed number '" + token + "'");
        int id = add(Op::Num);
        nodes_[id].value = value;
        return id;
    }

    int identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));

        if (name == "exp" || name == "log" || name == "sqrt") {
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != '(')
                throw SyntaxError(pos_, "expected '(' after function '" + name + "'");
            ++pos_;
            int arg = expr();
            expect(')');
            Op op = name == "exp" ? Op::Exp : name == "log" ? Op::Log : Op::Sqrt;
            return add(op, arg);
        }

        if (name.size() >= 2 && name[0] == 'y' &&
            std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            int idx = std::stoi(name.substr(1));
            if (idx < 1 || idx > k_)
                throw Error(Errc::UnknownIdentifier,
                            "state variable '" + name + "' outside y1..y" + std::to_string(k_));
            int id = add(Op::Var);
            nodes_[id].index = idx - 1;
            return id;
        }

        auto it = std::find(params_.begin(), params_.end(), name);
        if (it == params_.end())
            throw Error(Errc::UnknownIdentifier, "'" + name + "' at position " + std::to_string(start));
        int id = add(Op::Param);
        nodes_[id].index = static_cast<int>(it - params_.begin());
        return id;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int k_;
    std::span<const std::string> params_;
    std::vector<RateExpr::Node>& nodes_;
};

[[noreturn]] void domain_error(const char* what) { throw Error(Errc::DomainError, what); }

} // namespace

RateExpr parse_rate_expr(std::string_view text, int k, std::span<const std::string> params) {
    if (k < 1) throw Error(Errc::InvalidModel, "dimension must be >= 1");
    RateExpr e;
    e.k_ = k;
    e.source_ = std::string(text);
    e.param_names_.assign(params.begin(), params.end());
    Parser parser(text, k, params, e.nodes_);
    e.root_ = parser.parse();
    e.compile();
    return e;
}

void RateExpr::compile() {
    program_.clear();
    // Post-order walk with an explicit stack to get a postfix program.
    struct Frame {
        int id;
        bool expanded;
    };
    std::vector<Frame> work{{root_, false}};
    int depth = 0;
    max_stack_ = 0;
    while (!work.empty()) {
        Frame f = work.back();
        work.pop_back();
        const Node& n = nodes_[f.id];
        if (!f.expanded) {
            work.push_back({f.id, true});
            if (n.rhs >= 0) work.push_back({n.rhs, false});
            if (n.lhs >= 0) work.push_back({n.lhs, false});
            continue;
        }
        program_.push_back({n.op, n.value, n.index});
        switch (n.op) {
        case Op::Num:
        case Op::Var:
        case Op::Param:
            ++depth;
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
            --depth;
            break;
        default:
            break;
        }
        max_stack_ = std::max(max_stack_, depth);
    }
}

double RateExpr::eval(std::span<const double> y, std::span<const double> params) const {
    constexpr int kInline = 32;
    std::array<double, kInline> small{};
    std::vector<double> big;
    double* stack = small.data();
    if (max_stack_ > kInline) {
        big.resize(static_cast<std::size_t>(max_stack_));
        stack = big.data();
    }
    int sp = 0;
    for (const Instr& in : program_) {
        switch (in.op) {
        case Op::Num: stack[sp++] = in.value; break;
        case Op::Var: stack[sp++] = y[static_cast<std::size_t>(in.index)]; break;
        case Op::Param: stack[sp++] = params[static_cast<std::size_t>(in.index)]; break;
        case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
        case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
        case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
        case Op::Div:
            --sp;
            if (stack[sp] == 0.0) domain_error("division by zero");
            stack[sp - 1] /= stack[sp];
            break;
        case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
        case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
        case Op::Log:
            if (stack[sp - 1] < 0.0) domain_error("log of a negative number");
            stack[sp - 1] = std::log(stack[sp - 1]);
            break;
        case Op::Sqrt:
            if (stack[sp - 1] < 0.0) domain_error("sqrt of a negative number");
            stack[sp - 1] = std::sqrt(stack[sp - 1]);
            break;
        }
    }
    double v = stack[0];
    if (!std::isfinite(v)) domain_error("non-finite rate value");
    return v;
}

void RateExpr::print_node(int id, std::string& out) const {
    const Node& n = nodes_[id];
    auto binary = [&](char op) {
        out += '(';
        print_node(n.lhs, out);
        out += op;
        print_node(n.rhs, out);
        out += ')';
    };
    auto call = [&](const char* name) {
        out += name;
        out += '(';
        print_node(n.lhs, out);
        out += ')';
    };
    switch (n.op) {
    case Op::Num: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        out += buf;
        break;
    }
    case Op::Var: out += "y" + std::to_string(n.index + 1); break;
    case Op::Param: out += param_names_[static_cast<std::size_t>(n.index)]; break;
    case Op::Add: binary('+'); break;
    case Op::Sub: binary('-'); break;
    case Op::Mul: binary('*'); break;
    case Op::Div: binary('/'); break;
    case Op::Pow:
        // base and exponent are atoms in the grammar
        out += '(';
        out += '(';
        print_node(n.lhs, out);
        out += ")^(";
        print_node(n.rhs, out);
        out += "))";
        break;
    case Op::Neg:
        out += "(-";
        print_node(n.lhs, out);
        out += ')';
        break;
    case Op::Exp: call("exp"); break;
    case Op::Log: call("log"); break;
    case Op::Sqrt: call("sqrt"); break;
    }
}

std::string RateExpr::print() const {
    std::string out;
    if (root_ >= 0) print_node(root_, out);
    return out;
}

bool RateExpr::equal_subtree(int a, const RateExpr& other, int b) const {
    if ((a < 0) != (b < 0)) return false;
    if (a < 0) return true;
    const Node& x = nodes_[a];
    const Node& y = other.nodes_[b];
    if (x.op != y.op) return false;
    switch (x.op) {
    case Op::Num: return x.value == y.value;
    case Op::Var: return x.index == y.index;
    case Op::Param:
        return param_names_[static_cast<std::size_t>(x.index)] ==
               other.param_names_[static_cast<std::size_t>(y.index)];
    default:
        return equal_subtree(x.lhs, other, y.lhs) && equal_subtree(x.rhs, other, y.rhs);
    }
}

bool RateExpr::structurally_equal(const RateExpr& other) const {
    if (root_ < 0 || other.root_ < 0) return root_ == other.root_;
    return equal_subtree(root_, other, other.root_);
}

RateExpr RateExpr::with_permuted_coordinates(std::span<const int> perm) const {
    RateExpr out = *this;
    for (Node& n : out.nodes_)
        if (n.op == Op::Var) n.index = perm[static_cast<std::size_t>(n.index)];
    out.source_ = out.print();
    out.compile();
    return out;
}

} // namespace qsd

#include "latentmath/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace latentmath {

namespace {

std::int64_t checked(__int128 v, const char* what) {
  if (v > INT64_MAX || v < INT64_MIN) throw Error(ErrorCode::internal, std::string("integer overflow in ") + what);
  return static_cast<std::int64_t>(v);
}

}  // namespace

Rat::Rat(std::int64_t n, std::int64_t d) {
  if (d == 0) throw DomainError("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  if (g == 0) g = 1;
  num = n / g;
  den = d / g;
}

Rat operator+(const Rat& a, const Rat& b) {
  __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
  __int128 d = (__int128)a.den * b.den;
  return Rat(checked(n, "rational add"), checked(d, "rational add"));
}

Rat operator-(const Rat& a, const Rat& b) { return a + Rat(-b.num, b.den); }

Rat operator*(const Rat& a, const Rat& b) {
  __int128 n = (__int128)a.num * b.num;
  __int128 d = (__int128)a.den * b.den;
  return Rat(checked(n, "rational mul"), checked(d, "rational mul"));
}

bool operator<(const Rat& a, const Rat& b) {
  return (__int128)a.num * b.den < (__int128)b.num * a.den;
}

bool rat_invert(const Rat& a, Rat* out) {
  if (a.num == 0) return false;
  *out = Rat(a.den, a.num);
  return true;
}

bool rat_pow(const Rat& a, std::int64_t n, Rat* out) {
  if (n == 0) {
    *out = Rat(1);
    return true;
  }
  Rat base = a;
  std::int64_t k = n;
  if (n < 0) {
    if (!rat_invert(a, &base)) return false;
    k = -n;
  }
  if (k > 64) return false;  // would overflow long before this anyway
  Rat acc(1);
  for (std::int64_t i = 0; i < k; ++i) {
    __int128 nn = (__int128)acc.num * base.num;
    __int128 dd = (__int128)acc.den * base.den;
    if (nn > INT64_MAX || nn < INT64_MIN || dd > INT64_MAX) return false;
    acc = Rat((std::int64_t)nn, (std::int64_t)dd);
  }
  *out = acc;
  return true;
}

const char* func_name(FuncKind f) {
  switch (f) {
    case FuncKind::cos: return "cos";
    case FuncKind::sin: return "sin";
    case FuncKind::log: return "log";
    case FuncKind::exp: return "exp";
  }
  return "?";
}

namespace {

// lexicographic rank of the function name: cos < exp < log < sin
int func_order(FuncKind f) {
  switch (f) {
    case FuncKind::cos: return 0;
    case FuncKind::exp: return 1;
    case FuncKind::log: return 2;
    case FuncKind::sin: return 3;
  }
  return 4;
}

std::size_t mix(std::size_t h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

class ExprBuilder {
 public:
  static Expr constant(const Rat& r) {
    auto n = std::shared_ptr<ExprNode>(new ExprNode());
    n->kind_ = ExprKind::constant;
    n->value_ = r;
    n->hash_ = mix(mix(0x11, (std::size_t)r.num), (std::size_t)r.den);
    return n;
  }
  static Expr symbol(const std::string& name) {
    auto n = std::shared_ptr<ExprNode>(new ExprNode());
    n->kind_ = ExprKind::symbol;
    n->name_ = name;
    n->hash_ = mix(0x22, std::hash<std::string>()(name));
    return n;
  }
  static Expr function(FuncKind f, Expr arg) {
    auto n = std::shared_ptr<ExprNode>(new ExprNode());
    n->kind_ = ExprKind::function;
    n->func_ = f;
    n->hash_ = mix(mix(0x33, (std::size_t)f), arg->hash());
    n->args_ = {std::move(arg)};
    return n;
  }
  static Expr node(ExprKind kind, std::vector<Expr> args) {
    auto n = std::shared_ptr<ExprNode>(new ExprNode());
    n->kind_ = kind;
    std::size_t h = mix(0x44, (std::size_t)kind);
    for (const auto& a : args) h = mix(h, a->hash());
    n->hash_ = h;
    n->args_ = std::move(args);
    return n;
  }
};

Expr make_int(std::int64_t v) { return ExprBuilder::constant(Rat(v)); }
Expr make_rat(std::int64_t num, std::int64_t den) { return ExprBuilder::constant(Rat(num, den)); }
Expr make_constant(const Rat& r) { return ExprBuilder::constant(r); }
Expr make_symbol(const std::string& name) { return ExprBuilder::symbol(name); }
Expr make_function(FuncKind f, Expr arg) { return ExprBuilder::function(f, std::move(arg)); }

// --- ordering ----------------------------------------------------------------

namespace {

int cmp_rat(const Rat& a, const Rat& b) {
  __int128 l = (__int128)a.num * b.den;
  __int128 r = (__int128)b.num * a.den;
  if (l < r) return -1;
  if (l > r) return 1;
  return 0;
}

}  // namespace

int expr_compare(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return 0;
  const bool ca = a->kind() == ExprKind::constant;
  const bool cb = b->kind() == ExprKind::constant;
  if (ca && cb) return cmp_rat(a->value(), b->value());
  if (ca) return -1;
  if (cb) return 1;

  // Products compare as their factor lists; anything else is a singleton
  // list. This keeps Mul(Integer(-1), x) ahead of a bare symbol, matching
  // the canonical serializations of the derivation corpus.
  if (a->kind() == ExprKind::product || b->kind() == ExprKind::product) {
    const std::vector<Expr> sa = a->kind() == ExprKind::product ? a->args() : std::vector<Expr>{a};
    const std::vector<Expr> sb = b->kind() == ExprKind::product ? b->args() : std::vector<Expr>{b};
    const std::size_t n = std::min(sa.size(), sb.size());
    for (std::size_t i = 0; i < n; ++i) {
      int c = expr_compare(sa[i], sb[i]);
      if (c != 0) return c;
    }
    if (sa.size() != sb.size()) return sa.size() < sb.size() ? -1 : 1;
    return 0;
  }

  auto rank = [](ExprKind k) {
    switch (k) {
      case ExprKind::symbol: return 1;
      case ExprKind::function: return 2;
      case ExprKind::power: return 3;
      case ExprKind::sum: return 4;
      default: return 5;
    }
  };
  if (rank(a->kind()) != rank(b->kind())) return rank(a->kind()) < rank(b->kind()) ? -1 : 1;

  switch (a->kind()) {
    case ExprKind::symbol: {
      int c = a->name().compare(b->name());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case ExprKind::function: {
      if (func_order(a->func()) != func_order(b->func()))
        return func_order(a->func()) < func_order(b->func()) ? -1 : 1;
      return expr_compare(a->arg(), b->arg());
    }
    case ExprKind::power: {
      int c = expr_compare(a->base(), b->base());
      if (c != 0) return c;
      return expr_compare(a->exponent(), b->exponent());
    }
    case ExprKind::sum: {
      const std::size_t n = std::min(a->args().size(), b->args().size());
      for (std::size_t i = 0; i < n; ++i) {
        int c = expr_compare(a->args()[i], b->args()[i]);
        if (c != 0) return c;
      }
      if (a->args().size() != b->args().size())
        return a->args().size() < b->args().size() ? -1 : 1;
      return 0;
    }
    default: return 0;
  }
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (a->hash() != b->hash()) return false;
  return expr_compare(a, b) == 0;
}

// --- canonical constructors ---------------------------------------------------

Expr make_power(Expr base, Expr exponent) {
  if (exponent->kind() == ExprKind::constant) {
    const Rat& e = exponent->value();
    if (e.is_one()) return base;
    if (e.is_zero()) {
      if (!(base->kind() == ExprKind::constant && base->value().is_zero()))
        return make_int(1);
      // 0^0 left as-is; unreachable through generated data
    } else if (base->kind() == ExprKind::constant && e.is_integer()) {
      Rat folded;
      if (rat_pow(base->value(), e.num, &folded)) return make_constant(folded);
    }
  }
  return ExprBuilder::node(ExprKind::power, {std::move(base), std::move(exponent)});
}

Expr make_product(std::vector<Expr> args) {
  std::vector<Expr> flat;
  flat.reserve(args.size());
  for (auto& a : args) {
    if (a->kind() == ExprKind::product)
      flat.insert(flat.end(), a->args().begin(), a->args().end());
    else
      flat.push_back(std::move(a));
  }

  Rat coeff(1);
  std::vector<std::pair<Expr, Expr>> base_exp;  // (base, exponent)
  for (auto& f : flat) {
    if (f->kind() == ExprKind::constant) {
      coeff = coeff * f->value();
    } else if (f->kind() == ExprKind::power) {
      base_exp.emplace_back(f->base(), f->exponent());
    } else {
      base_exp.emplace_back(f, make_int(1));
    }
  }
  if (coeff.is_zero()) return make_int(0);

  std::stable_sort(base_exp.begin(), base_exp.end(),
                   [](const auto& x, const auto& y) { return expr_compare(x.first, y.first) < 0; });

  std::vector<Expr> factors;
  std::size_t i = 0;
  while (i < base_exp.size()) {
    std::size_t j = i + 1;
    std::vector<Expr> exps{base_exp[i].second};
    while (j < base_exp.size() && expr_equal(base_exp[j].first, base_exp[i].first)) {
      exps.push_back(base_exp[j].second);
      ++j;
    }
    Expr e = exps.size() == 1 ? exps[0] : make_sum(std::move(exps));
    Expr p = make_power(base_exp[i].first, e);
    if (p->kind() == ExprKind::constant) {
      coeff = coeff * p->value();
      if (coeff.is_zero()) return make_int(0);
    } else if (p->kind() == ExprKind::product) {
      // merged exponent collapsed a product base back to itself
      for (const auto& sub : p->args()) {
        if (sub->kind() == ExprKind::constant)
          coeff = coeff * sub->value();
        else
          factors.push_back(sub);
      }
    } else {
      factors.push_back(std::move(p));
    }
    i = j;
  }
  if (coeff.is_zero()) return make_int(0);

  std::sort(factors.begin(), factors.end(),
            [](const Expr& x, const Expr& y) { return expr_compare(x, y) < 0; });

  if (factors.empty()) return make_constant(coeff);
  if (coeff.is_one()) {
    if (factors.size() == 1) return factors[0];
    return ExprBuilder::node(ExprKind::product, std::move(factors));
  }
  std::vector<Expr> out;
  out.reserve(factors.size() + 1);
  out.push_back(make_constant(coeff));
  for (auto& f : factors) out.push_back(std::move(f));
  return ExprBuilder::node(ExprKind::product, std::move(out));
}

Expr make_sum(std::vector<Expr> args) {
  std::vector<Expr> flat;
  flat.reserve(args.size());
  for (auto& a : args) {
    if (a->kind() == ExprKind::sum)
      flat.insert(flat.end(), a->args().begin(), a->args().end());
    else
      flat.push_back(std::move(a));
  }

  Rat const_acc(0);
  std::vector<std::pair<Expr, Rat>> cores;  // (coefficient-free core, coefficient)
  for (auto& t : flat) {
    if (t->kind() == ExprKind::constant) {
      const_acc = const_acc + t->value();
      continue;
    }
    Rat coeff(1);
    Expr core = t;
    if (t->kind() == ExprKind::product && t->args()[0]->kind() == ExprKind::constant) {
      coeff = t->args()[0]->value();
      std::vector<Expr> rest(t->args().begin() + 1, t->args().end());
      core = rest.size() == 1 ? rest[0] : ExprBuilder::node(ExprKind::product, std::move(rest));
    }
    cores.emplace_back(std::move(core), coeff);
  }

  std::stable_sort(cores.begin(), cores.end(),
                   [](const auto& x, const auto& y) { return expr_compare(x.first, y.first) < 0; });

  std::vector<Expr> terms;
  std::size_t i = 0;
  while (i < cores.size()) {
    Rat coeff = cores[i].second;
    std::size_t j = i + 1;
    while (j < cores.size() && expr_equal(cores[j].first, cores[i].first)) {
      coeff = coeff + cores[j].second;
      ++j;
    }
    if (!coeff.is_zero()) {
      if (coeff.is_one())
        terms.push_back(cores[i].first);
      else
        terms.push_back(make_product({make_constant(coeff), cores[i].first}));
    }
    i = j;
  }
  if (!const_acc.is_zero()) terms.push_back(make_constant(const_acc));

  std::sort(terms.begin(), terms.end(),
            [](const Expr& x, const Expr& y) { return expr_compare(x, y) < 0; });

  if (terms.empty()) return make_int(0);
  if (terms.size() == 1) return terms[0];
  return ExprBuilder::node(ExprKind::sum, std::move(terms));
}

Expr add(const Expr& a, const Expr& b) { return make_sum({a, b}); }
Expr sub(const Expr& a, const Expr& b) { return make_sum({a, make_product({make_int(-1), b})}); }
Expr mul(const Expr& a, const Expr& b) { return make_product({a, b}); }
Expr div(const Expr& a, const Expr& b) { return make_product({a, make_power(b, make_int(-1))}); }
Expr neg(const Expr& a) { return make_product({make_int(-1), a}); }

// --- functional serialization ---------------------------------------------------

namespace {

void serialize_fn(const Expr& e, std::string& out) {
  switch (e->kind()) {
    case ExprKind::constant: {
      const Rat& v = e->value();
      if (v.is_integer()) {
        out += "Integer(";
        out += std::to_string(v.num);
        out += ")";
      } else {
        out += "Rational(";
        out += std::to_string(v.num);
        out += ", ";
        out += std::to_string(v.den);
        out += ")";
      }
      return;
    }
    case ExprKind::symbol:
      out += "Symbol('";
      out += e->name();
      out += "')";
      return;
    case ExprKind::function:
      out += func_name(e->func());
      out += "(";
      serialize_fn(e->arg(), out);
      out += ")";
      return;
    case ExprKind::power:
      out += "Pow(";
      serialize_fn(e->base(), out);
      out += ", ";
      serialize_fn(e->exponent(), out);
      out += ")";
      return;
    case ExprKind::product:
    case ExprKind::sum: {
      out += e->kind() == ExprKind::product ? "Mul(" : "Add(";
      bool first = true;
      for (const auto& a : e->args()) {
        if (!first) out += ", ";
        first = false;
        serialize_fn(a, out);
      }
      out += ")";
      return;
    }
  }
}

}  // namespace

std::string serialize_functional(const Expr& e) {
  std::string out;
  serialize_fn(e, out);
  return out;
}

// --- LaTeX serialization ---------------------------------------------------------

namespace {

std::string latex_of(const Expr& e);

// Splits off a leading minus so sums can join terms with " - ".
// The magnitude of a constant is plain digits / \frac{p}{q}.
std::pair<bool, std::string> latex_magnitude(const Expr& e);

std::string latex_const_mag(const Rat& v) {
  Rat a = v.num < 0 ? Rat(-v.num, v.den) : v;
  if (a.is_integer()) return std::to_string(a.num);
  return "\\frac{" + std::to_string(a.num) + "}{" + std::to_string(a.den) + "}";
}

bool base_needs_parens(const Expr& b) {
  switch (b->kind()) {
    case ExprKind::sum:
    case ExprKind::product:
    case ExprKind::power: return true;
    case ExprKind::constant: return b->value().num < 0 || !b->value().is_integer();
    default: return false;
  }
}

std::string latex_power(const Expr& p) {
  std::string base = latex_of(p->base());
  if (base_needs_parens(p->base())) base = "(" + base + ")";
  return base + "^{" + latex_of(p->exponent()) + "}";
}

// a single factor inside a product part; sums get parenthesized when they
// share the part with other pieces
std::string latex_factor(const Expr& f, bool parenthesize_sums) {
  switch (f->kind()) {
    case ExprKind::sum: {
      std::string s = latex_of(f);
      return parenthesize_sums ? "(" + s + ")" : s;
    }
    case ExprKind::power: return latex_power(f);
    case ExprKind::function:
      return std::string("\\") + func_name(f->func()) + "{(" + latex_of(f->arg()) + ")}";
    case ExprKind::symbol: return f->name();
    default: return latex_of(f);
  }
}

std::pair<bool, std::string> latex_magnitude(const Expr& e) {
  if (e->kind() == ExprKind::constant)
    return {e->value().num < 0, latex_const_mag(e->value())};
  if (e->kind() == ExprKind::sum) return {false, latex_of(e)};
  if (e->kind() == ExprKind::symbol) return {false, e->name()};
  if (e->kind() == ExprKind::function) return {false, latex_factor(e, false)};

  // product or power: split into numerator/denominator pieces
  std::vector<Expr> parts;
  if (e->kind() == ExprKind::product)
    parts = e->args();
  else
    parts = {e};

  bool negative = false;
  Rat coeff(1);
  std::vector<Expr> num, den;
  for (const auto& f : parts) {
    if (f->kind() == ExprKind::constant) {
      coeff = coeff * f->value();
    } else if (f->kind() == ExprKind::power && f->exponent()->kind() == ExprKind::constant &&
               f->exponent()->value().num < 0) {
      const Rat& x = f->exponent()->value();
      den.push_back(make_power(f->base(), make_constant(Rat(-x.num, x.den))));
    } else {
      num.push_back(f);
    }
  }
  if (coeff.num < 0) {
    negative = true;
    coeff = Rat(-coeff.num, coeff.den);
  }

  const bool frac = !den.empty() || coeff.den != 1;
  const std::size_t num_count = num.size() + (coeff.num != 1 ? 1 : 0);
  const std::size_t den_count = den.size() + (coeff.den != 1 ? 1 : 0);

  std::vector<std::string> num_pieces, den_pieces;
  if (coeff.num != 1) num_pieces.push_back(std::to_string(coeff.num));
  if (coeff.den != 1) den_pieces.push_back(std::to_string(coeff.den));
  for (const auto& f : num) num_pieces.push_back(latex_factor(f, num_count > 1 || !frac));
  for (const auto& f : den) den_pieces.push_back(latex_factor(f, den_count > 1));

  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += " ";
      s += v[i];
    }
    return s;
  };

  std::string num_str = num_pieces.empty() ? "1" : join(num_pieces);
  if (!frac) return {negative, num_str};
  return {negative, "\\frac{" + num_str + "}{" + join(den_pieces) + "}"};
}

std::string latex_of(const Expr& e) {
  if (e->kind() == ExprKind::sum) {
    std::string out;
    bool first = true;
    for (const auto& t : e->args()) {
      auto [negative, mag] = latex_magnitude(t);
      if (first) {
        if (!negative)
          out += mag;
        else if (t->kind() == ExprKind::constant && t->value().is_integer())
          out += "-" + mag;
        else
          out += "- " + mag;
      } else {
        out += negative ? " - " : " + ";
        out += mag;
      }
      first = false;
    }
    return out;
  }
  auto [negative, mag] = latex_magnitude(e);
  if (!negative) return mag;
  if (e->kind() == ExprKind::constant && e->value().is_integer()) return "-" + mag;
  return "- " + mag;
}

}  // namespace

std::string serialize_latex(const Expr& e) { return latex_of(e); }

// --- parser ---------------------------------------------------------------------

namespace {

class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }
  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum((unsigned char)text_[pos_]) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) throw ParseError("expected identifier", pos_);
    return text_.substr(start, pos_ - start);
  }
  std::int64_t integer() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) ++pos_;
    if (pos_ == digits) throw ParseError("expected integer", pos_);
    try {
      return std::stoll(text_.substr(start, pos_ - start));
    } catch (const std::out_of_range&) {
      throw ParseError("integer out of range", start);
    }
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

Expr parse_expr(Scanner& s);

std::vector<Expr> parse_args(Scanner& s, std::size_t min_args, const char* head) {
  s.expect('(');
  std::vector<Expr> args;
  args.push_back(parse_expr(s));
  while (s.peek() == ',') {
    s.expect(',');
    args.push_back(parse_expr(s));
  }
  std::size_t close = s.pos();
  s.expect(')');
  if (args.size() < min_args)
    throw ParseError(std::string(head) + " requires at least " + std::to_string(min_args) +
                         " arguments",
                     close);
  return args;
}

Expr parse_expr(Scanner& s) {
  s.skip_ws();
  std::size_t head_pos = s.pos();
  std::string head = s.ident();
  if (head == "Add") return make_sum(parse_args(s, 2, "Add"));
  if (head == "Mul") return make_product(parse_args(s, 2, "Mul"));
  if (head == "Pow") {
    s.expect('(');
    Expr base = parse_expr(s);
    s.expect(',');
    Expr exponent = parse_expr(s);
    s.expect(')');
    return make_power(std::move(base), std::move(exponent));
  }
  if (head == "cos" || head == "sin" || head == "log" || head == "exp") {
    FuncKind f = head == "cos"   ? FuncKind::cos
                 : head == "sin" ? FuncKind::sin
                 : head == "log" ? FuncKind::log
                                 : FuncKind::exp;
    s.expect('(');
    Expr arg = parse_expr(s);
    s.expect(')');
    return make_function(f, std::move(arg));
  }
  if (head == "Symbol") {
    s.expect('(');
    s.expect('\'');
    std::string name = s.ident();
    s.expect('\'');
    s.expect(')');
    return make_symbol(name);
  }
  if (head == "Integer") {
    s.expect('(');
    std::int64_t v = s.integer();
    s.expect(')');
    return make_int(v);
  }
  if (head == "Rational") {
    s.expect('(');
    std::int64_t n = s.integer();
    s.expect(',');
    std::size_t den_pos = s.pos();
    std::int64_t d = s.integer();
    s.expect(')');
    if (d == 0) throw ParseError("rational with zero denominator", den_pos);
    return make_rat(n, d);
  }
  throw ParseError("unknown head '" + head + "'", head_pos);
}

}  // namespace

Expr parse_functional(const std::string& text) {
  Scanner s(text);
  Expr e = parse_expr(s);
  if (!s.eof()) throw ParseError("trailing characters", s.pos());
  return e;
}

// --- misc operations --------------------------------------------------------------

Expr simplify(const Expr& e) {
  switch (e->kind()) {
    case ExprKind::constant:
    case ExprKind::symbol: return e;
    case ExprKind::function: return make_function(e->func(), simplify(e->arg()));
    case ExprKind::power: return make_power(simplify(e->base()), simplify(e->exponent()));
    case ExprKind::product: {
      std::vector<Expr> args;
      args.reserve(e->args().size());
      for (const auto& a : e->args()) args.push_back(simplify(a));
      return make_product(std::move(args));
    }
    case ExprKind::sum: {
      std::vector<Expr> args;
      args.reserve(e->args().size());
      for (const auto& a : e->args()) args.push_back(simplify(a));
      return make_sum(std::move(args));
    }
  }
  return e;
}

namespace {

void collect_symbols(const Expr& e, std::set<std::string>& out) {
  if (e->kind() == ExprKind::symbol) {
    out.insert(e->name());
    return;
  }
  for (const auto& a : e->args()) collect_symbols(a, out);
}

}  // namespace

std::set<std::string> free_symbols(const Expr& e) {
  std::set<std::string> out;
  collect_symbols(e, out);
  return out;
}

double evaluate_numeric(const Expr& e, const std::map<std::string, double>& assignment) {
  switch (e->kind()) {
    case ExprKind::constant: return e->value().to_double();
    case ExprKind::symbol: {
      auto it = assignment.find(e->name());
      if (it == assignment.end()) throw MissingSymbol(e->name());
      return it->second;
    }
    case ExprKind::function: {
      double a = evaluate_numeric(e->arg(), assignment);
      switch (e->func()) {
        case FuncKind::cos: return std::cos(a);
        case FuncKind::sin: return std::sin(a);
        case FuncKind::exp: return std::exp(a);
        case FuncKind::log:
          if (a <= 0.0) throw DomainError("log of non-positive value");
          return std::log(a);
      }
      return 0.0;
    }
    case ExprKind::power: {
      double b = evaluate_numeric(e->base(), assignment);
      double x = evaluate_numeric(e->exponent(), assignment);
      if (b == 0.0 && x < 0.0) throw DomainError("zero raised to a negative power");
      if (b < 0.0 && x != std::floor(x)) throw DomainError("negative base with fractional exponent");
      return std::pow(b, x);
    }
    case ExprKind::product: {
      double p = 1.0;
      for (const auto& a : e->args()) p *= evaluate_numeric(a, assignment);
      return p;
    }
    case ExprKind::sum: {
      double s = 0.0;
      for (const auto& a : e->args()) s += evaluate_numeric(a, assignment);
      return s;
    }
  }
  return 0.0;
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements) {
  switch (e->kind()) {
    case ExprKind::constant: return e;
    case ExprKind::symbol: {
      auto it = replacements.find(e->name());
      return it == replacements.end() ? e : it->second;
    }
    case ExprKind::function: return make_function(e->func(), substitute(e->arg(), replacements));
    case ExprKind::power:
      return make_power(substitute(e->base(), replacements),
                        substitute(e->exponent(), replacements));
    case ExprKind::product: {
      std::vector<Expr> args;
      args.reserve(e->args().size());
      for (const auto& a : e->args()) args.push_back(substitute(a, replacements));
      return make_product(std::move(args));
    }
    case ExprKind::sum: {
      std::vector<Expr> args;
      args.reserve(e->args().size());
      for (const auto& a : e->args()) args.push_back(substitute(a, replacements));
      return make_sum(std::move(args));
    }
  }
  return e;
}

std::size_t count_nodes(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e->args()) n += count_nodes(a);
  return n;
}

}  // namespace latentmath

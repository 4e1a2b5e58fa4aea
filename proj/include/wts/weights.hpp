#pragma once

// Weight structures: carrier values over N plus infinity, the built-in strong
// bimonoids (bool, nat_inf, mod 9), multioperator monoids over them plus the
// Boolean and kmax monoids, and a unary-operation algebra with Kleene star.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wts {

// Element of N extended with a distinct infinity. All built-in carriers embed here.
class Value {
public:
  constexpr Value() = default;
  static constexpr Value of(std::uint64_t n) { return Value(n, false); }
  static constexpr Value infinity() { return Value(0, true); }

  bool is_inf() const { return inf_; }
  std::uint64_t num() const {
    if (inf_) throw std::domain_error("infinite value has no finite numeral");
    return n_;
  }

  bool operator==(const Value&) const = default;
  bool operator<(const Value& o) const {
    if (inf_ != o.inf_) return !inf_;
    return n_ < o.n_;
  }

  std::string str() const { return inf_ ? "inf" : std::to_string(n_); }

  static std::optional<Value> parse(std::string_view s) {
    if (s == "inf") return infinity();
    if (s.empty()) return std::nullopt;
    std::uint64_t n = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      if (n > (UINT64_MAX - static_cast<std::uint64_t>(c - '0')) / 10) return std::nullopt;
      n = n * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return of(n);
  }

private:
  constexpr Value(std::uint64_t n, bool inf) : n_(n), inf_(inf) {}
  std::uint64_t n_ = 0;
  bool inf_ = false;
};

// Strong bimonoid (K,+,.,0,1): commutative additive monoid, multiplicative
// monoid, 0 absorbs multiplication. Flags describe extra laws that hold.
class Bimonoid {
public:
  static Bimonoid boolean() { return Bimonoid(Kind::Bool); }
  static Bimonoid nat_inf() { return Bimonoid(Kind::NatInf); }
  static Bimonoid mod9() { return Bimonoid(Kind::Mod9); }

  static std::optional<Bimonoid> by_name(std::string_view name) {
    if (name == "bool") return boolean();
    if (name == "nat_inf") return nat_inf();
    if (name == "mod 9") return mod9();
    return std::nullopt;
  }

  const std::string& name() const { return name_; }
  Value zero() const { return Value::of(0); }
  Value one() const { return Value::of(1); }

  bool contains(Value v) const {
    switch (kind_) {
      case Kind::Bool: return v == Value::of(0) || v == Value::of(1);
      case Kind::NatInf: return true;
      case Kind::Mod9: return !v.is_inf() && v.num() <= 8;
    }
    return false;
  }

  Value add(Value a, Value b) const {
    check(a), check(b);
    switch (kind_) {
      case Kind::Bool: return Value::of(a.num() | b.num());
      case Kind::NatInf:
        if (a.is_inf() || b.is_inf()) return Value::infinity();
        if (a.num() > UINT64_MAX - b.num()) throw std::overflow_error("nat_inf sum overflow");
        return Value::of(a.num() + b.num());
      case Kind::Mod9: return a < b ? b : a;
    }
    throw std::logic_error("unreachable");
  }

  Value mul(Value a, Value b) const {
    check(a), check(b);
    switch (kind_) {
      case Kind::Bool: return Value::of(a.num() & b.num());
      case Kind::NatInf: {
        if (a == zero() || b == zero()) return zero();
        if (a.is_inf() || b.is_inf()) return Value::infinity();
        if (a.num() > UINT64_MAX / b.num()) throw std::overflow_error("nat_inf product overflow");
        return Value::of(a.num() * b.num());
      }
      case Kind::Mod9: return Value::of((a.num() * b.num()) % 9);
    }
    throw std::logic_error("unreachable");
  }

  bool commutative() const { return true; }
  bool distributive() const { return kind_ != Kind::Mod9; }  // semiring flag
  bool complete() const { return true; }
  bool zero_sum_free() const { return true; }
  bool zero_divisor_free() const { return kind_ != Kind::Mod9; }
  bool idempotent_add() const { return kind_ != Kind::NatInf; }

  // a* = sum of all powers of a; defined for the semiring backings.
  std::optional<Value> star(Value a) const {
    check(a);
    switch (kind_) {
      case Kind::Bool: return one();
      case Kind::NatInf: return a == zero() ? one() : Value::infinity();
      case Kind::Mod9: return std::nullopt;
    }
    return std::nullopt;
  }

  // Finite carriers, for exhaustive law checks.
  std::optional<std::vector<Value>> carrier() const {
    switch (kind_) {
      case Kind::Bool: return std::vector<Value>{Value::of(0), Value::of(1)};
      case Kind::Mod9: {
        std::vector<Value> out;
        for (std::uint64_t i = 0; i <= 8; ++i) out.push_back(Value::of(i));
        return out;
      }
      case Kind::NatInf: return std::nullopt;
    }
    return std::nullopt;
  }

  bool operator==(const Bimonoid& o) const { return kind_ == o.kind_; }

private:
  enum class Kind { Bool, NatInf, Mod9 };
  explicit Bimonoid(Kind k) : kind_(k) {
    switch (k) {
      case Kind::Bool: name_ = "bool"; break;
      case Kind::NatInf: name_ = "nat_inf"; break;
      case Kind::Mod9: name_ = "mod 9"; break;
    }
  }
  void check(Value v) const {
    if (!contains(v)) throw std::domain_error("value " + v.str() + " outside carrier " + name_);
  }
  Kind kind_;
  std::string name_;
};

// Operation symbol of a multioperator monoid. Written forms:
//   zero(k)   k-ary constant-zero operation
//   all(k)    Boolean conjunction-like operation (1 iff all arguments are 1)
//   mul(k,a)  product of the arguments times a, over a bimonoid backing
//   op(name)  named kmax operation (one/0, pr1 pr2 diff ht /2)
struct Op {
  enum class Kind { Zero, All, Mul, Named };
  Kind kind = Kind::Zero;
  int arity = 0;
  Value param;        // Mul only
  std::string name;   // Named only

  static Op zero(int k) { return Op{Kind::Zero, k, Value::of(0), ""}; }
  static Op all(int k) { return Op{Kind::All, k, Value::of(0), ""}; }
  static Op mul(int k, Value a) { return Op{Kind::Mul, k, a, ""}; }
  static Op named(std::string name, int k) { return Op{Kind::Named, k, Value::of(0), std::move(name)}; }

  bool operator==(const Op&) const = default;

  std::string str() const {
    switch (kind) {
      case Kind::Zero: return "zero(" + std::to_string(arity) + ")";
      case Kind::All: return "all(" + std::to_string(arity) + ")";
      case Kind::Mul: return "mul(" + std::to_string(arity) + "," + param.str() + ")";
      case Kind::Named: return "op(" + name + ")";
    }
    return "";
  }
};

inline int kmax_op_arity(std::string_view name) {
  if (name == "one") return 0;
  if (name == "pr1" || name == "pr2" || name == "diff" || name == "ht") return 2;
  return -1;
}

inline std::optional<Op> parse_op(std::string_view s) {
  auto args_of = [&](std::string_view head) -> std::optional<std::string_view> {
    if (s.size() < head.size() + 2 || s.substr(0, head.size()) != head) return std::nullopt;
    if (s[head.size()] != '(' || s.back() != ')') return std::nullopt;
    return s.substr(head.size() + 1, s.size() - head.size() - 2);
  };
  auto as_int = [](std::string_view t) -> std::optional<int> {
    auto v = Value::parse(t);
    if (!v || v->is_inf() || v->num() > 64) return std::nullopt;
    return static_cast<int>(v->num());
  };
  if (auto in = args_of("mul")) {
    auto comma = in->find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    auto k = as_int(in->substr(0, comma));
    auto a = Value::parse(in->substr(comma + 1));
    if (!k || !a) return std::nullopt;
    return Op::mul(*k, *a);
  }
  if (auto in = args_of("zero")) {
    auto k = as_int(*in);
    if (!k) return std::nullopt;
    return Op::zero(*k);
  }
  if (auto in = args_of("all")) {
    auto k = as_int(*in);
    if (!k) return std::nullopt;
    return Op::all(*k);
  }
  if (auto in = args_of("op")) {
    int k = kmax_op_arity(*in);
    if (k < 0) return std::nullopt;
    return Op::named(std::string(*in), k);
  }
  return std::nullopt;
}

// Complete multioperator monoid: commutative monoid (K,+,0) with a family of
// absorptive finitary operations. Three shapes cover the built-ins: the Boolean
// monoid, the monoid associated to a strong bimonoid, and kmax.
class MMonoid {
public:
  static MMonoid boolean() { return MMonoid(Kind::Boolean, Bimonoid::boolean(), "boolean"); }
  static MMonoid bimonoid(const Bimonoid& b) {
    return MMonoid(Kind::Backed, b, "bimonoid(" + b.name() + ")");
  }
  static MMonoid kmax() { return MMonoid(Kind::KMax, std::nullopt, "kmax"); }

  static std::optional<MMonoid> by_name(std::string_view name) {
    if (name == "boolean") return boolean();
    if (name == "kmax") return kmax();
    if (name.size() > 10 && name.substr(0, 9) == "bimonoid(" && name.back() == ')') {
      auto b = Bimonoid::by_name(name.substr(9, name.size() - 10));
      if (b) return bimonoid(*b);
    }
    return std::nullopt;
  }

  const std::string& name() const { return name_; }
  bool is_boolean_valued() const {
    return kind_ == Kind::Boolean || (kind_ == Kind::Backed && backing_->name() == "bool");
  }
  // Backing semiring-or-bimonoid when the monoid's operations are mul-shaped.
  const std::optional<Bimonoid>& backing() const { return backing_; }

  Value zero() const { return Value::of(0); }

  Value add(Value a, Value b) const {
    switch (kind_) {
      case Kind::Boolean: return Value::of((a.num() != 0 || b.num() != 0) ? 1 : 0);
      case Kind::Backed: return backing_->add(a, b);
      case Kind::KMax: return a < b ? b : a;
    }
    throw std::logic_error("unreachable");
  }

  Value sum(const std::vector<Value>& vs) const {
    Value acc = zero();
    for (Value v : vs) acc = add(acc, v);
    return acc;
  }

  // Empty diagnostic means the op belongs to this monoid at its stated arity.
  std::string check_op(const Op& op) const {
    if (op.arity < 0) return "negative arity";
    switch (op.kind) {
      case Op::Kind::Zero: return "";
      case Op::Kind::All:
        return kind_ == Kind::Boolean ? "" : "all(k) requires the boolean monoid";
      case Op::Kind::Mul:
        if (kind_ == Kind::KMax) return "mul(k,a) requires a bimonoid backing";
        if (!backing_->contains(op.param))
          return "mul parameter " + op.param.str() + " outside carrier " + backing_->name();
        return "";
      case Op::Kind::Named:
        if (kind_ != Kind::KMax) return "op(" + op.name + ") requires kmax";
        if (kmax_op_arity(op.name) != op.arity) return "wrong arity for op(" + op.name + ")";
        return "";
    }
    return "bad op";
  }

  Value apply(const Op& op, const std::vector<Value>& args) const {
    if (static_cast<int>(args.size()) != op.arity)
      throw std::invalid_argument("operation " + op.str() + " applied to " +
                                  std::to_string(args.size()) + " arguments");
    if (std::string d = check_op(op); !d.empty()) throw std::domain_error(d);
    switch (op.kind) {
      case Op::Kind::Zero: return zero();
      case Op::Kind::All:
        for (Value v : args)
          if (v == zero()) return zero();
        return Value::of(1);
      case Op::Kind::Mul: {
        Value acc = op.param;
        for (Value v : args) acc = backing_->mul(v, acc);
        return acc;
      }
      case Op::Kind::Named: {
        if (op.name == "one") return Value::of(1);
        Value a = args[0], b = args[1];
        if (a == zero() || b == zero()) return zero();     // absorption case
        if (a.is_inf() || b.is_inf()) return zero();       // fixed value for infinite arguments
        if (op.name == "pr1") return a;
        if (op.name == "pr2") return b;
        if (op.name == "diff")
          return Value::of(a.num() > b.num() ? a.num() - b.num() : b.num() - a.num());
        if (op.name == "ht") return Value::of(1 + std::max(a.num(), b.num()));
        throw std::domain_error("unknown kmax operation: " + op.name);
      }
    }
    throw std::logic_error("unreachable");
  }

  bool operator==(const MMonoid& o) const { return name_ == o.name_; }

private:
  enum class Kind { Boolean, Backed, KMax };
  MMonoid(Kind k, std::optional<Bimonoid> b, std::string n)
      : kind_(k), backing_(std::move(b)), name_(std::move(n)) {}
  Kind kind_;
  std::optional<Bimonoid> backing_;
  std::string name_;
};

// View of an operation as mul-shaped over a backing: all(k) = mul(k,1),
// zero(k) = mul(k,0). Nullopt for kmax named ops.
inline std::optional<Value> mul_param(const MMonoid& mm, const Op& op) {
  switch (op.kind) {
    case Op::Kind::Mul: return op.param;
    case Op::Kind::Zero: return mm.backing() ? std::optional<Value>(Value::of(0)) : std::nullopt;
    case Op::Kind::All: return Value::of(1);
    case Op::Kind::Named: return std::nullopt;
  }
  return std::nullopt;
}

// Formal sum of unary operations mul(1,a_i) over one backing; the identity is
// mul(1,1) and the constant-zero operation is the empty sum. With a semiring
// backing every sum normalizes to at most one coefficient.
struct UnaryOpSum {
  std::vector<Value> coeffs;
  bool operator==(const UnaryOpSum&) const = default;
};

class UnaryAlgebra {
public:
  explicit UnaryAlgebra(Bimonoid b) : b_(std::move(b)) {}

  const Bimonoid& backing() const { return b_; }

  UnaryOpSum zero() const { return {}; }
  UnaryOpSum identity() const { return {{b_.one()}}; }
  UnaryOpSum mul1(Value a) const { return normalize({{a}}); }

  bool is_zero(const UnaryOpSum& u) const { return u.coeffs.empty(); }

  UnaryOpSum add(const UnaryOpSum& u, const UnaryOpSum& v) const {
    UnaryOpSum out = u;
    out.coeffs.insert(out.coeffs.end(), v.coeffs.begin(), v.coeffs.end());
    return normalize(out);
  }

  // u after v. A sum on the left distributes by definition of operation sums;
  // a sum on the right needs distributivity of the backing.
  UnaryOpSum compose(const UnaryOpSum& u, const UnaryOpSum& v) const {
    UnaryOpSum rhs = v;
    if (rhs.coeffs.size() > 1) {
      if (!b_.distributive())
        throw std::domain_error("composing with an operation sum needs a semiring backing");
      rhs = normalize(rhs);
    }
    UnaryOpSum out;
    for (Value a : u.coeffs)
      for (Value b : rhs.coeffs) out.coeffs.push_back(b_.mul(b, a));
    return normalize(out);
  }

  Value apply(const UnaryOpSum& u, Value x) const {
    Value acc = b_.zero();
    for (Value a : u.coeffs) acc = b_.add(acc, b_.mul(x, a));
    return acc;
  }

  // Sum of all compositional powers of u; needs the backing's scalar star.
  std::optional<UnaryOpSum> star(const UnaryOpSum& u) const {
    UnaryOpSum n = normalize(u);
    if (n.coeffs.empty()) return identity();
    if (n.coeffs.size() != 1) return std::nullopt;
    auto s = b_.star(n.coeffs[0]);
    if (!s) return std::nullopt;
    return mul1(*s);
  }

  UnaryOpSum normalize(const UnaryOpSum& u) const {
    UnaryOpSum out;
    if (b_.distributive()) {
      Value acc = b_.zero();
      for (Value a : u.coeffs) acc = b_.add(acc, a);
      if (!(acc == b_.zero())) out.coeffs.push_back(acc);
      return out;
    }
    for (Value a : u.coeffs)
      if (!(a == b_.zero())) out.coeffs.push_back(a);
    return out;
  }

private:
  Bimonoid b_;
};

}  // namespace wts

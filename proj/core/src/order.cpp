#include "doctrina/order.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <sstream>

namespace doctrina {

namespace {

std::uint64_t ipow(std::uint64_t b, std::uint32_t e) {
  std::uint64_t r = 1;
  for (std::uint32_t i = 0; i < e; ++i) {
    if (b != 0 && r > UINT64_MAX / b)
      throw SizeExceeded("lattice size overflows 64-bit element index");
    r *= b;
  }
  return r;
}

}  // namespace

MeetSemilattice MeetSemilattice::from_table(Table t) {
  MeetSemilattice l;
  l.impl_ = std::move(t);
  return l;
}

std::optional<MeetSemilattice> MeetSemilattice::from_leq(
    std::uint32_t n, std::vector<std::uint8_t> leq, std::uint32_t top,
    std::vector<std::string> names) {
  Table t;
  t.n = n;
  t.leq = std::move(leq);
  t.top = top;
  t.names = std::move(names);
  t.meet.assign(std::size_t(n) * n, 0);
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      // greatest lower bound scan
      std::optional<std::uint32_t> glb;
      for (std::uint32_t x = 0; x < n; ++x) {
        if (!(t.leq[std::size_t(x) * n + a] && t.leq[std::size_t(x) * n + b]))
          continue;
        if (!glb || t.leq[std::size_t(*glb) * n + x]) glb = x;
      }
      if (!glb) return std::nullopt;
      // confirm *glb dominates every lower bound
      for (std::uint32_t x = 0; x < n; ++x)
        if (t.leq[std::size_t(x) * n + a] && t.leq[std::size_t(x) * n + b] &&
            !t.leq[std::size_t(x) * n + *glb])
          return std::nullopt;
      t.meet[std::size_t(a) * n + b] = *glb;
    }
  return from_table(std::move(t));
}

MeetSemilattice MeetSemilattice::chain(std::uint32_t n,
                                       std::vector<std::string> names) {
  Table t;
  t.n = n;
  t.top = n - 1;
  t.names = std::move(names);
  t.leq.assign(std::size_t(n) * n, 0);
  t.meet.assign(std::size_t(n) * n, 0);
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      t.leq[std::size_t(a) * n + b] = a <= b;
      t.meet[std::size_t(a) * n + b] = std::min(a, b);
    }
  return from_table(std::move(t));
}

MeetSemilattice MeetSemilattice::power(LatticePtr base, std::uint32_t exponent,
                                       std::vector<std::string> point_names) {
  Power p;
  p.size = ipow(base->size(), exponent);
  p.base = std::move(base);
  p.exponent = exponent;
  p.point_names = std::move(point_names);
  MeetSemilattice l;
  l.impl_ = std::move(p);
  return l;
}

MeetSemilattice MeetSemilattice::powerset(std::uint32_t n_points,
                                          std::vector<std::string> point_names) {
  static const LatticePtr two =
      std::make_shared<MeetSemilattice>(chain(2, {"0", "1"}));
  return power(two, n_points, std::move(point_names));
}

std::uint64_t MeetSemilattice::size() const {
  if (auto* t = std::get_if<Table>(&impl_)) return t->n;
  return std::get<Power>(impl_).size;
}

std::uint32_t MeetSemilattice::digit(Elem e, std::uint32_t point) const {
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  for (std::uint32_t i = 0; i < point; ++i) e /= radix;
  return static_cast<std::uint32_t>(e % radix);
}

Elem MeetSemilattice::with_digit(Elem e, std::uint32_t point,
                                 std::uint32_t value) const {
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  std::uint64_t scale = 1;
  for (std::uint32_t i = 0; i < point; ++i) scale *= radix;
  const std::uint64_t old = (e / scale) % radix;
  return e - old * scale + std::uint64_t(value) * scale;
}

bool MeetSemilattice::leq(Elem a, Elem b) const {
  if (auto* t = std::get_if<Table>(&impl_))
    return t->leq[std::size_t(a) * t->n + b] != 0;
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    if (!p.base->leq(a % radix, b % radix)) return false;
    a /= radix;
    b /= radix;
  }
  return true;
}

Elem MeetSemilattice::meet(Elem a, Elem b) const {
  if (auto* t = std::get_if<Table>(&impl_))
    return t->meet[std::size_t(a) * t->n + b];
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  Elem out = 0;
  std::uint64_t scale = 1;
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    out += scale * p.base->meet(a % radix, b % radix);
    a /= radix;
    b /= radix;
    scale *= radix;
  }
  return out;
}

Elem MeetSemilattice::top() const {
  if (auto* t = std::get_if<Table>(&impl_)) return t->top;
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  Elem out = 0;
  std::uint64_t scale = 1;
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    out += scale * p.base->top();
    scale *= radix;
  }
  return out;
}

std::optional<Elem> MeetSemilattice::join(Elem a, Elem b) const {
  if (auto* t = std::get_if<Table>(&impl_)) {
    const std::uint32_t n = t->n;
    std::optional<Elem> lub;
    for (std::uint32_t x = 0; x < n; ++x) {
      if (!(leq(a, x) && leq(b, x))) continue;
      if (!lub || leq(x, *lub)) lub = x;
    }
    if (!lub) return std::nullopt;
    for (std::uint32_t x = 0; x < n; ++x)
      if (leq(a, x) && leq(b, x) && !leq(*lub, x)) return std::nullopt;
    return lub;
  }
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  Elem out = 0;
  std::uint64_t scale = 1;
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    auto j = p.base->join(a % radix, b % radix);
    if (!j) return std::nullopt;
    out += scale * *j;
    a /= radix;
    b /= radix;
    scale *= radix;
  }
  return out;
}

std::optional<Elem> MeetSemilattice::bottom() const {
  if (auto* t = std::get_if<Table>(&impl_)) {
    for (std::uint32_t x = 0; x < t->n; ++x) {
      bool min = true;
      for (std::uint32_t y = 0; y < t->n && min; ++y) min = leq(x, y);
      if (min) return x;
    }
    return std::nullopt;
  }
  const auto& p = std::get<Power>(impl_);
  auto b = p.base->bottom();
  if (!b) return std::nullopt;
  const std::uint64_t radix = p.base->size();
  Elem out = 0;
  std::uint64_t scale = 1;
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    out += scale * *b;
    scale *= radix;
  }
  return out;
}

std::optional<Elem> MeetSemilattice::rpc(Elem a, Elem b) const {
  if (auto* t = std::get_if<Table>(&impl_)) {
    // largest x with x ∧ a <= b; exists iff the candidate set has a greatest
    std::optional<Elem> best;
    for (std::uint32_t x = 0; x < t->n; ++x) {
      if (!leq(meet(x, a), b)) continue;
      if (!best || leq(*best, x)) best = x;
    }
    if (!best) return std::nullopt;
    for (std::uint32_t x = 0; x < t->n; ++x)
      if (leq(meet(x, a), b) && !leq(x, *best)) return std::nullopt;
    return best;
  }
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  Elem out = 0;
  std::uint64_t scale = 1;
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    auto r = p.base->rpc(a % radix, b % radix);
    if (!r) return std::nullopt;
    out += scale * *r;
    a /= radix;
    b /= radix;
    scale *= radix;
  }
  return out;
}

std::string MeetSemilattice::element_name(Elem e) const {
  if (auto* t = std::get_if<Table>(&impl_)) {
    if (!t->names.empty()) return t->names[e];
    return "e" + std::to_string(e);
  }
  const auto& p = std::get<Power>(impl_);
  const std::uint64_t radix = p.base->size();
  auto point = [&](std::uint32_t i) {
    return i < p.point_names.size() ? p.point_names[i] : "p" + std::to_string(i);
  };
  if (radix == 2) {  // subset notation
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (std::uint32_t i = 0; i < p.exponent; ++i) {
      if ((e >> i) & 1) {
        if (!first) os << ',';
        os << point(i);
        first = false;
      }
    }
    os << '}';
    return os.str();
  }
  std::ostringstream os;
  os << '[';
  Elem v = e;
  for (std::uint32_t i = 0; i < p.exponent; ++i) {
    if (i) os << ',';
    os << p.base->element_name(v % radix);
    v /= radix;
  }
  os << ']';
  return os.str();
}

bool MeetSemilattice::structurally_equal(const MeetSemilattice& other) const {
  if (size() != other.size()) return false;
  const std::uint64_t n = size();
  for (Elem a = 0; a < n; ++a)
    for (Elem b = 0; b < n; ++b) {
      if (leq(a, b) != other.leq(a, b)) return false;
      if (meet(a, b) != other.meet(a, b)) return false;
    }
  return top() == other.top();
}

// --- MonotoneMap -------------------------------------------------------------

MonotoneMap MonotoneMap::identity(LatticePtr l) {
  if (l->is_power()) {
    Precompose pre;
    pre.point_map.resize(l->power_info().exponent);
    for (std::uint32_t i = 0; i < pre.point_map.size(); ++i) pre.point_map[i] = i;
    return MonotoneMap(l, l, std::move(pre));
  }
  std::vector<Elem> tab(l->size());
  for (Elem e = 0; e < tab.size(); ++e) tab[e] = e;
  return MonotoneMap(l, std::move(l), std::move(tab));
}

Elem MonotoneMap::operator()(Elem e) const {
  if (auto* tab = std::get_if<std::vector<Elem>>(&impl_)) return (*tab)[e];
  const auto& pre = std::get<Precompose>(impl_);
  const auto& pw = cod_->power_info();
  const std::uint64_t radix = pw.base->size();
  // decode the input digits once
  std::uint32_t digits[64];
  const auto& din = dom_->power_info();
  for (std::uint32_t i = 0; i < din.exponent; ++i) {
    digits[i] = (std::uint32_t)(e % radix);
    e /= radix;
  }
  Elem out = 0;
  std::uint64_t scale = 1;
  for (std::uint32_t p = 0; p < pw.exponent; ++p) {
    out += scale * digits[pre.point_map[p]];
    scale *= radix;
  }
  return out;
}

MonotoneMap MonotoneMap::compose(const MonotoneMap& g, const MonotoneMap& f) {
  // apply f then g
  auto* fp = std::get_if<Precompose>(&f.impl_);
  auto* gp = std::get_if<Precompose>(&g.impl_);
  if (fp && gp) {
    Precompose pre;
    pre.point_map.resize(gp->point_map.size());
    for (std::size_t i = 0; i < pre.point_map.size(); ++i)
      pre.point_map[i] = fp->point_map[gp->point_map[i]];
    return MonotoneMap(f.dom_, g.cod_, std::move(pre));
  }
  if (f.dom_->size() > (std::uint64_t(1) << 22))
    throw SizeExceeded("composing monotone maps over an oversized lattice");
  std::vector<Elem> tab(f.dom_->size());
  for (Elem e = 0; e < tab.size(); ++e) tab[e] = g(f(e));
  return MonotoneMap(f.dom_, g.cod_, std::move(tab));
}

bool MonotoneMap::is_monotone(const Caps& caps) const {
  if (std::holds_alternative<Precompose>(impl_)) return true;  // by form
  const std::uint64_t n = dom_->size();
  if (n > caps.lattice) throw SizeExceeded("monotonicity scan beyond cap");
  for (Elem a = 0; a < n; ++a)
    for (Elem b = 0; b < n; ++b)
      if (dom_->leq(a, b) && !cod_->leq((*this)(a), (*this)(b))) return false;
  return true;
}

bool MonotoneMap::preserves_meets_and_top(const Caps& caps) const {
  const std::uint64_t n = dom_->size();
  if (std::holds_alternative<Precompose>(impl_)) return true;  // pointwise
  if (n > caps.lattice) throw SizeExceeded("meet-preservation scan beyond cap");
  if ((*this)(dom_->top()) != cod_->top()) return false;
  for (Elem a = 0; a < n; ++a)
    for (Elem b = 0; b < n; ++b)
      if ((*this)(dom_->meet(a, b)) != cod_->meet((*this)(a), (*this)(b)))
        return false;
  return true;
}

bool MonotoneMap::same_table(const MonotoneMap& other, const Caps& caps) const {
  if (dom_->size() != other.dom_->size()) return false;
  if (dom_->size() > caps.lattice)
    throw SizeExceeded("table comparison beyond cap");
  for (Elem e = 0; e < dom_->size(); ++e)
    if ((*this)(e) != other(e)) return false;
  return true;
}

// --- validation --------------------------------------------------------------

StructureReport validate_semilattice(const MeetSemilattice& l,
                                     const Caps& caps) {
  StructureReport rep;
  const std::uint64_t n = l.size();
  if (l.is_power()) {
    // A power lattice is valid iff its base is; the pointwise structure is
    // inherited coordinatewise. Validate the base and record the reduction.
    auto base_rep = validate_semilattice(*l.power_info().base, caps);
    for (auto& c : base_rep.checks) {
      c.check = "semilattice." + c.check.substr(c.check.find('.') + 1);
      c.skipped.push_back("checked on the base lattice; power structure is pointwise");
      rep.add(std::move(c));
    }
    return rep;
  }
  if (n > caps.lattice) {
    rep.add(CheckResult::size_exceeded(
        "semilattice.axioms",
        "lattice has " + std::to_string(n) + " elements, cap " +
            std::to_string(caps.lattice)));
    return rep;
  }

  auto wit = [&](Elem a, Elem b) {
    return nlohmann::json{{"a", a},
                          {"a_name", l.element_name(a)},
                          {"b", b},
                          {"b_name", l.element_name(b)}};
  };

  bool ok = true;
  for (Elem a = 0; a < n && ok; ++a)
    if (!l.leq(a, a)) {
      rep.add(CheckResult::fails("semilattice.reflexive",
                                 {{"axiom", "reflexivity"}, {"a", a}}));
      ok = false;
    }
  if (ok) rep.add(CheckResult::holds("semilattice.reflexive"));

  ok = true;
  for (Elem a = 0; a < n && ok; ++a)
    for (Elem b = 0; b < n && ok; ++b)
      if (a != b && l.leq(a, b) && l.leq(b, a)) {
        auto w = wit(a, b);
        w["axiom"] = "antisymmetry";
        rep.add(CheckResult::fails("semilattice.antisymmetric", w));
        ok = false;
      }
  if (ok) rep.add(CheckResult::holds("semilattice.antisymmetric"));

  ok = true;
  for (Elem a = 0; a < n && ok; ++a)
    for (Elem b = 0; b < n && ok; ++b) {
      if (!l.leq(a, b)) continue;
      for (Elem c = 0; c < n && ok; ++c)
        if (l.leq(b, c) && !l.leq(a, c)) {
          rep.add(CheckResult::fails(
              "semilattice.transitive",
              {{"axiom", "transitivity"}, {"a", a}, {"b", b}, {"c", c}}));
          ok = false;
        }
    }
  if (ok) rep.add(CheckResult::holds("semilattice.transitive"));

  ok = true;
  for (Elem a = 0; a < n && ok; ++a)
    if (!l.leq(a, l.top())) {
      rep.add(CheckResult::fails("semilattice.top",
                                 {{"axiom", "top"}, {"a", a}, {"top", l.top()}}));
      ok = false;
    }
  if (ok) rep.add(CheckResult::holds("semilattice.top"));

  ok = true;
  for (Elem a = 0; a < n && ok; ++a)
    for (Elem b = 0; b < n && ok; ++b) {
      const Elem m = l.meet(a, b);
      if (!(l.leq(m, a) && l.leq(m, b))) {
        auto w = wit(a, b);
        w["meet"] = m;
        w["reason"] = "meet not a lower bound";
        rep.add(CheckResult::fails("semilattice.meet_glb", w));
        ok = false;
        break;
      }
      for (Elem x = 0; x < n; ++x)
        if (l.leq(x, a) && l.leq(x, b) && !l.leq(x, m)) {
          auto w = wit(a, b);
          w["meet"] = m;
          w["lower_bound"] = x;
          w["reason"] = "meet not greatest";
          rep.add(CheckResult::fails("semilattice.meet_glb", w));
          ok = false;
          break;
        }
      if (!ok) break;
    }
  if (ok) rep.add(CheckResult::holds("semilattice.meet_glb"));
  return rep;
}

// --- derived connectives ------------------------------------------------------

ConnectiveTable derived_connectives(const MeetSemilattice& l, const Caps& caps) {
  const std::uint64_t n = l.size();
  if (n > caps.lattice)
    throw SizeExceeded("derived_connectives: lattice beyond cap (" +
                       std::to_string(n) + ")");
  ConnectiveTable t;
  t.n = n;
  t.bottom = l.bottom();
  t.join.resize(n * n);
  t.rpc.resize(n * n);
  t.joins_total = true;
  t.rpc_total = true;
  for (Elem a = 0; a < n; ++a)
    for (Elem b = 0; b < n; ++b) {
      auto j = l.join(a, b);
      auto r = l.rpc(a, b);
      if (!j) t.joins_total = false;
      if (!r) t.rpc_total = false;
      t.join[a * n + b] = j;
      t.rpc[a * n + b] = r;
    }
  t.distributive = t.joins_total;
  if (t.joins_total) {
    for (Elem x = 0; x < n && t.distributive; ++x)
      for (Elem y = 0; y < n && t.distributive; ++y)
        for (Elem z = 0; z < n; ++z) {
          const Elem lhs = l.meet(x, *t.join[y * n + z]);
          const Elem rhs = *t.join[l.meet(x, y) * n + l.meet(x, z)];
          if (lhs != rhs) {
            t.distributive = false;
            t.distributivity_witness = {x, y, z};
            break;
          }
        }
  }
  return t;
}

// --- adjoints -------------------------------------------------------------------

std::variant<MonotoneMap, AdjointFailure> compute_adjoint(const MonotoneMap& g,
                                                          AdjointSide side,
                                                          const Caps& caps) {
  const auto& q = g.dom();  // g : Q -> P
  const auto& p = g.cod();
  const std::uint64_t nq = q->size(), np = p->size();
  if (np > caps.lattice || nq > caps.lattice || np * nq > caps.pair_scan)
    throw SizeExceeded("adjoint scan beyond cap: |P|=" + std::to_string(np) +
                       " |Q|=" + std::to_string(nq));

  std::vector<Elem> table(np);
  if (side == AdjointSide::Left) {
    // f(x) = meet { q : x <= g(q) }
    for (Elem x = 0; x < np; ++x) {
      bool seen = false;
      Elem acc = 0;
      for (Elem qi = 0; qi < nq; ++qi) {
        if (!p->leq(x, g(qi))) continue;
        acc = seen ? q->meet(acc, qi) : qi;
        seen = true;
      }
      if (!seen)
        return AdjointFailure{std::pair<Elem, Elem>{x, 0}, false,
                              "no q with p <= g(q); candidate undefined"};
      table[x] = acc;
    }
  } else {
    // u(x) = join { q : g(q) <= x }
    for (Elem x = 0; x < np; ++x) {
      bool seen = false;
      std::optional<Elem> acc;
      for (Elem qi = 0; qi < nq; ++qi) {
        if (!p->leq(g(qi), x)) continue;
        if (!seen) {
          acc = qi;
          seen = true;
        } else {
          acc = q->join(*acc, qi);
          if (!acc)
            return AdjointFailure{std::pair<Elem, Elem>{x, qi}, true,
                                  "right-adjoint candidate needs a join that "
                                  "does not exist"};
        }
      }
      if (!seen)
        return AdjointFailure{std::pair<Elem, Elem>{x, 0}, false,
                              "no q with g(q) <= p; candidate undefined"};
      table[x] = *acc;
    }
  }

  MonotoneMap cand(p, q, std::move(table));
  // Exhaustive verification keeps the candidate honest even when the formula's
  // preconditions fail.
  for (Elem x = 0; x < np; ++x)
    for (Elem qi = 0; qi < nq; ++qi) {
      const bool lhs = side == AdjointSide::Left ? q->leq(cand(x), qi)
                                                 : q->leq(qi, cand(x));
      const bool rhs = side == AdjointSide::Left ? p->leq(x, g(qi))
                                                 : p->leq(g(qi), x);
      if (lhs != rhs)
        return AdjointFailure{std::pair<Elem, Elem>{x, qi}, false,
                              "adjunction equivalence fails"};
    }
  if (!cand.is_monotone(caps))
    return AdjointFailure{std::nullopt, false, "candidate not monotone"};
  return cand;
}

}  // namespace doctrina

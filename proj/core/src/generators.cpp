#include "doctrina/generators.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace doctrina {

namespace {

// Hom-sets are enumerated in full only out of objects whose every hom-set
// stays under this bound; larger objects get structural morphisms (identity,
// projections) plus composition/mediator closure.
constexpr std::uint64_t kFullHomBudget = 65536;

std::uint64_t upow(std::uint64_t b, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (b != 0 && r > UINT64_MAX / b) return UINT64_MAX;
    r *= b;
  }
  return r;
}

// Full-on-a-zone subcategory of finite sets on the given sizes (one object
// per size, chosen lexicographic product structure).
std::shared_ptr<Category> finset_base(const std::vector<std::int32_t>& sizes,
                                      const Caps& caps) {
  auto cat = std::make_shared<Category>();
  Category& c = *cat;
  std::map<std::int32_t, Obj> by_size;
  for (auto s : sizes) by_size[s] = c.add_object(std::to_string(s), s);

  auto in_zone = [&](std::int32_t sa) {
    for (auto sb : sizes)
      if (upow(sb, sa) > kFullHomBudget) return false;
    return true;
  };
  std::uint64_t total = 0;
  for (auto sa : sizes) {
    if (!in_zone(sa)) continue;
    for (auto sb : sizes) total += upow(sb, sa);
  }
  if (total > caps.morphisms)
    throw SizeExceeded("finite-set base needs " + std::to_string(total) +
                       "+ morphisms; cap " + std::to_string(caps.morphisms));

  for (auto [sa, a] : by_size) {
    if (!in_zone(sa)) continue;
    for (auto [sb, b] : by_size) {
      if (sb == 0 && sa > 0) continue;
      std::vector<std::int32_t> t(sa, 0);
      while (true) {
        c.add_morphism(a, b, t);
        std::int32_t i = sa - 1;
        while (i >= 0 && t[i] == sb - 1) t[i--] = 0;
        if (i < 0) break;
        ++t[i];
      }
    }
  }
  for (auto [s, o] : by_size) {
    std::vector<std::int32_t> idt(s);
    std::iota(idt.begin(), idt.end(), 0);
    c.set_identity(o, c.add_morphism(o, o, std::move(idt)));
  }
  for (auto [sa, a] : by_size)
    for (auto [sb, b] : by_size) {
      auto it = by_size.find(sa * sb);
      if (it == by_size.end()) continue;
      std::vector<std::int32_t> p1t(sa * sb), p2t(sa * sb);
      for (std::int32_t x = 0; x < sa * sb; ++x) {
        p1t[x] = sb ? x / sb : 0;
        p2t[x] = sb ? x % sb : 0;
      }
      Product p;
      p.prod = it->second;
      p.p1 = c.add_morphism(p.prod, a, std::move(p1t));
      p.p2 = c.add_morphism(p.prod, b, std::move(p2t));
      c.declare_product(a, b, p);
    }
  if (by_size.count(1)) c.set_terminal(by_size.at(1));
  c.close_composition(caps);
  c.close_products(caps);
  return cat;
}

// Projective tower g^0..g^m: morphisms are coordinate tuples only.
std::shared_ptr<Category> tower_base(std::int32_t g, std::int32_t m,
                                     const Caps& caps) {
  auto cat = std::make_shared<Category>();
  Category& c = *cat;
  std::vector<Obj> objs(m + 1);
  std::vector<std::int32_t> size(m + 1);
  for (std::int32_t k = 0; k <= m; ++k) {
    size[k] = (std::int32_t)upow(g, k);
    objs[k] = c.add_object(std::to_string(size[k]), size[k]);
  }
  auto digit = [&](std::int32_t x, std::int32_t i) {
    for (std::int32_t j = 0; j < i; ++j) x /= g;
    return x % g;
  };
  for (std::int32_t a = 0; a <= m; ++a)
    for (std::int32_t b = 0; b <= m; ++b) {
      if (b > 0 && a == 0) continue;  // no coordinates to select
      std::vector<std::int32_t> tup(b, 0);
      while (true) {
        std::vector<std::int32_t> pt(size[a]);
        for (std::int32_t x = 0; x < size[a]; ++x) {
          std::int32_t v = 0, scale = 1;
          for (std::int32_t j = 0; j < b; ++j) {
            v += digit(x, tup[j]) * scale;
            scale *= g;
          }
          pt[x] = v;
        }
        c.add_morphism(objs[a], objs[b], std::move(pt));
        std::int32_t i = b - 1;
        while (i >= 0 && tup[i] == a - 1) tup[i--] = 0;
        if (i < 0) break;
        ++tup[i];
      }
    }
  for (std::int32_t k = 0; k <= m; ++k) {
    std::vector<std::int32_t> idt(size[k]);
    std::iota(idt.begin(), idt.end(), 0);
    c.set_identity(objs[k], c.add_morphism(objs[k], objs[k], std::move(idt)));
  }
  for (std::int32_t a = 0; a <= m; ++a)
    for (std::int32_t b = 0; a + b <= m; ++b) {
      std::vector<std::int32_t> p1t(size[a + b]), p2t(size[a + b]);
      for (std::int32_t x = 0; x < size[a + b]; ++x) {
        p1t[x] = x % size[a];
        p2t[x] = x / size[a];
      }
      Product p;
      p.prod = objs[a + b];
      p.p1 = c.add_morphism(p.prod, objs[a], std::move(p1t));
      p.p2 = c.add_morphism(p.prod, objs[b], std::move(p2t));
      c.declare_product(objs[a], objs[b], p);
    }
  c.set_terminal(objs[0]);
  c.close_composition(caps);
  c.close_products(caps);
  return cat;
}

// Certificates for value-lattice doctrines: diagonal deltas, evaluation
// membership, name classifiers, top-locus comprehensions, ε₁.
void attach_value_certs(const std::shared_ptr<Category>& cat,
                        const std::shared_ptr<SetFamilyDoctrine>& dd) {
  Category& c = *cat;
  const std::uint64_t radix = dd->values()->size();
  const std::uint32_t vtop = (std::uint32_t)dd->values()->top();
  auto vbot = dd->values()->bottom();

  for (Obj a = 0; a < c.num_objects(); ++a) {
    auto p = c.product(a, a);
    if (!p || !vbot) continue;
    try {
      dd->fiber(p->prod);
    } catch (const SizeExceeded&) {
      continue;
    }
    const auto& p1t = c.point_map(p->p1);
    const auto& p2t = c.point_map(p->p2);
    Elem d = 0;
    std::uint64_t scale = 1;
    for (std::int32_t x = 0; x < c.points(p->prod); ++x) {
      d += scale * (p1t[x] == p2t[x] ? vtop : (std::uint32_t)*vbot);
      scale *= radix;
    }
    dd->certs().delta[a] = d;
  }

  std::map<std::int32_t, Obj> by_points;
  for (Obj o = 0; o < c.num_objects(); ++o) by_points[c.points(o)] = o;
  for (Obj a = 0; a < c.num_objects(); ++a) {
    const std::uint64_t want = upow(radix, c.points(a));
    if (want > (std::uint64_t)INT32_MAX) continue;
    auto it = by_points.find((std::int32_t)want);
    if (it == by_points.end()) continue;
    const Obj pi = it->second;
    auto prod = c.product(a, pi);
    if (!prod) continue;
    try {
      dd->fiber(prod->prod);
    } catch (const SizeExceeded&) {
      continue;
    }
    const auto& p1t = c.point_map(prod->p1);
    const auto& p2t = c.point_map(prod->p2);
    Elem mem = 0;
    std::uint64_t scale = 1;
    for (std::int32_t z = 0; z < c.points(prod->prod); ++z) {
      std::uint64_t name = p2t[z];
      for (std::int32_t j = 0; j < p1t[z]; ++j) name /= radix;
      mem += scale * (name % radix);
      scale *= radix;
    }
    dd->certs().power[a] = {pi, mem};
  }
  if (auto t = c.terminal()) {
    auto pc = dd->certs().power.find(*t);
    if (pc != dd->certs().power.end()) {
      dd->certs().pi1 = pc->second.power_obj;
      const Obj pi = pc->second.power_obj;
      Elem eps = 0;
      std::uint64_t scale = 1;
      for (std::int32_t u = 0; u < c.points(pi); ++u) {
        eps += scale * (std::uint64_t(u) % radix);
        scale *= radix;
      }
      dd->certs().eps1 = eps;
    }
  }

  {
    std::weak_ptr<SetFamilyDoctrine> wd = dd;
    auto catp = cat;
    dd->certs().classify = [wd, catp, radix](Obj A, Obj B,
                                             Elem phi) -> std::optional<Mor> {
      auto d = wd.lock();
      if (!d) return std::nullopt;
      const Category& cc = *catp;
      auto pw = d->certs().power.find(A);
      if (pw == d->certs().power.end()) return std::nullopt;
      auto pAB = cc.product(A, B);
      if (!pAB) return std::nullopt;
      LatticePtr f;
      try {
        f = d->fiber(pAB->prod);
      } catch (const SizeExceeded&) {
        return std::nullopt;
      }
      // slice lookup: product point with p1 = x, p2 = b
      const auto& p1t = cc.point_map(pAB->p1);
      const auto& p2t = cc.point_map(pAB->p2);
      const std::int32_t nb = std::max(cc.points(B), 1);
      std::vector<std::int32_t> code(std::size_t(std::max(cc.points(A), 1)) * nb,
                                     -1);
      for (std::int32_t z = 0; z < cc.points(pAB->prod); ++z)
        code[std::size_t(p1t[z]) * nb + p2t[z]] = z;
      std::vector<std::int32_t> table(cc.points(B));
      for (std::int32_t b = 0; b < cc.points(B); ++b) {
        std::uint64_t name = 0, scale = 1;
        for (std::int32_t x = 0; x < cc.points(A); ++x) {
          name += scale * f->digit(phi, code[std::size_t(x) * nb + b]);
          scale *= radix;
        }
        if (name > (std::uint64_t)INT32_MAX) return std::nullopt;
        table[b] = (std::int32_t)name;
      }
      return cc.find_by_table(B, pw->second.power_obj, table);
    };
  }

  {
    std::weak_ptr<SetFamilyDoctrine> wd = dd;
    auto catp = cat;
    dd->certs().comprehend = [wd, catp,
                              vtop](Obj A, Elem phi) -> std::optional<Mor> {
      auto d = wd.lock();
      if (!d) return std::nullopt;
      const Category& cc = *catp;
      LatticePtr f;
      try {
        f = d->fiber(A);
      } catch (const SizeExceeded&) {
        return std::nullopt;
      }
      std::vector<std::int32_t> locus;
      for (std::int32_t x = 0; x < cc.points(A); ++x)
        if (f->digit(phi, x) == vtop) locus.push_back(x);
      for (Obj X = 0; X < cc.num_objects(); ++X)
        if (cc.points(X) == (std::int32_t)locus.size())
          if (auto m = cc.find_by_table(X, A, locus)) return m;
      return std::nullopt;
    };
  }
}

Generated finish(std::shared_ptr<Category> cat, std::shared_ptr<Doctrine> doc,
                 const Caps& caps) {
  Generated g;
  g.base = cat;
  g.doctrine = std::move(doc);
  g.validation.merge(validate_category(*cat, caps));
  g.validation.merge(validate_products(*cat, caps));
  g.validation.merge(validate_doctrine(*g.doctrine, caps));
  if (g.validation.any_fails())
    throw std::logic_error("generator emitted unchecked structure:\n" +
                           g.validation.to_text());
  return g;
}

Generated gen_value_family(LatticePtr values,
                           const std::vector<std::int32_t>& sizes,
                           std::int32_t cap, const std::string& homs,
                           bool subsets, const Caps& caps) {
  std::shared_ptr<Category> cat;
  if (homs == "projective") {
    std::int32_t g = 1;
    for (auto s : sizes) g = std::max(g, s);
    std::int32_t m = 0;
    while (upow(g, m + 1) <= (std::uint64_t)cap) ++m;
    cat = tower_base(g, m, caps);
  } else if (homs == "full") {
    cat = finset_base(close_sizes(sizes, cap, subsets), caps);
  } else {
    throw std::invalid_argument("unknown hom flavour: " + homs);
  }
  auto dd =
      std::make_shared<SetFamilyDoctrine>(cat, std::move(values), caps.lattice);
  attach_value_certs(cat, dd);
  return finish(cat, dd, caps);
}

}  // namespace

std::vector<std::int32_t> close_sizes(std::vector<std::int32_t> sizes,
                                      std::int32_t cap, bool subsets) {
  std::set<std::int32_t> s(sizes.begin(), sizes.end());
  s.insert(1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::int32_t> cur(s.begin(), s.end());
    for (auto a : cur)
      for (auto b : cur) {
        const std::int64_t p = std::int64_t(a) * b;
        if (p <= cap && !s.count((std::int32_t)p)) {
          s.insert((std::int32_t)p);
          changed = true;
        }
      }
    if (subsets)
      for (auto v : std::vector<std::int32_t>(s.begin(), s.end()))
        for (std::int32_t k = 0; k < v; ++k)
          if (!s.count(k)) {
            s.insert(k);
            changed = true;
          }
  }
  return {s.begin(), s.end()};
}

LatticePtr chain_lattice(std::uint32_t n) {
  std::vector<std::string> names;
  if (n == 2) names = {"0", "1"};
  if (n == 3) names = {"0", "1/2", "1"};
  return std::make_shared<MeetSemilattice>(MeetSemilattice::chain(n, names));
}

SpaceSpec sierpinski() {
  SpaceSpec s;
  s.name = "S";
  s.points = 2;
  s.order = {{0, 1}};
  return s;
}

Generated gen_powerset(const std::vector<std::int32_t>& sizes,
                       std::int32_t cap, const std::string& homs, bool subsets,
                       const Caps& caps) {
  return gen_value_family(chain_lattice(2), sizes, cap, homs, subsets, caps);
}

Generated gen_localic(LatticePtr H, const std::vector<std::int32_t>& sizes,
                      std::int32_t cap, const std::string& homs, bool subsets,
                      const Caps& caps) {
  auto v = validate_semilattice(*H, caps);
  if (v.any_fails())
    throw std::invalid_argument("localic value lattice fails validation");
  auto conn = derived_connectives(*H, caps);
  if (!conn.rpc_total || !conn.joins_total)
    throw std::invalid_argument(
        "localic value lattice must be a Heyting algebra");
  return gen_value_family(std::move(H), sizes, cap, homs, subsets, caps);
}

Generated gen_topology(const std::vector<SpaceSpec>& spaces, std::int32_t cap,
                       const std::string& homs, const Caps& caps) {
  struct Space {
    std::string name;
    std::int32_t n = 0;
    std::vector<std::uint8_t> leq;
  };
  auto close_order = [](Space& s) {
    for (std::int32_t i = 0; i < s.n; ++i) s.leq[i * s.n + i] = 1;
    bool ch = true;
    while (ch) {
      ch = false;
      for (std::int32_t i = 0; i < s.n; ++i)
        for (std::int32_t j = 0; j < s.n; ++j)
          if (s.leq[i * s.n + j])
            for (std::int32_t k = 0; k < s.n; ++k)
              if (s.leq[j * s.n + k] && !s.leq[i * s.n + k]) {
                s.leq[i * s.n + k] = 1;
                ch = true;
              }
    }
  };
  auto product_space = [](const Space& a, const Space& b) {
    Space p;
    p.name = a.n == 1 ? b.name : (b.n == 1 ? a.name : a.name + "x" + b.name);
    p.n = a.n * b.n;
    p.leq.assign(std::size_t(p.n) * p.n, 0);
    for (std::int32_t x = 0; x < p.n; ++x)
      for (std::int32_t y = 0; y < p.n; ++y)
        p.leq[x * p.n + y] = a.leq[(x % a.n) * a.n + (y % a.n)] &&
                             b.leq[(x / a.n) * b.n + (y / a.n)];
    return p;
  };

  std::vector<Space> all;
  all.push_back({"1", 1, {1}});
  for (const auto& sp : spaces) {
    Space s;
    s.name = sp.name;
    s.n = sp.points;
    s.leq.assign(std::size_t(s.n) * s.n, 0);
    for (auto [x, y] : sp.order) s.leq[x * s.n + y] = 1;
    close_order(s);
    all.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (all.size() > 64) throw SizeExceeded("too many spaces in closure");
      if ((std::int64_t)all[i].n * all[j].n > cap) continue;
      Space p = product_space(all[i], all[j]);
      bool known = false;
      for (const auto& s : all)
        if (s.n == p.n && s.leq == p.leq) known = true;
      if (!known) all.push_back(std::move(p));
    }

  auto cat = std::make_shared<Category>();
  for (const auto& s : all) cat->add_object(s.name, s.n);

  const bool projective = homs == "projective";
  auto monotone = [&](const Space& a, const Space& b,
                      const std::vector<std::int32_t>& t) {
    for (std::int32_t x = 0; x < a.n; ++x)
      for (std::int32_t y = 0; y < a.n; ++y)
        if (a.leq[x * a.n + y] && !b.leq[t[x] * b.n + t[y]]) return false;
    return true;
  };
  if (!projective) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = 0; j < all.size(); ++j) {
        total += upow(all[j].n, all[i].n);
        if (total > caps.morphisms)
          throw SizeExceeded(
              "continuous-map enumeration beyond the morphism cap");
      }
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = 0; j < all.size(); ++j) {
        const auto& a = all[i];
        const auto& b = all[j];
        std::vector<std::int32_t> t(a.n, 0);
        while (true) {
          if (monotone(a, b, t)) cat->add_morphism((Obj)i, (Obj)j, t);
          std::int32_t k = a.n - 1;
          while (k >= 0 && t[k] == b.n - 1) t[k--] = 0;
          if (k < 0) break;
          ++t[k];
        }
      }
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::vector<std::int32_t> idt(all[i].n);
    std::iota(idt.begin(), idt.end(), 0);
    cat->set_identity((Obj)i,
                      cat->add_morphism((Obj)i, (Obj)i, std::move(idt)));
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j) {
      const auto& a = all[i];
      const auto& b = all[j];
      if ((std::int64_t)a.n * b.n > cap) continue;
      Space p = product_space(a, b);
      std::int32_t target = -1;
      for (std::size_t k = 0; k < all.size(); ++k)
        if (all[k].n == p.n && all[k].leq == p.leq) target = (std::int32_t)k;
      if (target < 0) continue;
      std::vector<std::int32_t> p1t(p.n), p2t(p.n);
      for (std::int32_t x = 0; x < p.n; ++x) {
        p1t[x] = x % a.n;
        p2t[x] = x / a.n;
      }
      Product pr;
      pr.prod = target;
      pr.p1 = cat->add_morphism(target, (Obj)i, std::move(p1t));
      pr.p2 = cat->add_morphism(target, (Obj)j, std::move(p2t));
      cat->declare_product((Obj)i, (Obj)j, pr);
    }
  cat->set_terminal(0);
  cat->close_composition(caps);
  cat->close_products(caps);

  std::vector<std::vector<std::uint64_t>> opens(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& s = all[i];
    if (s.n > 20) throw SizeExceeded("open-set enumeration beyond 20 points");
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << s.n); ++mask) {
      bool up = true;
      for (std::int32_t x = 0; x < s.n && up; ++x)
        for (std::int32_t y = 0; y < s.n; ++y)
          if (((mask >> x) & 1) && s.leq[x * s.n + y] && !((mask >> y) & 1)) {
            up = false;
            break;
          }
      if (up) opens[i].push_back(mask);
    }
  }
  auto dd = std::make_shared<OpensDoctrine>(cat, std::move(opens));
  return finish(cat, dd, caps);
}

Generated gen_trivial() {
  auto cat = std::make_shared<Category>();
  const Obj t = cat->add_object("T", 1);
  const Mor id = cat->add_morphism(t, t, {0}, "id");
  cat->set_identity(t, id);
  cat->seal();
  cat->set_compose(id, id, id);
  cat->declare_product(t, t, {t, id, id});
  cat->set_terminal(t);
  auto one =
      std::make_shared<MeetSemilattice>(MeetSemilattice::chain(1, {"T"}));
  auto dd = std::make_shared<TableDoctrine>(
      cat, std::vector<LatticePtr>{one}, std::vector<std::vector<Elem>>{{0}});
  dd->certs().delta[t] = 0;
  dd->certs().power[t] = {t, 0};
  dd->certs().pi1 = t;
  dd->certs().eps1 = 0;
  auto catp = cat;
  dd->certs().classify = [catp](Obj, Obj, Elem) -> std::optional<Mor> {
    return catp->identity(0);
  };
  dd->certs().comprehend = [catp](Obj, Elem) -> std::optional<Mor> {
    return catp->identity(0);
  };
  Caps caps;
  return finish(cat, dd, caps);
}

Generated generate(const GeneratorSpec& spec, const Caps& caps) {
  if (spec.family == "powerset")
    return gen_powerset(spec.sizes, spec.cap, spec.homs, spec.subset_closure,
                        caps);
  if (spec.family == "localic") {
    if (spec.chain < 2)
      throw std::invalid_argument("localic generator needs chain >= 2");
    return gen_localic(chain_lattice(spec.chain), spec.sizes, spec.cap,
                       spec.homs, spec.subset_closure, caps);
  }
  if (spec.family == "topology") {
    auto spaces = spec.spaces;
    if (spaces.empty()) spaces = {sierpinski()};
    return gen_topology(spaces, spec.cap, spec.homs, caps);
  }
  if (spec.family == "trivial") return gen_trivial();
  throw std::invalid_argument("unknown generator family: " + spec.family);
}

}  // namespace doctrina

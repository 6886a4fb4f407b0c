#include "doctrina/category.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace doctrina {

namespace {
constexpr std::int32_t kNone = -1;

std::string table_key(Obj d, Obj c, const std::vector<std::int32_t>& pt) {
  std::string k;
  k.reserve(8 + pt.size() * 4);
  auto push = [&k](std::int32_t v) {
    k.append(reinterpret_cast<const char*>(&v), sizeof v);
  };
  push(d);
  push(c);
  for (auto v : pt) push(v);
  return k;
}
}  // namespace

Obj Category::add_object(std::string name, std::int32_t points) {
  obj_names_.push_back(std::move(name));
  obj_points_.push_back(points);
  id_.push_back(kNone);
  const auto n = obj_names_.size();
  hom_.resize(n);
  for (auto& row : hom_) row.resize(n);
  return (Obj)(n - 1);
}

Mor Category::add_morphism(Obj dom, Obj cod, std::vector<std::int32_t> pt,
                           std::string name) {
  if (!pt.empty() || points(dom) == 0) {
    auto it = table_index_.find(table_key(dom, cod, pt));
    if (it != table_index_.end()) return it->second;
  }
  MorData m{dom, cod, std::move(name), std::move(pt)};
  mors_.push_back(std::move(m));
  const Mor id = (Mor)(mors_.size() - 1);
  if (!mors_[id].pt.empty() || points(dom) == 0)
    table_index_.emplace(table_key(dom, cod, mors_[id].pt), id);
  hom_[dom][cod].push_back(id);
  sealed_ = false;
  return id;
}

void Category::index_hom(Mor) {}

bool Category::function_backed() const {
  for (auto p : obj_points_)
    if (p < 0) return false;
  for (const auto& m : mors_)
    if (m.pt.empty() && points(m.dom) != 0) return false;
  return true;
}

std::string Category::morphism_name(Mor m) const {
  const auto& md = mors_[m];
  if (!md.name.empty()) return md.name;
  std::ostringstream os;
  os << "m" << m << ":" << obj_names_[md.dom] << "->" << obj_names_[md.cod];
  if (!md.pt.empty() && md.pt.size() <= 16) {
    os << '[';
    for (std::size_t i = 0; i < md.pt.size(); ++i) {
      if (i) os << ',';
      os << md.pt[i];
    }
    os << ']';
  }
  return os.str();
}

void Category::seal() {
  const std::size_t m = mors_.size();
  if (m > 20000)
    throw SizeExceeded("category too large for a dense composition table (" +
                       std::to_string(m) + " morphisms)");
  comp_.assign(m * m, kNone);
  if (function_backed()) {
    std::vector<std::int32_t> pt;
    for (std::size_t g = 0; g < m; ++g)
      for (std::size_t f = 0; f < m; ++f) {
        if (mors_[f].cod != mors_[g].dom) continue;
        pt.resize(mors_[f].pt.size());
        for (std::size_t x = 0; x < pt.size(); ++x)
          pt[x] = mors_[g].pt[mors_[f].pt[x]];
        auto it = table_index_.find(table_key(mors_[f].dom, mors_[g].cod, pt));
        if (it != table_index_.end()) comp_[g * m + f] = it->second;
      }
  }
  sealed_ = true;
}

void Category::set_compose(Mor g, Mor f, Mor gf) {
  const std::size_t m = mors_.size();
  if (comp_.size() != m * m)
    throw std::logic_error("set_compose before seal()");
  comp_[std::size_t(g) * m + f] = gf;
}

Mor Category::compose(Mor g, Mor f) const {
  if (mors_[f].cod != mors_[g].dom) return kNone;
  const std::size_t m = mors_.size();
  if (comp_.size() != m * m)
    throw std::logic_error("compose() before seal()");
  return comp_[std::size_t(g) * m + f];
}

const std::vector<Mor>& Category::hom(Obj a, Obj b) const {
  return hom_[a][b];
}

std::optional<Product> Category::product(Obj a, Obj b) const {
  auto it = prods_.find({a, b});
  if (it == prods_.end()) return std::nullopt;
  return it->second;
}

Product Category::require_product(Obj a, Obj b) const {
  auto p = product(a, b);
  if (!p)
    throw SizeExceeded("no declared product for object pair (" +
                       obj_names_[a] + ", " + obj_names_[b] + ")");
  return *p;
}

void Category::close_composition(const Caps& caps) {
  if (!function_backed())
    throw std::logic_error("close_composition requires point tables");
  bool changed = true;
  while (changed) {
    changed = false;
    const std::size_t m = mors_.size();
    for (std::size_t g = 0; g < m; ++g)
      for (std::size_t f = 0; f < m; ++f) {
        if (mors_[f].cod != mors_[g].dom) continue;
        std::vector<std::int32_t> pt(mors_[f].pt.size());
        for (std::size_t x = 0; x < pt.size(); ++x)
          pt[x] = mors_[g].pt[mors_[f].pt[x]];
        if (!table_index_.count(table_key(mors_[f].dom, mors_[g].cod, pt))) {
          if (mors_.size() + 1 > caps.morphisms)
            throw SizeExceeded("category closure exceeds morphism cap (" +
                               std::to_string(caps.morphisms) + ")");
          add_morphism(mors_[f].dom, mors_[g].cod, std::move(pt));
          changed = true;
        }
      }
  }
  seal();
}

void Category::close_products(const Caps& caps) {
  if (!function_backed())
    throw std::logic_error("close_products requires point tables");
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [pair, prod] : prods_) {
      const auto& p1t = mors_[prod.p1].pt;
      const auto& p2t = mors_[prod.p2].pt;
      const std::int32_t nb = points(pair.second);
      std::vector<std::int32_t> pair_index(
          std::size_t(std::max(points(pair.first), 1)) * std::max(nb, 1),
          kNone);
      for (std::int32_t x = 0; x < points(prod.prod); ++x)
        pair_index[std::size_t(p1t[x]) * nb + p2t[x]] = x;
      for (Obj x = 0; x < num_objects(); ++x) {
        const auto fs = hom_[x][pair.first];
        const auto gs = hom_[x][pair.second];
        for (Mor f : fs)
          for (Mor g : gs) {
            std::vector<std::int32_t> pt(points(x));
            for (std::int32_t e = 0; e < points(x); ++e)
              pt[e] = pair_index[std::size_t(mors_[f].pt[e]) * nb +
                                 mors_[g].pt[e]];
            if (!table_index_.count(table_key(x, prod.prod, pt))) {
              if (mors_.size() + 1 > caps.morphisms)
                throw SizeExceeded("product closure exceeds morphism cap (" +
                                   std::to_string(caps.morphisms) + ")");
              add_morphism(x, prod.prod, std::move(pt));
              grew = true;
            }
          }
      }
    }
    if (grew) close_composition(caps);
  }
  if (!sealed_) close_composition(caps);
}

std::variant<Mor, MediatorError> Category::mediator(Mor f, Mor g) const {
  if (mors_[f].dom != mors_[g].dom)
    throw std::logic_error("mediator: cone legs have different domains");
  auto p = product(mors_[f].cod, mors_[g].cod);
  if (!p)
    throw SizeExceeded("mediator: no declared product for (" +
                       obj_names_[mors_[f].cod] + ", " +
                       obj_names_[mors_[g].cod] + ")");
  MediatorError err;
  Mor found = kNone;
  for (Mor m : hom_[mors_[f].dom][p->prod]) {
    if (compose(p->p1, m) == f && compose(p->p2, m) == g) {
      if (found != kNone) {
        err.non_unique = true;
        err.first = found;
        err.second = m;
        return err;
      }
      found = m;
    }
  }
  if (found == kNone) {
    err.none = true;
    return err;
  }
  return found;
}

Mor Category::require_mediator(Mor f, Mor g) const {
  auto r = mediator(f, g);
  if (auto* m = std::get_if<Mor>(&r)) return *m;
  const auto& e = std::get<MediatorError>(r);
  throw std::runtime_error(e.none ? "no mediator for cone (" +
                                        morphism_name(f) + ", " +
                                        morphism_name(g) + ")"
                                  : "non-unique mediator for cone (" +
                                        morphism_name(f) + ", " +
                                        morphism_name(g) + ")");
}

Mor Category::diagonal(Obj a) const { return require_mediator(id_[a], id_[a]); }

Mor Category::twist(Obj a, Obj b) const {
  auto p = require_product(a, b);
  return require_mediator(p.p2, p.p1);
}

Mor Category::pair_map(Mor f, Mor g) const {
  auto p = require_product(mors_[f].dom, mors_[g].dom);
  return require_mediator(compose(f, p.p1), compose(g, p.p2));
}

std::optional<Mor> Category::find_by_table(
    Obj dom, Obj cod, const std::vector<std::int32_t>& pt) const {
  auto it = table_index_.find(table_key(dom, cod, pt));
  if (it == table_index_.end()) return std::nullopt;
  return it->second;
}

// --- validation ---------------------------------------------------------------

StructureReport validate_category(const Category& c, const Caps& caps) {
  StructureReport rep;
  const std::int32_t M = c.num_morphisms();

  {
    bool ok = true;
    nlohmann::json w;
    for (Obj a = 0; a < c.num_objects() && ok; ++a) {
      const Mor i = c.identity(a);
      if (i < 0 || c.dom(i) != a || c.cod(i) != a) {
        ok = false;
        w = {{"axiom", "identity"}, {"object", a}};
      }
    }
    for (Mor f = 0; f < M && ok; ++f) {
      if (c.compose(f, c.identity(c.dom(f))) != f ||
          c.compose(c.identity(c.cod(f)), f) != f) {
        ok = false;
        w = {{"axiom", "identity-neutrality"},
             {"morphism", f},
             {"name", c.morphism_name(f)}};
      }
    }
    rep.add(ok ? CheckResult::holds("category.identity")
               : CheckResult::fails("category.identity", w));
  }

  {
    bool ok = true;
    nlohmann::json w;
    for (Mor g = 0; g < M && ok; ++g)
      for (Mor f = 0; f < M && ok; ++f) {
        const Mor gf = c.compose(g, f);
        if (c.cod(f) != c.dom(g)) continue;
        if (gf == -1) {
          ok = false;
          w = {{"axiom", "totality"}, {"f", f}, {"g", g}};
        } else if (c.dom(gf) != c.dom(f) || c.cod(gf) != c.cod(g)) {
          ok = false;
          w = {{"axiom", "coherence"},
               {"f", f},
               {"g", g},
               {"gf", gf},
               {"reason", "composite has wrong dom/cod"}};
        }
      }
    rep.add(ok ? CheckResult::holds("category.coherence")
               : CheckResult::fails("category.coherence", w));
    if (!ok) return rep;
  }

  // Function-backed case: the stored table must agree with pointwise
  // composition of element maps; associativity is then inherited from Set.
  bool semantic_ok = false;
  if (c.function_backed()) {
    bool ok = true;
    bool budget_hit = false;
    std::uint64_t work = 0;
    for (Mor f = 0; f < M && ok && !budget_hit; ++f) {
      const Obj b = c.cod(f);
      for (Obj cc = 0; cc < c.num_objects() && ok && !budget_hit; ++cc)
        for (Mor g : c.hom(b, cc)) {
          const Mor gf = c.compose(g, f);
          const auto& ft = c.point_map(f);
          const auto& gt = c.point_map(g);
          const auto& gft = c.point_map(gf);
          work += ft.size() + 1;
          if (work > caps.assoc_triples) {
            budget_hit = true;
            break;
          }
          for (std::size_t x = 0; x < ft.size(); ++x)
            if (gft[x] != gt[ft[x]]) {
              ok = false;
              rep.add(CheckResult::fails("category.semantic_composition",
                                         {{"axiom", "semantic-composition"},
                                          {"f", f},
                                          {"g", g},
                                          {"point", x}}));
              break;
            }
          if (!ok) break;
        }
    }
    if (budget_hit) {
      rep.add(CheckResult::size_exceeded("category.semantic_composition",
                                         "pointwise scan beyond budget"));
    } else if (ok) {
      rep.add(CheckResult::holds("category.semantic_composition"));
      semantic_ok = true;
    }
  }

  {
    bool ok = true;
    bool budget_hit = false;
    nlohmann::json w;
    std::uint64_t triples = 0;
    const Obj N = c.num_objects();
    for (Mor f = 0; f < M && ok && !budget_hit; ++f) {
      const Obj b = c.cod(f);
      for (Obj cc = 0; cc < N && ok && !budget_hit; ++cc)
        for (Mor g : c.hom(b, cc)) {
          const Mor gf = c.compose(g, f);
          for (Obj dd = 0; dd < N && ok && !budget_hit; ++dd)
            for (Mor h : c.hom(cc, dd)) {
              if (++triples > caps.assoc_triples) {
                budget_hit = true;
                break;
              }
              if (c.compose(h, gf) != c.compose(c.compose(h, g), f)) {
                ok = false;
                w = {{"axiom", "associativity"}, {"f", f}, {"g", g}, {"h", h}};
                break;
              }
            }
          if (!ok || budget_hit) break;
        }
    }
    if (!ok) {
      rep.add(CheckResult::fails("category.associativity", w));
    } else if (budget_hit && !semantic_ok) {
      rep.add(CheckResult::size_exceeded("category.associativity",
                                         "triple scan beyond budget"));
    } else if (budget_hit) {
      auto r = CheckResult::holds("category.associativity");
      r.skipped.push_back(
          "triple scan truncated at budget; remainder follows from verified "
          "pointwise composition");
      rep.add(std::move(r));
    } else {
      rep.add(CheckResult::holds("category.associativity"));
    }
  }
  return rep;
}

StructureReport validate_products(const Category& c, const Caps& caps) {
  StructureReport rep;
  bool ok = true;
  nlohmann::json w;
  for (Obj a = 0; a < c.num_objects() && ok; ++a) {
    for (Obj b = 0; b < c.num_objects() && ok; ++b) {
      auto p = c.product(a, b);
      if (!p) continue;
      if (c.dom(p->p1) != p->prod || c.cod(p->p1) != a ||
          c.dom(p->p2) != p->prod || c.cod(p->p2) != b) {
        ok = false;
        w = {{"pair", {a, b}}, {"reason", "projection dom/cod mismatch"}};
        break;
      }
      for (Obj x = 0; x < c.num_objects() && ok; ++x) {
        std::map<std::pair<Mor, Mor>, std::vector<Mor>> by_cone;
        for (Mor m : c.hom(x, p->prod))
          by_cone[{c.compose(p->p1, m), c.compose(p->p2, m)}].push_back(m);
        for (Mor f : c.hom(x, a)) {
          for (Mor g : c.hom(x, b)) {
            auto it = by_cone.find({f, g});
            if (it == by_cone.end()) {
              ok = false;
              w = {{"error", "NoMediator"},
                   {"pair", {a, b}},
                   {"cone", {f, g}},
                   {"cone_names", {c.morphism_name(f), c.morphism_name(g)}},
                   {"from", x}};
              break;
            }
            if (it->second.size() > 1) {
              ok = false;
              w = {{"error", "NonUniqueMediator"},
                   {"pair", {a, b}},
                   {"cone", {f, g}},
                   {"mediators", it->second},
                   {"from", x}};
              break;
            }
          }
          if (!ok) break;
        }
      }
    }
  }
  rep.add(ok ? CheckResult::holds("products.mediator")
             : CheckResult::fails("products.mediator", w));

  if (auto t = c.terminal()) {
    bool tok = true;
    nlohmann::json tw;
    for (Obj x = 0; x < c.num_objects() && tok; ++x)
      if (c.hom(x, *t).size() != 1) {
        tok = false;
        tw = {{"error", "BadTerminal"},
              {"object", x},
              {"count", c.hom(x, *t).size()}};
      }
    rep.add(tok ? CheckResult::holds("products.terminal")
                : CheckResult::fails("products.terminal", tw));
  }
  (void)caps;
  return rep;
}

}  // namespace doctrina

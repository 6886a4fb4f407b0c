#include <algorithm>

#include "doctrina/doctrine.hpp"

namespace doctrina {

DoctrineMorphism DoctrineMorphism::identity(DoctrinePtr p) {
  DoctrineMorphism m;
  m.src = p;
  m.dst = p;
  const auto& c = p->base();
  m.objmap.resize(c.num_objects());
  for (Obj a = 0; a < c.num_objects(); ++a) m.objmap[a] = a;
  m.mormap.resize(c.num_morphisms());
  for (Mor f = 0; f < c.num_morphisms(); ++f) m.mormap[f] = f;
  m.family = [](Obj, Elem e) { return e; };
  return m;
}

StructureReport check_doctrine_morphism(const DoctrineMorphism& M,
                                        MorphismMode mode, const Caps& caps) {
  StructureReport rep;
  const Category& cs = M.src->base();
  const Category& cd = M.dst->base();

  // functoriality of F
  {
    bool ok = true;
    nlohmann::json w;
    for (Mor f = 0; f < cs.num_morphisms() && ok; ++f) {
      const Mor ff = M.mormap[f];
      if (cd.dom(ff) != M.objmap[cs.dom(f)] ||
          cd.cod(ff) != M.objmap[cs.cod(f)]) {
        ok = false;
        w = {{"error", "FunctorNotWellTyped"}, {"f", f}};
      }
    }
    for (Obj a = 0; a < cs.num_objects() && ok; ++a)
      if (M.mormap[cs.identity(a)] != cd.identity(M.objmap[a])) {
        ok = false;
        w = {{"error", "IdentityNotPreserved"}, {"object", a}};
      }
    for (Mor g = 0; g < cs.num_morphisms() && ok; ++g)
      for (Mor f = 0; f < cs.num_morphisms() && ok; ++f) {
        if (cs.cod(f) != cs.dom(g)) continue;
        if (M.mormap[cs.compose(g, f)] !=
            cd.compose(M.mormap[g], M.mormap[f])) {
          ok = false;
          w = {{"error", "CompositionNotPreserved"}, {"f", f}, {"g", g}};
        }
      }
    rep.add(ok ? CheckResult::holds("morphism.functorial")
               : CheckResult::fails("morphism.functorial", w));
    if (!ok) return rep;
  }

  // product preservation: ⟨Fπ1, Fπ2⟩ must be an isomorphism
  {
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    for (Obj a = 0; a < cs.num_objects() && ok; ++a)
      for (Obj b = 0; b < cs.num_objects() && ok; ++b) {
        auto p = cs.product(a, b);
        if (!p) continue;
        auto q = cd.product(M.objmap[a], M.objmap[b]);
        if (!q) {
          skips.push_back("image product of (" + cs.object_name(a) + "," +
                          cs.object_name(b) + ") missing");
          continue;
        }
        Mor can;
        try {
          can = cd.require_mediator(M.mormap[p->p1], M.mormap[p->p2]);
        } catch (const SizeExceeded& e) {
          skips.push_back(e.what());
          continue;
        } catch (const std::exception&) {
          ok = false;
          w = {{"error", "NoCanonicalComparison"}, {"pair", {a, b}}};
          break;
        }
        bool iso = false;
        for (Mor inv : cd.hom(q->prod, M.objmap[p->prod]))
          if (cd.compose(can, inv) == cd.identity(q->prod) &&
              cd.compose(inv, can) == cd.identity(M.objmap[p->prod])) {
            iso = true;
            break;
          }
        if (!iso) {
          ok = false;
          w = {{"error", "ProductComparisonNotIso"}, {"pair", {a, b}}};
        }
      }
    auto r = ok ? CheckResult::holds("morphism.product_preserving")
                : CheckResult::fails("morphism.product_preserving", w);
    r.skipped = skips;
    rep.add(std::move(r));
  }

  // each f_A meet- and top-preserving
  {
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    for (Obj a = 0; a < cs.num_objects() && ok; ++a) {
      auto ls = M.src->fiber(a);
      auto ld = M.dst->fiber(M.objmap[a]);
      if (ls->size() > caps.lattice) {
        skips.push_back("object " + cs.object_name(a) + ": fiber beyond cap");
        continue;
      }
      if (M.family(a, ls->top()) != ld->top()) {
        ok = false;
        w = {{"error", "TopNotPreserved"}, {"object", a}};
        break;
      }
      for (Elem x = 0; x < ls->size() && ok; ++x)
        for (Elem y = 0; y < ls->size(); ++y)
          if (M.family(a, ls->meet(x, y)) !=
              ld->meet(M.family(a, x), M.family(a, y))) {
            ok = false;
            w = {{"error", "MeetNotPreserved"},
                 {"object", a},
                 {"pair", {x, y}}};
            break;
          }
    }
    auto r = ok ? CheckResult::holds("morphism.meet_preserving")
                : CheckResult::fails("morphism.meet_preserving", w);
    r.skipped = skips;
    rep.add(std::move(r));
  }

  // naturality: f_A ∘ (Ph)^* = (R F h)^* ∘ f_B for every h : A -> B
  {
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    for (Mor h = 0; h < cs.num_morphisms() && ok; ++h) {
      const Obj a = cs.dom(h), b = cs.cod(h);
      auto lb = M.src->fiber(b);
      if (lb->size() > caps.lattice) {
        skips.push_back("morphism " + cs.morphism_name(h) +
                        ": fiber beyond cap");
        continue;
      }
      auto rs = M.src->reindex(h);
      auto rd = M.dst->reindex(M.mormap[h]);
      for (Elem e = 0; e < lb->size(); ++e)
        if (M.family(a, rs(e)) != rd(M.family(b, e))) {
          ok = false;
          w = {{"error", "NaturalityViolation"},
               {"h", h},
               {"h_name", cs.morphism_name(h)},
               {"element", e},
               {"element_name", lb->element_name(e)}};
          break;
        }
    }
    auto r = ok ? CheckResult::holds("morphism.natural")
                : CheckResult::fails("morphism.natural", w);
    r.skipped = skips;
    rep.add(std::move(r));
  }

  if (mode == MorphismMode::ED) {
    // f_{A×A}(δ_A) = ⟨Fπ1, Fπ2⟩^* δ_{FA}
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    const auto& ds = M.src->certs().delta;
    const auto& dd = M.dst->certs().delta;
    for (Obj a = 0; a < cs.num_objects() && ok; ++a) {
      auto p = cs.product(a, a);
      auto q = cd.product(M.objmap[a], M.objmap[a]);
      if (!p || !ds.count(a)) {
        skips.push_back("object " + cs.object_name(a) + ": no source delta");
        continue;
      }
      if (!q || !dd.count(M.objmap[a])) {
        skips.push_back("object " + cs.object_name(a) + ": no target delta");
        continue;
      }
      Mor can;
      try {
        can = cd.require_mediator(M.mormap[p->p1], M.mormap[p->p2]);
      } catch (const std::exception&) {
        skips.push_back("object " + cs.object_name(a) +
                        ": no comparison map");
        continue;
      }
      if (M.family(p->prod, ds.at(a)) !=
          M.dst->reindex(can)(dd.at(M.objmap[a]))) {
        ok = false;
        w = {{"error", "EDConditionViolation"},
             {"object", a},
             {"object_name", cs.object_name(a)}};
      }
    }
    auto r = ok ? CheckResult::holds("morphism.ed_delta")
                : CheckResult::fails("morphism.ed_delta", w);
    r.skipped = skips;
    rep.add(std::move(r));
  }
  return rep;
}

StructureReport check_two_arrow(const DoctrineMorphism& F,
                                const DoctrineMorphism& G,
                                const std::vector<Mor>& nu, const Caps& caps) {
  StructureReport rep;
  const Category& cs = F.src->base();
  const Category& cd = F.dst->base();

  // ν must be natural: ν_B ∘ F h = G h ∘ ν_A for h : A -> B
  bool nat = true;
  nlohmann::json nw;
  for (Obj a = 0; a < cs.num_objects() && nat; ++a)
    if (cd.dom(nu[a]) != F.objmap[a] || cd.cod(nu[a]) != G.objmap[a]) {
      nat = false;
      nw = {{"error", "NuNotWellTyped"}, {"object", a}};
    }
  for (Mor h = 0; h < cs.num_morphisms() && nat; ++h) {
    const Obj a = cs.dom(h), b = cs.cod(h);
    if (cd.compose(nu[b], F.mormap[h]) != cd.compose(G.mormap[h], nu[a])) {
      nat = false;
      nw = {{"error", "NuNotNatural"}, {"h", h}};
    }
  }
  rep.add(nat ? CheckResult::holds("two_arrow.natural")
              : CheckResult::fails("two_arrow.natural", nw));
  if (!nat) return rep;

  // The printed condition ν_A^*(f_A(α)) <= g_A(α) is not type-correct
  // (ν_A^* lands in R(FA) while g_A(α) lives in R(GA)); we check
  // f_A(α) <= ν_A^*(g_A(α)) instead.
  bool ok = true;
  nlohmann::json w;
  std::vector<std::string> skips;
  for (Obj a = 0; a < cs.num_objects() && ok; ++a) {
    auto ls = F.src->fiber(a);
    if (ls->size() > caps.lattice) {
      skips.push_back("object " + cs.object_name(a) + ": fiber beyond cap");
      continue;
    }
    auto lfa = F.dst->fiber(F.objmap[a]);
    auto rnu = F.dst->reindex(nu[a]);
    for (Elem e = 0; e < ls->size(); ++e)
      if (!lfa->leq(F.family(a, e), rnu(G.family(a, e)))) {
        ok = false;
        w = {{"error", "TwoArrowInequalityFails"},
             {"object", a},
             {"alpha", e},
             {"alpha_name", ls->element_name(e)}};
        break;
      }
  }
  auto r = ok ? CheckResult::holds("two_arrow.inequality")
              : CheckResult::fails("two_arrow.inequality", w);
  r.skipped = skips;
  rep.add(std::move(r));
  return rep;
}

}  // namespace doctrina

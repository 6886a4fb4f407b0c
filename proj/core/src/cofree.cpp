#include "doctrina/cofree.hpp"

#include <algorithm>
#include <sstream>

namespace doctrina {

namespace {

bool fits(const LatticePtr& l, const Caps& caps) {
  return l->size() <= caps.lattice;
}

// ρ⊠σ = ⟨π1,π3⟩^*ρ ∧ ⟨π2,π4⟩^*σ on (A×B)×(A×B); nullopt when the required
// products or tuple morphisms are missing.
std::optional<Elem> box_relation(const Doctrine& P, Obj A, Obj B, Elem rho,
                                 Elem sigma) {
  const Category& c = P.base();
  auto pAB = c.product(A, B);
  if (!pAB) return std::nullopt;
  auto pOO = c.product(pAB->prod, pAB->prod);
  if (!pOO || !c.product(A, A) || !c.product(B, B)) return std::nullopt;
  auto m13 =
      c.mediator(c.compose(pAB->p1, pOO->p1), c.compose(pAB->p1, pOO->p2));
  auto m24 =
      c.mediator(c.compose(pAB->p2, pOO->p1), c.compose(pAB->p2, pOO->p2));
  if (!std::holds_alternative<Mor>(m13) || !std::holds_alternative<Mor>(m24))
    return std::nullopt;
  LatticePtr lOO;
  try {
    lOO = P.fiber(pOO->prod);
  } catch (const SizeExceeded&) {
    return std::nullopt;
  }
  return lOO->meet(P.reindex(std::get<Mor>(m13))(rho),
                   P.reindex(std::get<Mor>(m24))(sigma));
}

}  // namespace

// --- equivalence relations ------------------------------------------------------

StructureReport check_equivalence_relation(const Doctrine& P, Obj A, Elem rho,
                                           const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  auto pAA = c.product(A, A);
  if (!pAA) {
    rep.add(CheckResult::size_exceeded(
        "equiv.axioms", "no (A,A) product for " + c.object_name(A)));
    return rep;
  }
  auto lA = P.fiber(A);
  auto lAA = P.fiber(pAA->prod);

  // reflexivity: top <= Δ^* ρ
  {
    const Elem d = P.reindex(c.diagonal(A))(rho);
    rep.add(lA->leq(lA->top(), d)
                ? CheckResult::holds("equiv.reflexive")
                : CheckResult::fails("equiv.reflexive",
                                     {{"object", A},
                                      {"rho", rho},
                                      {"rho_name", lAA->element_name(rho)},
                                      {"diagonal_restriction", d}}));
  }
  // symmetry: ρ <= tw^* ρ (the printed ⟨π1,π2⟩ is the identity on A×A; the
  // twist is the reading that makes the axiom non-vacuous)
  {
    Mor tw = -1;
    bool have = true;
    try {
      tw = c.twist(A, A);
    } catch (const std::exception&) {
      have = false;
    }
    if (!have) {
      rep.add(CheckResult::size_exceeded("equiv.symmetric",
                                         "twist morphism unavailable"));
    } else {
      const Elem t = P.reindex(tw)(rho);
      rep.add(lAA->leq(rho, t)
                  ? CheckResult::holds("equiv.symmetric")
                  : CheckResult::fails(
                        "equiv.symmetric",
                        {{"object", A},
                         {"rho", rho},
                         {"rho_name", lAA->element_name(rho)}}));
    }
  }
  // transitivity on (A×A)×A
  {
    auto pT = c.product(pAA->prod, A);
    bool have = pT.has_value();
    Mor m12 = -1, m23 = -1, m13 = -1;
    if (have) {
      m12 = pT->p1;
      auto a23 = c.mediator(c.compose(pAA->p2, pT->p1), pT->p2);
      auto a13 = c.mediator(c.compose(pAA->p1, pT->p1), pT->p2);
      have =
          std::holds_alternative<Mor>(a23) && std::holds_alternative<Mor>(a13);
      if (have) {
        m23 = std::get<Mor>(a23);
        m13 = std::get<Mor>(a13);
      }
    }
    if (!have) {
      rep.add(CheckResult::size_exceeded(
          "equiv.transitive",
          "triple product for " + c.object_name(A) + " unavailable"));
    } else {
      LatticePtr lT;
      bool rep_ok = true;
      try {
        lT = P.fiber(pT->prod);
      } catch (const SizeExceeded&) {
        rep.add(CheckResult::size_exceeded("equiv.transitive",
                                           "triple fiber unrepresentable"));
        rep_ok = false;
      }
      if (rep_ok) {
        const Elem lhs = lT->meet(P.reindex(m12)(rho), P.reindex(m23)(rho));
        const Elem rhs = P.reindex(m13)(rho);
        rep.add(lT->leq(lhs, rhs)
                    ? CheckResult::holds("equiv.transitive")
                    : CheckResult::fails(
                          "equiv.transitive",
                          {{"object", A},
                           {"rho", rho},
                           {"rho_name", lAA->element_name(rho)}}));
      }
    }
  }
  (void)caps;
  return rep;
}

std::vector<Elem> enumerate_equivalence_relations(const Doctrine& P, Obj A,
                                                  const Caps& caps) {
  const Category& c = P.base();
  auto pAA = c.require_product(A, A);
  auto lAA = P.fiber(pAA.prod);
  if (!fits(lAA, caps))
    throw SizeExceeded("relation enumeration beyond cap at " +
                       c.object_name(A));
  std::vector<Elem> out;
  for (Elem rho = 0; rho < lAA->size(); ++rho) {
    auto rep = check_equivalence_relation(P, A, rho, caps);
    if (!rep.any_fails()) out.push_back(rho);
  }
  return out;
}

// --- quotient category ------------------------------------------------------------

std::optional<Obj> QuotCategory::find_object(Obj carrier, Elem rho) const {
  for (Obj q = 0; q < (Obj)objects.size(); ++q)
    if (objects[q].carrier == carrier && objects[q].rho == rho) return q;
  return std::nullopt;
}

std::optional<Mor> QuotCategory::find_morphism(Obj qdom, Obj qcod,
                                               Mor base) const {
  for (Mor m = 0; m < (Mor)base_mor.size(); ++m)
    if (cat->dom(m) == qdom && cat->cod(m) == qcod && base_mor[m] == base)
      return m;
  return std::nullopt;
}

QuotCategory build_quotient_category(const Doctrine& P, const Caps& caps) {
  const Category& c = P.base();
  QuotCategory qc;
  qc.cat = std::make_shared<Category>();

  // objects: enumerate per carrier, then close under binary products
  for (Obj A = 0; A < c.num_objects(); ++A) {
    if (!c.product(A, A)) {
      qc.notes.push_back("carrier " + c.object_name(A) +
                         ": no (A,A) product; relations not enumerated");
      continue;
    }
    LatticePtr lAA;
    try {
      lAA = P.fiber(c.product(A, A)->prod);
    } catch (const SizeExceeded&) {
      qc.notes.push_back("carrier " + c.object_name(A) +
                         ": relation fiber unrepresentable");
      continue;
    }
    if (!fits(lAA, caps)) {
      qc.notes.push_back("carrier " + c.object_name(A) +
                         ": relation fiber beyond cap");
      continue;
    }
    for (Elem rho : enumerate_equivalence_relations(P, A, caps))
      qc.objects.push_back({A, rho});
  }
  for (std::size_t i = 0; i < qc.objects.size(); ++i) {
    for (std::size_t j = 0; j < qc.objects.size(); ++j) {
      if (qc.objects.size() > 512)
        throw SizeExceeded("quotient category object closure exceeds bound");
      const auto qi = qc.objects[i];
      const auto qj = qc.objects[j];
      auto boxed = box_relation(P, qi.carrier, qj.carrier, qi.rho, qj.rho);
      if (!boxed) continue;
      const Obj prod_carrier = c.product(qi.carrier, qj.carrier)->prod;
      bool known = false;
      for (const auto& o : qc.objects)
        if (o.carrier == prod_carrier && o.rho == *boxed) {
          known = true;
          break;
        }
      if (!known) {
        auto axioms =
            check_equivalence_relation(P, prod_carrier, *boxed, caps);
        if (axioms.any_fails())
          qc.notes.push_back("box relation on " + c.object_name(prod_carrier) +
                             " failed an equivalence axiom");
        qc.objects.push_back({prod_carrier, *boxed});
      }
    }
  }

  for (const auto& o : qc.objects) {
    std::string rn;
    try {
      rn = P.fiber(c.product(o.carrier, o.carrier)->prod)
               ->element_name(o.rho);
    } catch (const SizeExceeded&) {
      rn = "#" + std::to_string(o.rho);
    }
    qc.cat->add_object("(" + c.object_name(o.carrier) + "|" + rn + ")",
                       c.points(o.carrier));
  }

  auto respects = [&](const QuotObject& a, const QuotObject& b, Mor f) {
    Mor ff;
    try {
      ff = c.pair_map(f, f);
    } catch (const std::exception&) {
      return false;
    }
    auto lAA = P.fiber(c.product(a.carrier, a.carrier)->prod);
    return lAA->leq(a.rho, P.reindex(ff)(b.rho));
  };
  for (Obj qa = 0; qa < (Obj)qc.objects.size(); ++qa)
    for (Obj qb = 0; qb < (Obj)qc.objects.size(); ++qb)
      for (Mor f : c.hom(qc.objects[qa].carrier, qc.objects[qb].carrier))
        if (respects(qc.objects[qa], qc.objects[qb], f)) {
          qc.cat->add_morphism(qa, qb, c.point_map(f), "");
          qc.base_mor.push_back(f);
        }

  qc.cat->seal();
  std::map<std::tuple<Obj, Obj, Mor>, Mor> index;
  for (Mor m = 0; m < (Mor)qc.base_mor.size(); ++m)
    index[{qc.cat->dom(m), qc.cat->cod(m), qc.base_mor[m]}] = m;
  for (Obj q = 0; q < (Obj)qc.objects.size(); ++q) {
    auto it = index.find({q, q, c.identity(qc.objects[q].carrier)});
    if (it == index.end()) throw std::logic_error("identity not in Q_P");
    qc.cat->set_identity(q, it->second);
  }
  for (Mor g = 0; g < (Mor)qc.base_mor.size(); ++g)
    for (Mor f = 0; f < (Mor)qc.base_mor.size(); ++f) {
      if (qc.cat->cod(f) != qc.cat->dom(g)) continue;
      auto it = index.find({qc.cat->dom(f), qc.cat->cod(g),
                            c.compose(qc.base_mor[g], qc.base_mor[f])});
      if (it == index.end())
        throw std::logic_error("Q_P not closed under composition");
      qc.cat->set_compose(g, f, it->second);
    }
  for (Obj qa = 0; qa < (Obj)qc.objects.size(); ++qa)
    for (Obj qb = 0; qb < (Obj)qc.objects.size(); ++qb) {
      const auto& a = qc.objects[qa];
      const auto& b = qc.objects[qb];
      auto boxed = box_relation(P, a.carrier, b.carrier, a.rho, b.rho);
      if (!boxed) continue;
      auto base_p = c.product(a.carrier, b.carrier);
      auto qprod = qc.find_object(base_p->prod, *boxed);
      if (!qprod) continue;
      auto p1 = index.find({*qprod, qa, base_p->p1});
      auto p2 = index.find({*qprod, qb, base_p->p2});
      if (p1 == index.end() || p2 == index.end()) {
        qc.notes.push_back("projections of a box product missing in Q_P");
        continue;
      }
      qc.cat->declare_product(qa, qb, {*qprod, p1->second, p2->second});
    }
  if (auto t = c.terminal()) {
    if (c.product(*t, *t)) {
      auto ltt = P.fiber(c.product(*t, *t)->prod);
      if (auto qt = qc.find_object(*t, ltt->top())) qc.cat->set_terminal(*qt);
    }
  }
  return qc;
}

// --- descent fibers -----------------------------------------------------------------

bool descent_contains(const Doctrine& P, Obj A, Elem rho, Elem alpha) {
  const Category& c = P.base();
  auto pAA = c.require_product(A, A);
  auto lAA = P.fiber(pAA.prod);
  const Elem lhs = lAA->meet(P.reindex(pAA.p1)(alpha), rho);
  return lAA->leq(lhs, P.reindex(pAA.p2)(alpha));
}

std::optional<Elem> DescentFiber::index_of(Elem parent) const {
  auto it = std::lower_bound(carrier.begin(), carrier.end(), parent);
  if (it == carrier.end() || *it != parent) return std::nullopt;
  return (Elem)(it - carrier.begin());
}

DescentFiber descent_fiber(const Doctrine& P, Obj A, Elem rho,
                           const Caps& caps) {
  const Category& c = P.base();
  auto lA = P.fiber(A);
  if (!fits(lA, caps))
    throw SizeExceeded("descent fiber enumeration beyond cap at " +
                       c.object_name(A));
  DescentFiber d;
  for (Elem e = 0; e < lA->size(); ++e)
    if (descent_contains(P, A, rho, e)) d.carrier.push_back(e);

  const std::uint32_t k = (std::uint32_t)d.carrier.size();
  MeetSemilattice::Table t;
  t.n = k;
  t.leq.assign(std::size_t(k) * k, 0);
  t.meet.assign(std::size_t(k) * k, 0);
  t.names.resize(k);
  for (std::uint32_t i = 0; i < k; ++i)
    t.names[i] = lA->element_name(d.carrier[i]);
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < k; ++j) {
      t.leq[std::size_t(i) * k + j] = lA->leq(d.carrier[i], d.carrier[j]);
      const Elem m = lA->meet(d.carrier[i], d.carrier[j]);
      auto it = std::lower_bound(d.carrier.begin(), d.carrier.end(), m);
      if (it == d.carrier.end() || *it != m)
        throw std::runtime_error(
            "descent carrier not closed under meets (parent doctrine not "
            "primary?)");
      t.meet[std::size_t(i) * k + j] = (std::uint32_t)(it - d.carrier.begin());
    }
  {
    auto it = std::lower_bound(d.carrier.begin(), d.carrier.end(), lA->top());
    if (it == d.carrier.end() || *it != lA->top())
      throw std::runtime_error("descent carrier lacks top");
    t.top = (std::uint32_t)(it - d.carrier.begin());
  }
  d.lattice = std::make_shared<MeetSemilattice>(MeetSemilattice::from_table(t));
  return d;
}

// --- the cofree doctrine ---------------------------------------------------------------

CofreeDoctrine::CofreeDoctrine(DoctrinePtr parent, QuotCategory qc,
                               const Caps& caps)
    : parent_(std::move(parent)), qc_(std::move(qc)), caps_(caps) {}

const DescentFiber& CofreeDoctrine::descent(Obj q) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(q);
  if (it == cache_.end()) {
    auto d = std::make_shared<DescentFiber>(descent_fiber(
        *parent_, qc_.objects[q].carrier, qc_.objects[q].rho, caps_));
    it = cache_.emplace(q, std::move(d)).first;
  }
  return *it->second;
}

LatticePtr CofreeDoctrine::fiber(Obj q) const { return descent(q).lattice; }

Elem CofreeDoctrine::to_parent(Obj q, Elem e) const {
  return descent(q).carrier[e];
}

std::optional<Elem> CofreeDoctrine::from_parent(Obj q, Elem parent_elem) const {
  return descent(q).index_of(parent_elem);
}

MonotoneMap CofreeDoctrine::reindex(Mor qf) const {
  const Obj qa = qc_.cat->dom(qf), qb = qc_.cat->cod(qf);
  const auto& da = descent(qa);
  const auto& db = descent(qb);
  auto pr = parent_->reindex(qc_.base_mor[qf]);
  std::vector<Elem> tab(db.carrier.size());
  for (std::size_t i = 0; i < tab.size(); ++i) {
    auto idx = da.index_of(pr(db.carrier[i]));
    if (!idx)
      throw std::runtime_error("descent reindexing not total along " +
                               qc_.cat->morphism_name(qf));
    tab[i] = *idx;
  }
  return MonotoneMap(db.lattice, da.lattice, std::move(tab));
}

CofreeResult build_cofree_doctrine(DoctrinePtr P, const Caps& caps) {
  CofreeResult out;
  auto qc = build_quotient_category(*P, caps);
  auto pd = std::make_shared<CofreeDoctrine>(P, std::move(qc), caps);
  out.doctrine = pd;

  {
    auto r = CheckResult::holds("cofree.objects");
    r.skipped = pd->quot().notes;
    out.report.add(std::move(r));
  }

  // reindexing restricts to descent data along every Q_P morphism
  {
    bool ok = true;
    nlohmann::json w;
    const auto& qcat = *pd->quot().cat;
    for (Mor qf = 0; qf < qcat.num_morphisms() && ok; ++qf) {
      try {
        pd->reindex(qf);
      } catch (const SizeExceeded&) {
        continue;
      } catch (const std::runtime_error& e) {
        ok = false;
        w = {{"q_morphism", qf}, {"detail", e.what()}};
      }
    }
    out.report.add(ok ? CheckResult::holds("cofree.reindex_total")
                      : CheckResult::fails("cofree.reindex_total", w));
  }

  // δ_{(A,ρ)} := ρ is descent data over the square
  {
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    const auto& qcat = *pd->quot().cat;
    for (Obj q = 0; q < qcat.num_objects() && ok; ++q) {
      auto sq = qcat.product(q, q);
      if (!sq) {
        skips.push_back("object " + qcat.object_name(q) +
                        ": no square in Q_P");
        continue;
      }
      const auto& o = pd->quot().objects[q];
      std::optional<Elem> idx;
      try {
        idx = pd->from_parent(sq->prod, o.rho);
      } catch (const SizeExceeded&) {
        skips.push_back("object " + qcat.object_name(q) +
                        ": square fiber beyond cap");
        continue;
      }
      if (!idx) {
        ok = false;
        w = {{"object", q},
             {"object_name", qcat.object_name(q)},
             {"detail", "rho is not descent data over the square"}};
      } else {
        out.delta.delta[q] = *idx;
        pd->certs().delta[q] = *idx;
      }
    }
    auto r = ok ? CheckResult::holds("cofree.delta_membership")
                : CheckResult::fails("cofree.delta_membership", w);
    r.skipped = skips;
    out.report.add(std::move(r));
  }

  // transported comprehension certificate
  if (P->certs().comprehend) {
    auto parent = P;
    std::weak_ptr<CofreeDoctrine> weak_pd = pd;
    pd->certs().comprehend = [parent,
                              weak_pd](Obj q, Elem idx) -> std::optional<Mor> {
      auto self = weak_pd.lock();
      if (!self) return std::nullopt;
      const auto& o = self->quot().objects[q];
      const Elem alpha = self->to_parent(q, idx);
      auto m = parent->certs().comprehend(o.carrier, alpha);
      if (!m) return std::nullopt;
      const Category& c = parent->base();
      Mor mm;
      try {
        mm = c.pair_map(*m, *m);
      } catch (const std::exception&) {
        return std::nullopt;
      }
      const Obj X = c.dom(*m);
      if (!c.product(X, X)) return std::nullopt;
      const Elem tau = parent->reindex(mm)(o.rho);
      auto qx = self->quot().find_object(X, tau);
      if (!qx) return std::nullopt;
      return self->quot().find_morphism(*qx, q, *m);
    };
  }
  return out;
}

DoctrineMorphism counit_epsilon(const std::shared_ptr<CofreeDoctrine>& PD) {
  DoctrineMorphism m;
  m.src = PD;
  m.dst = PD->parent();
  const auto& q = PD->quot();
  m.objmap.resize(q.objects.size());
  for (Obj i = 0; i < (Obj)q.objects.size(); ++i)
    m.objmap[i] = q.objects[i].carrier;
  m.mormap = q.base_mor;
  auto pd = PD;
  m.family = [pd](Obj qobj, Elem idx) { return pd->to_parent(qobj, idx); };
  return m;
}

// --- ∇ ⊣ U -------------------------------------------------------------------------

StructureReport check_nabla_adjunction(const Doctrine& P,
                                       const ElementaryWitness& W,
                                       const QuotCategory& Q,
                                       const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  std::vector<std::string> skips;

  std::map<Obj, Obj> nabla;  // base object -> (A, δ_A) in Q_P
  for (Obj a = 0; a < c.num_objects(); ++a) {
    auto it = W.delta.find(a);
    if (it == W.delta.end()) {
      skips.push_back("object " + c.object_name(a) + ": no delta");
      continue;
    }
    auto q = Q.find_object(a, it->second);
    if (!q) {
      skips.push_back("object " + c.object_name(a) +
                      ": (A,δ_A) not enumerated in Q_P");
      continue;
    }
    nabla[a] = *q;
  }

  {
    bool ok = true;
    nlohmann::json w;
    for (Mor f = 0; f < c.num_morphisms() && ok; ++f) {
      const Obj a = c.dom(f), b = c.cod(f);
      if (!nabla.count(a) || !nabla.count(b)) continue;
      Mor ff;
      try {
        ff = c.pair_map(f, f);
      } catch (const SizeExceeded&) {
        continue;
      }
      auto lAA = P.fiber(c.product(a, a)->prod);
      if (!lAA->leq(W.delta.at(a), P.reindex(ff)(W.delta.at(b)))) {
        ok = false;
        w = {{"f", f}, {"f_name", c.morphism_name(f)}};
      }
    }
    auto r = ok ? CheckResult::holds("nabla.functor")
                : CheckResult::fails("nabla.functor", w);
    r.skipped = skips;
    rep.add(std::move(r));
  }

  {
    bool ok = true;
    nlohmann::json w;
    for (Obj qb = 0; qb < (Obj)Q.objects.size() && ok; ++qb) {
      const Obj b = Q.objects[qb].carrier;
      if (!nabla.count(b)) continue;
      auto lBB = P.fiber(c.product(b, b)->prod);
      if (!lBB->leq(W.delta.at(b), Q.objects[qb].rho)) {
        ok = false;
        w = {{"q_object", qb},
             {"q_object_name", Q.cat->object_name(qb)},
             {"detail", "delta not below the relation"}};
      }
    }
    rep.add(ok ? CheckResult::holds("nabla.counit_morphism")
               : CheckResult::fails("nabla.counit_morphism", w));
  }

  {
    bool ok = true;
    nlohmann::json w;
    for (Obj qb = 0; qb < (Obj)Q.objects.size() && ok; ++qb) {
      const Obj b = Q.objects[qb].carrier;
      if (!nabla.count(b)) continue;
      const Obj qdb = nabla.at(b);
      auto eps = Q.find_morphism(qdb, qb, c.identity(b));
      if (!eps) {
        ok = false;
        w = {{"q_object", qb}, {"detail", "counit component missing"}};
        break;
      }
      for (const auto& [a, qda] : nabla) {
        (void)a;
        for (Mor qf : Q.cat->hom(qda, qb)) {
          int count = 0;
          for (Mor qg : Q.cat->hom(qda, qdb))
            if (Q.cat->compose(*eps, qg) == qf) ++count;
          if (count != 1) {
            ok = false;
            w = {{"q_morphism", qf},
                 {"from", Q.cat->object_name(qda)},
                 {"to", Q.cat->object_name(qb)},
                 {"factorizations", count}};
            break;
          }
        }
        if (!ok) break;
      }
    }
    rep.add(ok ? CheckResult::holds("nabla.factorization_unique")
               : CheckResult::fails("nabla.factorization_unique", w));
  }
  (void)caps;
  return rep;
}

// --- lifting 1-morphisms ----------------------------------------------------------------

DoctrineMorphism lift_morphism(const DoctrineMorphism& M,
                               const std::shared_ptr<CofreeDoctrine>& PD,
                               const std::shared_ptr<CofreeDoctrine>& RD,
                               const Caps& caps) {
  const Category& cs = M.src->base();
  const Category& cd = M.dst->base();
  DoctrineMorphism out;
  out.src = PD;
  out.dst = RD;
  const auto& qs = PD->quot();
  const auto& qr = RD->quot();

  out.objmap.resize(qs.objects.size());
  for (Obj q = 0; q < (Obj)qs.objects.size(); ++q) {
    const Obj A = qs.objects[q].carrier;
    const Elem rho = qs.objects[q].rho;
    auto pAA = cs.require_product(A, A);
    const Obj FA = M.objmap[A];
    Mor can = cd.require_mediator(M.mormap[pAA.p1], M.mormap[pAA.p2]);
    const Elem image_rel = M.dst->reindex(can)(M.family(pAA.prod, rho));
    auto qimage = qr.find_object(FA, image_rel);
    if (!qimage)
      throw SizeExceeded("lifted object (" + cd.object_name(FA) +
                         ", image relation) not enumerated in Q_R");
    out.objmap[q] = *qimage;
  }
  out.mormap.resize(qs.base_mor.size());
  for (Mor qf = 0; qf < (Mor)qs.base_mor.size(); ++qf) {
    auto img =
        qr.find_morphism(out.objmap[qs.cat->dom(qf)],
                         out.objmap[qs.cat->cod(qf)], M.mormap[qs.base_mor[qf]]);
    if (!img)
      throw std::runtime_error("lift of a Q_P morphism missing in Q_R");
    out.mormap[qf] = *img;
  }
  auto pd = PD;
  auto rd = RD;
  auto objmap = out.objmap;
  auto fam = M.family;
  out.family = [pd, rd, objmap, fam](Obj q, Elem idx) -> Elem {
    const Elem parent = pd->to_parent(q, idx);
    const Elem image = fam(pd->quot().objects[q].carrier, parent);
    auto r = rd->from_parent(objmap[q], image);
    if (!r)
      throw std::runtime_error("lifted family leaves the descent fiber");
    return *r;
  };
  (void)caps;
  return out;
}

// --- counit universality -------------------------------------------------------------------

StructureReport check_counit_universal(
    const DoctrineMorphism& M, const ElementaryWitness& WP,
    const std::shared_ptr<CofreeDoctrine>& RD, const Caps& caps) {
  StructureReport rep;
  const Category& cs = M.src->base();
  const Category& cd = M.dst->base();
  const auto& qr = RD->quot();

  std::vector<Obj> scope;
  std::vector<std::string> skips;
  for (Obj a = 0; a < cs.num_objects(); ++a) {
    if (WP.delta.count(a))
      scope.push_back(a);
    else
      skips.push_back("object " + cs.object_name(a) + ": no delta");
  }

  // F̄(A) = (FA, ⟨Fπ1,Fπ2⟩^* f_{A×A}(δ_A))
  std::map<Obj, Obj> fbar;
  bool built = true;
  nlohmann::json bw;
  for (Obj a : scope) {
    auto pAA = cs.require_product(a, a);
    Mor can = cd.require_mediator(M.mormap[pAA.p1], M.mormap[pAA.p2]);
    const Elem rel = M.dst->reindex(can)(M.family(pAA.prod, WP.delta.at(a)));
    auto q = qr.find_object(M.objmap[a], rel);
    if (!q) {
      built = false;
      bw = {{"object", a},
            {"detail", "factorization object not enumerated in Q_R"}};
      break;
    }
    fbar[a] = *q;
  }
  if (!built) {
    rep.add(CheckResult::fails("counit.factorization", bw));
    return rep;
  }
  {
    auto r = CheckResult::holds("counit.factorization");
    r.skipped = skips;
    rep.add(std::move(r));
  }

  {
    bool ok = true;
    nlohmann::json w;
    for (Obj a : scope) {
      if (qr.objects[fbar[a]].carrier != M.objmap[a]) {
        ok = false;
        w = {{"object", a}, {"detail", "carrier mismatch"}};
        break;
      }
      auto la = M.src->fiber(a);
      if (la->size() > caps.lattice) continue;
      for (Elem e = 0; e < la->size(); ++e) {
        const Elem img = M.family(a, e);
        auto idx = RD->from_parent(fbar[a], img);
        if (!idx || RD->to_parent(fbar[a], *idx) != img) {
          ok = false;
          w = {{"object", a},
               {"element", e},
               {"detail", "family does not corestrict to descent data"}};
          break;
        }
      }
      if (!ok) break;
    }
    for (Mor f = 0; f < cs.num_morphisms() && ok; ++f) {
      const Obj a = cs.dom(f), b = cs.cod(f);
      if (!fbar.count(a) || !fbar.count(b)) continue;
      auto qm = qr.find_morphism(fbar[a], fbar[b], M.mormap[f]);
      if (!qm) {
        ok = false;
        w = {{"morphism", f},
             {"detail",
              "image morphism not in Q_R between the factorization objects"}};
      }
    }
    rep.add(ok ? CheckResult::holds("counit.commutes")
               : CheckResult::fails("counit.commutes", w));
    if (!ok) return rep;
  }

  // Uniqueness: a competing (G,g) with ε∘(G,g) = M must have G(A) = (FA, σ_A)
  // and g = f corestricted; the ED condition pins ⟨Fπ1,Fπ2⟩^* σ_A. Count
  // admissible assignments within the search budget.
  {
    bool budget = false;
    std::map<Obj, std::vector<Obj>> choice;
    std::uint64_t combos = 1;
    for (Obj a : scope) {
      std::vector<Obj> cands;
      auto pAA = cs.require_product(a, a);
      Mor can = cd.require_mediator(M.mormap[pAA.p1], M.mormap[pAA.p2]);
      const Elem pinned = M.dst->reindex(can)(qr.objects[fbar[a]].rho);
      for (Obj q = 0; q < (Obj)qr.objects.size(); ++q) {
        if (qr.objects[q].carrier != M.objmap[a]) continue;
        if (M.dst->reindex(can)(qr.objects[q].rho) != pinned) continue;
        auto la = M.src->fiber(a);
        if (la->size() > caps.lattice) continue;
        bool landing = true;
        for (Elem e = 0; e < la->size() && landing; ++e)
          if (!RD->from_parent(q, M.family(a, e))) landing = false;
        if (!landing) continue;
        bool all_mor = true;
        for (Mor f = 0; f < cs.num_morphisms() && all_mor; ++f) {
          if (cs.dom(f) == a && fbar.count(cs.cod(f)) &&
              !qr.find_morphism(q, cs.cod(f) == a ? q : fbar[cs.cod(f)],
                                M.mormap[f]))
            all_mor = false;
          if (cs.cod(f) == a && cs.dom(f) != a && fbar.count(cs.dom(f)) &&
              !qr.find_morphism(fbar[cs.dom(f)], q, M.mormap[f]))
            all_mor = false;
        }
        if (all_mor) cands.push_back(q);
      }
      choice[a] = cands;
      combos *= std::max<std::uint64_t>(cands.size(), 1);
      if (combos > caps.search) {
        budget = true;
        break;
      }
    }
    if (budget) {
      rep.add(CheckResult::size_exceeded("counit.unique",
                                         "candidate scan beyond budget"));
    } else {
      std::uint64_t admissible = 1;
      nlohmann::json detail = nlohmann::json::object();
      for (Obj a : scope) {
        admissible *= choice[a].size();
        if (choice[a].size() != 1)
          detail[cs.object_name(a)] = choice[a].size();
      }
      rep.add(admissible == 1
                  ? CheckResult::holds("counit.unique")
                  : CheckResult::fails(
                        "counit.unique",
                        {{"admissible_assignments", admissible},
                         {"per_object", detail}}));
    }
  }
  return rep;
}

// --- preservation ---------------------------------------------------------------------------

StructureReport check_preservation(const std::shared_ptr<CofreeDoctrine>& PD,
                                   const Caps& caps) {
  StructureReport rep;
  const auto& P = *PD->parent();
  const auto& qcat = *PD->quot().cat;
  const auto& qobjs = PD->quot().objects;

  {
    bool jok = true, rok = true;
    nlohmann::json jw, rw;
    std::vector<std::string> skips;
    for (Obj q = 0; q < (Obj)qobjs.size(); ++q) {
      LatticePtr dl;
      try {
        dl = PD->fiber(q);
      } catch (const SizeExceeded&) {
        skips.push_back("object " + qcat.object_name(q) + ": beyond cap");
        continue;
      }
      auto lp = P.fiber(qobjs[q].carrier);
      for (Elem x = 0; x < dl->size() && (jok || rok); ++x)
        for (Elem y = 0; y < dl->size(); ++y) {
          const Elem px = PD->to_parent(q, x), py = PD->to_parent(q, y);
          if (jok) {
            auto pj = lp->join(px, py);
            auto dj = dl->join(x, y);
            if (pj) {
              auto idx = PD->from_parent(q, *pj);
              if (!idx || !dj || *dj != *idx) {
                jok = false;
                jw = {{"object", q},
                      {"object_name", qcat.object_name(q)},
                      {"pair", {x, y}}};
              }
            }
          }
          if (rok) {
            auto pr = lp->rpc(px, py);
            auto dr = dl->rpc(x, y);
            if (pr) {
              auto idx = PD->from_parent(q, *pr);
              if (!idx || !dr || *dr != *idx) {
                rok = false;
                rw = {{"object", q},
                      {"object_name", qcat.object_name(q)},
                      {"pair", {x, y}}};
              }
            }
          }
        }
    }
    auto r1 = jok ? CheckResult::holds("preserve.joins")
                  : CheckResult::fails("preserve.joins", jw);
    r1.skipped = skips;
    rep.add(std::move(r1));
    rep.add(rok ? CheckResult::holds("preserve.rpc")
                : CheckResult::fails("preserve.rpc", rw));
  }

  for (AdjointSide side : {AdjointSide::Left, AdjointSide::Right}) {
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    const char* name =
        side == AdjointSide::Left ? "preserve.exists" : "preserve.forall";
    for (Obj qa = 0; qa < (Obj)qobjs.size() && ok; ++qa)
      for (Obj qb = 0; qb < (Obj)qobjs.size() && ok; ++qb) {
        auto qp = qcat.product(qa, qb);
        if (!qp) continue;
        for (Mor qproj : {qp->p1, qp->p2}) {
          const Mor bproj = PD->quot().base_mor[qproj];
          LatticePtr lprod, lbase;
          try {
            lprod = P.fiber(P.base().dom(bproj));
            lbase = P.fiber(P.base().cod(bproj));
          } catch (const SizeExceeded&) {
            skips.push_back("projection fibers unrepresentable");
            continue;
          }
          if (!fits(lprod, caps) || !fits(lbase, caps)) {
            skips.push_back("projection " + qcat.morphism_name(qproj) +
                            ": parent fiber beyond cap");
            continue;
          }
          auto parent_adj = compute_adjoint(P.reindex(bproj), side, caps);
          if (!std::holds_alternative<MonotoneMap>(parent_adj)) {
            skips.push_back("parent lacks the adjoint along " +
                            P.base().morphism_name(bproj));
            continue;
          }
          auto desc_adj = compute_adjoint(PD->reindex(qproj), side, caps);
          if (!std::holds_alternative<MonotoneMap>(desc_adj)) {
            ok = false;
            const auto& f = std::get<AdjointFailure>(desc_adj);
            w = {{"q_projection", qproj},
                 {"detail", "descent adjoint missing: " + f.detail}};
            break;
          }
          const auto& pa = std::get<MonotoneMap>(parent_adj);
          const auto& da = std::get<MonotoneMap>(desc_adj);
          const Obj qsrc = qcat.dom(qproj), qdst = qcat.cod(qproj);
          auto dsl = PD->fiber(qsrc);
          for (Elem i = 0; i < dsl->size(); ++i) {
            const Elem parent_val = pa(PD->to_parent(qsrc, i));
            auto idx = PD->from_parent(qdst, parent_val);
            if (!idx || *idx != da(i)) {
              ok = false;
              w = {{"q_projection", qproj},
                   {"element", i},
                   {"detail", "parent quantifier does not restrict"}};
              break;
            }
          }
          if (!ok) break;
        }
      }
    auto r = ok ? CheckResult::holds(name) : CheckResult::fails(name, w);
    r.skipped = skips;
    rep.add(std::move(r));
  }

  {
    bool ok = true;
    nlohmann::json w;
    std::vector<std::string> skips;
    for (Obj q = 0; q < (Obj)qobjs.size() && ok; ++q) {
      LatticePtr dl;
      try {
        dl = PD->fiber(q);
      } catch (const SizeExceeded&) {
        continue;
      }
      for (Elem i = 0; i < dl->size() && ok; ++i) {
        auto parent_c =
            find_comprehension(P, qobjs[q].carrier, PD->to_parent(q, i), caps);
        if (!parent_c.mor) {
          skips.push_back("object " + qcat.object_name(q) +
                          ": no parent comprehension for element " +
                          std::to_string(i));
          continue;
        }
        auto qc = find_comprehension(*PD, q, i, caps);
        if (!qc.mor) {
          ok = false;
          w = {{"object", q},
               {"object_name", qcat.object_name(q)},
               {"element", i},
               {"detail", "no comprehension in the cofree doctrine"}};
          break;
        }
        if (parent_c.full && !qc.full) {
          ok = false;
          w = {{"object", q},
               {"element", i},
               {"detail", "fullness did not transfer"}};
        }
      }
    }
    auto r = ok ? CheckResult::holds("preserve.comprehensions")
                : CheckResult::fails("preserve.comprehensions", w);
    r.skipped = skips;
    rep.add(std::move(r));
  }
  return rep;
}

// --- weak power objects in P_D ------------------------------------------------------------------

CofreePowerObject power_object_in_cofree(
    const std::shared_ptr<CofreeDoctrine>& PD, Obj q, const Caps& caps) {
  CofreePowerObject out;
  const auto& P = *PD->parent();
  const Category& c = P.base();
  const auto& qo = PD->quot().objects[q];
  const Obj A = qo.carrier;

  auto pc = P.certs().power.find(A);
  if (pc == P.certs().power.end()) {
    out.report.add(CheckResult::size_exceeded(
        "power_cofree.preconditions",
        "no parent power object certificate for carrier " +
            c.object_name(A)));
    return out;
  }
  const Obj piA = pc->second.power_obj;
  const Elem mem = pc->second.membership;

  auto pApi = c.product(A, piA);
  auto ppp = c.product(piA, piA);
  if (!pApi || !ppp || !c.product(pApi->prod, piA)) {
    out.report.add(CheckResult::size_exceeded("power_cofree.preconditions",
                                              "tuple products missing"));
    return out;
  }
  auto pT = c.product(pApi->prod, piA);  // (A×πA)×πA
  Mor m13, m23;
  try {
    m13 = c.require_mediator(c.compose(pApi->p1, pT->p1), pT->p2);
    m23 = c.require_mediator(c.compose(pApi->p2, pT->p1), pT->p2);
  } catch (const std::exception& e) {
    out.report.add(
        CheckResult::size_exceeded("power_cofree.preconditions", e.what()));
    return out;
  }
  LatticePtr lT = P.fiber(pT->prod);
  const Elem e12 = P.reindex(pT->p1)(mem);
  const Elem e13 = P.reindex(m13)(mem);
  auto r1 = lT->rpc(e12, e13);
  auto r2 = lT->rpc(e13, e12);
  if (!r1 || !r2) {
    out.report.add(CheckResult::size_exceeded(
        "power_cofree.preconditions", "fiber lacks pseudo-complements"));
    return out;
  }
  if (!fits(lT, caps) || !fits(P.fiber(ppp->prod), caps)) {
    out.report.add(CheckResult::size_exceeded("power_cofree.preconditions",
                                              "formula fibers beyond cap"));
    return out;
  }
  auto forall23 = compute_adjoint(P.reindex(m23), AdjointSide::Right, caps);
  if (!std::holds_alternative<MonotoneMap>(forall23)) {
    out.report.add(CheckResult::fails(
        "power_cofree.forall",
        {{"detail", "no verified right adjoint along ⟨π2,π3⟩"}}));
    return out;
  }
  const Elem rel = std::get<MonotoneMap>(forall23)(lT->meet(*r1, *r2));

  auto pAA = c.product(A, A);
  if (!pAA || !c.product(pAA->prod, piA)) {
    out.report.add(CheckResult::size_exceeded("power_cofree.preconditions",
                                              "membership products missing"));
    return out;
  }
  auto pS = c.product(pAA->prod, piA);  // (A×A)×πA
  Mor n13, n23;
  try {
    n13 = c.require_mediator(c.compose(pAA->p1, pS->p1), pS->p2);
    n23 = c.require_mediator(c.compose(pAA->p2, pS->p1), pS->p2);
  } catch (const std::exception& e) {
    out.report.add(
        CheckResult::size_exceeded("power_cofree.preconditions", e.what()));
    return out;
  }
  LatticePtr lS = P.fiber(pS->prod);
  auto imp = lS->rpc(P.reindex(pS->p1)(qo.rho), P.reindex(n23)(mem));
  if (!imp || !fits(lS, caps)) {
    out.report.add(CheckResult::size_exceeded(
        "power_cofree.preconditions", "membership formula beyond cap"));
    return out;
  }
  auto forall13 = compute_adjoint(P.reindex(n13), AdjointSide::Right, caps);
  if (!std::holds_alternative<MonotoneMap>(forall13)) {
    out.report.add(CheckResult::fails(
        "power_cofree.forall",
        {{"detail", "no verified right adjoint along ⟨π1,π3⟩"}}));
    return out;
  }
  auto lMem = P.fiber(pApi->prod);
  const Elem mem_rel = lMem->meet(mem, std::get<MonotoneMap>(forall13)(*imp));

  auto qpow = PD->quot().find_object(piA, rel);
  if (!qpow) {
    out.report.add(CheckResult::size_exceeded(
        "power_cofree.object", "(πA, rel) not enumerated in Q_P"));
    return out;
  }
  out.q_power = *qpow;

  auto qprod = PD->quot().cat->product(q, *qpow);
  if (!qprod) {
    out.report.add(CheckResult::size_exceeded(
        "power_cofree.object", "Q_P product with the power object missing"));
    return out;
  }
  auto idx = PD->from_parent(qprod->prod, mem_rel);
  if (!idx) {
    out.report.add(CheckResult::fails(
        "power_cofree.membership_descent",
        {{"detail", "membership formula is not descent data"}}));
    return out;
  }
  out.membership = *idx;
  out.report.add(CheckResult::holds("power_cofree.membership_descent"));

  // terminal case: δ at π(1,⊤) is the ε₁ biconditional. The ⊃ form alone is
  // not symmetric; the ⟺ reading is what lands in Q_P.
  if (c.terminal() && A == *c.terminal() && P.certs().eps1 &&
      P.certs().pi1 == piA) {
    const Elem eps = *P.certs().eps1;
    auto lpp = P.fiber(ppp->prod);
    auto i1 = lpp->rpc(P.reindex(ppp->p1)(eps), P.reindex(ppp->p2)(eps));
    auto i2 = lpp->rpc(P.reindex(ppp->p2)(eps), P.reindex(ppp->p1)(eps));
    if (i1 && i2) {
      const Elem h2_rel = lpp->meet(*i1, *i2);
      out.report.add(
          rel == h2_rel
              ? CheckResult::holds("power_cofree.h2_delta")
              : CheckResult::fails("power_cofree.h2_delta",
                                   {{"rel", rel},
                                    {"rel_name", lpp->element_name(rel)},
                                    {"eps_biconditional", h2_rel}}));
      out.report.add(lpp->leq(rel, *i1)
                         ? CheckResult::holds("power_cofree.h2_inequality")
                         : CheckResult::fails("power_cofree.h2_inequality",
                                              {{"rel", rel}}));
      out.report.add(descent_contains(P, piA, rel, eps)
                         ? CheckResult::holds("power_cofree.eps1_descent")
                         : CheckResult::fails("power_cofree.eps1_descent",
                                              {{"eps1", eps}}));
      PD->certs().pi1 = *qpow;
      auto epsidx = PD->from_parent(*qpow, eps);
      if (epsidx) PD->certs().eps1 = *epsidx;
    }
  }

  PD->certs().power[q] = {*qpow, *idx};
  if (P.certs().classify) {
    auto parent = PD->parent();
    std::weak_ptr<CofreeDoctrine> weak_pd = PD;
    const Obj qpow_obj = *qpow;
    const Obj carrier_A = A;
    auto old = PD->certs().classify;
    PD->certs().classify = [parent, weak_pd, qpow_obj, carrier_A, old](
                               Obj qa, Obj qb, Elem phi) -> std::optional<Mor> {
      auto self = weak_pd.lock();
      if (!self) return std::nullopt;
      if (self->quot().objects[qa].carrier != carrier_A)
        return old ? old(qa, qb, phi) : std::nullopt;
      auto qp = self->quot().cat->product(qa, qb);
      if (!qp) return std::nullopt;
      const Elem parent_phi = self->to_parent(qp->prod, phi);
      auto bcl = parent->certs().classify(self->quot().objects[qa].carrier,
                                          self->quot().objects[qb].carrier,
                                          parent_phi);
      if (!bcl) return std::nullopt;
      return self->quot().find_morphism(qb, qpow_obj, *bcl);
    };
  }
  return out;
}

// --- extensional collapse ------------------------------------------------------------------------

CollapseResult extensional_collapse(const Doctrine& P,
                                    const ElementaryWitness& W,
                                    const Caps& caps) {
  const Category& c = P.base();
  CollapseResult out;
  out.clazz.assign(c.num_morphisms(), -1);
  std::vector<std::string> skips;

  auto internally_equal = [&](Mor t1, Mor t2) -> std::optional<bool> {
    const Obj A = c.cod(t1);
    auto it = W.delta.find(A);
    if (it == W.delta.end()) return std::nullopt;
    auto med = c.mediator(t1, t2);
    if (!std::holds_alternative<Mor>(med)) return std::nullopt;
    auto lx = P.fiber(c.dom(t1));
    const Elem v = P.reindex(std::get<Mor>(med))(it->second);
    return lx->leq(lx->top(), v);
  };

  for (Obj a = 0; a < c.num_objects(); ++a)
    if (!W.delta.count(a))
      skips.push_back("object " + c.object_name(a) +
                      ": no delta; its hom-classes stay discrete");

  for (Mor t = 0; t < c.num_morphisms(); ++t) {
    out.clazz[t] = t;
    for (Mor s = 0; s < t; ++s) {
      if (c.dom(s) != c.dom(t) || c.cod(s) != c.cod(t)) continue;
      if (out.clazz[s] != s) continue;  // compare against representatives
      auto eq = internally_equal(s, t);
      if (eq && *eq) {
        out.clazz[t] = s;
        break;
      }
    }
  }

  {
    bool ok = true;
    nlohmann::json w;
    for (Mor f = 0; f < c.num_morphisms() && ok; ++f)
      for (Mor g = 0; g < c.num_morphisms() && ok; ++g) {
        if (c.cod(f) != c.dom(g)) continue;
        const Mor f2 = out.clazz[f], g2 = out.clazz[g];
        if (out.clazz[c.compose(g, f)] != out.clazz[c.compose(g2, f2)]) {
          ok = false;
          w = {{"error", "CompositionNotWellDefined"},
               {"f", f},
               {"g", g},
               {"f_representative", f2},
               {"g_representative", g2}};
        }
      }
    auto r = ok ? CheckResult::holds("collapse.well_defined")
                : CheckResult::fails("collapse.well_defined", w);
    r.skipped = skips;
    out.report.add(std::move(r));
    if (!ok) return out;
  }

  out.cat = std::make_shared<Category>();
  for (Obj a = 0; a < c.num_objects(); ++a)
    out.cat->add_object(c.object_name(a), -1);
  std::map<Mor, Mor> to_new;
  for (Mor t = 0; t < c.num_morphisms(); ++t) {
    if (out.clazz[t] != t) continue;
    to_new[t] = out.cat->add_morphism(c.dom(t), c.cod(t), {},
                                      "[" + c.morphism_name(t) + "]");
  }
  out.cat->seal();
  for (Obj a = 0; a < c.num_objects(); ++a)
    out.cat->set_identity(a, to_new.at(out.clazz[c.identity(a)]));
  for (Mor f = 0; f < c.num_morphisms(); ++f)
    for (Mor g = 0; g < c.num_morphisms(); ++g) {
      if (c.cod(f) != c.dom(g)) continue;
      if (out.clazz[f] != f || out.clazz[g] != g) continue;
      out.cat->set_compose(to_new.at(g), to_new.at(f),
                           to_new.at(out.clazz[c.compose(g, f)]));
    }
  for (Obj a = 0; a < c.num_objects(); ++a)
    for (Obj b = 0; b < c.num_objects(); ++b)
      if (auto p = c.product(a, b))
        out.cat->declare_product(a, b,
                                 {p->prod, to_new.at(out.clazz[p->p1]),
                                  to_new.at(out.clazz[p->p2])});
  if (auto t = c.terminal()) out.cat->set_terminal(*t);
  for (Mor t = 0; t < c.num_morphisms(); ++t)
    out.clazz[t] = to_new.at(out.clazz[t]);
  (void)caps;
  return out;
}

}  // namespace doctrina

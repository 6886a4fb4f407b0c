#include "doctrina/doctrine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace doctrina {

namespace {

bool fits(const LatticePtr& l, const Caps& caps) {
  return l->size() <= caps.lattice;
}

std::string obj_skip(const Category& c, Obj a, const std::string& why) {
  return "object " + c.object_name(a) + ": " + why;
}

nlohmann::json elem_json(const Category& c, Obj a, const LatticePtr& l,
                         Elem e, const char* key) {
  return nlohmann::json{{key, e},
                        {std::string(key) + "_name", l->element_name(e)},
                        {"object", a},
                        {"object_name", c.object_name(a)}};
}

}  // namespace

// --- SetFamilyDoctrine ---------------------------------------------------------

SetFamilyDoctrine::SetFamilyDoctrine(std::shared_ptr<const Category> base,
                                     LatticePtr values,
                                     std::uint64_t max_fiber)
    : base_(std::move(base)), values_(std::move(values)),
      max_fiber_(max_fiber) {}

LatticePtr SetFamilyDoctrine::fiber(Obj a) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(a);
  if (it != cache_.end()) return it->second;
  const std::int32_t pts = base_->points(a);
  // Guard the 64-bit element index, not the scan cap: oversized fibers stay
  // usable pointwise and scans guard themselves.
  double bits = pts * std::log2(double(values_->size()));
  if (bits > 63.0)
    throw SizeExceeded("fiber over " + base_->object_name(a) +
                       " exceeds the representable element index");
  (void)max_fiber_;
  std::vector<std::string> pn;
  pn.reserve(pts);
  for (std::int32_t i = 0; i < pts; ++i) pn.push_back(std::to_string(i));
  auto l = std::make_shared<MeetSemilattice>(
      MeetSemilattice::power(values_, (std::uint32_t)pts, std::move(pn)));
  cache_[a] = l;
  return l;
}

MonotoneMap SetFamilyDoctrine::reindex(Mor f) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = reindex_cache_.find(f);
    if (it != reindex_cache_.end()) return it->second;
  }
  auto df = fiber(base_->cod(f));
  auto cf = fiber(base_->dom(f));
  MonotoneMap::Precompose pre;
  const auto& pt = base_->point_map(f);
  pre.point_map.assign(pt.begin(), pt.end());
  MonotoneMap m(df, cf, std::move(pre));
  // tabulate small maps once; scans then cost a lookup per element
  if (df->size() <= max_fiber_) {
    std::vector<Elem> tab(df->size());
    for (Elem e = 0; e < tab.size(); ++e) tab[e] = m(e);
    m = MonotoneMap(std::move(df), std::move(cf), std::move(tab));
    std::lock_guard<std::mutex> lock(mu_);
    reindex_cache_.emplace(f, m);
  }
  return m;
}

// --- OpensDoctrine --------------------------------------------------------------

OpensDoctrine::OpensDoctrine(std::shared_ptr<const Category> base,
                             std::vector<std::vector<std::uint64_t>> opens)
    : base_(std::move(base)), opens_(std::move(opens)) {
  fibers_.reserve(opens_.size());
  for (Obj a = 0; a < (Obj)opens_.size(); ++a) {
    const auto& os = opens_[a];
    const std::uint32_t n = (std::uint32_t)os.size();
    MeetSemilattice::Table t;
    t.n = n;
    t.leq.assign(std::size_t(n) * n, 0);
    t.meet.assign(std::size_t(n) * n, 0);
    std::vector<std::string> names(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::ostringstream nm;
      nm << '{';
      bool first = true;
      for (std::int32_t p = 0; p < base_->points(a); ++p)
        if ((os[i] >> p) & 1) {
          if (!first) nm << ',';
          nm << p;
          first = false;
        }
      nm << '}';
      names[i] = nm.str();
    }
    t.names = std::move(names);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = 0; j < n; ++j) {
        t.leq[std::size_t(i) * n + j] = (os[i] & ~os[j]) == 0;
        const std::uint64_t cap_mask = os[i] & os[j];
        auto it = std::lower_bound(os.begin(), os.end(), cap_mask);
        t.meet[std::size_t(i) * n + j] = (std::uint32_t)(it - os.begin());
      }
    t.top = n - 1;  // opens sorted ascending; full set is the largest mask
    fibers_.push_back(
        std::make_shared<MeetSemilattice>(MeetSemilattice::from_table(t)));
  }
}

std::optional<Elem> OpensDoctrine::open_index(Obj a,
                                              std::uint64_t mask) const {
  const auto& os = opens_[a];
  auto it = std::lower_bound(os.begin(), os.end(), mask);
  if (it == os.end() || *it != mask) return std::nullopt;
  return (Elem)(it - os.begin());
}

MonotoneMap OpensDoctrine::reindex(Mor f) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = reindex_cache_.find(f);
    if (it != reindex_cache_.end()) return it->second;
  }
  const Obj d = base_->dom(f), c = base_->cod(f);
  const auto& pt = base_->point_map(f);
  std::vector<Elem> tab(opens_[c].size());
  for (std::size_t i = 0; i < tab.size(); ++i) {
    std::uint64_t pre = 0;
    for (std::size_t x = 0; x < pt.size(); ++x)
      if ((opens_[c][i] >> pt[x]) & 1) pre |= std::uint64_t(1) << x;
    auto idx = open_index(d, pre);
    if (!idx)
      throw std::runtime_error("preimage of an open is not open along " +
                               base_->morphism_name(f));
    tab[i] = *idx;
  }
  MonotoneMap m(fibers_[c], fibers_[d], std::move(tab));
  std::lock_guard<std::mutex> lock(mu_);
  reindex_cache_.emplace(f, m);
  return m;
}

// --- validate_doctrine ------------------------------------------------------------

StructureReport validate_doctrine(const Doctrine& P, const Caps& caps) {
  StructureReport rep;
  const Category& c = P.base();
  std::vector<std::string> skips;

  auto scoped_fiber = [&](Obj a) -> LatticePtr {
    auto l = P.fiber(a);
    if (!fits(l, caps)) return nullptr;
    return l;
  };

  // id_A^* = id
  {
    bool ok = true;
    nlohmann::json w;
    for (Obj a = 0; a < c.num_objects() && ok; ++a) {
      auto l = scoped_fiber(a);
      if (!l) {
        skips.push_back(obj_skip(c, a, "fiber beyond cap"));
        continue;
      }
      auto r = P.reindex(c.identity(a));
      for (Elem e = 0; e < l->size(); ++e)
        if (r(e) != e) {
          ok = false;
          w = elem_json(c, a, l, e, "element");
          w["check"] = "identity_reindex";
          break;
        }
    }
    auto res = ok ? CheckResult::holds("doctrine.identity_reindex")
                  : CheckResult::fails("doctrine.identity_reindex", w);
    res.skipped = skips;
    rep.add(std::move(res));
  }

  // (g∘f)^* = f^* ∘ g^*
  {
    bool ok = true;
    bool budget_hit = false;
    std::uint64_t work = 0;
    nlohmann::json w;
    for (Mor f = 0; f < c.num_morphisms() && ok && !budget_hit; ++f) {
      const Obj b = c.dom(f);  // contravariant: scan g with dom(g) = cod(f)
      for (Obj cc = 0; cc < c.num_objects() && ok && !budget_hit; ++cc)
        for (Mor g : c.hom(c.cod(f), cc)) {
          auto ltop = scoped_fiber(cc);
          auto lbot = scoped_fiber(b);
          if (!ltop || !lbot) continue;
          work += ltop->size();
          if (work > caps.assoc_triples) {
            budget_hit = true;
            break;
          }
          const Mor gf = c.compose(g, f);
          auto rgf = P.reindex(gf);
          auto rf = P.reindex(f);
          auto rg = P.reindex(g);
          for (Elem e = 0; e < ltop->size(); ++e)
            if (rgf(e) != rf(rg(e))) {
              ok = false;
              w = {{"error", "FunctorialityViolation"},
                   {"f", f},
                   {"g", g},
                   {"f_name", c.morphism_name(f)},
                   {"g_name", c.morphism_name(g)},
                   {"element", e},
                   {"element_name", ltop->element_name(e)}};
              break;
            }
          if (!ok) break;
        }
    }
    auto r = ok ? CheckResult::holds("doctrine.functoriality")
                : CheckResult::fails("doctrine.functoriality", w);
    if (budget_hit) r.skipped.push_back("pair scan truncated at budget");
    rep.add(std::move(r));
  }

  // every f^* preserves top and binary meets
  {
    bool ok = true;
    std::uint64_t work = 0;
    std::vector<std::string> mp_skips;
    nlohmann::json w;
    for (Mor f = 0; f < c.num_morphisms() && ok; ++f) {
      auto l = scoped_fiber(c.cod(f));
      if (!l) continue;
      auto ld = P.fiber(c.dom(f));
      auto r = P.reindex(f);
      if (r(l->top()) != ld->top()) {
        ok = false;
        w = {{"error", "MeetPreservationViolation"},
             {"f", f},
             {"f_name", c.morphism_name(f)},
             {"reason", "top not preserved"}};
        break;
      }
      const std::uint64_t cost = l->size() * l->size();
      if (cost > caps.pair_scan || work + cost > caps.assoc_triples) {
        if (mp_skips.empty())
          mp_skips.push_back("meet scans beyond budget for some morphisms");
        continue;
      }
      work += cost;
      for (Elem a = 0; a < l->size() && ok; ++a)
        for (Elem b = 0; b < l->size(); ++b)
          if (r(l->meet(a, b)) != ld->meet(r(a), r(b))) {
            ok = false;
            w = {{"error", "MeetPreservationViolation"},
                 {"f", f},
                 {"f_name", c.morphism_name(f)},
                 {"pair", {a, b}}};
            break;
          }
    }
    auto res = ok ? CheckResult::holds("doctrine.meet_preservation")
                  : CheckResult::fails("doctrine.meet_preservation", w);
    res.skipped = mp_skips;
    rep.add(std::move(res));
  }
  return rep;
}

// --- elementary --------------------------------------------------------------------

namespace detail {

std::optional<TripleMaps> triple_maps(const Category& c, Obj X, Obj A) {
  auto pXA = c.product(X, A);
  if (!pXA) return std::nullopt;
  TripleMaps t;
  t.xa = pXA->prod;
  auto pXAA = c.product(t.xa, A);
  if (!pXAA) return std::nullopt;
  t.xaa = pXAA->prod;
  if (!c.product(A, A)) return std::nullopt;
  t.m12 = pXAA->p1;
  auto m23 = c.mediator(c.compose(pXA->p2, pXAA->p1), pXAA->p2);
  if (!std::holds_alternative<Mor>(m23)) return std::nullopt;
  t.m23 = std::get<Mor>(m23);
  auto e = c.mediator(c.identity(t.xa), pXA->p2);
  if (!std::holds_alternative<Mor>(e)) return std::nullopt;
  t.e = std::get<Mor>(e);
  return t;
}

}  // namespace detail

namespace {

// First failing pair of elementary condition (i) at object A for delta, or
// nullopt when the adjunction holds on all pairs.
struct CondFail {
  Elem alpha, beta;
  Obj X = -1;  // condition (ii) only
};

std::optional<CondFail> cond_i_fails(const Doctrine& P, Obj A, Elem delta,
                                     const Caps& caps) {
  const Category& c = P.base();
  auto pAA = c.require_product(A, A);
  auto PA = P.fiber(A);
  auto PAA = P.fiber(pAA.prod);
  if (!fits(PA, caps) || !fits(PAA, caps))
    throw SizeExceeded("condition (i) fibers beyond cap at " +
                       c.object_name(A));
  auto rd = P.reindex(c.diagonal(A));
  auto rp1 = P.reindex(pAA.p1);
  for (Elem a = 0; a < PA->size(); ++a) {
    const Elem ex = PAA->meet(rp1(a), delta);
    for (Elem b = 0; b < PAA->size(); ++b)
      if (PAA->leq(ex, b) != PA->leq(a, rd(b))) return CondFail{a, b, -1};
  }
  return std::nullopt;
}

std::optional<CondFail> cond_ii_fails(const Doctrine& P, Obj X, Obj A,
                                      const detail::TripleMaps& t, Elem delta,
                                      const Caps& caps) {
  auto PXA = P.fiber(t.xa);
  auto PXAA = P.fiber(t.xaa);
  if (!fits(PXA, caps) || !fits(PXAA, caps))
    throw SizeExceeded("condition (ii) fibers beyond cap");
  auto r12 = P.reindex(t.m12);
  auto r23 = P.reindex(t.m23);
  auto re = P.reindex(t.e);
  const Elem d23 = r23(delta);
  for (Elem a = 0; a < PXA->size(); ++a) {
    const Elem ex = PXAA->meet(r12(a), d23);
    for (Elem b = 0; b < PXAA->size(); ++b)
      if (PXAA->leq(ex, b) != PXA->leq(a, re(b))) return CondFail{a, b, X};
  }
  return std::nullopt;
}

}  // namespace

ElementaryOutcome check_elementary(
    const Doctrine& P, const std::optional<std::map<Obj, Elem>>& candidate,
    const Caps& caps) {
  const Category& c = P.base();
  ElementaryOutcome out;
  ElementaryWitness witness;
  std::vector<std::string> skip_i, skip_ii;
  bool all_found = true;
  nlohmann::json find_fail;
  nlohmann::json fail_i, fail_ii;
  bool ok_i = true, ok_ii = true;

  for (Obj A = 0; A < c.num_objects(); ++A) {
    auto pAA = c.product(A, A);
    if (!pAA) {
      skip_i.push_back(obj_skip(c, A, "no (A,A) product"));
      continue;
    }
    LatticePtr PAA;
    try {
      PAA = P.fiber(pAA->prod);
    } catch (const SizeExceeded& e) {
      skip_i.push_back(obj_skip(c, A, e.what()));
      continue;
    }
    if (!fits(P.fiber(A), caps) || !fits(PAA, caps)) {
      skip_i.push_back(obj_skip(c, A, "fiber beyond cap"));
      continue;
    }

    // condition (ii) scopes shared by verify and find mode
    std::vector<std::pair<Obj, detail::TripleMaps>> scopes;
    for (Obj X = 0; X < c.num_objects(); ++X) {
      auto t = detail::triple_maps(c, X, A);
      if (!t) {
        skip_ii.push_back("pair (" + c.object_name(X) + "," +
                          c.object_name(A) + "): products missing");
        continue;
      }
      try {
        if (!fits(P.fiber(t->xa), caps) || !fits(P.fiber(t->xaa), caps)) {
          skip_ii.push_back("pair (" + c.object_name(X) + "," +
                            c.object_name(A) + "): fiber beyond cap");
          continue;
        }
      } catch (const SizeExceeded&) {
        skip_ii.push_back("pair (" + c.object_name(X) + "," +
                          c.object_name(A) + "): fiber unrepresentable");
        continue;
      }
      scopes.emplace_back(X, *t);
    }

    auto try_delta = [&](Elem d) -> std::optional<nlohmann::json> {
      if (auto f = cond_i_fails(P, A, d, caps)) {
        auto w = elem_json(c, A, P.fiber(A), f->alpha, "alpha");
        w["beta"] = f->beta;
        w["beta_name"] = PAA->element_name(f->beta);
        w["delta"] = d;
        w["delta_name"] = PAA->element_name(d);
        w["condition"] = "i";
        return w;
      }
      for (const auto& [X, t] : scopes) {
        if (auto f = cond_ii_fails(P, X, A, t, d, caps)) {
          auto PXA = P.fiber(t.xa);
          auto PXAA = P.fiber(t.xaa);
          nlohmann::json w{{"object", A},
                           {"object_name", c.object_name(A)},
                           {"X", X},
                           {"X_name", c.object_name(X)},
                           {"alpha", f->alpha},
                           {"alpha_name", PXA->element_name(f->alpha)},
                           {"beta", f->beta},
                           {"beta_name", PXAA->element_name(f->beta)},
                           {"delta", d},
                           {"delta_name", PAA->element_name(d)},
                           {"condition", "ii"}};
          return w;
        }
      }
      return std::nullopt;
    };

    std::optional<Elem> given;
    if (candidate) {
      auto it = candidate->find(A);
      if (it != candidate->end()) given = it->second;
    }
    if (!given && !candidate) {
      // pure find mode
    }
    if (given) {
      if (auto w = try_delta(*given)) {
        if ((*w)["condition"] == "i") {
          ok_i = false;
          fail_i = *w;
        } else {
          ok_ii = false;
          fail_ii = *w;
        }
        all_found = false;
      } else {
        witness.delta[A] = *given;
      }
    } else {
      // find mode: ascending element order, first verified wins
      bool found = false;
      nlohmann::json trace = nlohmann::json::array();
      for (Elem d = 0; d < PAA->size(); ++d) {
        if (auto w = try_delta(d)) {
          trace.push_back(*w);
          continue;
        }
        witness.delta[A] = d;
        found = true;
        break;
      }
      if (!found) {
        all_found = false;
        find_fail = {{"object", A},
                     {"object_name", c.object_name(A)},
                     {"trace", trace}};
      }
    }
    if (!all_found) break;
  }

  {
    auto r = ok_i ? CheckResult::holds("elementary.condition_i")
                  : CheckResult::fails("elementary.condition_i", fail_i);
    r.skipped = skip_i;
    out.report.add(std::move(r));
  }
  {
    auto r = ok_ii ? CheckResult::holds("elementary.condition_ii")
                   : CheckResult::fails("elementary.condition_ii", fail_ii);
    r.skipped = skip_ii;
    out.report.add(std::move(r));
  }
  if (!find_fail.is_null())
    out.report.add(CheckResult::fails("elementary.find", find_fail));
  if (all_found) out.witness = std::move(witness);
  return out;
}

// --- quantifiers -------------------------------------------------------------------

namespace {

struct ProjectionInfo {
  Obj a, b;      // declared pair
  Product prod;
  Mor proj;      // the projection checked
  bool second;   // true: prod -> b, false: prod -> a
};

std::vector<ProjectionInfo> all_projections(const Category& c) {
  std::vector<ProjectionInfo> out;
  for (Obj a = 0; a < c.num_objects(); ++a)
    for (Obj b = 0; b < c.num_objects(); ++b)
      if (auto p = c.product(a, b)) {
        out.push_back({a, b, *p, p->p1, false});
        out.push_back({a, b, *p, p->p2, true});
      }
  return out;
}

}  // namespace

StructureReport check_quantifiers(const Doctrine& P, AdjointSide side,
                                  const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  const char* tag = side == AdjointSide::Left ? "existential" : "universal";

  std::map<Mor, MonotoneMap> adjoints;
  bool adj_ok = true;
  nlohmann::json adj_w;
  std::vector<std::string> skips;

  for (const auto& pi : all_projections(c)) {
    if (adjoints.count(pi.proj)) continue;
    LatticePtr lo, lb;
    try {
      lo = P.fiber(pi.prod.prod);
      lb = P.fiber(c.cod(pi.proj));
    } catch (const SizeExceeded& e) {
      skips.push_back(e.what());
      continue;
    }
    if (!fits(lo, caps) || !fits(lb, caps)) {
      skips.push_back("projection " + c.morphism_name(pi.proj) +
                      ": fiber beyond cap");
      continue;
    }
    auto r = compute_adjoint(P.reindex(pi.proj), side, caps);
    if (auto* m = std::get_if<MonotoneMap>(&r)) {
      adjoints.emplace(pi.proj, *m);
    } else if (adj_ok) {
      const auto& f = std::get<AdjointFailure>(r);
      adj_ok = false;
      adj_w = {{"projection", pi.proj},
               {"projection_name", c.morphism_name(pi.proj)},
               {"detail", f.detail}};
      if (f.counterexample)
        adj_w["pair"] = {f.counterexample->first, f.counterexample->second};
      if (f.join_required_missing) adj_w["error"] = "JoinRequiredMissing";
    }
  }
  {
    auto r = adj_ok
                 ? CheckResult::holds(std::string(tag) + ".adjoint")
                 : CheckResult::fails(std::string(tag) + ".adjoint", adj_w);
    r.skipped = skips;
    rep.add(std::move(r));
  }
  if (!adj_ok) return rep;

  // Beck-Chevalley on all squares of the definitional shape.
  bool bc_ok = true;
  nlohmann::json bc_w;
  std::vector<std::string> bc_skips;
  for (const auto& pi : all_projections(c)) {
    if (!adjoints.count(pi.proj)) continue;
    const Obj base_obj = c.cod(pi.proj);  // quantified-away side stays
    for (Mor f = 0; f < c.num_morphisms() && bc_ok; ++f) {
      if (c.cod(f) != base_obj) continue;
      const Obj Bp = c.dom(f);
      // the pulled-back projection: same fixed factor, new fibre factor
      auto p2 = pi.second ? c.product(pi.a, Bp) : c.product(Bp, pi.b);
      if (!p2) {
        bc_skips.push_back("square over " + c.morphism_name(f) +
                           ": product missing");
        continue;
      }
      const Mor proj2 = pi.second ? p2->p2 : p2->p1;
      if (!adjoints.count(proj2)) continue;
      Mor lift;  // id×f (or f×id)
      try {
        lift = pi.second
                   ? c.require_mediator(p2->p1, c.compose(f, p2->p2))
                   : c.require_mediator(c.compose(f, p2->p1), p2->p2);
      } catch (const SizeExceeded& e) {
        bc_skips.push_back(e.what());
        continue;
      }
      auto lprod = P.fiber(pi.prod.prod);
      if (!fits(lprod, caps)) continue;
      auto rl = P.reindex(lift);
      auto rf = P.reindex(f);
      const auto& q = adjoints.at(pi.proj);
      const auto& q2 = adjoints.at(proj2);
      for (Elem a = 0; a < lprod->size(); ++a)
        if (q2(rl(a)) != rf(q(a))) {
          bc_ok = false;
          bc_w = {{"error", "BeckChevalley"},
                  {"projection", pi.proj},
                  {"projection_name", c.morphism_name(pi.proj)},
                  {"f", f},
                  {"f_name", c.morphism_name(f)},
                  {"element", a},
                  {"element_name", lprod->element_name(a)}};
          break;
        }
    }
  }
  {
    auto r = bc_ok ? CheckResult::holds(std::string(tag) + ".beck_chevalley")
                   : CheckResult::fails(std::string(tag) + ".beck_chevalley",
                                        bc_w);
    r.skipped = bc_skips;
    rep.add(std::move(r));
  }

  if (side == AdjointSide::Left) {
    bool fr_ok = true;
    nlohmann::json fr_w;
    for (const auto& pi : all_projections(c)) {
      if (!adjoints.count(pi.proj) || !fr_ok) continue;
      auto lo = P.fiber(pi.prod.prod);
      auto lb = P.fiber(c.cod(pi.proj));
      auto rp = P.reindex(pi.proj);
      const auto& ex = adjoints.at(pi.proj);
      for (Elem a = 0; a < lo->size() && fr_ok; ++a)
        for (Elem b = 0; b < lb->size(); ++b)
          if (ex(lo->meet(a, rp(b))) != lb->meet(ex(a), b)) {
            fr_ok = false;
            fr_w = {{"error", "Frobenius"},
                    {"projection", pi.proj},
                    {"projection_name", c.morphism_name(pi.proj)},
                    {"alpha", a},
                    {"beta", b}};
            break;
          }
    }
    rep.add(fr_ok ? CheckResult::holds("existential.frobenius")
                  : CheckResult::fails("existential.frobenius", fr_w));
  }
  return rep;
}

// --- implicational / joins -----------------------------------------------------------

StructureReport check_implicational(const Doctrine& P, const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  bool total = true;
  nlohmann::json tw;
  std::vector<std::string> skips;
  for (Obj a = 0; a < c.num_objects() && total; ++a) {
    auto l = P.fiber(a);
    if (!fits(l, caps) || l->size() * l->size() > caps.pair_scan) {
      skips.push_back(obj_skip(c, a, "fiber beyond cap"));
      continue;
    }
    for (Elem x = 0; x < l->size() && total; ++x)
      for (Elem y = 0; y < l->size(); ++y)
        if (!l->rpc(x, y)) {
          total = false;
          tw = elem_json(c, a, l, x, "a");
          tw["b"] = y;
          tw["b_name"] = l->element_name(y);
          tw["reason"] = "relative pseudo-complement undefined";
          break;
        }
  }
  {
    auto r = total ? CheckResult::holds("implicational.rpc_total")
                   : CheckResult::fails("implicational.rpc_total", tw);
    r.skipped = skips;
    rep.add(std::move(r));
  }
  if (!total) return rep;

  bool comm = true;
  nlohmann::json cw;
  std::uint64_t work = 0;
  for (Mor f = 0; f < c.num_morphisms() && comm; ++f) {
    auto lc = P.fiber(c.cod(f));
    auto ld = P.fiber(c.dom(f));
    if (!fits(lc, caps) || !fits(ld, caps)) continue;
    const std::uint64_t cost = lc->size() * lc->size();
    if (cost > caps.pair_scan || work + cost > caps.assoc_triples) continue;
    work += cost;
    auto r = P.reindex(f);
    for (Elem x = 0; x < lc->size() && comm; ++x)
      for (Elem y = 0; y < lc->size(); ++y) {
        auto lhs = lc->rpc(x, y);
        auto rhs = ld->rpc(r(x), r(y));
        if (!lhs || !rhs || r(*lhs) != *rhs) {
          comm = false;
          cw = {{"f", f},
                {"f_name", c.morphism_name(f)},
                {"alpha", x},
                {"beta", y},
                {"reason", "reindexing does not commute with rpc"}};
          break;
        }
      }
  }
  rep.add(comm ? CheckResult::holds("implicational.rpc_commutes")
               : CheckResult::fails("implicational.rpc_commutes", cw));
  return rep;
}

StructureReport check_joins(const Doctrine& P, const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  bool total = true, has_bottom = true, distr = true;
  nlohmann::json tw, bw, dw;
  std::vector<std::string> skips;
  for (Obj a = 0; a < c.num_objects(); ++a) {
    auto l = P.fiber(a);
    if (!fits(l, caps) || l->size() * l->size() > caps.pair_scan) {
      skips.push_back(obj_skip(c, a, "fiber beyond cap"));
      continue;
    }
    if (total)
      for (Elem x = 0; x < l->size() && total; ++x)
        for (Elem y = 0; y < l->size(); ++y)
          if (!l->join(x, y)) {
            total = false;
            tw = elem_json(c, a, l, x, "a");
            tw["b"] = y;
            break;
          }
    if (has_bottom && !l->bottom()) {
      has_bottom = false;
      bw = {{"object", a}, {"object_name", c.object_name(a)}};
    }
    if (total && distr && l->size() * l->size() * l->size() <= caps.pair_scan)
      for (Elem x = 0; x < l->size() && distr; ++x)
        for (Elem y = 0; y < l->size() && distr; ++y)
          for (Elem z = 0; z < l->size(); ++z) {
            const Elem lhs = l->meet(x, *l->join(y, z));
            const Elem rhs = *l->join(l->meet(x, y), l->meet(x, z));
            if (lhs != rhs) {
              distr = false;
              dw = {{"object", a},
                    {"object_name", c.object_name(a)},
                    {"triple", {x, y, z}},
                    {"triple_names",
                     {l->element_name(x), l->element_name(y),
                      l->element_name(z)}}};
              break;
            }
          }
  }
  {
    auto r = total ? CheckResult::holds("joins.total")
                   : CheckResult::fails("joins.total", tw);
    r.skipped = skips;
    rep.add(std::move(r));
  }
  rep.add(has_bottom ? CheckResult::holds("joins.bottom")
                     : CheckResult::fails("joins.bottom", bw));
  rep.add(distr ? CheckResult::holds("joins.distributive")
                : CheckResult::fails("joins.distributive", dw));

  bool pres = true;
  nlohmann::json pw;
  std::uint64_t work = 0;
  if (total)
    for (Mor f = 0; f < c.num_morphisms() && pres; ++f) {
      auto lc = P.fiber(c.cod(f));
      auto ld = P.fiber(c.dom(f));
      if (!fits(lc, caps) || !fits(ld, caps)) continue;
      const std::uint64_t cost = lc->size() * lc->size();
      if (cost > caps.pair_scan || work + cost > caps.assoc_triples) continue;
      work += cost;
      auto r = P.reindex(f);
      for (Elem x = 0; x < lc->size() && pres; ++x)
        for (Elem y = 0; y < lc->size(); ++y) {
          auto lhs = lc->join(x, y);
          auto rhs = ld->join(r(x), r(y));
          if (!lhs || !rhs || r(*lhs) != *rhs) {
            pres = false;
            pw = {{"f", f},
                  {"f_name", c.morphism_name(f)},
                  {"pair", {x, y}}};
            break;
          }
        }
    }
  rep.add(pres ? CheckResult::holds("joins.reindex_preserves")
               : CheckResult::fails("joins.reindex_preserves", pw));
  return rep;
}

// --- generalized quantification --------------------------------------------------------

Elem generalized_exists(const Doctrine& P, const ElementaryWitness& W, Mor f,
                        Elem alpha, const Caps& caps) {
  const Category& c = P.base();
  const Obj A = c.dom(f), B = c.cod(f);
  auto pAB = c.require_product(A, B);
  c.require_product(B, B);
  auto it = W.delta.find(B);
  if (it == W.delta.end())
    throw std::runtime_error("generalized_exists: no delta for codomain " +
                             c.object_name(B));
  // (a,b) ↦ (f(a), b) : A×B -> B×B
  const Mor m = c.require_mediator(c.compose(f, pAB.p1), pAB.p2);
  auto lAB = P.fiber(pAB.prod);
  if (!fits(lAB, caps))
    throw SizeExceeded("generalized_exists: fiber beyond cap");
  const Elem graph = P.reindex(m)(it->second);
  const Elem arg = lAB->meet(graph, P.reindex(pAB.p1)(alpha));
  auto adj = compute_adjoint(P.reindex(pAB.p2), AdjointSide::Left, caps);
  auto* ex = std::get_if<MonotoneMap>(&adj);
  if (!ex)
    throw std::runtime_error(
        "generalized_exists: no existential structure along the projection");
  return (*ex)(arg);
}

// --- comprehensions -----------------------------------------------------------------

namespace {

// Is m terminal among the candidates (every candidate factors uniquely)?
std::optional<nlohmann::json> comprehension_defect(const Category& c, Mor m,
                                                   const std::vector<Mor>& cands) {
  for (Mor g : cands) {
    int count = 0;
    for (Mor h : c.hom(c.dom(g), c.dom(m)))
      if (c.compose(m, h) == g) ++count;
    if (count != 1)
      return nlohmann::json{{"candidate", g},
                            {"candidate_name", c.morphism_name(g)},
                            {"factorizations", count}};
  }
  return std::nullopt;
}

}  // namespace

ComprehensionResult find_comprehension(const Doctrine& P, Obj A, Elem phi,
                                       const Caps& caps) {
  const Category& c = P.base();
  ComprehensionResult out;
  auto lA = P.fiber(A);
  if (!fits(lA, caps)) {
    out.report.add(CheckResult::size_exceeded("comprehension.exists",
                                              "fiber beyond cap"));
    return out;
  }

  // all morphisms into A whose reindexing makes phi true
  std::vector<Mor> cands;
  for (Obj y = 0; y < c.num_objects(); ++y)
    for (Mor g : c.hom(y, A)) {
      auto ly = P.fiber(y);
      if (P.reindex(g)(phi) == ly->top()) cands.push_back(g);
    }

  std::optional<Mor> found;
  nlohmann::json transcript;
  if (P.certs().comprehend) {
    if (auto m = P.certs().comprehend(A, phi)) {
      if (P.reindex(*m)(phi) == P.fiber(c.dom(*m))->top()) {
        if (auto defect = comprehension_defect(c, *m, cands)) {
          transcript = *defect;
        } else {
          found = m;
        }
      }
    }
  }
  if (!found) {
    // candidates with more points first: in concrete doctrines the terminal
    // candidate is the largest subobject
    std::vector<Mor> order = cands;
    std::stable_sort(order.begin(), order.end(), [&](Mor x, Mor y) {
      return c.points(c.dom(x)) > c.points(c.dom(y));
    });
    for (Mor m : order) {
      if (!comprehension_defect(c, m, cands)) {
        found = m;
        break;
      }
    }
  }

  if (!found) {
    nlohmann::json w = elem_json(c, A, lA, phi, "phi");
    w["candidates"] = cands.size();
    if (!transcript.is_null()) w["certificate_defect"] = transcript;
    out.report.add(CheckResult::fails("comprehension.exists", w));
    return out;
  }
  out.mor = found;
  out.report.add(CheckResult::holds("comprehension.exists"));
  out.report.add(CheckResult::holds("comprehension.terminal"));

  // fullness: top <= ⌊phi⌋^* psi implies phi <= psi
  bool full = true;
  nlohmann::json fw;
  auto rm = P.reindex(*found);
  auto lx = P.fiber(c.dom(*found));
  for (Elem psi = 0; psi < lA->size(); ++psi)
    if (rm(psi) == lx->top() && !lA->leq(phi, psi)) {
      full = false;
      fw = elem_json(c, A, lA, phi, "phi");
      fw["psi"] = psi;
      fw["psi_name"] = lA->element_name(psi);
      break;
    }
  out.full = full;
  out.report.add(full ? CheckResult::holds("comprehension.full")
                      : CheckResult::fails("comprehension.full", fw));
  return out;
}

// --- weak power objects ----------------------------------------------------------------

StructureReport check_weak_power_object(const Doctrine& P, Obj A,
                                        const PowerObjectCert& W,
                                        const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  auto pApw = c.product(A, W.power_obj);
  if (!pApw) {
    rep.add(CheckResult::size_exceeded(
        "power.classified", "no product (A, πA) for " + c.object_name(A)));
    return rep;
  }
  auto lmem = P.fiber(pApw->prod);

  bool ok = true;
  nlohmann::json w;
  std::vector<std::string> skips;
  for (Obj B = 0; B < c.num_objects() && ok; ++B) {
    auto pAB = c.product(A, B);
    if (!pAB) {
      skips.push_back("object " + c.object_name(B) + ": no product (A,B)");
      continue;
    }
    auto lAB = P.fiber(pAB->prod);
    if (!fits(lAB, caps)) {
      skips.push_back(obj_skip(c, B, "fiber beyond cap"));
      continue;
    }
    for (Elem phi = 0; phi < lAB->size() && ok; ++phi) {
      auto verify = [&](Mor cl) -> bool {
        // φ = (id_A × {φ})^* ∈_A
        Mor lift;
        try {
          lift = c.require_mediator(pAB->p1, c.compose(cl, pAB->p2));
        } catch (const SizeExceeded&) {
          return false;
        }
        return P.reindex(lift)(W.membership) == phi;
      };
      std::optional<Mor> cl;
      if (P.certs().classify) cl = P.certs().classify(A, B, phi);
      if (cl && verify(*cl)) continue;
      // bounded search over hom(B, πA)
      bool found = false;
      const auto& hs = c.hom(B, W.power_obj);
      if ((std::uint64_t)hs.size() * lAB->size() > caps.search) {
        skips.push_back("object " + c.object_name(B) +
                        ": classifier search beyond budget");
        break;
      }
      for (Mor h : hs)
        if (verify(h)) {
          found = true;
          break;
        }
      if (!found) {
        ok = false;
        w = elem_json(c, pAB->prod, lAB, phi, "phi");
        w["A"] = A;
        w["B"] = B;
        w["error"] = "unclassified element";
      }
    }
  }
  auto r = ok ? CheckResult::holds("power.classified")
              : CheckResult::fails("power.classified", w);
  r.skipped = skips;
  rep.add(std::move(r));
  return rep;
}

// --- extensional entailment ---------------------------------------------------------------

StructureReport check_extensional_entailment(const Doctrine& P,
                                             const Caps& caps) {
  const Category& c = P.base();
  StructureReport rep;
  const auto& certs = P.certs();
  if (!c.terminal() || !certs.pi1 || !certs.eps1 || !certs.classify ||
      !certs.delta.count(*certs.pi1)) {
    rep.add(CheckResult::size_exceeded(
        "extensional.rule",
        "missing structure: terminal, π1, ε₁, δ_π1 or classifiers"));
    return rep;
  }
  const Obj pi1 = *certs.pi1;
  auto pp = c.product(pi1, pi1);
  if (!pp) {
    rep.add(CheckResult::size_exceeded("extensional.rule",
                                       "no product (π1, π1)"));
    return rep;
  }
  const Elem dpi = certs.delta.at(pi1);

  bool rule_ok = true, fwd_ok = true;
  nlohmann::json rw, fw;
  std::vector<std::string> skips;
  for (Obj A = 0; A < c.num_objects() && rule_ok && fwd_ok; ++A) {
    auto lA = P.fiber(A);
    if (!fits(lA, caps) ||
        lA->size() * lA->size() * lA->size() > caps.pair_scan) {
      skips.push_back(obj_skip(c, A, "triple scan beyond cap"));
      continue;
    }
    auto p1A = c.product(*c.terminal(), A);
    if (!p1A) {
      skips.push_back(obj_skip(c, A, "no product (1, A)"));
      continue;
    }
    auto r_iso = P.reindex(p1A->p2);  // P(A) -> P(1×A)
    // classifier of φ ∈ P(A), via P(A) ≅ P(1×A)
    std::vector<std::optional<Mor>> cls(lA->size());
    bool have_all = true;
    for (Elem e = 0; e < lA->size(); ++e) {
      cls[e] = certs.classify(*c.terminal(), A, r_iso(e));
      if (!cls[e]) have_all = false;
    }
    if (!have_all) {
      skips.push_back(obj_skip(c, A, "no certificate classifier"));
      continue;
    }
    bool skip_obj = false;
    for (Elem phi = 0; phi < lA->size() && rule_ok && fwd_ok && !skip_obj;
         ++phi)
      for (Elem psi = 0; psi < lA->size() && rule_ok && fwd_ok; ++psi) {
        Mor pair;
        try {
          pair = c.require_mediator(*cls[phi], *cls[psi]);
        } catch (const SizeExceeded&) {
          skips.push_back(obj_skip(c, A, "no pairing into π1×π1"));
          skip_obj = true;
          break;
        }
        const Elem equal = P.reindex(pair)(dpi);
        for (Elem gamma = 0; gamma < lA->size(); ++gamma) {
          const bool bi = lA->leq(lA->meet(gamma, psi), phi) &&
                          lA->leq(lA->meet(gamma, phi), psi);
          const bool internal = lA->leq(gamma, equal);
          if (internal && !bi && fwd_ok) {
            // the derivable direction: internal equality gives bi-entailment
            fwd_ok = false;
            fw = elem_json(c, A, lA, gamma, "gamma");
            fw["phi"] = phi;
            fw["psi"] = psi;
          }
          if (bi != internal && rule_ok) {
            rule_ok = false;
            rw = elem_json(c, A, lA, gamma, "gamma");
            rw["phi"] = phi;
            rw["phi_name"] = lA->element_name(phi);
            rw["psi"] = psi;
            rw["psi_name"] = lA->element_name(psi);
            rw["bi_entailment"] = bi;
            rw["internal_equality"] = internal;
          }
        }
      }
  }
  {
    auto r = fwd_ok ? CheckResult::holds("extensional.internal_to_entailment")
                    : CheckResult::fails("extensional.internal_to_entailment",
                                         fw);
    rep.add(std::move(r));
  }
  {
    auto r = rule_ok ? CheckResult::holds("extensional.rule")
                     : CheckResult::fails("extensional.rule", rw);
    r.skipped = skips;
    rep.add(std::move(r));
  }
  return rep;
}

}  // namespace doctrina
